#include <benchmark/benchmark.h>

#include "ncstar/star_grid.hpp"
#include "ncstar/star_poly.hpp"
#include "ncstar/wigner.hpp"

using namespace ncstar;

namespace {

NCParams fixture() { return NCParams::single_pair(1.0, 0.1, 0.05); }

void BM_SeibergWitten(benchmark::State& st) {
    const OmegaMatrix om = build_omega(fixture());
    for (auto _ : st) benchmark::DoNotOptimize(solve_sw_map(om, 1));
}
BENCHMARK(BM_SeibergWitten);

void BM_StarPolyExact(benchmark::State& st) {
    NCParams p = NCParams::single_pair_exact(1, mpq_class(1, 10), mpq_class(1, 20));
    const int d = static_cast<int>(st.range(0));
    std::string a = "x1^" + std::to_string(d) + " + p2*x2", b = "p1^" + std::to_string(d) + " - x1*x2";
    PolySymbol pa = to_poly(parse(a, 2)), pb = to_poly(parse(b, 2));
    for (auto _ : st) benchmark::DoNotOptimize(star_poly(pa, pb, p));
}
BENCHMARK(BM_StarPolyExact)->Arg(2)->Arg(4)->Arg(6);

void BM_MoyalFFT(benchmark::State& st) {
    const int M = static_cast<int>(st.range(0));
    PhaseGrid g = PhaseGrid::standard(1, M, 1.0);
    GridSymbol a = sample(parse("(x1 + 1)*exp(-(x1^2 + p1^2))", 1), g);
    GridSymbol b = sample(parse("p1^2*exp(-(x1^2 + p1^2))", 1), g);
    for (auto _ : st) benchmark::DoNotOptimize(moyal_star_fft(a, b, 1.0));
}
BENCHMARK(BM_MoyalFFT)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_StarGridOmega(benchmark::State& st) {
    const int M = static_cast<int>(st.range(0));
    PhaseGrid g = PhaseGrid::standard(2, M, 1.0);
    NCParams p = fixture();
    SeibergWittenMap s = solve_sw_map(build_omega(p));
    SymbolExpr a = parse("exp(-(x1^2 + x2^2 + p1^2 + p2^2))", 2);
    SymbolExpr b = parse("(1 + x2)*exp(-(x1^2 + x2^2 + p1^2 + p2^2))", 2);
    for (auto _ : st) benchmark::DoNotOptimize(star_grid_omega(a, b, p, s, g));
}
BENCHMARK(BM_StarGridOmega)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_DenseKernel(benchmark::State& st) {
    PhaseGrid g = PhaseGrid::standard(2, 8, 1.0);
    NCParams p = fixture();
    SymbolExpr a = parse("x1*exp(-(x1^2 + x2^2 + p1^2 + p2^2))", 2);
    for (auto _ : st) benchmark::DoNotOptimize(dense_A_omega(a, p, g));
}
BENCHMARK(BM_DenseKernel)->Unit(benchmark::kMillisecond);

void BM_CrossWigner(benchmark::State& st) {
    const int M = static_cast<int>(st.range(0));
    HermiteBasis b = HermiteBasis::standard(1, 16, 1.0);
    PhaseGrid g = PhaseGrid::standard(1, M, 1.0);
    WaveFunction h2 = WaveFunction::hermite(b, {2}), h0 = WaveFunction::hermite(b, {0});
    for (auto _ : st) benchmark::DoNotOptimize(cross_wigner(h2, h0, g));
}
BENCHMARK(BM_CrossWigner)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_StargenSpectrum(benchmark::State& st) {
    NCParams p = fixture();
    SeibergWittenMap s = solve_sw_map(build_omega(p));
    HermiteBasis b = HermiteBasis::standard(2, static_cast<int>(st.range(0)), 1.0);
    SymbolExpr osc = parse("(x1^2 + x2^2 + p1^2 + p2^2)/2", 2);
    SpectrumOptions o;
    o.map_eigenfunctions = o.residuals = o.sentinel = false;
    for (auto _ : st) benchmark::DoNotOptimize(solve_stargen(osc, p, s, b, PhaseGrid{2, 5.0, 28, 1.0}, 6, o));
}
BENCHMARK(BM_StargenSpectrum)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
