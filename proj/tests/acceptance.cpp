// Acceptance suite: one line per criterion, exit 0 iff every line passes.
// Usage: acceptance [criterion numbers...]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <array>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gauss_oracle.hpp"
#include "ncstar/errors.hpp"
#include "ncstar/star_grid.hpp"
#include "ncstar/star_poly.hpp"
#include "ncstar/wigner.hpp"
#include "support.hpp"

using namespace ncstar;
using cplx = std::complex<double>;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    const char* name;
    double limit; // seconds
    std::function<Outcome()> run;
};

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

// "name=value (tol)" and whether value <= tol
struct Measure {
    std::ostringstream os;
    bool ok = true;
    void add(const std::string& what, double value, double tol) {
        if (os.tellp() > 0) os << "; ";
        os << what << "=" << fmt("%.3g", value) << " (tol " << fmt("%.0e", tol) << ")";
        ok = ok && value <= tol;
    }
    void note(const std::string& s) {
        if (os.tellp() > 0) os << "; ";
        os << s;
    }
    Outcome done() const { return {ok, os.str()}; }
};

Eigen::VectorXd point(const PhaseGrid& g, std::size_t k) {
    auto idx = g.index(k);
    Eigen::VectorXd z(g.dims());
    for (int i = 0; i < g.dims(); ++i) z(i) = g.coord(idx[static_cast<std::size_t>(i)]);
    return z;
}

cplx inner(const GridSymbol& a, const GridSymbol& b) {
    cplx s = 0;
    for (std::size_t k = 0; k < a.samples.size(); ++k) s += std::conj(a.samples[k]) * b.samples[k];
    return s * a.grid.weight();
}

NCParams nc_fixture() { return NCParams::single_pair(1.0, 0.1, 0.05); }
const SymbolExpr& oscillator() {
    static const SymbolExpr a = parse("(x1^2 + x2^2 + p1^2 + p2^2)/2", 2);
    return a;
}
const PhaseGrid kSpectral{2, 5.0, 28, 1.0};

SpectrumOptions eigenvalues_only() {
    SpectrumOptions o;
    o.map_eigenfunctions = o.residuals = o.sentinel = false;
    return o;
}

// ---------------------------------------------------------------------------

Outcome ccr_table() {
    const mpq_class hb(1), th(1, 10), et(1, 20);
    NCParams p = NCParams::single_pair_exact(hb, th, et);
    int bad = 0;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
            // i hbar omega_ab, written out from the blocks of Omega
            mpq_class v = 0;
            if (a < 2 && b < 2 && a != b) v = a == 0 ? th : mpq_class(-th);
            if (a >= 2 && b >= 2 && a != b) v = a == 2 ? et : mpq_class(-et);
            if (b == a + 2) v = hb;
            if (a == b + 2) v = -hb;
            PolySymbol want = v == 0 ? PolySymbol::zero(2) : PolySymbol::constant(2, GaussQ(0, v));
            PolySymbol got = star_commutator(PolySymbol::variable(2, a), PolySymbol::variable(2, b), p);
            if (!got.exact() || !(got == want)) ++bad;
        }
    Measure m;
    m.add("mismatched entries of 16", bad, 0);
    return m.done();
}

Outcome unital_assoc() {
    NCParams p = NCParams::single_pair_exact(mpq_class(3, 4), mpq_class(1, 4), mpq_class(-1, 8));
    std::mt19937_64 rng(2024);
    const PolySymbol one = PolySymbol::constant(2, GaussQ(1));
    int unital = 0, assoc = 0;
    for (int k = 0; k < 100; ++k) {
        PolySymbol a = testsupport::random_monomial(rng, 2, 3), b = testsupport::random_monomial(rng, 2, 3),
                   c = testsupport::random_monomial(rng, 2, 3);
        for (const PolySymbol* x : {&a, &b, &c})
            if (!(star_poly(one, *x, p) == *x) || !(star_poly(*x, one, p) == *x)) ++unital;
        PolySymbol l = star_poly(star_poly(a, b, p), c, p), r = star_poly(a, star_poly(b, c, p), p);
        if (!l.exact() || !(l == r)) ++assoc;
    }
    Measure m;
    m.add("unitality failures", unital, 0);
    m.add("associativity failures of 100", assoc, 0);
    return m.done();
}

Outcome moyal_reduction() {
    PhaseGrid g{1, 6.0, 32, 1.0};
    NCParams p = NCParams::commutative(1, 1.0);
    SeibergWittenMap s = solve_sw_map(build_omega(p));
    Measure m;
    std::size_t mismatched = 0;
    double err = 0;
    const std::vector<std::pair<oracle::GaussFixture, oracle::GaussFixture>> fixtures = {
        {oracle::damped(1, "x1 + 1/2", 1.0), oracle::damped(1, "p1^2 - x1", 1.0)},
        {oracle::damped(1, "1", 1.0, 0.7), oracle::damped(1, "x1*p1", 1.0, 1.3)},
        {oracle::damped(1, "p1", 1.0, 1.0, Eigen::Vector2d(0.3, -0.2)), oracle::damped(1, "1 + x1^2", 1.0, 0.8)},
    };
    for (const auto& [fa, fb] : fixtures) {
        GridSymbol viaomega = star_grid_omega(fa.expr(), fb.expr(), p, s, g);
        GridSymbol viamoyal = moyal_star_fft(sample(fa.expr(), g), sample(fb.expr(), g), 1.0);
        for (std::size_t k = 0; k < g.size(); ++k) mismatched += viaomega.samples[k] != viamoyal.samples[k];
        oracle::StarOracle o(fa, fb, symplectic_J(1), 1.0);
        for (std::size_t k = 0; k < g.size(); ++k)
            if (g.interior(k)) err = std::max(err, std::abs(o(point(g, k)) - viaomega.samples[k]));
    }
    m.add("non-identical samples", static_cast<double>(mismatched), 0);
    m.add("interior sup vs closed form", err, 1e-6);
    return m.done();
}

Outcome dense_vs_pullback() {
    PhaseGrid g{2, 6.0, 8, 1.0};
    NCParams p = NCParams::single_pair(1.0, 0.1, 0.1);
    SeibergWittenMap s = solve_sw_map(build_omega(p), 5);
    const std::vector<std::pair<std::string, std::string>> fixtures = {
        {oracle::damped(2, "x1", 1.0).text(), oracle::damped(2, "1 + p2", 1.0, 0.8).text()},
        {oracle::damped(2, "x2*p1 - 1", 1.0, 1.2).text(), oracle::damped(2, "x1 + p1", 1.0).text()},
        {oracle::damped(2, "1", 1.0, 0.9).text(), oracle::damped(2, "p2^2 - x2", 1.0, 1.1).text()},
    };
    double err = 0;
    for (const auto& [ta, tb] : fixtures) {
        SymbolExpr a = parse(ta, 2), b = parse(tb, 2);
        GridSymbol dense = apply_A_omega_dense(a, sample(b, g), p);
        GridSymbol pulled = star_grid_omega(a, b, p, s, g);
        err = std::max(err, sup_diff(dense, pulled));
    }
    Measure m;
    m.add("sup |dense - pullback| on 8^4", err, 1e-6);
    return m.done();
}

Outcome sft_involution() {
    PhaseGrid g{2, 7.0, 32, 1.0};
    Measure m;
    double err = 0;
    for (const NCParams& p : {nc_fixture(), NCParams::single_pair(1.0, 0.1, 0.1)}) {
        OmegaMatrix om = build_omega(p);
        for (const auto& f : {oracle::damped(2, "1 + x1 - p1*p2", 1.0, 2.0), oracle::damped(2, "x2 - p1^2", 1.0, 2.0)}) {
            GridSymbol a = sample(f.expr(), g);
            err = std::max(err, sup_diff(sft_omega_dense(sft_omega_dense(a, om), om), a));
        }
    }
    m.add("sup |F F a - a|", err, 1e-8);
    return m.done();
}

Outcome sw_map() {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(-0.9, 0.9);
    std::uniform_int_distribution<int> dim(2, 3);
    const double hbars[] = {0.5, 1.0, 2.0};
    double res = 0, defect = 0;
    int sets = 0;
    while (sets < 100) {
        const int n = dim(rng);
        const double hb = hbars[sets % 3];
        NCParams p = NCParams::commutative(n, hb);
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                p.theta(i, j) = u(rng) * hb, p.theta(j, i) = -p.theta(i, j);
                p.eta(i, j) = u(rng) * hb, p.eta(j, i) = -p.eta(i, j);
            }
        if (!admissible(p).flag) continue;
        OmegaMatrix om;
        try {
            om = build_omega(p);
        } catch (const Error&) {
            continue;
        }
        ++sets;
        SeibergWittenMap s0 = solve_sw_map(om, 0), s1 = solve_sw_map(om, static_cast<std::uint64_t>(sets));
        res = std::max({res, sw_residuals(s0, om).max(), sw_residuals(s1, om).max()});
        defect = std::max(defect, symplectic_defect(s0.s.inverse() * s1.s));
    }
    Measure m;
    m.add("max residual (sJs^T, 3 blocks) over 100 sets", res, 1e-10);
    m.add("s^{-1}s' symplectic defect", defect, 1e-10);
    return m.done();
}

Outcome intertwining() {
    NCParams p = nc_fixture();
    SeibergWittenMap s = solve_sw_map(build_omega(p));
    HermiteBasis b = HermiteBasis::standard(2, 16, 1.0);
    const CMat mat = weyl_matrix(oscillator(), s, b, kSpectral);
    WaveFunction h0 = WaveFunction::hermite(b, {0, 0});
    double err = 0;
    for (int j = 0; j <= 3; ++j) {
        WaveFunction psi = WaveFunction::hermite(b, {j, 0});
        GridSymbol W = w_s_phi(psi, h0, s, kSpectral);
        GridSymbol lhs = star_grid_omega(oscillator(), W, p, s, kSpectral);
        const auto col = static_cast<Eigen::Index>(b.flat({j, 0}));
        std::vector<cplx> apsi(mat.col(col).data(), mat.col(col).data() + mat.rows());
        GridSymbol rhs = w_s_phi(WaveFunction::from_coefficients(b, apsi), h0, s, kSpectral);
        err = std::max(err, l2_norm(lhs - rhs));
    }
    Measure m;
    m.add("max L2 defect over h0..h3", err, 1e-5);
    return m.done();
}

// Rayleigh-Ritz of the grid operator a *_Omega . on span{W_{s,h0} h_j : |j| <= 7}
std::vector<double> grid_ritz(const NCParams& p, const SeibergWittenMap& s, const HermiteBasis& b, const PhaseGrid& g) {
    const int J = 36;
    const auto ids = graded_indices(2, J);
    const WaveFunction h0 = WaveFunction::hermite(b, {0, 0});
    std::vector<GridSymbol> F, AF;
    for (const auto& j : ids) {
        F.push_back(w_s_phi(WaveFunction::hermite(b, j), h0, s, g));
        AF.push_back(star_grid_omega(oscillator(), F.back(), p, s, g));
    }
    Eigen::MatrixXcd G(J, J), H(J, J);
    for (int i = 0; i < J; ++i)
        for (int k = 0; k < J; ++k) {
            G(i, k) = inner(F[static_cast<std::size_t>(i)], F[static_cast<std::size_t>(k)]);
            H(i, k) = inner(F[static_cast<std::size_t>(i)], AF[static_cast<std::size_t>(k)]);
        }
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (H + H.adjoint()), G);
    return std::vector<double>(es.eigenvalues().data(), es.eigenvalues().data() + 6);
}

Outcome spectral_equality() {
    HermiteBasis b = HermiteBasis::standard(2, 16, 1.0);
    Measure m;

    NCParams c = NCParams::commutative(2, 1.0);
    Spectrum sc = solve_stargen(oscillator(), c, solve_sw_map(build_omega(c)), b, kSpectral, 6, eigenvalues_only());
    const double want[] = {1, 2, 2, 3, 3, 3};
    double ctl = 0;
    for (int i = 0; i < 6; ++i) ctl = std::max(ctl, std::abs(sc.eigenvalues[static_cast<std::size_t>(i)] - want[i]));
    m.add("control |lambda - hbar(j1+j2+1)|", ctl, 1e-6);

    NCParams p = nc_fixture();
    SeibergWittenMap s = solve_sw_map(build_omega(p));
    Spectrum sh = solve_stargen(oscillator(), p, s, b, kSpectral, 6, eigenvalues_only());
    std::vector<double> ritz = grid_ritz(p, s, b, PhaseGrid{2, 6.0, 32, 1.0});
    double d = 0;
    for (int i = 0; i < 6; ++i) d = std::max(d, std::abs(sh.eigenvalues[static_cast<std::size_t>(i)] - ritz[static_cast<std::size_t>(i)]));
    m.add("Hermite K=16 vs grid Ritz", d, 1e-4);
    m.note("grid side: Rayleigh-Ritz on 36 grid functions, not a dense 8^4 eigensolve");
    return m.done();
}

Outcome s_invariance() {
    HermiteBasis b = HermiteBasis::standard(2, 16, 1.0);
    NCParams p = nc_fixture();
    OmegaMatrix om = build_omega(p);
    Spectrum s0 = solve_stargen(oscillator(), p, solve_sw_map(om, 0), b, kSpectral, 6, eigenvalues_only());
    double d = 0;
    for (std::uint64_t v : {1, 2}) {
        Spectrum sv = solve_stargen(oscillator(), p, solve_sw_map(om, v), b, kSpectral, 6, eigenvalues_only());
        for (int i = 0; i < 6; ++i) d = std::max(d, std::abs(s0.eigenvalues[static_cast<std::size_t>(i)] - sv.eigenvalues[static_cast<std::size_t>(i)]));
    }
    Measure m;
    m.add("max eigenvalue difference, variants 0/1/2", d, 1e-8);
    return m.done();
}

Outcome orthonormal_basis() {
    NCParams p = nc_fixture();
    SeibergWittenMap s = solve_sw_map(build_omega(p));
    HermiteBasis b = HermiteBasis::standard(2, 16, 1.0);
    const int J = 6;
    auto phi = ob_basis(s, b, J, kSpectral);
    double gram = 0;
    for (std::size_t a = 0; a < phi.size(); ++a)
        for (std::size_t c = a; c < phi.size(); ++c)
            gram = std::max(gram, std::abs(inner(phi[a], phi[c]) - (a == c ? 1.0 : 0.0)));
    // Phi_{j,k} = W_{s,phi_j} phi_k lies in the range of W_{s,phi_j}; every j, two k each
    const auto ids = graded_indices(2, J);
    double member = 0;
    for (int j = 0; j < J; ++j) {
        WaveFunction pj = WaveFunction::hermite(b, ids[static_cast<std::size_t>(j)]);
        for (int k : {j, (j + 3) % J}) {
            const GridSymbol& f = phi[static_cast<std::size_t>(j * J + k)];
            GridSymbol proj = w_s_phi(w_s_phi_adjoint(f, pj, s, b), pj, s, kSpectral);
            member = std::max(member, l2_norm(proj - f));
        }
    }
    Measure m;
    m.add("36x36 Gram deviation", gram, 1e-6);
    m.add("range-projection defect", member, 1e-6);
    return m.done();
}

Outcome semiclassical() {
    Measure m;
    const std::vector<double> hbars = {0.5, 0.25, 0.125, 0.0625};
    std::vector<double> defects;
    for (double hb : hbars) {
        NCParams p = NCParams::commutative(2, hb);
        Schedule sc;
        sc.alpha_theta = sc.alpha_eta = 3;
        sc.theta_hat = Mat::Zero(2, 2);
        sc.theta_hat(0, 1) = 1, sc.theta_hat(1, 0) = -1;
        sc.eta_hat = sc.theta_hat;
        p.schedule = sc;
        NCParams q = at_hbar(p, hb);
        SeibergWittenMap s = solve_sw_map(build_omega(q));
        PhaseGrid g = PhaseGrid::standard(2, 8, hb);
        SymbolExpr a = parse("exp(-(x1^2 + x2^2 + p1^2 + p2^2))", 2);
        SymbolExpr b = parse("x1^3 + p1*x2^2 - p2^3", 2);
        GridSymbol ab = star_grid_omega(a, b, q, s, g), ba = star_grid_omega(b, a, q, s, g);
        // {a, b} = d_x a . d_p b - d_p a . d_x b, evaluated from symbolic derivatives
        double worst = 0;
        std::vector<GridSymbol> dx, dp, ex, ep;
        for (int al = 0; al < 2; ++al) {
            dx.push_back(sample(differentiate(a, al), g));
            dp.push_back(sample(differentiate(a, al + 2), g));
            ex.push_back(sample(differentiate(b, al), g));
            ep.push_back(sample(differentiate(b, al + 2), g));
        }
        for (std::size_t k = 0; k < g.size(); ++k) {
            cplx pb = 0;
            for (int al = 0; al < 2; ++al) pb += dx[al].samples[k] * ep[al].samples[k] - dp[al].samples[k] * ex[al].samples[k];
            worst = std::max(worst, std::abs((ab.samples[k] - ba.samples[k]) / cplx(0, hb) - pb));
        }
        defects.push_back(worst);
    }
    const double slope = loglog_slope(hbars, defects);
    m.add("Gaussian fixture slope deficit 0.9 - slope", std::max(0.0, 0.9 - slope), 0);
    m.note("slope " + fmt("%.3f", slope));

    // exact products at Theta = N = 0
    NCParams comm = NCParams::commutative(2, 0.1);
    Schedule zero;
    zero.c_theta = zero.c_eta = 0;
    zero.theta_hat = zero.eta_hat = Mat::Zero(2, 2);
    comm.schedule = zero;
    const std::vector<double> hb = {1e-1, 1e-2, 1e-3};
    std::vector<Vec> probes;
    std::mt19937_64 rng(11);
    std::normal_distribution<double> nd;
    for (int k = 0; k < 5; ++k) {
        Vec z(4);
        for (int i = 0; i < 4; ++i) z(i) = nd(rng);
        probes.push_back(z);
    }
    double quad = 0;
    for (const auto& [ta, tb] : {std::pair<std::string, std::string>{"x1^2", "p1^2"}, {"x1*p2 + x2^2", "p1*p2 - x1^2"}}) {
        auto d = commutator_defect(parse(ta, 2), parse(tb, 2), comm, hb, probes);
        quad = std::max(quad, *std::max_element(d.begin(), d.end()));
    }
    m.add("quadratic defect (identically zero, slope 0)", quad, 0);
    auto cubic = commutator_defect(parse("x1^3", 2), parse("p1^3", 2), comm, hb, probes);
    const double cs = loglog_slope(hb, cubic);
    m.add("|cubic slope - 2|", std::abs(cs - 2), 0.05);
    return m.done();
}

Outcome determinant() {
    Measure m;
    double err = 0;
    const double fixtures[][3] = {{1.0, 0.1, 0.05}, {1.0, 0.5, -0.5}, {0.5, 0.2, 0.3}, {2.0, 1.9, 2.0}, {1.0, -0.99, 0.99}};
    for (const auto& f : fixtures) {
        const double hb = f[0], th = f[1], et = f[2];
        OmegaMatrix om = build_omega(NCParams::single_pair(hb, th, et));
        const double want = std::pow(1 - th * et / (hb * hb), 2);
        err = std::max(err, std::abs(om.entries.determinant() - want));
    }
    m.add("max |det Omega - (1 - theta eta/hbar^2)^2|", err, 1e-12);
    int accepted = 0;
    for (const auto& f : {std::array<double, 3>{1.0, 1.0, 1.0}, {0.5, 0.5, 0.5}, {2.0, 8.0, 0.5}}) {
        try {
            build_omega(NCParams::single_pair(f[0], f[1], f[2]));
            ++accepted;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::Admissibility) ++accepted;
        }
    }
    m.add("boundary theta eta = hbar^2 accepted", accepted, 0);
    return m.done();
}

} // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> all = {
        {1, "CCR table", 1, ccr_table},
        {2, "unitality and associativity", 30, unital_assoc},
        {3, "Moyal reduction", 10, moyal_reduction},
        {4, "dense kernel vs pullback", 60, dense_vs_pullback},
        {5, "F_Omega involutive", 30, sft_involution},
        {6, "Seiberg-Witten map", 5, sw_map},
        {7, "intertwining", 120, intertwining},
        {8, "spectral equality", 300, spectral_equality},
        {9, "s-invariance of spectra", 300, s_invariance},
        {10, "orthonormal basis", 120, orthonormal_basis},
        {11, "semiclassical asymptotics", 60, semiclassical},
        {12, "determinant and admissibility", 1, determinant},
    };
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

    int failed = 0;
    for (const auto& c : all) {
        if (!only.empty() && !only.count(c.id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = secs <= c.limit;
        const bool pass = o.pass && in_time;
        failed += !pass;
        std::printf("%s %2d %-30s %s; time %.2f s (limit %.0f s)%s\n", pass ? "PASS" : "FAIL", c.id, c.name,
                    o.detail.c_str(), secs, c.limit, in_time ? "" : " over time");
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
