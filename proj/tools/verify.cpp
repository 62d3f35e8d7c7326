#include "verify.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <random>
#include <sstream>

#include "ncstar/errors.hpp"
#include "ncstar/star_grid.hpp"
#include "ncstar/star_poly.hpp"
#include "ncstar/wigner.hpp"

namespace ncstar::cli {

namespace {

struct Suite {
    std::string name;
    std::optional<double> over;
    std::vector<Check> out;

    void add(const std::string& check, double value, double tol, std::string detail = "") {
        if (over && tol > 0) tol = *over;
        Check k{name, check, value, tol, value <= tol, std::move(detail)};
        out.push_back(std::move(k));
    }
};

std::string num(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

// |z|^2 as DSL text
std::string radius2(int n) {
    std::string s;
    for (int k = 0; k < 2 * n; ++k) s += (k ? "+" : "") + variable_name(k, n) + "^2";
    return "(" + s + ")";
}

std::string gauss(int n, double width) { return "exp(-" + radius2(n) + "/" + num(width) + ")"; }

PolySymbol random_monomial(std::mt19937_64& rng, int n, int maxdeg) {
    std::uniform_int_distribution<int> var(0, 2 * n - 1), deg(0, maxdeg), c(1, 6);
    PolySymbol m = PolySymbol::constant(n, GaussQ(mpq_class(c(rng), c(rng))));
    const int d = deg(rng);
    for (int k = 0; k < d; ++k) m = m * PolySymbol::variable(n, var(rng));
    return m;
}

PolySymbol random_poly(std::mt19937_64& rng, int n) {
    std::uniform_int_distribution<int> terms(1, 5), c(-4, 4);
    PolySymbol p = PolySymbol::zero(n);
    const int t = terms(rng);
    for (int k = 0; k < t; ++k)
        p = p + random_monomial(rng, n, 4).scaled(GaussQ(mpq_class(c(rng)), mpq_class(c(rng), 3)));
    return p;
}

NCParams random_params(std::mt19937_64& rng, int n, double hbar) {
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    for (;;) {
        NCParams p = NCParams::commutative(n, hbar);
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                p.theta(i, j) = u(rng) * hbar, p.theta(j, i) = -p.theta(i, j);
                p.eta(i, j) = u(rng) * hbar, p.eta(j, i) = -p.eta(i, j);
            }
        if (admissible(p).flag) return p;
    }
}

void poly_suite(Suite& s, const RunConfig& c) {
    const NCParams& p = c.params;
    const int n = p.n, d = 2 * n;
    const ExactData ex = p.exact ? *p.exact : exact_from_doubles(p);
    std::mt19937_64 rng(c.seed);

    int bad = 0;
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
            // [z_a, z_b] = i hbar omega_ab
            mpq_class v = 0;
            if (a < n && b < n) v = ex.theta[static_cast<std::size_t>(a * n + b)];
            else if (a >= n && b >= n) v = ex.eta[static_cast<std::size_t>((a - n) * n + (b - n))];
            else if (b == a + n) v = ex.hbar;
            else if (a == b + n) v = -ex.hbar;
            PolySymbol want = v == 0 ? PolySymbol::zero(n) : PolySymbol::constant(n, GaussQ(0, v));
            if (!(star_commutator(PolySymbol::variable(n, a), PolySymbol::variable(n, b), p) == want)) ++bad;
        }
    s.add("ccr_table", bad, 0, std::to_string(d * d) + " coordinate pairs, exact");

    bad = 0;
    const PolySymbol one = PolySymbol::constant(n, GaussQ(1));
    for (int k = 0; k < 50; ++k) {
        PolySymbol a = random_poly(rng, n);
        if (!(star_poly(one, a, p) == a) || !(star_poly(a, one, p) == a)) ++bad;
    }
    s.add("unitality", bad, 0, "50 random polynomials, exact");

    bad = 0;
    for (int k = 0; k < 25; ++k) {
        PolySymbol a = random_monomial(rng, n, 3), b = random_monomial(rng, n, 3), e = random_monomial(rng, n, 3);
        if (!(star_poly(star_poly(a, b, p), e, p) == star_poly(a, star_poly(b, e, p), p))) ++bad;
    }
    s.add("associativity", bad, 0, "25 random monomial triples of degree <= 3, exact");

    const OmegaMatrix om = build_omega(p);
    const double want_det = (Mat::Identity(n, n) + p.theta * p.eta / (p.hbar * p.hbar)).determinant();
    s.add("det_omega", std::abs(om.entries.determinant() - want_det), 1e-12, "det Omega against det(I + Theta N / hbar^2)");

    double res = 0, defect = 0;
    const SeibergWittenMap s0 = solve_sw_map(om, 0);
    for (std::uint64_t v = 0; v < 4; ++v) {
        SeibergWittenMap sv = solve_sw_map(om, v);
        res = std::max(res, sw_residuals(sv, om).max());
        defect = std::max(defect, symplectic_defect(s0.s.inverse() * sv.s));
    }
    s.add("sw_residuals", res, 1e-10, "variants 0..3 of the configured Omega");
    s.add("sw_variant_symplectic", defect, 1e-10, "s0^{-1} s_v for v = 1..3");

    res = 0;
    for (int k = 0; k < 100; ++k) {
        OmegaMatrix o = build_omega(random_params(rng, n, p.hbar));
        res = std::max(res, sw_residuals(solve_sw_map(o, static_cast<std::uint64_t>(k)), o).max());
    }
    s.add("sw_random", res, 1e-10, "100 random admissible parameter sets");

    if (n >= 2) {
        NCParams q = NCParams::commutative(n, p.hbar);
        q.theta(0, 1) = p.hbar, q.theta(1, 0) = -p.hbar;
        q.eta(0, 1) = p.hbar, q.eta(1, 0) = -p.hbar;
        bool rejected = false;
        try {
            build_omega(q);
        } catch (const Error& e) {
            rejected = e.kind() == ErrorKind::Admissibility;
        }
        s.add("admissibility_boundary", rejected ? 0 : 1, 0, "theta12 eta12 = hbar^2 must be rejected");
    }

    // commutator defect at Theta = N = 0: zero for quadratics, slope 2 for cubics
    NCParams comm = NCParams::commutative(n, 0.1);
    Schedule sc;
    sc.c_theta = sc.c_eta = 0;
    sc.theta_hat = sc.eta_hat = Mat::Zero(n, n);
    comm.schedule = sc;
    const std::vector<double> hb = {1e-1, 1e-2, 1e-3};
    std::vector<Vec> probes;
    std::normal_distribution<double> g;
    for (int k = 0; k < 5; ++k) {
        Vec z(d);
        for (int i = 0; i < d; ++i) z(i) = g(rng);
        probes.push_back(z);
    }
    const std::string x = variable_name(0, n), pp = variable_name(n, n);
    auto quad = commutator_defect(parse(x + "^2", n), parse(pp + "^2", n), comm, hb, probes);
    s.add("defect_quadratic", *std::max_element(quad.begin(), quad.end()), 0, "hbar in {0.1, 0.01, 0.001}");
    auto cubic = commutator_defect(parse(x + "^3", n), parse(pp + "^3", n), comm, hb, probes);
    const double slope = loglog_slope(hb, cubic);
    s.add("defect_cubic_slope", std::abs(slope - 2), 0.05, "slope " + num(slope) + ", expected 2");
}

void require_grid_dims(const RunConfig& c, const char* suite) {
    if (c.n() > kMaxGridN)
        throw Error(ErrorKind::Input, std::string(suite) + " suite needs n <= " + std::to_string(kMaxGridN));
}

void grid_suite(Suite& s, const RunConfig& c) {
    require_grid_dims(c, "grid");
    const NCParams& p = c.params;
    const int n = p.n;
    const double hb = p.hbar, tol = c.tolerance("grid", 1e-6);
    const PhaseGrid g = grid_or(c, PhaseGrid{n, 6 * std::sqrt(hb), 32, hb});
    const std::string G = gauss(n, hb), last_p = variable_name(2 * n - 1, n);

    NCParams comm = NCParams::commutative(n, hb);
    const SeibergWittenMap sc = solve_sw_map(build_omega(comm));
    SymbolExpr fa = parse("(x1 + 1/2)*" + G, n), fb = parse("(p1^2 - x1)*" + G, n);
    GridSymbol viaomega = star_grid_omega(fa, fb, comm, sc, g);
    GridSymbol viamoyal = moyal_star_fft(sample(fa, g), sample(fb, g), hb);
    std::size_t bad = 0;
    for (std::size_t k = 0; k < g.size(); ++k) bad += viaomega.samples[k] != viamoyal.samples[k];
    s.add("moyal_reduction", static_cast<double>(bad), 0, "Theta = N = 0, mismatched samples");

    const SeibergWittenMap sw = solve_sw_map(build_omega(p));
    GridSymbol unit = star_grid_omega(parse("1", n), fb, p, sw, g), fbs = sample(fb, g);
    bad = 0;
    for (std::size_t k = 0; k < g.size(); ++k) bad += unit.samples[k] != fbs.samples[k];
    s.add("unit_identity", static_cast<double>(bad), 0, "1 * b, mismatched samples");

    SymbolExpr x1 = parse("x1", n), b = parse("(1 + p1)*" + G, n);
    GridSymbol exact = star_grid_omega(x1, b, p, sw, g);
    GridSymbol spectral = star_grid_omega(x1, sample(b, g), p, sw, g);
    s.add("bopp_spectral", sup_diff(exact, spectral, true), tol, "x1 * damped, symbolic vs spectral derivatives, interior");

    PhaseGrid gd{n, g.L, 8, hb};
    SymbolExpr a = parse("x1*" + G, n), psi = parse("(1 + " + last_p + ")*" + gauss(n, 0.8 * hb), n);
    GridSymbol dense = apply_A_omega_dense(a, sample(psi, gd), p);
    GridSymbol pulled = star_grid_omega(a, psi, p, sw, gd);
    s.add("dense_vs_pullback", sup_diff(dense, pulled, true), tol, "M = 8, interior");

    const OmegaMatrix om = build_omega(p);
    GridSymbol f = sample(parse((n == 1 ? "(1 + x1 - p1)*" : "(1 + x1 - p1*p2)*") + gauss(n, 2 * hb), n), g);
    s.add("sft_involution", sup_diff(sft_omega_dense(sft_omega_dense(f, om), om), f), tol, "|F F a - a|_sup");
}

void spectral_suite(Suite& s, const RunConfig& c) {
    require_grid_dims(c, "spectral");
    const NCParams& p = c.params;
    const int n = p.n, k = n == 1 ? 3 : 6;
    const double hb = p.hbar;
    const HermiteBasis basis = basis_or(c, HermiteBasis::standard(n, 16, hb));
    const PhaseGrid g = grid_or(c, PhaseGrid{n, 5 * std::sqrt(hb), 28, hb});
    const SymbolExpr osc = parse(radius2(n) + "/2", n);

    s.add("hermite_gram", basis.gram_defect(), 1e-10, "K = " + std::to_string(basis.K));

    SpectrumOptions quick;
    quick.map_eigenfunctions = quick.residuals = quick.sentinel = false;
    NCParams comm = NCParams::commutative(n, hb);
    Spectrum sp0 = solve_stargen(osc, comm, solve_sw_map(build_omega(comm)), basis, g, k, quick);
    std::vector<double> want;
    for (int j = 0; j < 4; ++j)
        for (int m = 0; m < (n == 1 ? 1 : j + 1); ++m) want.push_back(hb * (j + 0.5 * n));
    double err = 0;
    for (int i = 0; i < k; ++i) err = std::max(err, std::abs(sp0.eigenvalues[static_cast<std::size_t>(i)] - want[static_cast<std::size_t>(i)]));
    s.add("oscillator_commutative", err, 1e-6, "lowest " + std::to_string(k) + " against hbar(|j| + n/2)");

    SpectrumOptions full;
    full.tol = c.tolerance("spectral", 1e-4);
    const OmegaMatrix om = build_omega(p);
    const SeibergWittenMap s0 = solve_sw_map(om, 0), s1 = solve_sw_map(om, 1);
    Spectrum sp = solve_stargen(osc, p, s0, basis, g, k, full);
    const double worst = *std::max_element(sp.residuals.begin(), sp.residuals.end());
    s.add("oscillator_residuals", worst, full.tol, "configured parameters, max residual");

    Spectrum sp1 = solve_stargen(osc, p, s1, basis, g, k, quick);
    err = 0;
    for (int i = 0; i < k; ++i)
        err = std::max(err, std::abs(sp.eigenvalues[static_cast<std::size_t>(i)] - sp1.eigenvalues[static_cast<std::size_t>(i)]));
    s.add("s_invariance", err, 1e-8, "variants 0 and 1");

    const int J = 3;
    std::vector<GridSymbol> phi = ob_basis(s0, basis, J, g);
    double gram = 0;
    for (std::size_t a = 0; a < phi.size(); ++a)
        for (std::size_t b = 0; b < phi.size(); ++b) {
            std::complex<double> acc = 0;
            for (std::size_t i = 0; i < g.size(); ++i) acc += std::conj(phi[a].samples[i]) * phi[b].samples[i];
            acc *= g.weight();
            gram = std::max(gram, std::abs(acc - (a == b ? 1.0 : 0.0)));
        }
    s.add("ob_gram", gram, 1e-6, std::to_string(J * J) + " functions W_{s,h_j} h_k");
}

} // namespace

std::vector<Check> run_suite(const std::string& suite, const RunConfig& c, std::optional<double> tol) {
    Suite s{suite, tol, {}};
    if (suite == "poly") poly_suite(s, c);
    else if (suite == "grid") grid_suite(s, c);
    else if (suite == "spectral") spectral_suite(s, c);
    else throw Error(ErrorKind::Input, "unknown suite '" + suite + "'");
    return s.out;
}

nlohmann::ordered_json to_json(const Check& k) {
    nlohmann::ordered_json j;
    j["suite"] = k.suite;
    j["name"] = k.name;
    j["value"] = k.value;
    j["tol"] = k.tol;
    j["pass"] = k.pass;
    if (!k.detail.empty()) j["detail"] = k.detail;
    return j;
}

std::string summary_line(const Check& k) {
    if (k.pass) return k.name + ": pass";
    std::ostringstream os;
    os << k.name << ": FAIL (" << k.value << " > " << k.tol << ")";
    return os.str();
}

} // namespace ncstar::cli
