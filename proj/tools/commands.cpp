#include "cli.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "config.hpp"
#include "ncstar/errors.hpp"
#include "ncstar/star_grid.hpp"
#include "ncstar/star_poly.hpp"
#include "ncstar/wigner.hpp"
#include "verify.hpp"

namespace ncstar::cli {

namespace {

using ojson = nlohmann::ordered_json;

struct Common {
    std::string config_path;
    std::string out_path;
    std::optional<std::uint64_t> seed;
    std::optional<double> tol;
};

RunConfig load(const Common& o) {
    RunConfig c = o.config_path.empty() ? default_config() : load_config(o.config_path);
    if (o.seed) c.seed = *o.seed;
    return c;
}

void emit(const Common& o, std::ostream& out, const std::string& text) {
    if (o.out_path.empty()) {
        out << text;
        return;
    }
    std::ofstream f(o.out_path, std::ios::binary);
    if (!f) throw Error(ErrorKind::Input, "cannot write '" + o.out_path + "'");
    f << text;
}

ojson matrix(const Mat& m) {
    ojson rows = ojson::array();
    for (int i = 0; i < m.rows(); ++i) {
        ojson row = ojson::array();
        for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

ojson config_json(const RunConfig& c) {
    ojson j;
    j["n"] = c.params.n;
    j["hbar"] = c.params.hbar;
    j["theta"] = matrix(c.params.theta);
    j["eta"] = matrix(c.params.eta);
    j["seed"] = c.seed;
    ojson e = ojson::object();
    for (const auto& [k, v] : c.entries) e[k] = v;
    j["entries"] = e;
    return j;
}

std::string csv(const GridSymbol& g) {
    std::ostringstream os;
    write_csv(g, os);
    return os.str();
}

// "hermite:j" or "hermite:j1,j2,..."; a single index is padded with zeros
std::vector<int> hermite_spec(const std::string& spec, int n) {
    const std::string prefix = "hermite:";
    if (spec.rfind(prefix, 0) != 0) throw Error(ErrorKind::Input, "expected hermite:<j>, got '" + spec + "'");
    std::vector<int> j;
    std::stringstream ss(spec.substr(prefix.size()));
    std::string part;
    while (std::getline(ss, part, ',')) {
        std::size_t used = 0;
        long v = -1;
        try {
            v = std::stol(part, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != part.size() || part.empty() || v < 0 || v >= kMaxHermite)
            throw Error(ErrorKind::Input, "invalid Hermite index '" + part + "' in '" + spec + "'");
        j.push_back(static_cast<int>(v));
    }
    if (j.size() == 1) j.resize(static_cast<std::size_t>(n), 0);
    if (static_cast<int>(j.size()) != n)
        throw Error(ErrorKind::Input, "'" + spec + "' needs 1 or " + std::to_string(n) + " indices");
    return j;
}

double ratio_or_nan(const GridSymbol& g) {
    try {
        return boundary_ratio(g);
    } catch (const Error&) {
        return std::nan("");
    }
}

// --- verify -----------------------------------------------------------------

int cmd_verify(const Common& o, const std::string& suite, std::ostream& out, std::ostream& err) {
    RunConfig c = load(o);
    std::vector<std::string> suites = suite == "all" ? std::vector<std::string>{"poly", "grid", "spectral"}
                                                     : std::vector<std::string>{suite};
    // validate everything before running anything
    for (const auto& s : suites) {
        if (s != "poly" && s != "grid" && s != "spectral") throw Error(ErrorKind::Input, "unknown suite '" + s + "'");
        if (s != "poly" && c.n() > kMaxGridN)
            throw Error(ErrorKind::Input, s + " suite needs n <= " + std::to_string(kMaxGridN));
    }
    std::vector<Check> checks;
    for (const auto& s : suites) {
        auto part = run_suite(s, c, o.tol);
        checks.insert(checks.end(), part.begin(), part.end());
    }
    bool all = true;
    ojson report;
    report["command"] = "verify";
    report["suite"] = suite;
    report["config"] = config_json(c);
    report["checks"] = ojson::array();
    report["summary"] = ojson::array();
    for (const auto& k : checks) {
        all = all && k.pass;
        report["checks"].push_back(to_json(k));
        report["summary"].push_back(summary_line(k));
        err << summary_line(k) << "\n";
    }
    report["pass"] = all;
    emit(o, out, report.dump(2) + "\n");
    return all ? kOk : kFailed;
}

// --- star -------------------------------------------------------------------

ojson poly_json(const PolySymbol& p) {
    ojson terms = ojson::array();
    const int n = p.n();
    auto push = [&](const MultiIndex& m, const std::string& exact, std::complex<double> v) {
        ojson t;
        const std::string name = monomial_name(m, n);
        t["monomial"] = name == "1" ? "const" : name;
        if (!exact.empty()) t["coef"] = exact;
        t["re"] = v.real();
        t["im"] = v.imag();
        terms.push_back(t);
    };
    if (p.exact())
        for (const auto& [m, c] : p.exact_terms().terms) push(m, c.str(), c.to_complex());
    else
        for (const auto& [m, c] : p.float_terms().terms) push(m, "", c);
    return terms;
}

GridSymbol conj(GridSymbol g) {
    for (auto& v : g.samples) v = std::conj(v);
    return g;
}

struct StarResult {
    std::optional<PolySymbol> poly;
    std::optional<GridSymbol> grid;
    std::string guard;
};

StarResult star_by(const std::string& method, const SymbolExpr& a, const SymbolExpr& b, const RunConfig& c,
                   const PhaseGrid& g) {
    const NCParams& p = c.params;
    const bool pa = is_polynomial(a), pb = is_polynomial(b);
    StarResult r;
    std::ostringstream guard;
    guard << std::setprecision(3);
    if (method == "bopp") {
        if (pa && pb) {
            r.poly = star_poly(to_poly(a), to_poly(b), p);
            guard << "bopp: finite expansion, " << r.poly->size() << " terms, "
                  << (r.poly->exact() ? "exact arithmetic" : "double arithmetic") << ", no truncation";
        } else if (pa || pb) {
            check_grid(g);
            const SeibergWittenMap s = solve_sw_map(build_omega(p));
            r.grid = star_grid_omega(a, b, p, s, g);
            guard << "bopp: shift of the polynomial factor, symbolic derivatives of the other; boundary/peak of result "
                  << ratio_or_nan(*r.grid);
        } else {
            throw Error(ErrorKind::Input, "method bopp needs at least one polynomial factor");
        }
    } else if (method == "fft") {
        check_grid(g);
        const SeibergWittenMap s = solve_sw_map(build_omega(p));
        GridSymbol sa = sample(a, g), sb = sample(b, g);
        if (is_unit(a) || is_unit(b)) {
            r.grid = star_grid_twisted(a, b, p, s, g);
            guard << "fft: unit factor, identity";
        } else if (pa) {
            r.grid = star_grid_omega(a, sb, p, s, g);
            guard << "fft: Bopp shift with spectral derivatives; boundary/peak b " << boundary_ratio(sb);
        } else if (pb) {
            // a * b = conj(conj(b) * conj(a)); DSL polynomials are real
            r.grid = conj(star_grid_omega(b, conj(sa), p, s, g));
            guard << "fft: right Bopp shift with spectral derivatives; boundary/peak a " << boundary_ratio(sa);
        } else {
            r.grid = star_grid_twisted(a, sb, p, s, g);
            guard << "fft: pulled-back twisted product; boundary/peak a " << boundary_ratio(sa) << ", b "
                  << boundary_ratio(sb);
        }
        guard << ", result " << ratio_or_nan(*r.grid);
    } else if (method == "dense") {
        check_grid(g);
        if (g.size() > kDenseMaxPoints)
            throw Error(ErrorKind::Input, "method dense needs at most " + std::to_string(kDenseMaxPoints) +
                                              " grid points (M^{2n}); got " + std::to_string(g.size()));
        GridSymbol sb = sample(b, g);
        r.grid = apply_A_omega_dense(a, sb, p);
        guard << "dense: " << g.size() << "-point kernel; boundary/peak b " << ratio_or_nan(sb) << ", result "
              << ratio_or_nan(*r.grid);
    } else {
        throw Error(ErrorKind::Input, "unknown method '" + method + "' (bopp|fft|dense)");
    }
    r.guard = guard.str();
    return r;
}

GridSymbol on_grid(const StarResult& r, int n, const PhaseGrid& g) {
    if (r.grid) return *r.grid;
    GridSymbol out = GridSymbol::zeros(g);
    std::vector<std::complex<double>> z(static_cast<std::size_t>(2 * n));
    for (std::size_t k = 0; k < g.size(); ++k) {
        const auto idx = g.index(k);
        for (std::size_t i = 0; i < z.size(); ++i) z[i] = g.coord(idx[i]);
        out.samples[k] = r.poly->evaluate(z);
    }
    return out;
}

int cmd_star(const Common& o, const std::string& ta, const std::string& tb, const std::string& method,
             const std::string& compare, std::ostream& out, std::ostream& err) {
    RunConfig c = load(o);
    const int n = c.n();
    const SymbolExpr a = parse(ta, n), b = parse(tb, n);
    const PhaseGrid g = c.grid ? *c.grid : PhaseGrid{n, 6 * std::sqrt(c.params.hbar), 32, c.params.hbar};

    StarResult r = star_by(method, a, b, c, g);
    err << r.guard << "\n";

    int code = kOk;
    std::optional<double> diff;
    if (!compare.empty()) {
        StarResult ref = star_by(compare, a, b, c, g);
        check_grid(g);
        diff = sup_diff(on_grid(r, n, g), on_grid(ref, n, g), true);
        err << "sup_difference_vs_" << compare << ": " << std::setprecision(6) << *diff << " (interior)\n";
        if (o.tol && !(*diff <= *o.tol)) {
            err << "cross-method check failed: " << *diff << " > " << *o.tol << "\n";
            code = kFailed;
        }
    }

    if (r.poly) {
        ojson j;
        j["command"] = "star";
        j["method"] = method;
        j["a"] = ta;
        j["b"] = tb;
        j["config"] = config_json(c);
        j["exact"] = r.poly->exact();
        j["terms"] = poly_json(*r.poly);
        j["guard"] = r.guard;
        if (diff) j["sup_difference"] = {{"method", compare}, {"value", *diff}};
        emit(o, out, j.dump(2) + "\n");
    } else {
        emit(o, out, csv(*r.grid));
    }
    return code;
}

// --- spectrum ---------------------------------------------------------------

int cmd_spectrum(const Common& o, const std::string& text, int count, const std::string& phi_spec,
                 std::uint64_t variant, std::ostream& out, std::ostream& err) {
    RunConfig c = load(o);
    const int n = c.n();
    if (n > kMaxGridN) throw Error(ErrorKind::Input, "spectrum needs n <= " + std::to_string(kMaxGridN));
    const SymbolExpr a = parse(text, n);
    if (!is_polynomial(a))
        throw Error(ErrorKind::Input, "spectrum needs a polynomial symbol (growth guards); got '" + text + "'");
    const double hb = c.params.hbar;
    const HermiteBasis basis = basis_or(c, HermiteBasis::standard(n, 16, hb));
    const PhaseGrid g = grid_or(c, PhaseGrid{n, 5 * std::sqrt(hb), 28, hb});
    if (count < 1 || static_cast<std::size_t>(count) > basis.size())
        throw Error(ErrorKind::Input, "count must be in [1, K^n]");

    SpectrumOptions opts;
    opts.tol = o.tol ? *o.tol : c.tolerance("spectral", 1e-4);
    if (!phi_spec.empty()) {
        std::vector<int> j = hermite_spec(phi_spec, n);
        for (int v : j)
            if (v >= basis.K) throw Error(ErrorKind::Input, "window index exceeds basis K");
        opts.phi = WaveFunction::hermite(basis, j);
    }
    const SeibergWittenMap s = solve_sw_map(build_omega(c.params), variant);
    Spectrum sp = solve_stargen(a, c.params, s, basis, g, count, opts);

    ojson j = ojson::parse(spectrum_json(sp));
    ojson head;
    head["command"] = "spectrum";
    head["symbol"] = text;
    head["count"] = count;
    head["variant"] = variant;
    head["config"] = config_json(c);
    head.update(j);
    emit(o, out, head.dump(2) + "\n");

    std::size_t ok = 0;
    for (bool b : sp.converged) ok += b;
    err << "eigenvalues: " << count << ", converged: " << ok << "/" << sp.converged.size() << "\n";
    if (!sp.warning.empty()) err << "warning: " << sp.warning << "\n";
    return kOk;
}

// --- swmap ------------------------------------------------------------------

int cmd_swmap(const Common& o, std::uint64_t variant, std::optional<std::uint64_t> other, std::ostream& out,
              std::ostream& err) {
    RunConfig c = load(o);
    const OmegaMatrix om = build_omega(c.params);
    const SeibergWittenMap s = solve_sw_map(om, variant);
    const std::uint64_t w = other ? *other : (variant == 0 ? 1 : 0);
    const SeibergWittenMap sw = solve_sw_map(om, w);
    const SwResiduals r = sw_residuals(s, om);
    const double defect = symplectic_defect(s.s.inverse() * sw.s);

    ojson j;
    j["command"] = "swmap";
    j["variant"] = variant;
    j["config"] = config_json(c);
    j["omega"] = matrix(om.entries);
    j["s"] = matrix(s.s);
    j["blocks"] = {{"A", matrix(s.A)}, {"B", matrix(s.B)}, {"C", matrix(s.C)}, {"D", matrix(s.D)}};
    j["residuals"] = {{"sjst", r.sjst}, {"ab", r.ab}, {"cd", r.cd}, {"ad", r.ad}, {"max", r.max()}};
    j["companion"] = {{"variant", w}, {"s", matrix(sw.s)}, {"symplectic_defect", defect}};
    emit(o, out, j.dump(2) + "\n");

    const double tol = o.tol ? *o.tol : c.tolerance("sw", 1e-10);
    err << "residual: " << r.max() << ", companion symplectic defect: " << defect << "\n";
    return r.max() <= tol && defect <= tol ? kOk : kFailed;
}

// --- wigner -----------------------------------------------------------------

int cmd_wigner(const Common& o, const std::string& psi_spec, const std::string& phi_spec, bool ws,
               std::uint64_t variant, std::ostream& out, std::ostream& err) {
    RunConfig c = load(o);
    const int n = c.n();
    if (n > kMaxGridN) throw Error(ErrorKind::Input, "wigner needs n <= " + std::to_string(kMaxGridN));
    const std::vector<int> jp = hermite_spec(psi_spec, n), jf = hermite_spec(phi_spec, n);
    const double hb = c.params.hbar;
    int top = 0;
    for (int v : jp) top = std::max(top, v);
    for (int v : jf) top = std::max(top, v);
    HermiteBasis basis = basis_or(c, HermiteBasis::standard(n, std::max(16, top + 1), hb));
    if (top >= basis.K) throw Error(ErrorKind::Input, "Hermite index exceeds basis K = " + std::to_string(basis.K));
    const PhaseGrid g = grid_or(c, PhaseGrid{n, 6 * std::sqrt(hb), n == 1 ? 32 : 28, hb});

    const WaveFunction psi = WaveFunction::hermite(basis, jp), phi = WaveFunction::hermite(basis, jf);
    GridSymbol w;
    double scale = std::pow(2 * M_PI * hb, 0.5 * n);
    if (ws) {
        w = w_s_phi(psi, phi, solve_sw_map(build_omega(c.params), variant), g);
        scale = 1;
    } else {
        w = cross_wigner(psi, phi, g);
    }
    emit(o, out, csv(w));
    err << std::setprecision(12) << "norm_scaled: " << scale * l2_norm(w) << "\n";
    return kOk;
}

int exit_for(const Error& e) {
    switch (e.kind()) {
    case ErrorKind::Input:
    case ErrorKind::Parse:
    case ErrorKind::Admissibility: return kConfig;
    case ErrorKind::Guard: return kGuard;
    default: return kFailed;
    }
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"ncstar: Omega-star products, Seiberg-Witten maps and star-genvalue spectra"};
    app.require_subcommand(1);
    Common o;
    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config_path, "config file (INI-like)");
        sub->add_option("--out", o.out_path, "output path (default stdout)");
        sub->add_option("--seed", o.seed, "random seed, overrides the config");
        sub->add_option("--tol", o.tol, "tolerance override");
    };

    std::string suite = "all";
    auto* verify = app.add_subcommand("verify", "run property suites, write a JSON report");
    verify->add_option("--suite", suite, "poly|grid|spectral|all")->check(CLI::IsMember({"poly", "grid", "spectral", "all"}));
    common(verify);

    std::string sa, sb, method = "bopp", compare;
    auto* star = app.add_subcommand("star", "a *_Omega b");
    star->add_option("--a", sa, "left symbol")->required();
    star->add_option("--b", sb, "right symbol")->required();
    star->add_option("--method", method, "bopp|fft|dense")->check(CLI::IsMember({"bopp", "fft", "dense"}));
    star->add_option("--compare", compare, "second method; report the interior sup-difference")
        ->check(CLI::IsMember({"bopp", "fft", "dense"}));
    common(star);

    std::string symbol, phi;
    int count = 6;
    std::uint64_t variant = 0;
    auto* spectrum = app.add_subcommand("spectrum", "lowest star-genvalues of a real polynomial symbol");
    spectrum->add_option("--symbol", symbol, "symbol")->required();
    spectrum->add_option("--count", count, "number of eigenvalues");
    spectrum->add_option("--phi", phi, "window, hermite:<j> (default hermite:0)");
    spectrum->add_option("--variant", variant, "Seiberg-Witten map variant");
    common(spectrum);

    std::optional<std::uint64_t> other;
    auto* swmap = app.add_subcommand("swmap", "solve s J s^T = Omega");
    swmap->add_option("--variant", variant, "variant (0 is the standard-basis start)");
    swmap->add_option("--compare", other, "companion variant (default 1, or 0 when --variant is not 0)");
    common(swmap);

    std::string psi;
    bool ws = false;
    auto* wigner = app.add_subcommand("wigner", "cross-Wigner transform of Hermite functions");
    wigner->add_option("--psi", psi, "hermite:<j>")->required();
    wigner->add_option("--phi", phi, "hermite:<k>")->required();
    wigner->add_flag("--ws", ws, "write W_{s,phi} psi instead of W(psi, phi)");
    wigner->add_option("--variant", variant, "Seiberg-Witten map variant for --ws");
    common(wigner);

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kConfig;
    }

    try {
        if (const char* t = std::getenv("NCSTAR_THREADS")) {
            char* end = nullptr;
            long v = std::strtol(t, &end, 10);
            if (!*t || *end || v < 1) throw Error(ErrorKind::Input, "NCSTAR_THREADS must be a positive integer");
        }
        if (*verify) return cmd_verify(o, suite, out, err);
        if (*star) return cmd_star(o, sa, sb, method, compare, out, err);
        if (*spectrum) return cmd_spectrum(o, symbol, count, phi, variant, out, err);
        if (*swmap) return cmd_swmap(o, variant, other, out, err);
        if (*wigner) return cmd_wigner(o, psi, phi, ws, variant, out, err);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_for(e);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kFailed;
    }
    return kFailed;
}

} // namespace ncstar::cli
