#include "config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "ncstar/errors.hpp"
#include "ncstar/rational.hpp"

namespace ncstar::cli {

namespace {

const std::map<std::string, std::set<std::string>> kKeys = {
    {"", {"n", "hbar", "theta12", "eta12", "theta", "eta", "seed"}},
    {"schedule", {"alpha_theta", "alpha_eta", "c_theta", "c_eta", "theta_hat12", "eta_hat12", "theta_hat", "eta_hat"}},
    {"grid", {"L", "M"}},
    {"basis", {"K", "Lx", "Mx"}},
    {"tol", {"grid", "spectral", "sw", "wigner"}},
};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

Error config_error(int line, const std::string& what) {
    return Error(ErrorKind::Input, "config line " + std::to_string(line) + ": " + what);
}

double number(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    double d = 0;
    try {
        d = std::stod(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != v.size() || !std::isfinite(d)) throw Error(ErrorKind::Input, key + ": not a number: '" + v + "'");
    return d;
}

long to_int(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    long d = 0;
    try {
        d = std::stol(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != v.size()) throw Error(ErrorKind::Input, key + ": not an integer: '" + v + "'");
    return d;
}

// "a b, c d" -> row-major rationals of an n x n matrix
std::vector<mpq_class> parse_matrix(const std::string& key, const std::string& v, int n) {
    std::vector<mpq_class> out;
    std::stringstream rows(v);
    std::string row;
    int nrows = 0;
    while (std::getline(rows, row, ',')) {
        std::stringstream cells(row);
        std::string cell;
        int ncols = 0;
        while (cells >> cell) {
            out.push_back(parse_rational(cell));
            ++ncols;
        }
        if (ncols != n) throw Error(ErrorKind::Input, key + ": every row needs " + std::to_string(n) + " entries");
        ++nrows;
    }
    if (nrows != n) throw Error(ErrorKind::Input, key + ": expected " + std::to_string(n) + " rows");
    return out;
}

std::vector<mpq_class> pair_matrix(int n, const mpq_class& v) {
    std::vector<mpq_class> m(static_cast<std::size_t>(n * n), mpq_class(0));
    m[1] = v;
    m[static_cast<std::size_t>(n)] = -v;
    return m;
}

Mat to_mat(const std::vector<mpq_class>& q, int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = to_double(q[static_cast<std::size_t>(i * n + j)]);
    return m;
}

} // namespace

double RunConfig::tolerance(const std::string& key, double fallback) const {
    auto it = tol.find(key);
    return it == tol.end() ? fallback : it->second;
}

RunConfig default_config() { return parse_config(""); }

RunConfig parse_config(const std::string& text) {
    std::map<std::string, std::pair<std::string, int>> kv; // "section.key" -> (value, line)
    RunConfig c;
    std::string section;
    std::stringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = trim(raw.substr(0, raw.find('#')));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw config_error(lineno, "malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (!kKeys.count(section) || section.empty()) throw config_error(lineno, "unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw config_error(lineno, "expected key = value");
        const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        if (!kKeys.at(section).count(key))
            throw config_error(lineno, "unknown key '" + key + "'" + (section.empty() ? "" : " in [" + section + "]"));
        if (value.empty()) throw config_error(lineno, "empty value for '" + key + "'");
        const std::string full = section.empty() ? key : section + "." + key;
        if (kv.count(full)) throw config_error(lineno, "repeated key '" + full + "'");
        kv[full] = {value, lineno};
        c.entries.emplace_back(full, value);
    }

    auto get = [&](const std::string& k) -> const std::string* {
        auto it = kv.find(k);
        return it == kv.end() ? nullptr : &it->second.first;
    };

    const long n = get("n") ? to_int("n", *get("n")) : 2;
    if (n < 1 || n > kMaxN) throw Error(ErrorKind::Input, "n must be in [1, " + std::to_string(kMaxN) + "]");
    const int ni = static_cast<int>(n);
    if (get("seed")) {
        long s = to_int("seed", *get("seed"));
        if (s < 0) throw Error(ErrorKind::Input, "seed must be non-negative");
        c.seed = static_cast<std::uint64_t>(s);
    }

    const mpq_class hbar = parse_rational(get("hbar") ? *get("hbar") : "1");
    if (hbar <= 0) throw Error(ErrorKind::Input, "hbar must be positive");

    auto matrix = [&](const std::string& full, const std::string& pair, const char* fallback) {
        if (get(full) && get(pair)) throw Error(ErrorKind::Input, "give either " + full + " or " + pair + ", not both");
        if (get(full)) return parse_matrix(full, *get(full), ni);
        if (get(pair) && ni != 2) throw Error(ErrorKind::Input, pair + " needs n = 2");
        if (get(pair)) return pair_matrix(2, parse_rational(*get(pair)));
        if (fallback && ni >= 2) return pair_matrix(ni, parse_rational(fallback));
        return std::vector<mpq_class>(static_cast<std::size_t>(ni * ni), mpq_class(0));
    };
    // with no theta/eta keys at all and n = 2: theta_12 = 0.1, eta_12 = 0.05
    const bool fixture = ni == 2 && !get("theta") && !get("theta12") && !get("eta") && !get("eta12");
    ExactData ex;
    ex.hbar = hbar;
    ex.theta = matrix("theta", "theta12", fixture ? "0.1" : nullptr);
    ex.eta = matrix("eta", "eta12", fixture ? "0.05" : nullptr);

    NCParams& p = c.params;
    p.n = ni;
    p.hbar = to_double(hbar);
    p.theta = to_mat(ex.theta, ni);
    p.eta = to_mat(ex.eta, ni);
    p.exact = ex;

    bool any_schedule = false;
    for (const auto& [k, v] : kv)
        if (k.rfind("schedule.", 0) == 0) any_schedule = true;
    if (any_schedule) {
        Schedule sc;
        auto num = [&](const std::string& k, double& dst) {
            if (get("schedule." + k)) dst = number(k, *get("schedule." + k));
        };
        num("alpha_theta", sc.alpha_theta);
        num("alpha_eta", sc.alpha_eta);
        num("c_theta", sc.c_theta);
        num("c_eta", sc.c_eta);
        sc.theta_hat = to_mat(matrix("schedule.theta_hat", "schedule.theta_hat12", "1"), ni);
        sc.eta_hat = to_mat(matrix("schedule.eta_hat", "schedule.eta_hat12", "1"), ni);
        p.schedule = sc;
    }
    validate(p);
    Admissibility adm = admissible(p);
    if (!adm.flag) {
        std::ostringstream os;
        os << "inadmissible parameters: max |theta_ab eta_cd| reaches hbar^2 (margin " << adm.margin
           << ", worst (a,b,c,d) = (" << adm.worst[0] << "," << adm.worst[1] << "," << adm.worst[2] << ","
           << adm.worst[3] << "))";
        throw Error(ErrorKind::Admissibility, os.str());
    }
    // det Omega = 0 can happen even when the pairwise test passes
    build_omega(p);

    if (get("grid.L") || get("grid.M")) {
        PhaseGrid g;
        g.n = ni;
        g.hbar = p.hbar;
        g.L = get("grid.L") ? number("L", *get("grid.L")) : 6 * std::sqrt(p.hbar);
        g.M = get("grid.M") ? static_cast<int>(to_int("M", *get("grid.M"))) : 16;
        check_grid(g);
        c.grid = g;
    }
    if (get("basis.K") || get("basis.Lx") || get("basis.Mx")) {
        HermiteBasis b = HermiteBasis::standard(ni, 16, p.hbar);
        if (get("basis.K")) b.K = static_cast<int>(to_int("K", *get("basis.K")));
        if (get("basis.Lx")) b.Lx = number("Lx", *get("basis.Lx"));
        if (get("basis.Mx")) b.Mx = static_cast<int>(to_int("Mx", *get("basis.Mx")));
        if (b.K < 1 || b.K > kMaxHermite) throw Error(ErrorKind::Input, "basis K out of range");
        if (b.Mx < 2 || b.Mx > kMaxMx) throw Error(ErrorKind::Input, "basis Mx out of range");
        if (!(b.Lx > 0)) throw Error(ErrorKind::Input, "basis Lx must be positive");
        if (std::pow(static_cast<double>(b.K), ni) > static_cast<double>(kMaxBasisSize))
            throw Error(ErrorKind::Input, "basis K^n exceeds the cap " + std::to_string(kMaxBasisSize));
        c.basis = b;
    }
    for (const char* k : {"grid", "spectral", "sw", "wigner"})
        if (get(std::string("tol.") + k)) {
            double t = number(k, *get(std::string("tol.") + k));
            if (!(t >= 0)) throw Error(ErrorKind::Input, std::string("tolerance ") + k + " must be non-negative");
            c.tol[k] = t;
        }
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error(ErrorKind::Input, "cannot read config '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

void check_grid(const PhaseGrid& g) {
    if (g.n > kMaxGridN) throw Error(ErrorKind::Input, "grid commands need n <= " + std::to_string(kMaxGridN));
    if (g.M < kMinM) throw Error(ErrorKind::Input, "grid M = " + std::to_string(g.M) + " is below the minimum " + std::to_string(kMinM));
    if (g.M % 2) throw Error(ErrorKind::Input, "grid M must be even");
    if (!(g.L > 0)) throw Error(ErrorKind::Input, "grid L must be positive");
    if (std::pow(static_cast<double>(g.M), 2 * g.n) > static_cast<double>(kMaxGridPoints))
        throw Error(ErrorKind::Input, "grid M^{2n} exceeds the cap " + std::to_string(kMaxGridPoints));
}

PhaseGrid grid_or(const RunConfig& c, const PhaseGrid& fallback) {
    PhaseGrid g = c.grid ? *c.grid : fallback;
    check_grid(g);
    return g;
}

HermiteBasis basis_or(const RunConfig& c, const HermiteBasis& fallback) { return c.basis ? *c.basis : fallback; }

} // namespace ncstar::cli
