#include "ncstar/grid.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <regex>
#include <sstream>

#include "ncstar/errors.hpp"
#include "parallel.hpp"

namespace ncstar {

using cplx = std::complex<double>;

PhaseGrid PhaseGrid::standard(int n, int M, double hbar) {
    PhaseGrid g{n, 6.0 * std::sqrt(hbar), M, hbar};
    g.validate();
    return g;
}

void PhaseGrid::validate() const {
    if (n < 1) throw Error(ErrorKind::Input, "grid: n must be positive");
    if (M < 2 || M % 2 != 0) throw Error(ErrorKind::Input, "grid: M must be even and >= 2");
    if (!(L > 0) || !std::isfinite(L)) throw Error(ErrorKind::Input, "grid: L must be positive");
    if (!(hbar > 0)) throw Error(ErrorKind::Input, "grid: hbar must be positive");
    if (std::pow(static_cast<double>(M), 2 * n) > 1e8) throw Error(ErrorKind::Guard, "grid: too many points");
}

std::size_t PhaseGrid::size() const {
    std::size_t s = 1;
    for (int i = 0; i < 2 * n; ++i) s *= static_cast<std::size_t>(M);
    return s;
}

double PhaseGrid::weight() const { return std::pow(step(), 2 * n); }

std::vector<int> PhaseGrid::index(std::size_t flat) const {
    std::vector<int> k(static_cast<std::size_t>(2 * n));
    for (int i = 2 * n - 1; i >= 0; --i) {
        k[static_cast<std::size_t>(i)] = static_cast<int>(flat % static_cast<std::size_t>(M));
        flat /= static_cast<std::size_t>(M);
    }
    return k;
}

bool PhaseGrid::on_boundary(std::size_t flat) const {
    for (int k : index(flat))
        if (k == 0 || k == M - 1) return true;
    return false;
}

bool PhaseGrid::interior(std::size_t flat) const {
    for (int k : index(flat))
        if (std::abs(coord(k)) > L / 2 * (1 + 1e-12)) return false;
    return true;
}

GridSymbol GridSymbol::zeros(const PhaseGrid& g) { return GridSymbol(g, std::vector<cplx>(g.size(), 0.0)); }

GridSymbol sample(const SymbolExpr& e, const PhaseGrid& grid) {
    grid.validate();
    if (e.n() != grid.n) throw Error(ErrorKind::Input, "sample: symbol dimension does not match grid");
    GridSymbol out = GridSymbol::zeros(grid);
    if (is_unit(e)) {
        std::fill(out.samples.begin(), out.samples.end(), cplx(1.0));
        out.unit = true;
        return out;
    }
    const std::size_t N = grid.size(), M = static_cast<std::size_t>(grid.M);
    const std::size_t chunk = M;
    detail::parallel_for(N / chunk, [&](std::size_t c) {
        std::vector<double> z(static_cast<std::size_t>(grid.dims()));
        for (std::size_t k = c * chunk; k < (c + 1) * chunk; ++k) {
            std::size_t f = k;
            for (int i = grid.dims() - 1; i >= 0; --i) {
                z[static_cast<std::size_t>(i)] = grid.coord(static_cast<int>(f % M));
                f /= M;
            }
            out.samples[k] = evaluate(e, z.data());
        }
    });
    return out;
}

std::vector<cplx> evaluate_points(const SymbolExpr& e, const Eigen::MatrixXd& pts) {
    if (pts.cols() != 2 * e.n()) throw Error(ErrorKind::Input, "evaluate_points: wrong point dimension");
    std::vector<cplx> out(static_cast<std::size_t>(pts.rows()));
    const std::size_t chunk = 256, R = out.size();
    detail::parallel_for((R + chunk - 1) / chunk, [&](std::size_t c) {
        std::vector<double> z(static_cast<std::size_t>(pts.cols()));
        for (std::size_t k = c * chunk; k < std::min(R, (c + 1) * chunk); ++k) {
            for (Eigen::Index i = 0; i < pts.cols(); ++i) z[static_cast<std::size_t>(i)] = pts(static_cast<Eigen::Index>(k), i);
            out[k] = evaluate(e, z.data());
        }
    });
    return out;
}

namespace {

void same_grid(const GridSymbol& a, const GridSymbol& b) {
    if (!(a.grid == b.grid)) throw Error(ErrorKind::Input, "grid mismatch");
}

} // namespace

GridSymbol operator+(const GridSymbol& a, const GridSymbol& b) {
    same_grid(a, b);
    GridSymbol r = a;
    r.unit = false;
    for (std::size_t k = 0; k < r.samples.size(); ++k) r.samples[k] += b.samples[k];
    return r;
}

GridSymbol operator-(const GridSymbol& a, const GridSymbol& b) {
    same_grid(a, b);
    GridSymbol r = a;
    r.unit = false;
    for (std::size_t k = 0; k < r.samples.size(); ++k) r.samples[k] -= b.samples[k];
    return r;
}

GridSymbol operator*(cplx c, const GridSymbol& a) {
    GridSymbol r = a;
    r.unit = a.unit && c == cplx(1.0);
    for (auto& v : r.samples) v *= c;
    return r;
}

double l2_norm(const GridSymbol& a) {
    double s = 0;
    for (const auto& v : a.samples) s += std::norm(v);
    return std::sqrt(s * a.grid.weight());
}

double sup_norm(const GridSymbol& a) {
    double m = 0;
    for (const auto& v : a.samples) m = std::max(m, std::abs(v));
    return m;
}

double sup_diff(const GridSymbol& a, const GridSymbol& b, bool interior_only) {
    same_grid(a, b);
    double m = 0;
    for (std::size_t k = 0; k < a.samples.size(); ++k) {
        if (interior_only && !a.grid.interior(k)) continue;
        m = std::max(m, std::abs(a.samples[k] - b.samples[k]));
    }
    return m;
}

double boundary_ratio(const GridSymbol& a) {
    double peak = 0, shell = 0;
    for (std::size_t k = 0; k < a.samples.size(); ++k) {
        double v = std::abs(a.samples[k]);
        peak = std::max(peak, v);
        if (a.grid.on_boundary(k)) shell = std::max(shell, v);
    }
    return peak == 0 ? 0.0 : shell / peak;
}

bool decays(const GridSymbol& a, double tol) { return !a.unit && boundary_ratio(a) <= tol; }

void require_decay(const GridSymbol& a, const char* what, double tol) {
    if (a.unit) throw Error(ErrorKind::Guard, std::string(what) + ": constant symbol does not decay");
    double r = boundary_ratio(a);
    if (r > tol) {
        std::ostringstream os;
        os << what << ": samples do not decay (boundary/peak = " << r << " > " << tol << "), truncation risk";
        throw Error(ErrorKind::Guard, os.str());
    }
}

void write_csv(const GridSymbol& a, std::ostream& os) {
    const PhaseGrid& g = a.grid;
    os << std::setprecision(17);
    os << "# ncstar-grid v1; n=" << g.n << "; M=" << g.M << "; L=" << g.L << "; hbar=" << g.hbar << "\n";
    for (std::size_t k = 0; k < a.samples.size(); ++k) {
        for (int i : g.index(k)) os << i << ",";
        os << a.samples[k].real() << "," << a.samples[k].imag() << "\n";
    }
}

GridSymbol read_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw Error(ErrorKind::Input, "grid csv: empty input");
    static const std::regex header(
        R"(^# ncstar-grid v1; n=(\d+); M=(\d+); L=([^;\s]+); hbar=([^;\s]+)\s*$)");
    std::smatch m;
    if (!std::regex_match(line, m, header)) throw Error(ErrorKind::Input, "grid csv: bad header: " + line);
    PhaseGrid g;
    try {
        g.n = std::stoi(m[1]);
        g.M = std::stoi(m[2]);
        g.L = std::stod(m[3]);
        g.hbar = std::stod(m[4]);
    } catch (const std::exception&) {
        throw Error(ErrorKind::Input, "grid csv: bad header values: " + line);
    }
    g.validate();
    GridSymbol out = GridSymbol::zeros(g);
    std::vector<bool> seen(g.size(), false);
    std::size_t rows = 0;
    const int d = g.dims();
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (static_cast<int>(cells.size()) != d + 2)
            throw Error(ErrorKind::Input, "grid csv: row " + std::to_string(rows + 2) + " has wrong field count");
        std::size_t flat = 0;
        try {
            for (int i = 0; i < d; ++i) {
                int k = std::stoi(cells[static_cast<std::size_t>(i)]);
                if (k < 0 || k >= g.M) throw Error(ErrorKind::Input, "index out of range");
                flat = flat * static_cast<std::size_t>(g.M) + static_cast<std::size_t>(k);
            }
            out.samples[flat] = cplx(std::stod(cells[static_cast<std::size_t>(d)]),
                                     std::stod(cells[static_cast<std::size_t>(d + 1)]));
        } catch (const Error&) {
            throw Error(ErrorKind::Input, "grid csv: row " + std::to_string(rows + 2) + ": index out of range");
        } catch (const std::exception&) {
            throw Error(ErrorKind::Input, "grid csv: row " + std::to_string(rows + 2) + ": bad number");
        }
        if (seen[flat]) throw Error(ErrorKind::Input, "grid csv: duplicate index at row " + std::to_string(rows + 2));
        seen[flat] = true;
        ++rows;
    }
    if (rows != g.size()) throw Error(ErrorKind::Input, "grid csv: expected " + std::to_string(g.size()) + " rows");
    return out;
}

} // namespace ncstar
