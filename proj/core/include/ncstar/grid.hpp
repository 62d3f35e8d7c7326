#pragma once

#include <complex>
#include <iosfwd>
#include <vector>

#include "ncstar/symbol.hpp"

namespace ncstar {

/// Uniform lattice z_k = -L + k (2L/M) per axis, k = 0..M-1, over all 2n axes.
struct PhaseGrid {
    int n = 1;
    double L = 6.0;
    int M = 32;
    double hbar = 1.0;

    /// L = 6 sqrt(hbar)
    static PhaseGrid standard(int n, int M, double hbar = 1.0);

    void validate() const; // M even and >= 2, L > 0, hbar > 0, n >= 1
    double step() const { return 2 * L / M; }
    double coord(int k) const { return -L + k * step(); }
    int dims() const { return 2 * n; }
    std::size_t size() const;          // M^{2n}
    double weight() const;             // step^{2n}
    std::vector<int> index(std::size_t flat) const; // row-major, last axis fastest
    bool on_boundary(std::size_t flat) const;
    bool interior(std::size_t flat) const; // |z_i| <= L/2 on every axis

    friend bool operator==(const PhaseGrid& a, const PhaseGrid& b) {
        return a.n == b.n && a.L == b.L && a.M == b.M && a.hbar == b.hbar;
    }
};

struct GridSymbol {
    PhaseGrid grid;
    std::vector<std::complex<double>> samples;
    /// The constant 1 carried analytically; its samples do not decay, so
    /// products special-case it.
    bool unit = false;

    GridSymbol() = default;
    GridSymbol(PhaseGrid g, std::vector<std::complex<double>> s) : grid(g), samples(std::move(s)) {}
    static GridSymbol zeros(const PhaseGrid& g);
};

GridSymbol sample(const SymbolExpr& e, const PhaseGrid& grid);
/// Evaluate e at arbitrary points (rows of pts, 2n columns).
std::vector<std::complex<double>> evaluate_points(const SymbolExpr& e, const Eigen::MatrixXd& pts);

GridSymbol operator+(const GridSymbol& a, const GridSymbol& b);
GridSymbol operator-(const GridSymbol& a, const GridSymbol& b);
GridSymbol operator*(std::complex<double> c, const GridSymbol& a);

double l2_norm(const GridSymbol& a);     // quadrature-weighted
double sup_norm(const GridSymbol& a);
double sup_diff(const GridSymbol& a, const GridSymbol& b, bool interior_only = false);
/// max |boundary shell| / max |samples|; 0 for an all-zero symbol
double boundary_ratio(const GridSymbol& a);
bool decays(const GridSymbol& a, double tol = 1e-6);
/// Throws ErrorKind::Guard naming `what` when a is not decayed.
void require_decay(const GridSymbol& a, const char* what, double tol = 1e-6);

void write_csv(const GridSymbol& a, std::ostream& os);
GridSymbol read_csv(std::istream& is);

} // namespace ncstar
