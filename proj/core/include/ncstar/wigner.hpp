#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ncstar/grid.hpp"
#include "ncstar/star_grid.hpp"
#include "ncstar/symplectic.hpp"

namespace ncstar {

/// Tensor Hermite functions h_j, j in [0, K)^n, and the configuration lattice
/// [-Lx, Lx)^n with Mx points per axis used for quadrature.
struct HermiteBasis {
    int n = 1;
    int K = 16;
    double hbar = 1.0;
    double Lx = 10.0;
    int Mx = 128;

    /// Lx = 10 sqrt(hbar), Mx = 128
    static HermiteBasis standard(int n, int K = 16, double hbar = 1.0);

    /// Shape checks, then the discrete Gram test (Guard when it exceeds 1e-10).
    void validate() const;
    double gram_defect() const;

    std::size_t size() const; // K^n
    std::vector<int> index(std::size_t flat) const; // row-major
    std::size_t flat(const std::vector<int>& j) const;
    double step() const { return 2 * Lx / Mx; }
    double coord(int a) const { return -Lx + a * step(); }
    std::size_t lattice_size() const; // Mx^n

    friend bool operator==(const HermiteBasis& a, const HermiteBasis& b) {
        return a.n == b.n && a.K == b.K && a.hbar == b.hbar && a.Lx == b.Lx && a.Mx == b.Mx;
    }
};

/// h_j(x) = (pi hbar)^{-1/4} (2^j j!)^{-1/2} H_j(x/sqrt(hbar)) e^{-x^2/(2 hbar)}
double hermite_eval(int j, double x, double hbar);
double hermite_eval(const std::vector<int>& j, const std::vector<double>& x, double hbar);
/// h_0(x) .. h_{count-1}(x)
std::vector<double> hermite_all(int count, double x, double hbar);

/// Multi-indices in graded order: (0,0), (1,0), (0,1), (2,0), (1,1), (0,2), ...
std::vector<std::vector<int>> graded_indices(int n, int count);

struct WaveFunction {
    enum class Rep { Coefficients, Samples };

    HermiteBasis basis;
    Rep rep = Rep::Coefficients;
    std::vector<std::complex<double>> data; // K^n coefficients or Mx^n lattice samples

    static WaveFunction hermite(const HermiteBasis& b, const std::vector<int>& j);
    static WaveFunction from_coefficients(const HermiteBasis& b, std::vector<std::complex<double>> c);
    static WaveFunction from_samples(const HermiteBasis& b, std::vector<std::complex<double>> s);

    WaveFunction to_coefficients() const; // quadrature projection
    WaveFunction to_samples() const;
    double norm() const;
};

/// W(h_m, h_k)(x, p) in one degree of freedom (Laguerre closed form).
std::complex<double> wigner_hermite_pair(int m, int k, double x, double p, double hbar);

/// W(psi, phi)(x, p) = (2 pi hbar)^{-n} int e^{-(i/hbar) p.y} psi(x + y/2) conj(phi(x - y/2)) dy
/// on the lattice, one FFT over y per x point.
GridSymbol cross_wigner(const WaveFunction& psi, const WaveFunction& phi, const PhaseGrid& grid);

/// W_{s,phi} psi = M_s^{-1} [(2 pi hbar)^{n/2} W(psi, phi)], evaluated exactly at s^{-1} z.
GridSymbol w_s_phi(const WaveFunction& psi, const WaveFunction& phi, const SeibergWittenMap& s,
                   const PhaseGrid& grid);

/// c_j = <W_{s,phi} h_j, Psi> with the lattice weights.
WaveFunction w_s_phi_adjoint(const GridSymbol& Psi, const WaveFunction& phi, const SeibergWittenMap& s,
                             const HermiteBasis& basis);

/// Phi_{j,k} = W_{s,phi_j} phi_k for j, k < J (graded multi-indices), stored at j * J + k.
std::vector<GridSymbol> ob_basis(const SeibergWittenMap& s, const HermiteBasis& basis, int J,
                                 const PhaseGrid& grid);

/// m_jk = int a(s z) W(h_k, h_j)(z) dz. Polynomial symbols use per-axis moments on the
/// basis lattice; other symbols use the phase-space grid.
CMat weyl_matrix(const SymbolExpr& a, const SeibergWittenMap& s, const HermiteBasis& basis,
                 const PhaseGrid& grid);

struct SpectrumOptions {
    double tol = 1e-4;
    bool map_eigenfunctions = true;
    bool residuals = true; // needs map_eigenfunctions
    bool sentinel = true;
    std::optional<WaveFunction> phi; // default h_0
};

struct Spectrum {
    std::vector<double> eigenvalues;
    CMat eigenvectors; // K^n x k Hermite coefficients
    std::vector<GridSymbol> star_eigenfunctions;
    std::vector<double> residuals; // NaN where the grid cannot hold the mapped eigenfunction
    std::vector<double> shifts; // |lambda(K) - lambda(K+4)|
    std::vector<bool> converged;
    double max_imag = 0; // largest |Im| of the raw eigenvalues
    double tol = 1e-4;
    std::string warning;

    NCParams params;
    SeibergWittenMap s;
    HermiteBasis basis;
    PhaseGrid grid;
};

Spectrum solve_stargen(const SymbolExpr& a, const NCParams& params, const SeibergWittenMap& s,
                       const HermiteBasis& basis, const PhaseGrid& grid, int k,
                       const SpectrumOptions& opts = {});

/// |a *_Omega Psi - lambda Psi| / |Psi| over the interior region.
double residual(const SymbolExpr& a, const GridSymbol& Psi, double lambda, const NCParams& params,
                const SeibergWittenMap& s);

std::string spectrum_json(const Spectrum& sp);

/// Largest K accepted by HermiteBasis.
inline constexpr int kMaxHermite = 64;

} // namespace ncstar
