#pragma once

#include <variant>

#include <Eigen/Dense>

#include "ncstar/grid.hpp"
#include "ncstar/symplectic.hpp"

namespace ncstar {

using CMat = Eigen::MatrixXcd;

/*
 * Grid products use the kernel
 *   (a * b)(z) = (pi hbar)^{-2n} |det Omega|^{-1} sum sum a(z')b(z'') e^{-(2i/hbar) w(z-z', z-z'')} dz' dz''
 * with w the form of Omega (w = sigma for the Moyal product). The double sum is
 * evaluated exactly over the lattice with difference indices in [-(M-1), M-1]
 * (no wrap-around); it factors through the polarization (x1, p2 | x2, p1), so
 * grid products need n <= 2.
 */

/// Moyal product of sampled symbols. The analytic unit is the identity.
GridSymbol moyal_star_fft(const GridSymbol& a, const GridSymbol& b, double hbar);

/// Twisted product over a lattice with basis G (columns), index form -G^T J G,
/// weight |det G|^2. moyal_star_fft is the case G = step * I.
GridSymbol twisted_product(const GridSymbol& a, const GridSymbol& b, const Mat& basis);

using GridOperand = std::variant<SymbolExpr, GridSymbol>;

/// a *_Omega b on `grid`. Routes: unit -> identity; polynomial a -> Bopp shift of a
/// applied to b; polynomial b -> right Bopp shift; otherwise the Moyal product of
/// a o s, b o s over the pulled-back lattice s^{-1} Lambda, read back on Lambda.
GridSymbol star_grid_omega(const SymbolExpr& a, const GridOperand& b, const NCParams& params,
                           const SeibergWittenMap& s, const PhaseGrid& grid);

/// Same product, always through the pulled-back Moyal route (the unit still short-circuits).
GridSymbol star_grid_twisted(const SymbolExpr& a, const GridOperand& b, const NCParams& params,
                             const SeibergWittenMap& s, const PhaseGrid& grid);

/// F_Omega by direct quadrature on the lattice (factored through the polarization).
GridSymbol sft_omega_dense(const GridSymbol& a, const OmegaMatrix& omega);

enum class ShiftMode { Aligned, Interpolate };

/// e^{-(i/hbar) w(z, z0)} psi(z - z0/2), periodic shift.
GridSymbol translate_omega(const GridSymbol& psi, const Vec& z0, const OmegaMatrix& omega,
                           ShiftMode mode = ShiftMode::Aligned);

enum class Direction { Forward, Inverse };

/// M_s psi(z) = sqrt|det s| psi(s z); Inverse applies M_{s^{-1}}.
GridSymbol apply_ms(const SymbolExpr& psi, const SeibergWittenMap& s, const PhaseGrid& grid, Direction dir);
/// Sample-backed input: trigonometric interpolation, which must be requested.
GridSymbol apply_ms(const GridSymbol& psi, const SeibergWittenMap& s, Direction dir, bool interpolate);

struct DenseOperator {
    CMat matrix;
    PhaseGrid grid;
    GridSymbol apply(const GridSymbol& psi) const;
};

/// Kernel K(z,u) = (2/(pi hbar))^n |det Omega|^{-1/2} F_Omega a[2(z-u)] e^{(2i/hbar) w(z,u)},
/// times the cell weight. a = 1 gives the identity.
DenseOperator dense_A_omega(const SymbolExpr& a, const NCParams& params, const PhaseGrid& grid);
GridSymbol apply_A_omega_dense(const SymbolExpr& a, const GridSymbol& psi, const NCParams& params);

/// Derivative of sampled data along one axis (periodic spectral differentiation).
GridSymbol spectral_derivative(const GridSymbol& a, int axis);
/// Periodic trigonometric interpolant of sampled data at arbitrary points (rows).
std::vector<std::complex<double>> interpolate(const GridSymbol& a, const Eigen::MatrixXd& pts);

/// Largest sample count accepted by the dense kernel.
inline constexpr std::size_t kDenseMaxPoints = 4096;
/// Largest sample count accepted by sft_omega_dense.
inline constexpr std::size_t kSftMaxPoints = std::size_t{1} << 20;
/// Largest sample count accepted by sample-backed apply_ms.
inline constexpr std::size_t kInterpMaxPoints = 16384;

} // namespace ncstar
