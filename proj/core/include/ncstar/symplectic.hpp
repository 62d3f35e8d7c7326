#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <gmpxx.h>

namespace ncstar {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Theta(hbar) = c_theta * hbar^alpha_theta * theta_hat, same for eta.
struct Schedule {
    double alpha_theta = 3.0, c_theta = 1.0;
    double alpha_eta = 3.0, c_eta = 1.0;
    Mat theta_hat, eta_hat;
};

/// Optional exact copy of (hbar, Theta, N); enables exact star products.
struct ExactData {
    mpq_class hbar{1};
    std::vector<mpq_class> theta, eta; // row-major n*n
};

struct NCParams {
    int n = 1;
    double hbar = 1.0;
    Mat theta, eta;
    std::optional<Schedule> schedule;
    std::optional<ExactData> exact;

    static NCParams commutative(int n, double hbar = 1.0);
    /// n = 2 with a single pair theta_12, eta_12.
    static NCParams single_pair(double hbar, double theta12, double eta12);
    /// Same, from exact rationals; the double fields are their nearest values.
    static NCParams single_pair_exact(const mpq_class& hbar, const mpq_class& theta12,
                                      const mpq_class& eta12);
};

/// Shape, antisymmetry and schedule exponent checks. Throws ErrorKind::Input.
void validate(const NCParams& p);

struct Admissibility {
    bool flag = true;
    double margin = 0.0;
    std::array<int, 4> worst{0, 0, 0, 0}; // 1-based (alpha, beta, gamma, delta) of the max product
};

Admissibility admissible(const NCParams& p);

struct OmegaMatrix {
    Mat entries;
    int n = 1;
    double hbar = 1.0;
};

Mat symplectic_J(int n);

/// [[Theta/hbar, I], [-I, N/hbar]]. Throws on inadmissible or malformed params.
OmegaMatrix build_omega(const NCParams& p);

/// z . Omega^{-1} zp
double omega_form(const OmegaMatrix& omega, const Vec& z, const Vec& zp);

struct SeibergWittenMap {
    Mat s, A, B, C, D;
    static SeibergWittenMap from_matrix(const Mat& s);
};

struct SwResiduals {
    double sjst = 0;   // |s J s^T - Omega|_max
    double ab = 0;     // |A B^T - B A^T - Theta/hbar|_max
    double cd = 0;     // |C D^T - D C^T - N/hbar|_max
    double ad = 0;     // |A D^T - B C^T - I|_max
    double max() const;
};

/// Skew Gram-Schmidt for the form z . Omega^{-1} z'. variant 0 starts from the
/// standard basis (so Omega = J gives s = I); other variants start from a
/// seeded random basis.
SeibergWittenMap solve_sw_map(const OmegaMatrix& omega, std::uint64_t variant = 0);

SwResiduals sw_residuals(const SeibergWittenMap& sw, const OmegaMatrix& omega);

/// |S^T J S - J|_max
double symplectic_defect(const Mat& S);

/// exp(J H) with H symmetric, entries N(0, scale^2) drawn from mt19937_64(seed).
Mat random_symplectic(int n, std::uint64_t seed, double scale = 0.25);

/// Concrete params at hbar from the schedule; admissibility re-checked.
NCParams at_hbar(const NCParams& p, double hbar);

} // namespace ncstar
