#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ncstar/grid.hpp"
#include "ncstar/symplectic.hpp"
#include "ncstar/wigner.hpp"

namespace ncstar::cli {

// Resource caps. Grid sizes are M^{2n} lattice points, basis sizes K^n.
inline constexpr int kMaxN = 4;
inline constexpr int kMaxGridN = 2;
inline constexpr int kMinM = 8;
inline constexpr std::size_t kMaxGridPoints = std::size_t{1} << 20;
inline constexpr std::size_t kMaxBasisSize = 1024;
inline constexpr int kMaxMx = 512;

/*
 * Config grammar, one entry per line:
 *
 *   # comment
 *   key = value
 *   [section]
 *
 * Top level: n, hbar, theta12, eta12 (n = 2 only), theta, eta (full matrices,
 * rows separated by ',', entries by spaces), seed.
 * [schedule]: alpha_theta, alpha_eta, c_theta, c_eta, theta_hat12, eta_hat12, theta_hat, eta_hat.
 * [grid]: L, M.  [basis]: K, Lx, Mx.  [tol]: grid, spectral, sw, wigner.
 *
 * Numbers in hbar/theta/eta are read as exact rationals ("0.1" is 1/10, "1/3" works).
 * Defaults: n = 2, hbar = 1. With n = 2 and no theta/eta keys, theta12 = 0.1 and
 * eta12 = 0.05; otherwise a matrix that is not given is zero. Schedule hats default
 * to the unit (1,2) pair.
 * Unknown sections or keys, and repeated keys, are errors.
 */
struct RunConfig {
    NCParams params;
    std::optional<PhaseGrid> grid;
    std::optional<HermiteBasis> basis;
    std::map<std::string, double> tol;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, std::string>> entries; // "section.key" -> raw value, for echoing

    int n() const { return params.n; }
    double tolerance(const std::string& key, double fallback) const;
};

RunConfig default_config();
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Grid for grid-based commands: the [grid] block or the fallback, validated against the caps.
PhaseGrid grid_or(const RunConfig& c, const PhaseGrid& fallback);
HermiteBasis basis_or(const RunConfig& c, const HermiteBasis& fallback);
void check_grid(const PhaseGrid& g);

} // namespace ncstar::cli
