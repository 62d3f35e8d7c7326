#pragma once

#include <utility>
#include <vector>

#include "ncstar/poly.hpp"
#include "ncstar/symbol.hpp"
#include "ncstar/symplectic.hpp"

namespace ncstar {

/// a(z + (i hbar/2) Omega d_z) as sum_gamma c_gamma(z) (Omega d)^gamma with
/// c_gamma = (d^gamma a)/gamma! * (i hbar/2)^|gamma|, gamma in lexicographic order.
struct BoppOperator {
    PolySymbol source;
    NCParams params;
    std::vector<std::pair<MultiIndex, PolySymbol>> expansion;
};

/// Exact copy of the double-valued params (every double is a dyadic rational).
ExactData exact_from_doubles(const NCParams& p);

/// Exact arithmetic is used when a, b are exact and p.exact is set.
BoppOperator bopp_operator(const PolySymbol& a, const NCParams& p);
PolySymbol apply(const BoppOperator& op, const PolySymbol& b);

PolySymbol star_poly(const PolySymbol& a, const PolySymbol& b, const NCParams& p);
PolySymbol star_commutator(const PolySymbol& a, const PolySymbol& b, const NCParams& p);

PolySymbol poisson(const PolySymbol& a, const PolySymbol& b);
/// -Omega d a . d b, cross-checked against {a,b} - (Theta dx a.dx b + N dp a.dp b)/hbar.
PolySymbol poisson_omega(const PolySymbol& a, const PolySymbol& b, const NCParams& p);

/// For each hbar: max over probes of |(a*b - b*a)/(i hbar) - {a,b}| using
/// at_hbar(p, hbar) and exact star products.
std::vector<double> commutator_defect(const SymbolExpr& a, const SymbolExpr& b, const NCParams& p,
                                      const std::vector<double>& hbars, const std::vector<Vec>& probes);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

} // namespace ncstar
