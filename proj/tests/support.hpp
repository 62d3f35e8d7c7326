#pragma once

#include <random>

#include "ncstar/poly.hpp"
#include "ncstar/symplectic.hpp"

namespace testsupport {

using namespace ncstar;

// random exact polynomial: up to `terms` monomials of total degree <= deg,
// small rational coefficients
inline PolySymbol random_poly(std::mt19937_64& rng, int n, int deg, int terms) {
    std::uniform_int_distribution<int> num(-5, 5), den(1, 4), var(0, 2 * n - 1), dd(0, deg);
    PolySymbol p = PolySymbol::zero(n);
    for (int t = 0; t < terms; ++t) {
        int d = dd(rng);
        PolySymbol m = PolySymbol::constant(n, GaussQ(mpq_class(num(rng), den(rng)), mpq_class(num(rng) / 2, den(rng))));
        for (int k = 0; k < d; ++k) m = m * PolySymbol::variable(n, var(rng));
        p = p + m;
    }
    return p;
}

inline PolySymbol random_monomial(std::mt19937_64& rng, int n, int maxdeg) {
    std::uniform_int_distribution<int> var(0, 2 * n - 1), dd(0, maxdeg), num(1, 6);
    PolySymbol m = PolySymbol::constant(n, GaussQ(mpq_class(num(rng), num(rng))));
    int d = dd(rng);
    for (int k = 0; k < d; ++k) m = m * PolySymbol::variable(n, var(rng));
    return m;
}

} // namespace testsupport
