#pragma once

#include <complex>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "ncstar/rational.hpp"

namespace ncstar {

using cplx = std::complex<double>;
using MultiIndex = std::vector<int>; // exponents over (x1..xn, p1..pn)

template <class C>
struct PolyT {
    int n = 1;
    std::map<MultiIndex, C> terms; // lexicographic order; no stored zeros
};

inline bool coef_is_zero(const GaussQ& c) { return c.is_zero(); }
inline bool coef_is_zero(const cplx& c) { return c == cplx(0.0, 0.0); }

/// Polynomial symbol with either exact Gaussian-rational or complex-double
/// coefficients. Mixed arithmetic promotes to the float domain.
class PolySymbol {
public:
    using Exact = PolyT<GaussQ>;
    using Float = PolyT<cplx>;

    PolySymbol() : data_(Exact{}) {}
    explicit PolySymbol(Exact p) : data_(std::move(p)) {}
    explicit PolySymbol(Float p) : data_(std::move(p)) {}

    static PolySymbol zero(int n, bool exact = true);
    static PolySymbol constant(int n, const GaussQ& c);
    static PolySymbol constant(int n, cplx c);
    static PolySymbol variable(int n, int var); // exact, coefficient 1

    int n() const;
    bool exact() const { return std::holds_alternative<Exact>(data_); }
    const Exact& exact_terms() const& { return std::get<Exact>(data_); }
    const Float& float_terms() const& { return std::get<Float>(data_); }
    // no references into temporaries
    const Exact& exact_terms() const&& = delete;
    const Float& float_terms() const&& = delete;
    std::size_t size() const;
    bool is_zero() const { return size() == 0; }
    int degree() const; // -1 for the zero polynomial

    PolySymbol to_float() const;

    cplx evaluate(const std::vector<cplx>& z) const;
    GaussQ evaluate_exact(const std::vector<GaussQ>& z) const; // exact domain only

    PolySymbol derivative(int var) const;

    std::string str() const;

    friend PolySymbol operator+(const PolySymbol& a, const PolySymbol& b);
    friend PolySymbol operator-(const PolySymbol& a, const PolySymbol& b);
    friend PolySymbol operator*(const PolySymbol& a, const PolySymbol& b);
    friend PolySymbol operator-(const PolySymbol& a);
    PolySymbol scaled(const GaussQ& c) const;
    PolySymbol scaled(cplx c) const;

    /// Exact equality (both exact); float polys compare coefficientwise exactly.
    friend bool operator==(const PolySymbol& a, const PolySymbol& b);
    /// max |coefficient difference| after promotion to float
    friend double max_coef_diff(const PolySymbol& a, const PolySymbol& b);

private:
    std::variant<Exact, Float> data_;
};

std::string monomial_name(const MultiIndex& m, int n);

} // namespace ncstar
