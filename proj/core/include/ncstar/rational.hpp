#pragma once

#include <complex>
#include <string>

#include <gmpxx.h>

namespace ncstar {

/// Exact Gaussian rational re + i*im.
struct GaussQ {
    mpq_class re{0}, im{0};

    GaussQ() = default;
    // mpq_class(a, b) is not reduced; every arithmetic result is
    GaussQ(mpq_class r) : re(std::move(r)) { re.canonicalize(); }
    GaussQ(mpq_class r, mpq_class i) : re(std::move(r)), im(std::move(i)) {
        re.canonicalize();
        im.canonicalize();
    }
    GaussQ(long v) : re(v) {}

    static GaussQ i() { return GaussQ(0, 1); }

    bool is_zero() const { return sgn(re) == 0 && sgn(im) == 0; }
    GaussQ conj() const { return GaussQ(re, -im); }
    std::complex<double> to_complex() const;
    std::string str() const;

    GaussQ& operator+=(const GaussQ& o) { re += o.re; im += o.im; return *this; }
    GaussQ& operator-=(const GaussQ& o) { re -= o.re; im -= o.im; return *this; }
    GaussQ& operator*=(const GaussQ& o) {
        mpq_class r = re * o.re - im * o.im;
        im = re * o.im + im * o.re;
        re = r;
        return *this;
    }
    GaussQ& operator/=(const mpq_class& q) { re /= q; im /= q; return *this; }
};

inline GaussQ operator+(GaussQ a, const GaussQ& b) { return a += b; }
inline GaussQ operator-(GaussQ a, const GaussQ& b) { return a -= b; }
inline GaussQ operator*(GaussQ a, const GaussQ& b) { return a *= b; }
inline GaussQ operator-(const GaussQ& a) { return GaussQ(-a.re, -a.im); }
inline bool operator==(const GaussQ& a, const GaussQ& b) { return a.re == b.re && a.im == b.im; }
inline bool operator!=(const GaussQ& a, const GaussQ& b) { return !(a == b); }

/// Nearest double (mpq_class::get_d truncates toward zero).
double to_double(const mpq_class& q);

/// Parses "a", "a/b" or a decimal literal into an exact rational. Decimal
/// literals are read as their exact decimal value (0.1 -> 1/10).
mpq_class parse_rational(const std::string& text);

} // namespace ncstar
