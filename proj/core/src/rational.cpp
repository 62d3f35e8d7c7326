#include "ncstar/rational.hpp"

#include <cctype>
#include <cmath>

#include "ncstar/errors.hpp"

namespace ncstar {

std::complex<double> GaussQ::to_complex() const { return {to_double(re), to_double(im)}; }

double to_double(const mpq_class& q) {
    const double t = q.get_d();
    if (!std::isfinite(t)) return t;
    const double u = std::nextafter(t, sgn(q) < 0 ? -HUGE_VAL : HUGE_VAL);
    if (!std::isfinite(u)) return t;
    return abs(mpq_class(u) - q) < abs(mpq_class(t) - q) ? u : t;
}

std::string GaussQ::str() const {
    if (sgn(im) == 0) return re.get_str();
    if (sgn(re) == 0) return im.get_str() + "i";
    std::string s = re.get_str();
    s += sgn(im) > 0 ? "+" : "-";
    s += mpq_class(abs(im)).get_str() + "i";
    return s;
}

mpq_class parse_rational(const std::string& text) {
    std::string t;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) t += c;
    if (t.empty()) throw Error(ErrorKind::Input, "empty number");
    bool neg = false;
    std::size_t pos = 0;
    if (t[0] == '-' || t[0] == '+') {
        neg = t[0] == '-';
        pos = 1;
    }
    std::string body = t.substr(pos);
    mpq_class q;
    try {
        if (auto slash = body.find('/'); slash != std::string::npos) {
            mpz_class num(body.substr(0, slash)), den(body.substr(slash + 1));
            if (den == 0) throw Error(ErrorKind::Input, "zero denominator in '" + text + "'");
            q = mpq_class(num, den);
        } else {
            std::string mant = body;
            long exp10 = 0;
            if (auto e = mant.find_first_of("eE"); e != std::string::npos) {
                exp10 = std::stol(mant.substr(e + 1));
                mant = mant.substr(0, e);
            }
            std::string digits = mant;
            if (auto dot = mant.find('.'); dot != std::string::npos) {
                digits = mant.substr(0, dot) + mant.substr(dot + 1);
                exp10 -= static_cast<long>(mant.size() - dot - 1);
            }
            if (digits.empty()) throw Error(ErrorKind::Input, "malformed number '" + text + "'");
            for (char c : digits)
                if (!std::isdigit(static_cast<unsigned char>(c)))
                    throw Error(ErrorKind::Input, "malformed number '" + text + "'");
            mpz_class num(digits), p10;
            mpz_ui_pow_ui(p10.get_mpz_t(), 10, static_cast<unsigned long>(exp10 < 0 ? -exp10 : exp10));
            q = exp10 < 0 ? mpq_class(num, p10) : mpq_class(num * p10);
        }
    } catch (const std::invalid_argument&) {
        throw Error(ErrorKind::Input, "malformed number '" + text + "'");
    }
    q.canonicalize();
    return neg ? mpq_class(-q) : q;
}

} // namespace ncstar
