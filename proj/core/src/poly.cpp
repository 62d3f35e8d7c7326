#include "ncstar/poly.hpp"

#include <algorithm>
#include <sstream>

#include "ncstar/errors.hpp"

namespace ncstar {

namespace {

template <class C>
void add_term(PolyT<C>& p, const MultiIndex& m, const C& c) {
    if (coef_is_zero(c)) return;
    auto it = p.terms.find(m);
    if (it == p.terms.end()) {
        p.terms.emplace(m, c);
        return;
    }
    it->second += c;
    if (coef_is_zero(it->second)) p.terms.erase(it);
}

template <class C>
PolyT<C> add(const PolyT<C>& a, const PolyT<C>& b, bool negate_b) {
    PolyT<C> r = a;
    for (const auto& [m, c] : b.terms) add_term(r, m, negate_b ? C(-c) : c);
    return r;
}

template <class C>
PolyT<C> mul(const PolyT<C>& a, const PolyT<C>& b) {
    PolyT<C> r;
    r.n = a.n;
    MultiIndex m(static_cast<std::size_t>(2 * a.n));
    for (const auto& [ma, ca] : a.terms)
        for (const auto& [mb, cb] : b.terms) {
            for (std::size_t k = 0; k < m.size(); ++k) m[k] = ma[k] + mb[k];
            add_term(r, m, C(ca * cb));
        }
    return r;
}

PolyT<cplx> promote(const PolyT<GaussQ>& p) {
    PolyT<cplx> r;
    r.n = p.n;
    for (const auto& [m, c] : p.terms) add_term(r, m, c.to_complex());
    return r;
}

template <class C>
PolyT<C> deriv(const PolyT<C>& p, int var) {
    PolyT<C> r;
    r.n = p.n;
    for (const auto& [m, c] : p.terms) {
        if (m[var] == 0) continue;
        MultiIndex mm = m;
        C k = c;
        if constexpr (std::is_same_v<C, GaussQ>)
            k *= GaussQ(static_cast<long>(m[var]));
        else
            k *= static_cast<double>(m[var]);
        --mm[var];
        add_term(r, mm, k);
    }
    return r;
}

} // namespace

PolySymbol PolySymbol::zero(int n, bool exact) {
    if (exact) {
        Exact e;
        e.n = n;
        return PolySymbol(e);
    }
    Float f;
    f.n = n;
    return PolySymbol(f);
}

PolySymbol PolySymbol::constant(int n, const GaussQ& c) {
    Exact e;
    e.n = n;
    add_term(e, MultiIndex(static_cast<std::size_t>(2 * n), 0), c);
    return PolySymbol(e);
}

PolySymbol PolySymbol::constant(int n, cplx c) {
    Float f;
    f.n = n;
    add_term(f, MultiIndex(static_cast<std::size_t>(2 * n), 0), c);
    return PolySymbol(f);
}

PolySymbol PolySymbol::variable(int n, int var) {
    Exact e;
    e.n = n;
    MultiIndex m(static_cast<std::size_t>(2 * n), 0);
    m[var] = 1;
    add_term(e, m, GaussQ(1));
    return PolySymbol(e);
}

int PolySymbol::n() const {
    return std::visit([](const auto& p) { return p.n; }, data_);
}

std::size_t PolySymbol::size() const {
    return std::visit([](const auto& p) { return p.terms.size(); }, data_);
}

int PolySymbol::degree() const {
    return std::visit(
        [](const auto& p) {
            int d = -1;
            for (const auto& [m, c] : p.terms) {
                int s = 0;
                for (int e : m) s += e;
                d = std::max(d, s);
            }
            return d;
        },
        data_);
}

PolySymbol PolySymbol::to_float() const {
    if (exact()) return PolySymbol(promote(exact_terms()));
    return *this;
}

cplx PolySymbol::evaluate(const std::vector<cplx>& z) const {
    const Float& f = exact() ? promote(exact_terms()) : float_terms();
    if (static_cast<int>(z.size()) != 2 * f.n) throw Error(ErrorKind::Input, "dimension mismatch in evaluate");
    cplx acc = 0;
    for (const auto& [m, c] : f.terms) {
        cplx t = c;
        for (std::size_t k = 0; k < m.size(); ++k)
            for (int e = 0; e < m[k]; ++e) t *= z[k];
        acc += t;
    }
    return acc;
}

GaussQ PolySymbol::evaluate_exact(const std::vector<GaussQ>& z) const {
    if (!exact()) throw Error(ErrorKind::Conversion, "exact evaluation of a float polynomial");
    const Exact& e = exact_terms();
    GaussQ acc;
    for (const auto& [m, c] : e.terms) {
        GaussQ t = c;
        for (std::size_t k = 0; k < m.size(); ++k)
            for (int j = 0; j < m[k]; ++j) t *= z[k];
        acc += t;
    }
    return acc;
}

PolySymbol PolySymbol::derivative(int var) const {
    return std::visit([&](const auto& p) { return PolySymbol(deriv(p, var)); }, data_);
}

std::string monomial_name(const MultiIndex& m, int n) {
    std::string s;
    for (int k = 0; k < 2 * n; ++k) {
        if (m[k] == 0) continue;
        if (!s.empty()) s += "*";
        s += (k < n ? "x" : "p") + std::to_string((k < n ? k : k - n) + 1);
        if (m[k] > 1) s += "^" + std::to_string(m[k]);
    }
    return s.empty() ? "1" : s;
}

std::string PolySymbol::str() const {
    std::ostringstream os;
    bool first = true;
    std::visit(
        [&](const auto& p) {
            for (const auto& [m, c] : p.terms) {
                if (!first) os << " + ";
                first = false;
                if constexpr (std::is_same_v<std::decay_t<decltype(c)>, GaussQ>)
                    os << "(" << c.str() << ")";
                else
                    os << "(" << c.real() << (c.imag() < 0 ? "" : "+") << c.imag() << "i)";
                os << "*" << monomial_name(m, p.n);
            }
        },
        data_);
    return first ? "0" : os.str();
}

PolySymbol operator+(const PolySymbol& a, const PolySymbol& b) {
    if (a.exact() && b.exact()) return PolySymbol(add(a.exact_terms(), b.exact_terms(), false));
    const PolySymbol fa = a.to_float(), fb = b.to_float();
    return PolySymbol(add(fa.float_terms(), fb.float_terms(), false));
}

PolySymbol operator-(const PolySymbol& a, const PolySymbol& b) {
    if (a.exact() && b.exact()) return PolySymbol(add(a.exact_terms(), b.exact_terms(), true));
    const PolySymbol fa = a.to_float(), fb = b.to_float();
    return PolySymbol(add(fa.float_terms(), fb.float_terms(), true));
}

PolySymbol operator*(const PolySymbol& a, const PolySymbol& b) {
    if (a.exact() && b.exact()) return PolySymbol(mul(a.exact_terms(), b.exact_terms()));
    const PolySymbol fa = a.to_float(), fb = b.to_float();
    return PolySymbol(mul(fa.float_terms(), fb.float_terms()));
}

PolySymbol operator-(const PolySymbol& a) { return PolySymbol::zero(a.n(), a.exact()) - a; }

PolySymbol PolySymbol::scaled(const GaussQ& c) const {
    if (!exact()) return scaled(c.to_complex());
    Exact r;
    r.n = n();
    for (const auto& [m, k] : exact_terms().terms) add_term(r, m, GaussQ(k * c));
    return PolySymbol(r);
}

PolySymbol PolySymbol::scaled(cplx c) const {
    Float r;
    r.n = n();
    PolySymbol f = to_float();
    for (const auto& [m, k] : f.float_terms().terms) add_term(r, m, cplx(k * c));
    return PolySymbol(r);
}

bool operator==(const PolySymbol& a, const PolySymbol& b) {
    if (a.exact() != b.exact()) return false;
    if (a.exact()) return a.exact_terms().terms == b.exact_terms().terms;
    return a.float_terms().terms == b.float_terms().terms;
}

double max_coef_diff(const PolySymbol& a, const PolySymbol& b) {
    PolySymbol d = a.to_float() - b.to_float();
    double m = 0;
    for (const auto& [mi, c] : d.float_terms().terms) m = std::max(m, std::abs(c));
    return m;
}

} // namespace ncstar
