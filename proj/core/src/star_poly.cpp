#include "ncstar/star_poly.hpp"

#include <cmath>
#include <map>

#include "ncstar/errors.hpp"

namespace ncstar {

namespace {

// Omega and i*hbar/2 in whichever coefficient domain the product runs in.
struct Coefs {
    bool exact = false;
    int d = 0;
    std::vector<GaussQ> omq;
    std::vector<cplx> omf;
    GaussQ halfq;
    cplx halff;
};

Coefs coefs_for(const NCParams& p, bool exact) {
    OmegaMatrix om = build_omega(p); // admissibility guard
    Coefs c;
    c.exact = exact && p.exact.has_value();
    c.d = 2 * p.n;
    const int n = p.n;
    if (c.exact) {
        const ExactData& e = *p.exact;
        c.omq.assign(static_cast<std::size_t>(c.d * c.d), GaussQ());
        for (int i = 0; i < n; ++i) {
            c.omq[i * c.d + n + i] = GaussQ(1);
            c.omq[(n + i) * c.d + i] = GaussQ(-1);
            for (int j = 0; j < n; ++j) {
                c.omq[i * c.d + j] = GaussQ(mpq_class(e.theta[i * n + j] / e.hbar));
                c.omq[(n + i) * c.d + n + j] = GaussQ(mpq_class(e.eta[i * n + j] / e.hbar));
            }
        }
        c.halfq = GaussQ(0, mpq_class(e.hbar / 2));
    } else {
        c.omf.resize(static_cast<std::size_t>(c.d * c.d));
        for (int i = 0; i < c.d; ++i)
            for (int j = 0; j < c.d; ++j) c.omf[i * c.d + j] = om.entries(i, j);
        c.halff = cplx(0.0, p.hbar / 2);
    }
    return c;
}

PolySymbol scale_by(const PolySymbol& p, const Coefs& c, int i, int j) {
    return c.exact ? p.scaled(c.omq[i * c.d + j]) : p.scaled(c.omf[i * c.d + j]);
}

bool coef_zero(const Coefs& c, int i, int j) {
    return c.exact ? c.omq[i * c.d + j].is_zero() : c.omf[i * c.d + j] == cplx(0.0);
}

// (Omega d)_alpha b
PolySymbol omega_d(const PolySymbol& b, const Coefs& c, int alpha) {
    PolySymbol r = PolySymbol::zero(b.n(), c.exact && b.exact());
    for (int beta = 0; beta < c.d; ++beta) {
        if (coef_zero(c, alpha, beta)) continue;
        r = r + scale_by(b.derivative(beta), c, alpha, beta);
    }
    return r;
}

PolySymbol coerce(const PolySymbol& p, bool exact) { return exact ? p : p.to_float(); }

void build(const Coefs& c, int alpha, MultiIndex& g, const PolySymbol& da, int order,
           std::vector<std::pair<MultiIndex, PolySymbol>>& out) {
    if (alpha == c.d) {
        if (da.is_zero()) return;
        PolySymbol t = da;
        for (int k = 0; k < order; ++k) t = c.exact ? t.scaled(c.halfq) : t.scaled(c.halff);
        out.emplace_back(g, t);
        return;
    }
    PolySymbol cur = da;
    for (int k = 0;; ++k) {
        g[alpha] = k;
        build(c, alpha + 1, g, cur, order + k, out);
        cur = cur.derivative(alpha);
        if (cur.is_zero()) break;
        cur = c.exact ? cur.scaled(GaussQ(mpq_class(1, k + 1))) : cur.scaled(cplx(1.0 / (k + 1)));
    }
    g[alpha] = 0;
}

} // namespace

ExactData exact_from_doubles(const NCParams& p) {
    ExactData e;
    e.hbar = mpq_class(p.hbar);
    for (int i = 0; i < p.n; ++i)
        for (int j = 0; j < p.n; ++j) {
            e.theta.emplace_back(p.theta(i, j));
            e.eta.emplace_back(p.eta(i, j));
        }
    return e;
}

BoppOperator bopp_operator(const PolySymbol& a, const NCParams& p) {
    if (a.n() != p.n) throw Error(ErrorKind::Input, "symbol dimension does not match params");
    Coefs c = coefs_for(p, a.exact());
    BoppOperator op;
    op.source = a;
    op.params = p;
    MultiIndex g(static_cast<std::size_t>(c.d), 0);
    build(c, 0, g, coerce(a, c.exact), 0, op.expansion);
    return op;
}

PolySymbol apply(const BoppOperator& op, const PolySymbol& b) {
    const bool exact = op.source.exact() && b.exact() && op.params.exact.has_value();
    Coefs c = coefs_for(op.params, exact);
    std::map<MultiIndex, PolySymbol> cache;
    const MultiIndex zero(static_cast<std::size_t>(c.d), 0);
    cache.emplace(zero, coerce(b, c.exact));
    // D^g b = D_last D^{g - e_last} b
    auto get = [&](auto&& self, const MultiIndex& g) -> PolySymbol {
        if (auto it = cache.find(g); it != cache.end()) return it->second;
        int last = c.d - 1;
        while (g[last] == 0) --last;
        MultiIndex h = g;
        --h[last];
        PolySymbol r = omega_d(self(self, h), c, last);
        cache.emplace(g, r);
        return r;
    };
    PolySymbol acc = PolySymbol::zero(b.n(), c.exact);
    for (const auto& [g, coef] : op.expansion) {
        PolySymbol db = get(get, g);
        if (db.is_zero()) continue;
        acc = acc + coerce(coef, c.exact) * db;
    }
    return acc;
}

PolySymbol star_poly(const PolySymbol& a, const PolySymbol& b, const NCParams& p) {
    if (a.n() != b.n()) throw Error(ErrorKind::Input, "symbol dimensions differ");
    return apply(bopp_operator(a, p), b);
}

PolySymbol star_commutator(const PolySymbol& a, const PolySymbol& b, const NCParams& p) {
    return star_poly(a, b, p) - star_poly(b, a, p);
}

PolySymbol poisson(const PolySymbol& a, const PolySymbol& b) {
    const int n = a.n();
    PolySymbol r = PolySymbol::zero(n, a.exact() && b.exact());
    for (int al = 0; al < n; ++al)
        r = r + a.derivative(al) * b.derivative(n + al) - a.derivative(n + al) * b.derivative(al);
    return r;
}

PolySymbol poisson_omega(const PolySymbol& a, const PolySymbol& b, const NCParams& p) {
    const int n = p.n, d = 2 * n;
    const bool exact = a.exact() && b.exact() && p.exact.has_value();
    Coefs c = coefs_for(p, exact);

    PolySymbol defining = PolySymbol::zero(n, exact);
    for (int al = 0; al < d; ++al) {
        PolySymbol db = b.derivative(al);
        if (db.is_zero()) continue;
        defining = defining - omega_d(coerce(a, exact), c, al) * db;
    }

    PolySymbol corr = PolySymbol::zero(n, exact);
    for (int al = 0; al < n; ++al)
        for (int be = 0; be < n; ++be) {
            PolySymbol tx = a.derivative(be) * b.derivative(al);
            PolySymbol tp = a.derivative(n + be) * b.derivative(n + al);
            if (exact) {
                const ExactData& e = *p.exact;
                corr = corr + tx.scaled(GaussQ(mpq_class(e.theta[al * n + be] / e.hbar))) +
                       tp.scaled(GaussQ(mpq_class(e.eta[al * n + be] / e.hbar)));
            } else {
                corr = corr + tx.scaled(cplx(p.theta(al, be) / p.hbar)) + tp.scaled(cplx(p.eta(al, be) / p.hbar));
            }
        }
    PolySymbol explicit_form = coerce(poisson(a, b), exact) - corr;

    if (exact) {
        if (!(defining == explicit_form))
            throw Error(ErrorKind::Computation, "poisson_omega: defining and explicit forms disagree");
    } else {
        double scale = 1.0;
        PolySymbol df = defining.to_float();
        for (const auto& [m, k] : df.float_terms().terms) scale = std::max(scale, std::abs(k));
        if (max_coef_diff(defining, explicit_form) > 1e-12 * scale)
            throw Error(ErrorKind::Computation, "poisson_omega: defining and explicit forms disagree");
    }
    return defining;
}

std::vector<double> commutator_defect(const SymbolExpr& a, const SymbolExpr& b, const NCParams& p,
                                      const std::vector<double>& hbars, const std::vector<Vec>& probes) {
    if (!is_polynomial(a) || !is_polynomial(b))
        throw Error(ErrorKind::Conversion, "commutator_defect needs polynomial symbols");
    if (!p.schedule) throw Error(ErrorKind::Input, "commutator_defect needs a schedule");
    for (std::size_t k = 1; k < hbars.size(); ++k)
        if (!(hbars[k] < hbars[k - 1])) throw Error(ErrorKind::Input, "hbars must be decreasing");
    PolySymbol pa = to_poly(a), pb = to_poly(b);
    PolySymbol pb_cl = poisson(pa, pb);
    std::vector<double> out;
    for (double h : hbars) {
        NCParams q = at_hbar(p, h);
        q.exact = exact_from_doubles(q);
        // divide by i hbar exactly: 1/(i hbar) = -i/hbar
        PolySymbol defect = star_commutator(pa, pb, q).scaled(GaussQ(0, -1 / q.exact->hbar)) - pb_cl;
        double worst = 0;
        for (const Vec& z : probes) {
            std::vector<cplx> zc(z.data(), z.data() + z.size());
            worst = std::max(worst, std::abs(defect.evaluate(zc)));
        }
        out.push_back(worst);
    }
    return out;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t m = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < m; ++k) {
        double lx = std::log(x[k]), ly = std::log(y[k]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

} // namespace ncstar
