#include "ncstar/star_grid.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "ncstar/errors.hpp"
#include "ncstar/star_poly.hpp"
#include "parallel.hpp"

namespace ncstar {

using cplx = std::complex<double>;
using RowCMat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

namespace {

constexpr double kPi = std::numbers::pi;

std::size_t ipow(std::size_t b, int e) {
    std::size_t r = 1;
    for (int i = 0; i < e; ++i) r *= b;
    return r;
}

// Split of the 2n axes into Q = (x1, p2) and R = (x2, p1) (Q = x, R = p for n = 1).
// Forms with vanishing QQ and RR blocks factor through this split.
struct Polar {
    int n = 1, M = 2;
    std::vector<int> q_axes, r_axes;
    std::size_t Mn = 1, Dn = 1;
    std::vector<std::size_t> q_of, r_of;     // flat sample -> q, r
    std::vector<std::vector<int>> qi, ri;    // q or r flat -> per-axis index
    std::vector<std::vector<int>> di;        // diff flat -> per-axis difference
    std::vector<long> P;                     // q flat -> linear diff offset
    long c0 = 0;                             // diff flat of the zero difference

    explicit Polar(const PhaseGrid& g) : n(g.n), M(g.M) {
        if (n == 1) {
            q_axes = {0};
            r_axes = {1};
        } else if (n == 2) {
            q_axes = {0, 3};
            r_axes = {1, 2};
        } else {
            throw Error(ErrorKind::Guard, "grid products are implemented for n <= 2");
        }
        Mn = ipow(static_cast<std::size_t>(M), n);
        Dn = ipow(static_cast<std::size_t>(2 * M - 1), n);
        const std::size_t N = g.size();
        q_of.resize(N);
        r_of.resize(N);
        for (std::size_t k = 0; k < N; ++k) {
            auto idx = g.index(k);
            std::size_t q = 0, r = 0;
            for (int a : q_axes) q = q * static_cast<std::size_t>(M) + static_cast<std::size_t>(idx[static_cast<std::size_t>(a)]);
            for (int a : r_axes) r = r * static_cast<std::size_t>(M) + static_cast<std::size_t>(idx[static_cast<std::size_t>(a)]);
            q_of[k] = q;
            r_of[k] = r;
        }
        qi.resize(Mn);
        P.resize(Mn);
        for (std::size_t q = 0; q < Mn; ++q) {
            std::vector<int> v(static_cast<std::size_t>(n));
            std::size_t f = q;
            long p = 0, stride = 1;
            for (int i = n - 1; i >= 0; --i) {
                v[static_cast<std::size_t>(i)] = static_cast<int>(f % static_cast<std::size_t>(M));
                f /= static_cast<std::size_t>(M);
                p += v[static_cast<std::size_t>(i)] * stride;
                stride *= 2 * M - 1;
            }
            qi[q] = v;
            P[q] = p;
        }
        ri = qi;
        di.resize(Dn);
        for (std::size_t d = 0; d < Dn; ++d) {
            std::vector<int> v(static_cast<std::size_t>(n));
            std::size_t f = d;
            for (int i = n - 1; i >= 0; --i) {
                v[static_cast<std::size_t>(i)] = static_cast<int>(f % static_cast<std::size_t>(2 * M - 1)) - (M - 1);
                f /= static_cast<std::size_t>(2 * M - 1);
            }
            di[d] = v;
        }
        long stride = 1;
        for (int i = 0; i < n; ++i, stride *= 2 * M - 1) c0 += (M - 1) * stride;
    }

    // Y = W_QR after checking that W_QQ and W_RR vanish (relative to |W|).
    Mat split(const Mat& W) const {
        double scale = W.cwiseAbs().maxCoeff();
        Mat Y(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double qq = W(q_axes[static_cast<std::size_t>(i)], q_axes[static_cast<std::size_t>(j)]);
                double rr = W(r_axes[static_cast<std::size_t>(i)], r_axes[static_cast<std::size_t>(j)]);
                if (std::abs(qq) > 1e-12 * scale || std::abs(rr) > 1e-12 * scale)
                    throw Error(ErrorKind::Computation, "form does not factor through the (x1,p2 | x2,p1) polarization");
                Y(i, j) = W(q_axes[static_cast<std::size_t>(i)], r_axes[static_cast<std::size_t>(j)]);
            }
        return Y;
    }

    RowCMat to_qr(const std::vector<cplx>& s) const {
        RowCMat A(static_cast<Eigen::Index>(Mn), static_cast<Eigen::Index>(Mn));
        for (std::size_t k = 0; k < s.size(); ++k)
            A(static_cast<Eigen::Index>(q_of[k]), static_cast<Eigen::Index>(r_of[k])) = s[k];
        return A;
    }

    template <class MatT>
    std::vector<cplx> from_qr(const MatT& A) const {
        std::vector<cplx> s(q_of.size());
        for (std::size_t k = 0; k < s.size(); ++k)
            s[k] = A(static_cast<Eigen::Index>(q_of[k]), static_cast<Eigen::Index>(r_of[k]));
        return s;
    }
};

// phase(i, j) = exp(i * scale * x_i . Y y_j)
CMat phase_table(const std::vector<Vec>& xs, const Mat& Y, const std::vector<Vec>& ys, double scale) {
    CMat T(static_cast<Eigen::Index>(xs.size()), static_cast<Eigen::Index>(ys.size()));
    std::vector<Vec> Yy(ys.size());
    for (std::size_t j = 0; j < ys.size(); ++j) Yy[j] = Y * ys[j];
    detail::parallel_for(xs.size(), [&](std::size_t i) {
        for (std::size_t j = 0; j < ys.size(); ++j)
            T(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = std::polar(1.0, scale * xs[i].dot(Yy[j]));
    });
    return T;
}

// S(k) = C sum_{k',k''} a(k') b(k'') exp(-(2i/hbar) (k-k')^T F (k-k'')), index form F.
std::vector<cplx> twisted_sum(const PhaseGrid& g, const std::vector<cplx>& a, const std::vector<cplx>& b,
                              const Mat& F, double C) {
    Polar pol(g);
    const Mat Y = pol.split(F);
    const double h = g.hbar;
    const std::size_t Mn = pol.Mn, Dn = pol.Dn;

    // E(d, r) = exp((2i/hbar) d . Y rbar), rbar centred on M/2
    std::vector<Vec> dv(Dn), rv(Mn);
    for (std::size_t d = 0; d < Dn; ++d) {
        dv[d].resize(pol.n);
        for (int i = 0; i < pol.n; ++i) dv[d](i) = pol.di[d][static_cast<std::size_t>(i)];
    }
    for (std::size_t r = 0; r < Mn; ++r) {
        rv[r].resize(pol.n);
        for (int i = 0; i < pol.n; ++i) rv[r](i) = pol.ri[r][static_cast<std::size_t>(i)] - pol.M / 2;
    }
    const CMat E = phase_table(dv, Y, rv, 2.0 / h);

    // Ahat(u, e) = sum_alpha A(u, alpha) E(e, alpha), same for B
    RowCMat Ahat = pol.to_qr(a) * E.transpose();
    CMat Bchk = pol.to_qr(b) * E.transpose(); // column w contiguous in beta

    RowCMat G = RowCMat::Zero(static_cast<Eigen::Index>(Mn), static_cast<Eigen::Index>(Dn));
    const long c0 = pol.c0;
    const long* P = pol.P.data();
    detail::parallel_for(Mn, [&](std::size_t q) {
        double* grow = reinterpret_cast<double*>(G.row(static_cast<Eigen::Index>(q)).data());
        const long Pq = P[q];
        for (std::size_t u = 0; u < Mn; ++u) {
            const long w = Pq - P[u] + c0;
            const double* arow = reinterpret_cast<const double*>(Ahat.row(static_cast<Eigen::Index>(u)).data());
            const double* bcol = reinterpret_cast<const double*>(Bchk.col(w).data());
            const long dbase = P[u] + c0, ebase = c0 - Pq;
            for (std::size_t beta = 0; beta < Mn; ++beta) {
                const double br = bcol[2 * beta], bi = bcol[2 * beta + 1];
                if (br == 0.0 && bi == 0.0) continue;
                const long d = dbase - P[beta], e = ebase + P[beta];
                const double ar = arow[2 * e], ai = arow[2 * e + 1];
                grow[2 * d] += ar * br - ai * bi;
                grow[2 * d + 1] += ar * bi + ai * br;
            }
        }
    });
    CMat S = G * E;
    S *= C;
    return pol.from_qr(S);
}

void check_dims(const SymbolExpr& e, const PhaseGrid& g, const char* what) {
    if (e.n() != g.n) throw Error(ErrorKind::Input, std::string(what) + ": symbol dimension does not match grid");
}

Eigen::MatrixXd lattice_points(const PhaseGrid& g) {
    Eigen::MatrixXd Z(static_cast<Eigen::Index>(g.size()), g.dims());
    for (std::size_t k = 0; k < g.size(); ++k) {
        auto idx = g.index(k);
        for (int i = 0; i < g.dims(); ++i) Z(static_cast<Eigen::Index>(k), i) = g.coord(idx[static_cast<std::size_t>(i)]);
    }
    return Z;
}

// 1D periodic trigonometric interpolation weights at x over nodes -L + j*step.
std::vector<double> trig_weights(int M, double L, double x) {
    std::vector<double> w(static_cast<std::size_t>(M));
    const double step = 2 * L / M;
    for (int j = 0; j < M; ++j) {
        double t = kPi * (x - (-L + j * step)) / L;
        double s = 1.0 + std::cos(M / 2 * t);
        for (int m = 1; m < M / 2; ++m) s += 2 * std::cos(m * t);
        w[static_cast<std::size_t>(j)] = s / M;
    }
    return w;
}

// Apply an M x M matrix along one axis.
std::vector<cplx> apply_axis(const PhaseGrid& g, const std::vector<cplx>& in, int axis, const Mat& T) {
    const std::size_t M = static_cast<std::size_t>(g.M);
    const std::size_t inner = ipow(M, g.dims() - 1 - axis), outer = g.size() / (inner * M);
    std::vector<cplx> out(in.size(), 0.0);
    detail::parallel_for(outer, [&](std::size_t o) {
        const std::size_t base = o * M * inner;
        for (std::size_t j = 0; j < M; ++j) {
            cplx* dst = &out[base + j * inner];
            for (std::size_t l = 0; l < M; ++l) {
                const double t = T(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(l));
                const cplx* src = &in[base + l * inner];
                for (std::size_t i = 0; i < inner; ++i) dst[i] += t * src[i];
            }
        }
    });
    return out;
}

Mat spectral_matrix(int M, double L) {
    Mat D = Mat::Zero(M, M);
    for (int j = 0; j < M; ++j)
        for (int l = 0; l < M; ++l)
            if (j != l) {
                int k = j - l;
                double sgn = (k % 2 == 0) ? 1.0 : -1.0;
                D(j, l) = (kPi / L) * 0.5 * sgn / std::tan(k * kPi / M);
            }
    return D;
}

// d^mu f sampled on the grid, cached.
class DerivativeSource {
public:
    DerivativeSource(const GridOperand& f, const PhaseGrid& g) : f_(f), g_(g) {}

    const std::vector<cplx>& get(const MultiIndex& mu) {
        auto it = cache_.find(mu);
        if (it != cache_.end()) return it->second;
        std::vector<cplx> v;
        if (const auto* e = std::get_if<SymbolExpr>(&f_)) {
            SymbolExpr d = *e;
            for (std::size_t i = 0; i < mu.size(); ++i)
                for (int k = 0; k < mu[i]; ++k) d = differentiate(d, static_cast<int>(i));
            v = sample(d, g_).samples;
        } else {
            // reuse the cached lower derivative along the last nonzero axis
            const auto& gs = std::get<GridSymbol>(f_);
            int axis = -1;
            for (std::size_t i = 0; i < mu.size(); ++i)
                if (mu[i] > 0) axis = static_cast<int>(i);
            if (axis < 0) {
                v = gs.samples;
            } else {
                MultiIndex lower = mu;
                --lower[static_cast<std::size_t>(axis)];
                if (D_.size() == 0) D_ = spectral_matrix(g_.M, g_.L);
                v = apply_axis(g_, get(lower), axis, D_);
            }
        }
        return cache_.emplace(mu, std::move(v)).first->second;
    }

private:
    const GridOperand& f_;
    PhaseGrid g_;
    Mat D_;
    std::map<MultiIndex, std::vector<cplx>> cache_;
};

// sum_gamma c_gamma(z) (Omega d)^gamma f, with c_gamma from the Bopp expansion of `poly`,
// each order multiplied by sign^|gamma|.
GridSymbol bopp_on_grid(const PolySymbol& poly, const GridOperand& f, const NCParams& params, double sign,
                        const PhaseGrid& g) {
    const int d = g.dims();
    BoppOperator op = bopp_operator(poly, params);
    const Mat Om = build_omega(params).entries;

    // (Omega d)^gamma = sum_mu coef_{gamma,mu} d^mu: expand with xi_beta standing for d_beta
    std::map<MultiIndex, PolySymbol> P; // mu -> polynomial in z
    for (const auto& [gamma, c] : op.expansion) {
        int order = 0;
        for (int gi : gamma) order += gi;
        PolySymbol expand = PolySymbol::constant(g.n, cplx(1.0));
        for (int a = 0; a < d; ++a) {
            PolySymbol lin = PolySymbol::zero(g.n, false);
            for (int b = 0; b < d; ++b)
                if (Om(a, b) != 0.0) lin = lin + PolySymbol::variable(g.n, b).scaled(cplx(Om(a, b)));
            for (int k = 0; k < gamma[static_cast<std::size_t>(a)]; ++k) expand = expand * lin;
        }
        PolySymbol cf = c.to_float().scaled(cplx(std::pow(sign, order)));
        const PolySymbol ef = expand.to_float();
        for (const auto& [mu, coef] : ef.float_terms().terms) {
            auto it = P.find(mu);
            PolySymbol term = cf.scaled(coef);
            if (it == P.end())
                P.emplace(mu, term);
            else
                it->second = it->second + term;
        }
    }

    DerivativeSource src(f, g);
    GridSymbol out = GridSymbol::zeros(g);
    const Eigen::MatrixXd Z = lattice_points(g);
    for (const auto& [mu, poly_mu] : P) {
        if (poly_mu.is_zero()) continue;
        const auto& dm = src.get(mu);
        const PolySymbol pf = poly_mu.to_float();
        std::vector<std::pair<MultiIndex, cplx>> terms(pf.float_terms().terms.begin(), pf.float_terms().terms.end());
        detail::parallel_for(g.size() / static_cast<std::size_t>(g.M), [&](std::size_t c) {
            for (std::size_t k = c * static_cast<std::size_t>(g.M); k < (c + 1) * static_cast<std::size_t>(g.M); ++k) {
                cplx v = 0;
                for (const auto& [m, coef] : terms) {
                    double t = 1;
                    for (int i = 0; i < d; ++i)
                        for (int e = 0; e < m[static_cast<std::size_t>(i)]; ++e) t *= Z(static_cast<Eigen::Index>(k), i);
                    v += coef * t;
                }
                out.samples[k] += v * dm[k];
            }
        });
    }
    return out;
}

double moyal_weight(const PhaseGrid& g, const Mat& basis) {
    double det = std::abs(basis.determinant());
    return std::pow(kPi * g.hbar, -2 * g.n) * det * det;
}

void check_hbar(double a, double b, const char* what) {
    if (std::abs(a - b) > 1e-14 * std::max(a, b))
        throw Error(ErrorKind::Input, std::string(what) + ": hbar does not match the grid");
}

std::vector<Vec> axis_coords(const Polar& pol, const PhaseGrid& g, double scale, bool diffs, bool q_side) {
    std::vector<Vec> out;
    if (diffs) {
        for (const auto& d : pol.di) {
            Vec v(pol.n);
            for (int i = 0; i < pol.n; ++i) v(i) = scale * g.step() * d[static_cast<std::size_t>(i)];
            out.push_back(v);
        }
    } else {
        const auto& idx = q_side ? pol.qi : pol.ri;
        for (const auto& k : idx) {
            Vec v(pol.n);
            for (int i = 0; i < pol.n; ++i) v(i) = scale * g.coord(k[static_cast<std::size_t>(i)]);
            out.push_back(v);
        }
    }
    return out;
}

// c sum_{z'} e^{-(i/hbar) w(z, z')} a(z') at z in Qout x Rout, with w(z,z') = z_Q Y z'_R - z'_Q Y z_R.
CMat sft_factored(const Polar& pol, const PhaseGrid& g, const std::vector<cplx>& a, const Mat& Y, double hbar,
                  const std::vector<Vec>& qout, const std::vector<Vec>& rout) {
    auto qin = axis_coords(pol, g, 1.0, false, true);
    auto rin = axis_coords(pol, g, 1.0, false, false);
    CMat P2 = phase_table(qin, Y, rout, 1.0 / hbar).transpose(); // (rout, q')
    CMat T = P2 * pol.to_qr(a);                                   // (rout, r')
    CMat P1 = phase_table(qout, Y, rin, -1.0 / hbar);             // (qout, r')
    return P1 * T.transpose();                                    // (qout, rout)
}

} // namespace

GridSymbol twisted_product(const GridSymbol& a, const GridSymbol& b, const Mat& basis) {
    if (!(a.grid == b.grid)) throw Error(ErrorKind::Input, "twisted_product: grid mismatch");
    const PhaseGrid& g = a.grid;
    if (basis.rows() != g.dims() || basis.cols() != g.dims())
        throw Error(ErrorKind::Input, "twisted_product: basis must be 2n x 2n");
    if (a.unit) return b;
    if (b.unit) return a;
    require_decay(a, "star product (left factor)");
    require_decay(b, "star product (right factor)");
    const Mat J = symplectic_J(g.n);
    const Mat F = -basis.transpose() * J * basis;
    return GridSymbol(g, twisted_sum(g, a.samples, b.samples, F, moyal_weight(g, basis)));
}

GridSymbol moyal_star_fft(const GridSymbol& a, const GridSymbol& b, double hbar) {
    if (!(a.grid == b.grid)) throw Error(ErrorKind::Input, "moyal_star_fft: grid mismatch");
    check_hbar(hbar, a.grid.hbar, "moyal_star_fft");
    return twisted_product(a, b, a.grid.step() * Mat::Identity(a.grid.dims(), a.grid.dims()));
}

namespace {

// a' = a o s sampled at s^{-1} z_k, Moyal product over the lattice s^{-1} Lambda
GridSymbol pullback_product(const SymbolExpr& a, const SymbolExpr* be, const GridSymbol* bg,
                            const SeibergWittenMap& s, const PhaseGrid& grid) {
    const Mat sinv = s.s.inverse();
    const Eigen::MatrixXd Y = lattice_points(grid) * sinv.transpose();
    GridSymbol ap(grid, evaluate_points(compose_linear(a, s.s), Y));
    GridSymbol bp = bg ? *bg : GridSymbol(grid, evaluate_points(compose_linear(*be, s.s), Y));
    return twisted_product(ap, bp, grid.step() * sinv);
}

} // namespace

GridSymbol star_grid_omega(const SymbolExpr& a, const GridOperand& b, const NCParams& params,
                           const SeibergWittenMap& s, const PhaseGrid& grid) {
    grid.validate();
    check_dims(a, grid, "star_grid_omega");
    if (params.n != grid.n) throw Error(ErrorKind::Input, "star_grid_omega: params dimension does not match grid");
    check_hbar(params.hbar, grid.hbar, "star_grid_omega");
    const OmegaMatrix om = build_omega(params);
    SwResiduals res = sw_residuals(s, om);
    if (!(res.max() <= 1e-9)) throw Error(ErrorKind::Input, "star_grid_omega: s does not solve s J s^T = Omega");

    const SymbolExpr* be = std::get_if<SymbolExpr>(&b);
    const GridSymbol* bg = std::get_if<GridSymbol>(&b);
    if (be) check_dims(*be, grid, "star_grid_omega");
    if (bg && !(bg->grid == grid)) throw Error(ErrorKind::Input, "star_grid_omega: grid mismatch");

    if (is_unit(a)) return be ? sample(*be, grid) : *bg;
    if ((be && is_unit(*be)) || (bg && bg->unit)) return sample(a, grid);

    if (is_polynomial(a)) {
        if (bg) require_decay(*bg, "star_grid_omega (spectral derivatives)");
        return bopp_on_grid(to_poly(a), b, params, 1.0, grid);
    }
    if (be && is_polynomial(*be)) return bopp_on_grid(to_poly(*be), GridOperand(a), params, -1.0, grid);

    return pullback_product(a, be, bg, s, grid);
}

GridSymbol star_grid_twisted(const SymbolExpr& a, const GridOperand& b, const NCParams& params,
                             const SeibergWittenMap& s, const PhaseGrid& grid) {
    grid.validate();
    check_dims(a, grid, "star_grid_twisted");
    if (params.n != grid.n) throw Error(ErrorKind::Input, "star_grid_twisted: params dimension does not match grid");
    check_hbar(params.hbar, grid.hbar, "star_grid_twisted");
    const OmegaMatrix om = build_omega(params);
    SwResiduals res = sw_residuals(s, om);
    if (!(res.max() <= 1e-9)) throw Error(ErrorKind::Input, "star_grid_twisted: s does not solve s J s^T = Omega");

    const SymbolExpr* be = std::get_if<SymbolExpr>(&b);
    const GridSymbol* bg = std::get_if<GridSymbol>(&b);
    if (be) check_dims(*be, grid, "star_grid_twisted");
    if (bg && !(bg->grid == grid)) throw Error(ErrorKind::Input, "star_grid_twisted: grid mismatch");

    if (is_unit(a)) return be ? sample(*be, grid) : *bg;
    if ((be && is_unit(*be)) || (bg && bg->unit)) return sample(a, grid);
    return pullback_product(a, be, bg, s, grid);
}

GridSymbol sft_omega_dense(const GridSymbol& a, const OmegaMatrix& omega) {
    const PhaseGrid& g = a.grid;
    if (omega.n != g.n) throw Error(ErrorKind::Input, "sft_omega_dense: dimension mismatch");
    check_hbar(omega.hbar, g.hbar, "sft_omega_dense");
    if (g.size() > kSftMaxPoints) throw Error(ErrorKind::Guard, "sft_omega_dense: grid too large for dense mode");
    require_decay(a, "sft_omega_dense");
    Polar pol(g);
    const Mat W = omega.entries.inverse();
    const Mat Y = pol.split(W);
    auto qout = axis_coords(pol, g, 1.0, false, true);
    auto rout = axis_coords(pol, g, 1.0, false, false);
    CMat F = sft_factored(pol, g, a.samples, Y, g.hbar, qout, rout);
    const double c = std::pow(2 * kPi * g.hbar, -g.n) / std::sqrt(std::abs(omega.entries.determinant())) * g.weight();
    F *= c;
    return GridSymbol(g, pol.from_qr(F));
}

GridSymbol translate_omega(const GridSymbol& psi, const Vec& z0, const OmegaMatrix& omega, ShiftMode mode) {
    const PhaseGrid& g = psi.grid;
    const int d = g.dims();
    if (z0.size() != d || omega.n != g.n) throw Error(ErrorKind::Input, "translate_omega: dimension mismatch");
    check_hbar(omega.hbar, g.hbar, "translate_omega");
    const Vec half = 0.5 * z0;
    std::vector<cplx> shifted;
    if (half.cwiseAbs().maxCoeff() == 0.0) {
        shifted = psi.samples;
    } else if (mode == ShiftMode::Aligned) {
        std::vector<int> m(static_cast<std::size_t>(d));
        for (int i = 0; i < d; ++i) {
            double r = half(i) / g.step();
            if (std::abs(r - std::round(r)) > 1e-9)
                throw Error(ErrorKind::Input, "translate_omega: z0/2 is not lattice-aligned (use interpolation mode)");
            m[static_cast<std::size_t>(i)] = static_cast<int>(std::lround(r));
        }
        if (!psi.unit) require_decay(psi, "translate_omega");
        shifted.resize(psi.samples.size());
        for (std::size_t k = 0; k < g.size(); ++k) {
            auto idx = g.index(k);
            std::size_t src = 0;
            for (int i = 0; i < d; ++i) {
                int j = ((idx[static_cast<std::size_t>(i)] - m[static_cast<std::size_t>(i)]) % g.M + g.M) % g.M;
                src = src * static_cast<std::size_t>(g.M) + static_cast<std::size_t>(j);
            }
            shifted[k] = psi.samples[src];
        }
    } else {
        if (!psi.unit) require_decay(psi, "translate_omega");
        shifted = psi.samples;
        for (int i = 0; i < d; ++i) {
            if (half(i) == 0.0) continue;
            Mat T(g.M, g.M);
            for (int j = 0; j < g.M; ++j) {
                auto w = trig_weights(g.M, g.L, g.coord(j) - half(i));
                for (int l = 0; l < g.M; ++l) T(j, l) = w[static_cast<std::size_t>(l)];
            }
            shifted = apply_axis(g, shifted, i, T);
        }
    }
    const Mat W = omega.entries.inverse();
    const Vec Wz0 = W * z0;
    GridSymbol out(g, std::move(shifted));
    for (std::size_t k = 0; k < g.size(); ++k) {
        auto idx = g.index(k);
        double w = 0;
        for (int i = 0; i < d; ++i) w += g.coord(idx[static_cast<std::size_t>(i)]) * Wz0(i);
        out.samples[k] *= std::polar(1.0, -w / g.hbar);
    }
    return out;
}

GridSymbol apply_ms(const SymbolExpr& psi, const SeibergWittenMap& s, const PhaseGrid& grid, Direction dir) {
    grid.validate();
    check_dims(psi, grid, "apply_ms");
    const Mat m = dir == Direction::Forward ? s.s : Mat(s.s.inverse());
    const double scale = std::sqrt(std::abs(m.determinant()));
    GridSymbol out(grid, evaluate_points(psi, lattice_points(grid) * m.transpose()));
    for (auto& v : out.samples) v *= scale;
    return out;
}

GridSymbol apply_ms(const GridSymbol& psi, const SeibergWittenMap& s, Direction dir, bool interp) {
    const PhaseGrid& g = psi.grid;
    if (s.s.rows() != g.dims()) throw Error(ErrorKind::Input, "apply_ms: dimension mismatch");
    if (!interp) throw Error(ErrorKind::Input, "apply_ms: sample-backed input needs interpolation mode");
    if (g.size() > kInterpMaxPoints) throw Error(ErrorKind::Guard, "apply_ms: grid too large for interpolation");
    const Mat m = dir == Direction::Forward ? s.s : Mat(s.s.inverse());
    const double scale = std::sqrt(std::abs(m.determinant()));
    if (psi.unit) {
        GridSymbol out = psi;
        for (auto& v : out.samples) v *= scale;
        out.unit = scale == 1.0;
        return out;
    }
    require_decay(psi, "apply_ms");
    GridSymbol out(g, interpolate(psi, lattice_points(g) * m.transpose()));
    for (auto& v : out.samples) v *= scale;
    return out;
}

std::vector<cplx> interpolate(const GridSymbol& a, const Eigen::MatrixXd& pts) {
    const PhaseGrid& g = a.grid;
    const int d = g.dims();
    if (pts.cols() != d) throw Error(ErrorKind::Input, "interpolate: wrong point dimension");
    const std::size_t M = static_cast<std::size_t>(g.M);
    std::vector<cplx> out(static_cast<std::size_t>(pts.rows()));
    detail::parallel_for(out.size(), [&](std::size_t p) {
        // contract one axis at a time, last axis first
        std::vector<cplx> cur = a.samples;
        for (int i = d - 1; i >= 0; --i) {
            auto w = trig_weights(g.M, g.L, pts(static_cast<Eigen::Index>(p), i));
            std::vector<cplx> next(cur.size() / M, 0.0);
            for (std::size_t o = 0; o < next.size(); ++o) {
                cplx acc = 0;
                for (std::size_t l = 0; l < M; ++l) acc += w[l] * cur[o * M + l];
                next[o] = acc;
            }
            cur.swap(next);
        }
        out[p] = cur[0];
    });
    return out;
}

GridSymbol spectral_derivative(const GridSymbol& a, int axis) {
    if (axis < 0 || axis >= a.grid.dims()) throw Error(ErrorKind::Input, "spectral_derivative: bad axis");
    if (a.unit) return GridSymbol::zeros(a.grid);
    return GridSymbol(a.grid, apply_axis(a.grid, a.samples, axis, spectral_matrix(a.grid.M, a.grid.L)));
}

GridSymbol DenseOperator::apply(const GridSymbol& psi) const {
    if (!(psi.grid == grid)) throw Error(ErrorKind::Input, "dense operator: grid mismatch");
    Eigen::Map<const Eigen::VectorXcd> v(psi.samples.data(), static_cast<Eigen::Index>(psi.samples.size()));
    Eigen::VectorXcd r = matrix * v;
    return GridSymbol(grid, std::vector<cplx>(r.data(), r.data() + r.size()));
}

DenseOperator dense_A_omega(const SymbolExpr& a, const NCParams& params, const PhaseGrid& g) {
    g.validate();
    check_dims(a, g, "dense_A_omega");
    check_hbar(params.hbar, g.hbar, "dense_A_omega");
    const std::size_t N = g.size();
    if (N > kDenseMaxPoints) throw Error(ErrorKind::Guard, "dense_A_omega: grid too large for the dense kernel");
    const OmegaMatrix om = build_omega(params);
    if (is_unit(a)) return DenseOperator{CMat::Identity(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N)), g};

    GridSymbol as = sample(a, g);
    require_decay(as, "dense_A_omega");
    Polar pol(g);
    const Mat W = om.entries.inverse();
    const Mat Y = pol.split(W);
    // F_Omega a at the doubled difference points 2(z - u)
    auto qd = axis_coords(pol, g, 2.0, true, true);
    CMat F = sft_factored(pol, g, as.samples, Y, g.hbar, qd, qd);
    const double detom = std::abs(om.entries.determinant());
    const double cF = std::pow(2 * kPi * g.hbar, -g.n) / std::sqrt(detom) * g.weight();
    const double cK = std::pow(2 / (kPi * g.hbar), g.n) / std::sqrt(detom) * g.weight();

    const Eigen::MatrixXd Z = lattice_points(g);
    const Eigen::MatrixXd ZW = Z * W;
    std::vector<long> qP(N), rP(N);
    for (std::size_t k = 0; k < N; ++k) {
        qP[k] = pol.P[pol.q_of[k]];
        rP[k] = pol.P[pol.r_of[k]];
    }
    CMat K(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
    detail::parallel_for(N, [&](std::size_t k) {
        for (std::size_t l = 0; l < N; ++l) {
            const long dq = qP[k] - qP[l] + pol.c0, dr = rP[k] - rP[l] + pol.c0;
            const double w = ZW.row(static_cast<Eigen::Index>(k)).dot(Z.row(static_cast<Eigen::Index>(l)));
            K(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) =
                cK * cF * F(dq, dr) * std::polar(1.0, 2 * w / g.hbar);
        }
    });
    return DenseOperator{std::move(K), g};
}

GridSymbol apply_A_omega_dense(const SymbolExpr& a, const GridSymbol& psi, const NCParams& params) {
    return dense_A_omega(a, params, psi.grid).apply(psi);
}

} // namespace ncstar
