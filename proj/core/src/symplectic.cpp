#include "ncstar/symplectic.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "ncstar/errors.hpp"
#include "ncstar/rational.hpp"

namespace ncstar {

NCParams NCParams::commutative(int n, double hbar) {
    NCParams p;
    p.n = n;
    p.hbar = hbar;
    p.theta = Mat::Zero(n, n);
    p.eta = Mat::Zero(n, n);
    return p;
}

NCParams NCParams::single_pair(double hbar, double theta12, double eta12) {
    NCParams p = commutative(2, hbar);
    p.theta(0, 1) = theta12;
    p.theta(1, 0) = -theta12;
    p.eta(0, 1) = eta12;
    p.eta(1, 0) = -eta12;
    return p;
}

NCParams NCParams::single_pair_exact(const mpq_class& hbar, const mpq_class& theta12,
                                     const mpq_class& eta12) {
    NCParams p = single_pair(to_double(hbar), to_double(theta12), to_double(eta12));
    ExactData e;
    e.hbar = hbar;
    e.theta = {0, theta12, -theta12, 0};
    e.eta = {0, eta12, -eta12, 0};
    p.exact = e;
    return p;
}

static void check_antisym(const Mat& m, int n, const char* name) {
    if (m.rows() != n || m.cols() != n)
        throw Error(ErrorKind::Input, std::string(name) + " must be " + std::to_string(n) + "x" +
                                          std::to_string(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (m(i, j) != -m(j, i))
                throw Error(ErrorKind::Input, std::string(name) + " is not antisymmetric at (" +
                                                  std::to_string(i + 1) + "," + std::to_string(j + 1) + ")");
}

void validate(const NCParams& p) {
    if (p.n < 1) throw Error(ErrorKind::Input, "n must be positive");
    if (!(p.hbar > 0) || !std::isfinite(p.hbar)) throw Error(ErrorKind::Input, "hbar must be positive");
    check_antisym(p.theta, p.n, "theta");
    check_antisym(p.eta, p.n, "eta");
    if (p.schedule) {
        if (!(p.schedule->alpha_theta > 2) || !(p.schedule->alpha_eta > 2))
            throw Error(ErrorKind::Input, "schedule exponents must exceed 2");
        check_antisym(p.schedule->theta_hat, p.n, "theta_hat");
        check_antisym(p.schedule->eta_hat, p.n, "eta_hat");
    }
    if (p.exact) {
        const auto nn = static_cast<std::size_t>(p.n * p.n);
        if (p.exact->theta.size() != nn || p.exact->eta.size() != nn)
            throw Error(ErrorKind::Input, "exact data has wrong shape");
    }
}

Admissibility admissible(const NCParams& p) {
    validate(p);
    Admissibility a;
    double worst = 0.0;
    bool any = false;
    for (int al = 0; al < p.n; ++al)
        for (int be = al + 1; be < p.n; ++be)
            for (int ga = 0; ga < p.n; ++ga)
                for (int de = ga + 1; de < p.n; ++de) {
                    double prod = p.theta(al, be) * p.eta(ga, de);
                    if (!any || prod > worst) {
                        worst = prod;
                        a.worst = {al + 1, be + 1, ga + 1, de + 1};
                        any = true;
                    }
                }
    double h2 = p.hbar * p.hbar;
    a.margin = h2 - worst;
    a.flag = worst < h2;
    if (p.exact && any) {
        // exact comparison when rationals are available
        mpq_class eh2 = p.exact->hbar * p.exact->hbar;
        bool ok = true;
        for (int al = 0; al < p.n; ++al)
            for (int be = al + 1; be < p.n; ++be)
                for (int ga = 0; ga < p.n; ++ga)
                    for (int de = ga + 1; de < p.n; ++de)
                        if (p.exact->theta[al * p.n + be] * p.exact->eta[ga * p.n + de] >= eh2) ok = false;
        a.flag = ok;
    }
    return a;
}

Mat symplectic_J(int n) {
    Mat J = Mat::Zero(2 * n, 2 * n);
    J.topRightCorner(n, n) = Mat::Identity(n, n);
    J.bottomLeftCorner(n, n) = -Mat::Identity(n, n);
    return J;
}

OmegaMatrix build_omega(const NCParams& p) {
    Admissibility a = admissible(p);
    if (!a.flag) {
        std::ostringstream os;
        os << "inadmissible parameters: theta_" << a.worst[0] << a.worst[1] << " * eta_" << a.worst[2]
           << a.worst[3] << " >= hbar^2 (margin " << a.margin << ")";
        throw Error(ErrorKind::Admissibility, os.str());
    }
    const int n = p.n;
    OmegaMatrix om;
    om.n = n;
    om.hbar = p.hbar;
    om.entries = symplectic_J(n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            double t = p.theta(i, j) / p.hbar, e = p.eta(i, j) / p.hbar;
            om.entries(i, j) = t;
            om.entries(j, i) = -t;
            om.entries(n + i, n + j) = e;
            om.entries(n + j, n + i) = -e;
        }
    return om;
}

static Mat checked_inverse(const Mat& m) {
    Eigen::FullPivLU<Mat> lu(m);
    if (!lu.isInvertible()) throw Error(ErrorKind::Degenerate, "Omega is singular");
    return lu.inverse();
}

double omega_form(const OmegaMatrix& omega, const Vec& z, const Vec& zp) {
    Mat inv = checked_inverse(omega.entries);
    return z.dot(inv * zp);
}

SeibergWittenMap SeibergWittenMap::from_matrix(const Mat& s) {
    SeibergWittenMap m;
    const int n = static_cast<int>(s.rows() / 2);
    m.s = s;
    m.A = s.topLeftCorner(n, n);
    m.B = s.topRightCorner(n, n);
    m.C = s.bottomLeftCorner(n, n);
    m.D = s.bottomRightCorner(n, n);
    return m;
}

double SwResiduals::max() const { return std::max({sjst, ab, cd, ad}); }

SeibergWittenMap solve_sw_map(const OmegaMatrix& omega, std::uint64_t variant) {
    const int n = omega.n, d = 2 * n;
    const Mat form = checked_inverse(omega.entries);
    auto w = [&](const Vec& u, const Vec& v) { return u.dot(form * v); };

    std::vector<Vec> pool;
    if (variant == 0) {
        for (int i = 0; i < d; ++i) pool.push_back(Vec::Unit(d, i));
    } else {
        std::mt19937_64 rng(variant);
        std::normal_distribution<double> g(0.0, 1.0);
        Mat r(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) r(i, j) = g(rng);
        Mat q = Eigen::HouseholderQR<Mat>(r).householderQ();
        for (int i = 0; i < d; ++i) pool.push_back(q.col(i));
    }

    const double scale = std::max(1.0, form.cwiseAbs().maxCoeff());
    Mat s(d, d);
    for (int k = 0; k < n; ++k) {
        std::size_t bi = 0, bj = 1;
        double best = -1.0;
        for (std::size_t i = 0; i < pool.size(); ++i)
            for (std::size_t j = i + 1; j < pool.size(); ++j) {
                double v = std::abs(w(pool[i], pool[j]));
                if (v > best * (1.0 + 1e-12)) {
                    best = v;
                    bi = i;
                    bj = j;
                }
            }
        if (best < 1e-14 * scale) throw Error(ErrorKind::Degenerate, "degenerate form: pivot below 1e-14");
        Vec e = pool[bi];
        Vec f = pool[bj] * (-1.0 / w(pool[bi], pool[bj]));
        pool.erase(pool.begin() + static_cast<long>(bj));
        pool.erase(pool.begin() + static_cast<long>(bi));
        for (int pass = 0; pass < 2; ++pass)
            for (auto& u : pool) u += w(u, f) * e - w(u, e) * f;
        s.col(k) = e;
        s.col(n + k) = f;
    }
    return SeibergWittenMap::from_matrix(s);
}

SwResiduals sw_residuals(const SeibergWittenMap& sw, const OmegaMatrix& omega) {
    const int n = omega.n;
    SwResiduals r;
    r.sjst = (sw.s * symplectic_J(n) * sw.s.transpose() - omega.entries).cwiseAbs().maxCoeff();
    Mat th = omega.entries.topLeftCorner(n, n), et = omega.entries.bottomRightCorner(n, n);
    r.ab = (sw.A * sw.B.transpose() - sw.B * sw.A.transpose() - th).cwiseAbs().maxCoeff();
    r.cd = (sw.C * sw.D.transpose() - sw.D * sw.C.transpose() - et).cwiseAbs().maxCoeff();
    r.ad = (sw.A * sw.D.transpose() - sw.B * sw.C.transpose() - Mat::Identity(n, n)).cwiseAbs().maxCoeff();
    return r;
}

double symplectic_defect(const Mat& S) {
    const int n = static_cast<int>(S.rows() / 2);
    Mat J = symplectic_J(n);
    return (S.transpose() * J * S - J).cwiseAbs().maxCoeff();
}

Mat random_symplectic(int n, std::uint64_t seed, double scale) {
    if (n < 1) throw Error(ErrorKind::Input, "n must be positive");
    const int d = 2 * n;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, scale);
    Mat h(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) h(i, j) = h(j, i) = g(rng);
    Mat generator = symplectic_J(n) * h;
    return generator.exp();
}

NCParams at_hbar(const NCParams& p, double hbar) {
    if (!p.schedule) throw Error(ErrorKind::Input, "params carry no schedule");
    if (!(hbar > 0)) throw Error(ErrorKind::Input, "hbar must be positive");
    const Schedule& sc = *p.schedule;
    NCParams q = p;
    q.hbar = hbar;
    q.exact.reset();
    q.theta = sc.c_theta * std::pow(hbar, sc.alpha_theta) * sc.theta_hat;
    q.eta = sc.c_eta * std::pow(hbar, sc.alpha_eta) * sc.eta_hat;
    Admissibility a = admissible(q);
    if (!a.flag)
        throw Error(ErrorKind::Admissibility, "scheduled parameters inadmissible at hbar=" + std::to_string(hbar));
    return q;
}

} // namespace ncstar
