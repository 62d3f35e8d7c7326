#include <doctest.h>

#include <random>

#include "ncstar/errors.hpp"
#include "ncstar/symplectic.hpp"

using namespace ncstar;

namespace {

// 4x4 antisymmetric determinant through the Pfaffian.
double pfaffian_det(const Mat& a) {
    double pf = a(0, 1) * a(2, 3) - a(0, 2) * a(1, 3) + a(0, 3) * a(1, 2);
    return pf * pf;
}

// plain Gauss-Jordan with partial pivoting
Mat gauss_jordan_inverse(Mat a) {
    const int d = static_cast<int>(a.rows());
    Mat inv = Mat::Identity(d, d);
    for (int c = 0; c < d; ++c) {
        int piv = c;
        for (int r = c + 1; r < d; ++r)
            if (std::abs(a(r, c)) > std::abs(a(piv, c))) piv = r;
        a.row(c).swap(a.row(piv));
        inv.row(c).swap(inv.row(piv));
        double p = a(c, c);
        a.row(c) /= p;
        inv.row(c) /= p;
        for (int r = 0; r < d; ++r)
            if (r != c) {
                double f = a(r, c);
                a.row(r) -= f * a.row(c);
                inv.row(r) -= f * inv.row(c);
            }
    }
    return inv;
}

NCParams random_admissible(std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> u(-0.6, 0.6), hb(0.3, 2.0);
    for (;;) {
        NCParams p = NCParams::commutative(n, hb(rng));
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                p.theta(i, j) = u(rng) * p.hbar;
                p.theta(j, i) = -p.theta(i, j);
                p.eta(i, j) = u(rng) * p.hbar;
                p.eta(j, i) = -p.eta(i, j);
            }
        if (admissible(p).flag) return p;
    }
}

} // namespace

TEST_CASE("build_omega block layout") {
    OmegaMatrix j = build_omega(NCParams::commutative(2));
    Mat expect(4, 4);
    expect << 0, 0, 1, 0, 0, 0, 0, 1, -1, 0, 0, 0, 0, -1, 0, 0;
    CHECK(j.entries == expect);

    OmegaMatrix om = build_omega(NCParams::single_pair(1.0, 0.5, 0.5));
    CHECK(om.entries(0, 1) == 0.5);
    CHECK(om.entries(0, 2) == 1.0);
    CHECK(om.entries(1, 3) == 1.0);
    CHECK(om.entries(2, 3) == 0.5);
    CHECK(om.entries == -om.entries.transpose());
    CHECK(pfaffian_det(om.entries) == doctest::Approx(0.5625).epsilon(1e-15));
    CHECK(std::abs(om.entries.determinant() - 0.5625) < 1e-12);
}

TEST_CASE("det Omega = (1 - theta eta / hbar^2)^2 for single-pair fixtures") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-0.9, 0.9), hb(0.2, 3.0);
    for (int k = 0; k < 200; ++k) {
        double h = hb(rng), t = u(rng) * h, e = u(rng) * h;
        OmegaMatrix om = build_omega(NCParams::single_pair(h, t, e));
        double expect = std::pow(1 - t * e / (h * h), 2);
        CHECK(std::abs(pfaffian_det(om.entries) - expect) < 1e-12);
        CHECK(std::abs(om.entries.determinant() - expect) < 1e-12);
    }
}

TEST_CASE("build_omega rejects bad input") {
    NCParams p = NCParams::single_pair(1.0, 0.5, 0.5);
    p.theta(1, 0) = 0.4;
    CHECK_THROWS_AS(build_omega(p), Error);

    NCParams q = NCParams::single_pair(1.0, 1.0, 1.0);
    try {
        build_omega(q);
        FAIL("expected admissibility error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Admissibility);
        CHECK(std::string(e.what()).find("theta_12 * eta_12") != std::string::npos);
    }
}

TEST_CASE("admissible") {
    Admissibility a = admissible(NCParams::single_pair(1.0, 0.5, 0.5));
    CHECK(a.flag);
    CHECK(a.margin == doctest::Approx(0.75));

    Admissibility b = admissible(NCParams::single_pair(1.0, 1.0, 1.0));
    CHECK_FALSE(b.flag);
    CHECK(b.margin == 0.0);

    NCParams phys = NCParams::single_pair(1.054571817e-34, 4e-40, 1.76e-61);
    CHECK(admissible(phys).flag);

    NCParams ex = NCParams::single_pair_exact(1, mpq_class(1, 2), 2);
    CHECK_FALSE(admissible(ex).flag);
}

TEST_CASE("omega_form") {
    OmegaMatrix j = build_omega(NCParams::commutative(2));
    Mat J = symplectic_J(2);
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
            Vec za = Vec::Unit(4, a), zb = Vec::Unit(4, b);
            double sigma = (J * za).dot(zb);
            CHECK(omega_form(j, za, zb) == sigma);
        }

    OmegaMatrix om = build_omega(NCParams::single_pair(1.0, 0.5, 0.5));
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    for (int k = 0; k < 20; ++k) {
        Vec z(4);
        for (int i = 0; i < 4; ++i) z(i) = g(rng);
        CHECK(std::abs(omega_form(om, z, z)) < 1e-14);
    }
    Mat inv = gauss_jordan_inverse(om.entries);
    CHECK(std::abs(omega_form(om, Vec::Unit(4, 0), Vec::Unit(4, 1)) - inv(0, 1)) < 1e-15);

    OmegaMatrix sing;
    sing.n = 2;
    sing.entries = Mat::Zero(4, 4);
    CHECK_THROWS_AS(omega_form(sing, Vec::Unit(4, 0), Vec::Unit(4, 1)), Error);
}

TEST_CASE("solve_sw_map examples") {
    OmegaMatrix j = build_omega(NCParams::commutative(2));
    SeibergWittenMap id = solve_sw_map(j);
    CHECK(id.s == Mat::Identity(4, 4));

    OmegaMatrix om = build_omega(NCParams::single_pair(1.0, 0.5, 0.5));
    SeibergWittenMap sw = solve_sw_map(om);
    SwResiduals r = sw_residuals(sw, om);
    CHECK(r.sjst <= 1e-12);
    CHECK(r.ab <= 1e-12);
    CHECK(r.cd <= 1e-12);
    CHECK(r.ad <= 1e-12);
    CHECK(std::abs(sw.s.determinant()) > 0);
}

TEST_CASE("solve_sw_map on random admissible params, variants differ by Sp(2n)") {
    std::mt19937_64 rng(2024);
    for (int k = 0; k < 100; ++k) {
        int n = 2 + k % 2;
        NCParams p = random_admissible(rng, n);
        OmegaMatrix om = build_omega(p);
        SeibergWittenMap s0 = solve_sw_map(om, 0), s1 = solve_sw_map(om, 1 + k);
        CHECK(sw_residuals(s0, om).max() <= 1e-10);
        CHECK(sw_residuals(s1, om).max() <= 1e-10);
        CHECK((s0.s - s1.s).cwiseAbs().maxCoeff() > 1e-6);
        Mat rel = s0.s.inverse() * s1.s;
        CHECK(symplectic_defect(rel) <= 1e-10);
    }
    std::mt19937_64 rng2(5);
    NCParams p = random_admissible(rng2, 3);
    OmegaMatrix om = build_omega(p);
    CHECK(solve_sw_map(om, 9).s == solve_sw_map(om, 9).s);
}

TEST_CASE("solve_sw_map degenerate form") {
    OmegaMatrix om;
    om.n = 2;
    om.hbar = 1;
    // invertible, but every pairing of the form sits below the pivot floor
    om.entries = symplectic_J(2) * 1e20;
    CHECK_THROWS_AS(solve_sw_map(om), Error);
}

TEST_CASE("random_symplectic") {
    for (std::uint64_t seed : {1ull, 7ull, 99ull, 12345ull}) {
        for (int n : {1, 2, 3}) {
            Mat S = random_symplectic(n, seed);
            CHECK(symplectic_defect(S) <= 1e-12);
            CHECK(std::abs(S.determinant() - 1.0) <= 1e-10);
        }
    }
    CHECK(random_symplectic(2, 7) == random_symplectic(2, 7));
    CHECK(random_symplectic(2, 7) != random_symplectic(2, 8));
}

TEST_CASE("at_hbar schedules") {
    NCParams p = NCParams::commutative(2);
    Schedule s;
    s.alpha_theta = s.alpha_eta = 3;
    s.theta_hat = Mat::Zero(2, 2);
    s.theta_hat(0, 1) = 1;
    s.theta_hat(1, 0) = -1;
    s.eta_hat = s.theta_hat;
    p.schedule = s;
    NCParams q = at_hbar(p, 0.1);
    CHECK(q.theta(0, 1) == doctest::Approx(1e-3).epsilon(1e-14));
    CHECK(q.theta(1, 0) == -q.theta(0, 1));

    double prev_ratio = 1e300, prev_dev = 1e300;
    for (double h : {0.1, 0.01, 0.001}) {
        NCParams r = at_hbar(p, h);
        double ratio = r.theta(0, 1) / (h * h);
        double dev = (build_omega(r).entries - symplectic_J(2)).cwiseAbs().maxCoeff();
        CHECK(ratio == doctest::Approx(h).epsilon(1e-12));
        CHECK(ratio < prev_ratio);
        CHECK(dev < prev_dev);
        prev_ratio = ratio;
        prev_dev = dev;
    }

    p.schedule->c_theta = 2;
    p.schedule->c_eta = 2;
    CHECK_THROWS_AS(at_hbar(p, 1.0), Error);

    p.schedule->alpha_theta = 2;
    CHECK_THROWS_AS(validate(p), Error);
}
