#include <doctest.h>

#include <random>

#include "ncstar/errors.hpp"
#include "ncstar/symbol.hpp"
#include "ncstar/symplectic.hpp"

using namespace ncstar;


namespace {

std::vector<cplx> randz(std::mt19937_64& rng, int d, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    std::vector<cplx> z(static_cast<std::size_t>(d));
    for (auto& v : z) v = g(rng);
    return z;
}

int error_column(const std::string& text, int n) {
    try {
        parse(text, n);
    } catch (const ParseError& e) {
        return e.column();
    }
    return -1;
}

// random expression text over n=2 from a small grammar walk
std::string random_text(std::mt19937_64& rng, int depth) {
    std::uniform_int_distribution<int> pick(0, depth > 0 ? 9 : 2), small(1, 9), var(1, 2);
    switch (pick(rng)) {
    case 0: return std::to_string(small(rng));
    case 1: return std::string(var(rng) == 1 ? "x" : "p") + std::to_string(var(rng));
    case 2: return std::to_string(small(rng)) + "/" + std::to_string(small(rng) + 1);
    case 3: return random_text(rng, depth - 1) + " + " + random_text(rng, depth - 1);
    case 4: return random_text(rng, depth - 1) + " - " + random_text(rng, depth - 1);
    case 5: return random_text(rng, depth - 1) + "*" + random_text(rng, depth - 1);
    case 6: return "(" + random_text(rng, depth - 1) + ")^" + std::to_string(small(rng) % 4);
    case 7: return "-" + random_text(rng, depth - 1);
    case 8: return "exp(" + random_text(rng, depth - 1) + ")";
    default: return "(" + random_text(rng, depth - 1) + ")/" + std::to_string(small(rng)) + ".5";
    }
}

} // namespace

TEST_CASE("parse and evaluate examples") {
    SymbolExpr a = parse("x1^2 + p1^2", 1);
    CHECK(evaluate(a, std::vector<cplx>{3.0, 4.0}) == cplx(25.0));
    SymbolExpr g = parse("exp(-(x1^2+p1^2))", 1);
    CHECK(evaluate(g, std::vector<cplx>{0.0, 0.0}) == cplx(1.0));
    CHECK(to_string(a) == "x1^2 + p1^2");
    CHECK(to_string(g) == "exp(-(x1^2 + p1^2))");
}

TEST_CASE("precedence and associativity") {
    auto ev = [](const std::string& s) { return evaluate(parse(s, 1), std::vector<cplx>{2.0, 3.0}).real(); };
    CHECK(ev("-x1^2") == -4.0);
    CHECK(ev("x1 - p1 - 1") == -2.0);
    CHECK(ev("x1*p1/2") == 3.0);
    CHECK(ev("2*x1^3") == 16.0);
    CHECK(ev("1/2*x1") == 1.0);
    CHECK(ev("  x1   *  p1 ") == 6.0);
    CHECK(ev("2.5e-1*x1") == 0.5);
}

TEST_CASE("parse errors carry 1-based columns") {
    CHECK(error_column("x3", 2) == 1);
    CHECK(error_column("x1 + y2", 2) == 6);
    CHECK(error_column("x1 + ", 2) == 6);
    CHECK(error_column("(x1 + p1", 2) == 9);
    CHECK(error_column("x1 / p1", 2) == 6);
    CHECK(error_column("x1^p1", 2) == 4);
    CHECK(error_column("x1 # 2", 2) == 4);
    CHECK(error_column("x1/0", 2) == 4);
    CHECK(error_column("x0", 2) == 1);
    CHECK_THROWS_AS(parse("   ", 1), ParseError);
}

TEST_CASE("differentiate") {
    SymbolExpr e = parse("x1^2*p2", 2);
    PolySymbol d = to_poly(differentiate(e, 0));
    CHECK(d == to_poly(parse("2*x1*p2", 2)));

    SymbolExpr g = parse("exp(-(x1^2+p1^2))", 1);
    SymbolExpr dg = differentiate(g, 1);
    SymbolExpr expect = parse("-2*p1*exp(-(x1^2+p1^2))", 1);
    std::mt19937_64 rng(1);
    for (int k = 0; k < 10; ++k) {
        auto z = randz(rng, 2);
        CHECK(std::abs(evaluate(dg, z) - evaluate(expect, z)) < 1e-14);
    }
}

TEST_CASE("differentiate agrees with central finite differences") {
    SymbolExpr e = parse("exp(-(x1^2 + p2^2)/2)*(x1*p1 - 3*x2^3) + p1^4/7", 2);
    std::mt19937_64 rng(7);
    const double h = 1e-5;
    for (int k = 0; k < 20; ++k) {
        auto z = randz(rng, 4, 0.8);
        for (int v = 0; v < 4; ++v) {
            auto zp = z, zm = z;
            zp[v] += h;
            zm[v] -= h;
            cplx fd = (evaluate(e, zp) - evaluate(e, zm)) / (2 * h);
            cplx an = evaluate(differentiate(e, v), z);
            CHECK(std::abs(fd - an) <= 1e-8 * std::max(1.0, std::abs(an)));
        }
    }
}

TEST_CASE("compose_linear") {
    SymbolExpr e = parse("exp(-(x1^2+p1^2)/3)*(x1*p2 - x2^2) + p1", 2);
    CHECK(structurally_equal(compose_linear(e, Mat::Identity(4, 4)), e));

    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    Mat m(4, 4);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) m(i, j) = g(rng);
    SymbolExpr x1 = compose_linear(parse("x1", 2), m);
    SymbolExpr c = compose_linear(e, m);
    for (int k = 0; k < 100; ++k) {
        Eigen::Vector4d z;
        for (int i = 0; i < 4; ++i) z(i) = g(rng);
        Eigen::Vector4d mz = m * z;
        std::vector<cplx> zc(z.data(), z.data() + 4), mzc(mz.data(), mz.data() + 4);
        cplx ref = evaluate(e, mzc);
        CHECK(std::abs(evaluate(c, zc) - ref) <= 1e-13 * std::max(1.0, std::abs(ref)));
        CHECK(std::abs(evaluate(x1, zc).real() - mz(0)) <= 1e-13 * std::max(1.0, std::abs(mz(0))));
    }
}

TEST_CASE("chain rule commutes with compose_linear, exactly on polynomials") {
    Mat m(4, 4);
    m << 1, 2, 0, -1, 0, 1, 3, 0, -2, 0, 1, 1, 1, 1, 0, 2;
    SymbolExpr a = parse("x1^2*p2 - 3*x2*p1^2 + 1/3*x1*x2*p1*p2 + p2^3", 2);
    for (int k = 0; k < 4; ++k) {
        PolySymbol lhs = to_poly(differentiate(compose_linear(a, m), k));
        PolySymbol rhs = PolySymbol::zero(2);
        for (int j = 0; j < 4; ++j) {
            if (m(j, k) == 0) continue;
            PolySymbol t = to_poly(compose_linear(differentiate(a, j), m));
            rhs = rhs + t.scaled(GaussQ(static_cast<long>(m(j, k))));
        }
        CHECK(lhs.exact());
        CHECK(lhs == rhs);
    }
}

TEST_CASE("to_poly") {
    PolySymbol p = to_poly(parse("(x1+p1)^2", 1));
    PolySymbol expect = PolySymbol::variable(1, 0) * PolySymbol::variable(1, 0) +
                        (PolySymbol::variable(1, 0) * PolySymbol::variable(1, 1)).scaled(GaussQ(2)) +
                        PolySymbol::variable(1, 1) * PolySymbol::variable(1, 1);
    CHECK(p == expect);
    CHECK(p.size() == 3);
    try {
        to_poly(parse("x1 + exp(x1)", 1));
        FAIL("expected conversion error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Conversion);
        CHECK(std::string(e.what()).find("exp(x1)") != std::string::npos);
    }
    CHECK_FALSE(to_poly(parse("0.5*x1", 1)).exact());
    CHECK(to_poly(parse("1/2*x1", 1)).exact());
}

TEST_CASE("to_poly preserves evaluation exactly over Gaussian rationals") {
    SymbolExpr e = parse("(x1 - 2/3*p2)^3*(p1 + 1)/5 - x2^2*p1 + 7", 2);
    PolySymbol p = to_poly(e);
    std::mt19937_64 rng(9);
    std::uniform_int_distribution<int> num(-9, 9), den(1, 7);
    for (int k = 0; k < 50; ++k) {
        std::vector<GaussQ> z;
        for (int i = 0; i < 4; ++i) z.emplace_back(mpq_class(num(rng), den(rng)), mpq_class(num(rng), den(rng)));
        CHECK(evaluate_exact(e, z) == p.evaluate_exact(z));
    }
}

TEST_CASE("pretty-print round trip on a 50-expression corpus") {
    std::vector<std::string> corpus = {
        "x1", "p2", "3", "2/3", "0.25", "x1^2 + p1^2", "exp(-(x1^2+p1^2))", "-x1^2", "(-x1)^2",
        "x1 - (p1 - x2)", "x1 - p1 - x2", "x1*(p1*x2)", "x1*p1*x2", "x1/2/3", "x1*2/3", "2/3*x1",
        "-(-x1)", "x1 - -p1", "x1*-p1", "exp(x1)^3", "(x1 + p2)^0", "1e-3*x2", "x1/(3/2)", "x1/-2",
    };
    std::mt19937_64 rng(17);
    while (corpus.size() < 50) corpus.push_back(random_text(rng, 3));
    for (const auto& text : corpus) {
        SymbolExpr e1 = parse(text, 2);
        std::string printed = to_string(e1);
        SymbolExpr e2 = parse(printed, 2);
        INFO(text, " -> ", printed);
        CHECK(structurally_equal(e1, e2));
        CHECK(to_string(e2) == printed);
    }
}

TEST_CASE("is_unit") {
    CHECK(is_unit(parse("1", 2)));
    CHECK(is_unit(parse("2/2", 2)));
    CHECK(is_unit(parse("x1 - x1 + 1", 2)));
    CHECK_FALSE(is_unit(parse("exp(0)", 2)));
    CHECK_FALSE(is_unit(parse("x1", 2)));
}
