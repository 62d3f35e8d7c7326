#pragma once

#include <complex>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <gmpxx.h>

#include "ncstar/poly.hpp"
#include "ncstar/rational.hpp"

namespace ncstar {

/*
 * Grammar:
 *   expr   := term (('+'|'-') term)*
 *   term   := factor (('*'|'/') factor)*
 *   factor := '-' factor | base ('^' uint)?
 *   base   := number | ident | '(' expr ')' | 'exp' '(' expr ')'
 *   ident  := ('x'|'p') uint
 * Numbers: integers and a/b are exact rationals; anything with '.' or an
 * exponent is a float literal. '/' only accepts a nonzero literal on the right.
 */

enum class NodeKind { Num, Var, Add, Sub, Mul, Div, Pow, Neg, Exp };

struct Literal {
    bool exact = true;
    mpq_class q{0};
    double f = 0.0;
    double value() const { return exact ? to_double(q) : f; }
};

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
    NodeKind kind = NodeKind::Num;
    Literal lit;       // Num, and the divisor of Div
    int var = 0;       // Var: 0..2n-1 over (x1..xn, p1..pn)
    unsigned power = 0; // Pow
    NodePtr lhs, rhs;
};

class SymbolExpr {
public:
    SymbolExpr() = default;
    SymbolExpr(int n, NodePtr root) : n_(n), root_(std::move(root)) {}

    int n() const { return n_; }
    const NodePtr& root() const { return root_; }

    static SymbolExpr constant(int n, const mpq_class& q);
    static SymbolExpr variable(int n, int var);

private:
    int n_ = 1;
    NodePtr root_;
};

SymbolExpr parse(const std::string& text, int n);

std::string to_string(const SymbolExpr& e);
bool structurally_equal(const SymbolExpr& a, const SymbolExpr& b);

std::complex<double> evaluate(const SymbolExpr& e, const std::vector<std::complex<double>>& z);
std::complex<double> evaluate(const SymbolExpr& e, const double* z);
/// Exact evaluation; throws ErrorKind::Conversion on exp or float literals.
GaussQ evaluate_exact(const SymbolExpr& e, const std::vector<GaussQ>& z);

SymbolExpr differentiate(const SymbolExpr& e, int var);

/// z -> e(m z)
SymbolExpr compose_linear(const SymbolExpr& e, const Eigen::MatrixXd& m);

/// Throws ErrorKind::Conversion naming the offending node when e contains exp.
PolySymbol to_poly(const SymbolExpr& e);

bool is_polynomial(const SymbolExpr& e);
bool is_unit(const SymbolExpr& e); // the constant 1

std::string variable_name(int var, int n);

} // namespace ncstar
