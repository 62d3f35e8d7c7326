#include "ncstar/symbol.hpp"

#include <cctype>
#include <charconv>
#include <cmath>

#include "ncstar/errors.hpp"

namespace ncstar {

namespace {

using cplx = std::complex<double>;

NodePtr make(NodeKind k, NodePtr l = nullptr, NodePtr r = nullptr) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->lhs = std::move(l);
    n->rhs = std::move(r);
    return n;
}

NodePtr num_exact(const mpq_class& q) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Num;
    n->lit.exact = true;
    n->lit.q = q;
    return n;
}

NodePtr num_float(double f) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Num;
    n->lit.exact = false;
    n->lit.f = f;
    return n;
}

NodePtr var_node(int v) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Var;
    n->var = v;
    return n;
}

NodePtr pow_node(NodePtr b, unsigned k) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Pow;
    n->lhs = std::move(b);
    n->power = k;
    return n;
}

NodePtr div_node(NodePtr l, const Literal& d) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Div;
    n->lhs = std::move(l);
    n->lit = d;
    return n;
}

// ---------------------------------------------------------------- lexer

enum class Tok { Num, Ident, Exp, Plus, Minus, Star, Slash, Caret, LParen, RParen, End };

struct Token {
    Tok kind;
    int col;
    std::string text;
    Literal lit;
    int var = 0;
};

std::vector<Token> lex(const std::string& s, int n) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < s.size()) {
        char c = s[i];
        int col = static_cast<int>(i) + 1;
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            std::size_t j = i;
            while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
            bool is_float = false;
            if (j < s.size() && s[j] == '.') {
                is_float = true;
                ++j;
                while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
            }
            if (j < s.size() && (s[j] == 'e' || s[j] == 'E')) {
                std::size_t k = j + 1;
                if (k < s.size() && (s[k] == '+' || s[k] == '-')) ++k;
                if (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) {
                    is_float = true;
                    j = k;
                    while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
                }
            }
            Token t{Tok::Num, col, s.substr(i, j - i), {}, 0};
            // after '^' the digits are an exponent, so "x1^4/7" is (x1^4)/7
            bool after_caret = !out.empty() && out.back().kind == Tok::Caret;
            if (!is_float && !after_caret && j + 1 < s.size() && s[j] == '/' &&
                std::isdigit(static_cast<unsigned char>(s[j + 1]))) {
                std::size_t k = j + 1;
                while (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) ++k;
                if (k < s.size() && (s[k] == '.' || s[k] == 'e' || s[k] == 'E'))
                    throw ParseError(col, "malformed rational literal");
                mpz_class den(s.substr(j + 1, k - j - 1));
                if (den == 0) throw ParseError(static_cast<int>(j) + 2, "zero denominator");
                t.text = s.substr(i, k - i);
                j = k;
            }
            if (t.text == ".") throw ParseError(col, "malformed number");
            if (is_float) {
                t.lit.exact = false;
                double v = 0;
                auto res = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
                if (res.ec != std::errc() || res.ptr != t.text.data() + t.text.size())
                    throw ParseError(col, "malformed number '" + t.text + "'");
                t.lit.f = v;
            } else {
                t.lit.q = parse_rational(t.text);
            }
            out.push_back(t);
            i = j;
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            std::size_t j = i;
            while (j < s.size() && std::isalnum(static_cast<unsigned char>(s[j]))) ++j;
            std::string word = s.substr(i, j - i);
            if (word == "exp") {
                out.push_back({Tok::Exp, col, word, {}, 0});
            } else if ((word[0] == 'x' || word[0] == 'p') && word.size() > 1 &&
                       word.find_first_not_of("0123456789", 1) == std::string::npos) {
                long idx = std::stol(word.substr(1));
                if (idx < 1 || idx > n)
                    throw ParseError(col, "variable index out of range: " + word + " (n=" + std::to_string(n) + ")");
                int v = static_cast<int>(idx - 1) + (word[0] == 'p' ? n : 0);
                out.push_back({Tok::Ident, col, word, {}, v});
            } else {
                throw ParseError(col, "unknown identifier '" + word + "'");
            }
            i = j;
            continue;
        }
        Tok k;
        switch (c) {
        case '+': k = Tok::Plus; break;
        case '-': k = Tok::Minus; break;
        case '*': k = Tok::Star; break;
        case '/': k = Tok::Slash; break;
        case '^': k = Tok::Caret; break;
        case '(': k = Tok::LParen; break;
        case ')': k = Tok::RParen; break;
        default: throw ParseError(col, std::string("unexpected character '") + c + "'");
        }
        out.push_back({k, col, std::string(1, c), {}, 0});
        ++i;
    }
    out.push_back({Tok::End, static_cast<int>(s.size()) + 1, "", {}, 0});
    return out;
}

// ---------------------------------------------------------------- parser

class Parser {
public:
    explicit Parser(std::vector<Token> toks) : t_(std::move(toks)) {}

    NodePtr parse_all() {
        NodePtr e = expr();
        if (peek().kind != Tok::End) throw ParseError(peek().col, "unexpected '" + peek().text + "'");
        return e;
    }

private:
    std::vector<Token> t_;
    std::size_t p_ = 0;

    const Token& peek() const { return t_[p_]; }
    const Token& next() { return t_[p_++]; }
    void expect(Tok k, const char* what) {
        if (peek().kind != k) {
            std::string got = peek().kind == Tok::End ? "end of input" : "'" + peek().text + "'";
            throw ParseError(peek().col, std::string("expected ") + what + ", got " + got);
        }
        ++p_;
    }

    NodePtr expr() {
        NodePtr l = term();
        while (peek().kind == Tok::Plus || peek().kind == Tok::Minus) {
            NodeKind k = next().kind == Tok::Plus ? NodeKind::Add : NodeKind::Sub;
            l = make(k, l, term());
        }
        return l;
    }

    NodePtr term() {
        NodePtr l = factor();
        while (peek().kind == Tok::Star || peek().kind == Tok::Slash) {
            if (next().kind == Tok::Star) {
                l = make(NodeKind::Mul, l, factor());
                continue;
            }
            int col = peek().col;
            NodePtr d = factor();
            bool neg = false;
            while (d->kind == NodeKind::Neg) {
                neg = !neg;
                d = d->lhs;
            }
            if (d->kind != NodeKind::Num) throw ParseError(col, "division only by a nonzero literal");
            Literal lit = d->lit;
            if (lit.exact ? sgn(lit.q) == 0 : lit.f == 0.0) throw ParseError(col, "division by zero");
            if (neg) {
                if (lit.exact)
                    lit.q = -lit.q;
                else
                    lit.f = -lit.f;
            }
            l = div_node(l, lit);
        }
        return l;
    }

    NodePtr factor() {
        if (peek().kind == Tok::Minus) {
            next();
            return make(NodeKind::Neg, factor());
        }
        NodePtr b = base();
        if (peek().kind == Tok::Caret) {
            next();
            const Token& e = peek();
            if (e.kind != Tok::Num || !e.lit.exact || e.lit.q.get_den() != 1 || sgn(e.lit.q) < 0 ||
                e.text.find('/') != std::string::npos)
                throw ParseError(e.col, "exponent must be an unsigned integer");
            if (e.lit.q > 64) throw ParseError(e.col, "exponent too large");
            next();
            b = pow_node(b, static_cast<unsigned>(e.lit.q.get_num().get_ui()));
        }
        return b;
    }

    NodePtr base() {
        const Token& t = peek();
        switch (t.kind) {
        case Tok::Num: {
            next();
            auto n = std::make_shared<Node>();
            n->kind = NodeKind::Num;
            n->lit = t.lit;
            return n;
        }
        case Tok::Ident: next(); return var_node(t.var);
        case Tok::LParen: {
            next();
            NodePtr e = expr();
            expect(Tok::RParen, "')'");
            return e;
        }
        case Tok::Exp: {
            next();
            expect(Tok::LParen, "'(' after exp");
            NodePtr e = expr();
            expect(Tok::RParen, "')'");
            return make(NodeKind::Exp, e);
        }
        case Tok::End: throw ParseError(t.col, "unexpected end of input");
        default: throw ParseError(t.col, "unexpected '" + t.text + "'");
        }
    }
};

// ---------------------------------------------------------------- printer

int prec(const Node& n) {
    switch (n.kind) {
    case NodeKind::Add:
    case NodeKind::Sub: return 1;
    case NodeKind::Mul:
    case NodeKind::Div: return 2;
    case NodeKind::Neg: return 3;
    case NodeKind::Pow: return 4;
    case NodeKind::Num: return n.lit.exact ? (n.lit.q.get_den() == 1 && sgn(n.lit.q) >= 0 ? 5 : 0) : (n.lit.f >= 0 ? 5 : 0);
    default: return 5;
    }
}

std::string lit_str(const Literal& l) {
    if (l.exact) return l.q.get_den() == 1 ? l.q.get_num().get_str() : l.q.get_str();
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, l.f);
    std::string s(buf, res.ptr);
    if (s.find_first_of(".eE") == std::string::npos && s.find_first_of("ni") == std::string::npos) s += ".0";
    return s;
}

std::string print(const Node& n, int n_dim, int min_prec) {
    std::string s;
    switch (n.kind) {
    case NodeKind::Num: s = lit_str(n.lit); break;
    case NodeKind::Var: s = variable_name(n.var, n_dim); break;
    case NodeKind::Add: s = print(*n.lhs, n_dim, 1) + " + " + print(*n.rhs, n_dim, 2); break;
    case NodeKind::Sub: s = print(*n.lhs, n_dim, 1) + " - " + print(*n.rhs, n_dim, 2); break;
    case NodeKind::Mul: s = print(*n.lhs, n_dim, 2) + "*" + print(*n.rhs, n_dim, 3); break;
    case NodeKind::Div: {
        Node d;
        d.kind = NodeKind::Num;
        d.lit = n.lit;
        std::string l = print(*n.lhs, n_dim, 2), r = print(d, n_dim, 5);
        // "2/3" would lex back as a rational literal
        if (!l.empty() && std::isdigit(static_cast<unsigned char>(l.back())) && r.front() != '(') r = "(" + r + ")";
        s = l + "/" + r;
        break;
    }
    case NodeKind::Neg: s = "-" + print(*n.lhs, n_dim, 3); break;
    case NodeKind::Pow: s = print(*n.lhs, n_dim, 5) + "^" + std::to_string(n.power); break;
    case NodeKind::Exp: s = "exp(" + print(*n.lhs, n_dim, 1) + ")"; break;
    }
    return prec(n) < min_prec ? "(" + s + ")" : s;
}

bool same_lit(const Literal& a, const Literal& b) {
    if (a.exact != b.exact) return false;
    return a.exact ? a.q == b.q : a.f == b.f;
}

bool same(const NodePtr& a, const NodePtr& b) {
    if (!a || !b) return a == b;
    if (a->kind != b->kind) return false;
    switch (a->kind) {
    case NodeKind::Num: return same_lit(a->lit, b->lit);
    case NodeKind::Var: return a->var == b->var;
    case NodeKind::Pow: return a->power == b->power && same(a->lhs, b->lhs);
    case NodeKind::Div: return same_lit(a->lit, b->lit) && same(a->lhs, b->lhs);
    default: return same(a->lhs, b->lhs) && same(a->rhs, b->rhs);
    }
}

// ---------------------------------------------------------------- evaluation

template <class Get>
cplx eval(const Node& n, const Get& z) {
    switch (n.kind) {
    case NodeKind::Num: return n.lit.value();
    case NodeKind::Var: return z(n.var);
    case NodeKind::Add: return eval(*n.lhs, z) + eval(*n.rhs, z);
    case NodeKind::Sub: return eval(*n.lhs, z) - eval(*n.rhs, z);
    case NodeKind::Mul: return eval(*n.lhs, z) * eval(*n.rhs, z);
    case NodeKind::Div: return eval(*n.lhs, z) / n.lit.value();
    case NodeKind::Neg: return -eval(*n.lhs, z);
    case NodeKind::Pow: {
        cplx b = eval(*n.lhs, z), r = 1.0;
        for (unsigned k = 0; k < n.power; ++k) r *= b;
        return r;
    }
    case NodeKind::Exp: return std::exp(eval(*n.lhs, z));
    }
    return 0.0;
}

GaussQ eval_exact(const Node& n, const std::vector<GaussQ>& z, int dim) {
    switch (n.kind) {
    case NodeKind::Num:
        if (!n.lit.exact) throw Error(ErrorKind::Conversion, "float literal in exact evaluation");
        return GaussQ(n.lit.q);
    case NodeKind::Var: return z[n.var];
    case NodeKind::Add: return eval_exact(*n.lhs, z, dim) + eval_exact(*n.rhs, z, dim);
    case NodeKind::Sub: return eval_exact(*n.lhs, z, dim) - eval_exact(*n.rhs, z, dim);
    case NodeKind::Mul: return eval_exact(*n.lhs, z, dim) * eval_exact(*n.rhs, z, dim);
    case NodeKind::Div: {
        if (!n.lit.exact) throw Error(ErrorKind::Conversion, "float literal in exact evaluation");
        GaussQ v = eval_exact(*n.lhs, z, dim);
        v /= n.lit.q;
        return v;
    }
    case NodeKind::Neg: return -eval_exact(*n.lhs, z, dim);
    case NodeKind::Pow: {
        GaussQ b = eval_exact(*n.lhs, z, dim), r(1);
        for (unsigned k = 0; k < n.power; ++k) r *= b;
        return r;
    }
    case NodeKind::Exp: throw Error(ErrorKind::Conversion, "exp in exact evaluation");
    }
    return GaussQ();
}

// ---------------------------------------------------------------- calculus

bool is_zero(const NodePtr& n) {
    return n->kind == NodeKind::Num && (n->lit.exact ? sgn(n->lit.q) == 0 : n->lit.f == 0.0);
}
bool is_one(const NodePtr& n) {
    return n->kind == NodeKind::Num && (n->lit.exact ? n->lit.q == 1 : n->lit.f == 1.0);
}

NodePtr add_s(NodePtr a, NodePtr b) {
    if (is_zero(a)) return b;
    if (is_zero(b)) return a;
    return make(NodeKind::Add, a, b);
}
NodePtr sub_s(NodePtr a, NodePtr b) {
    if (is_zero(b)) return a;
    if (is_zero(a)) return make(NodeKind::Neg, b);
    return make(NodeKind::Sub, a, b);
}
NodePtr mul_s(NodePtr a, NodePtr b) {
    if (is_zero(a) || is_zero(b)) return num_exact(0);
    if (is_one(a)) return b;
    if (is_one(b)) return a;
    return make(NodeKind::Mul, a, b);
}

NodePtr diff(const NodePtr& n, int v) {
    switch (n->kind) {
    case NodeKind::Num: return num_exact(0);
    case NodeKind::Var: return num_exact(n->var == v ? 1 : 0);
    case NodeKind::Add: return add_s(diff(n->lhs, v), diff(n->rhs, v));
    case NodeKind::Sub: return sub_s(diff(n->lhs, v), diff(n->rhs, v));
    case NodeKind::Mul:
        return add_s(mul_s(diff(n->lhs, v), n->rhs), mul_s(n->lhs, diff(n->rhs, v)));
    case NodeKind::Div: {
        NodePtr d = diff(n->lhs, v);
        return is_zero(d) ? d : div_node(d, n->lit);
    }
    case NodeKind::Neg: {
        NodePtr d = diff(n->lhs, v);
        return is_zero(d) ? d : make(NodeKind::Neg, d);
    }
    case NodeKind::Pow: {
        if (n->power == 0) return num_exact(0);
        NodePtr d = diff(n->lhs, v);
        if (is_zero(d)) return d;
        if (n->power == 1) return d;
        NodePtr lower = n->power == 2 ? n->lhs : pow_node(n->lhs, n->power - 1);
        return mul_s(mul_s(num_exact(n->power), lower), d);
    }
    case NodeKind::Exp: return mul_s(n, diff(n->lhs, v));
    }
    return num_exact(0);
}

NodePtr substitute(const NodePtr& n, const std::vector<NodePtr>& repl) {
    switch (n->kind) {
    case NodeKind::Num: return n;
    case NodeKind::Var: return repl[n->var];
    case NodeKind::Pow: return pow_node(substitute(n->lhs, repl), n->power);
    case NodeKind::Div: return div_node(substitute(n->lhs, repl), n->lit);
    case NodeKind::Neg:
    case NodeKind::Exp: return make(n->kind, substitute(n->lhs, repl));
    default: return make(n->kind, substitute(n->lhs, repl), substitute(n->rhs, repl));
    }
}

NodePtr coef_node(double v) {
    double a = std::abs(v);
    if (a == std::floor(a) && a < 1e15) return num_exact(mpz_class(static_cast<long>(a)));
    return num_float(a);
}

PolySymbol poly_of(const Node& n, int dim) {
    switch (n.kind) {
    case NodeKind::Num:
        return n.lit.exact ? PolySymbol::constant(dim, GaussQ(n.lit.q)) : PolySymbol::constant(dim, cplx(n.lit.f));
    case NodeKind::Var: return PolySymbol::variable(dim, n.var);
    case NodeKind::Add: return poly_of(*n.lhs, dim) + poly_of(*n.rhs, dim);
    case NodeKind::Sub: return poly_of(*n.lhs, dim) - poly_of(*n.rhs, dim);
    case NodeKind::Mul: return poly_of(*n.lhs, dim) * poly_of(*n.rhs, dim);
    case NodeKind::Div: {
        PolySymbol p = poly_of(*n.lhs, dim);
        if (n.lit.exact) {
            mpq_class inv = 1 / n.lit.q;
            return p.scaled(GaussQ(inv));
        }
        return p.scaled(cplx(1.0 / n.lit.f));
    }
    case NodeKind::Neg: return -poly_of(*n.lhs, dim);
    case NodeKind::Pow: {
        PolySymbol b = poly_of(*n.lhs, dim);
        PolySymbol r = b.exact() ? PolySymbol::constant(dim, GaussQ(1)) : PolySymbol::constant(dim, cplx(1.0));
        for (unsigned k = 0; k < n.power; ++k) r = r * b;
        return r;
    }
    case NodeKind::Exp: {
        SymbolExpr sub(dim, std::make_shared<Node>(n));
        throw Error(ErrorKind::Conversion, "non-polynomial node '" + to_string(sub) + "'");
    }
    }
    return PolySymbol::zero(dim);
}

bool has_exp(const NodePtr& n) {
    if (!n) return false;
    if (n->kind == NodeKind::Exp) return true;
    return has_exp(n->lhs) || has_exp(n->rhs);
}

} // namespace

std::string variable_name(int var, int n) {
    return (var < n ? "x" : "p") + std::to_string((var < n ? var : var - n) + 1);
}

SymbolExpr SymbolExpr::constant(int n, const mpq_class& q) {
    if (sgn(q) < 0) return SymbolExpr(n, make(NodeKind::Neg, num_exact(-q)));
    return SymbolExpr(n, num_exact(q));
}

SymbolExpr SymbolExpr::variable(int n, int var) { return SymbolExpr(n, var_node(var)); }

SymbolExpr parse(const std::string& text, int n) {
    if (n < 1) throw Error(ErrorKind::Input, "n must be positive");
    bool blank = true;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) blank = false;
    if (blank) throw ParseError(1, "empty expression");
    Parser p(lex(text, n));
    return SymbolExpr(n, p.parse_all());
}

std::string to_string(const SymbolExpr& e) { return print(*e.root(), e.n(), 0); }

bool structurally_equal(const SymbolExpr& a, const SymbolExpr& b) {
    return a.n() == b.n() && same(a.root(), b.root());
}

std::complex<double> evaluate(const SymbolExpr& e, const std::vector<std::complex<double>>& z) {
    if (static_cast<int>(z.size()) != 2 * e.n()) throw Error(ErrorKind::Input, "dimension mismatch in evaluate");
    return eval(*e.root(), [&](int v) { return z[v]; });
}

std::complex<double> evaluate(const SymbolExpr& e, const double* z) {
    return eval(*e.root(), [&](int v) { return cplx(z[v]); });
}

GaussQ evaluate_exact(const SymbolExpr& e, const std::vector<GaussQ>& z) {
    if (static_cast<int>(z.size()) != 2 * e.n()) throw Error(ErrorKind::Input, "dimension mismatch in evaluate");
    return eval_exact(*e.root(), z, e.n());
}

SymbolExpr differentiate(const SymbolExpr& e, int var) {
    if (var < 0 || var >= 2 * e.n()) throw Error(ErrorKind::Input, "variable out of range");
    return SymbolExpr(e.n(), diff(e.root(), var));
}

SymbolExpr compose_linear(const SymbolExpr& e, const Eigen::MatrixXd& m) {
    const int d = 2 * e.n();
    if (m.rows() != d || m.cols() != d) throw Error(ErrorKind::Input, "compose_linear: matrix must be 2n x 2n");
    std::vector<NodePtr> repl(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
        NodePtr acc;
        for (int j = 0; j < d; ++j) {
            double c = m(i, j);
            if (c == 0.0) continue;
            NodePtr term = std::abs(c) == 1.0 ? var_node(j) : make(NodeKind::Mul, coef_node(c), var_node(j));
            if (!acc)
                acc = c < 0 ? make(NodeKind::Neg, term) : term;
            else
                acc = make(c < 0 ? NodeKind::Sub : NodeKind::Add, acc, term);
        }
        repl[static_cast<std::size_t>(i)] = acc ? acc : num_exact(0);
    }
    return SymbolExpr(e.n(), substitute(e.root(), repl));
}

PolySymbol to_poly(const SymbolExpr& e) { return poly_of(*e.root(), e.n()); }

bool is_polynomial(const SymbolExpr& e) { return !has_exp(e.root()); }

bool is_unit(const SymbolExpr& e) {
    if (!is_polynomial(e)) return false;
    PolySymbol p = to_poly(e);
    if (p.size() != 1 || p.degree() != 0) return false;
    cplx c = p.evaluate(std::vector<cplx>(static_cast<std::size_t>(2 * e.n()), 0.0));
    return c == cplx(1.0, 0.0);
}

} // namespace ncstar
