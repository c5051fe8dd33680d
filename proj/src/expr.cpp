#include "geokm/expr.hpp"

#include "geokm/errors.hpp"

#include <cctype>
#include <cmath>

namespace geokm {

enum class Op { constant, var_r, var_eps, add, sub, mul, div, neg, pow };

struct Expr::Node {
    Op op = Op::constant;
    BigRat value;
    long exponent = 0;
    std::shared_ptr<const Node> a;
    std::shared_ptr<const Node> b;
};

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;

struct Parser {
    const std::string& s;
    size_t pos = 0;

    [[noreturn]] void fail(const std::string& what) const {
        throw config_error("expression parse error at position " + std::to_string(pos) + ": " + what);
    }

    void skip_ws() {
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }

    bool eat(char c) {
        skip_ws();
        if (pos < s.size() && s[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }

    char peek() {
        skip_ws();
        return pos < s.size() ? s[pos] : '\0';
    }

    NodePtr make(Op op, NodePtr a = nullptr, NodePtr b = nullptr) {
        auto n = std::make_shared<Expr::Node>();
        n->op = op;
        n->a = std::move(a);
        n->b = std::move(b);
        return n;
    }

    NodePtr parse_expr() {
        NodePtr left = parse_term();
        for (;;) {
            if (eat('+')) {
                left = make(Op::add, left, parse_term());
            } else if (eat('-')) {
                left = make(Op::sub, left, parse_term());
            } else {
                return left;
            }
        }
    }

    NodePtr parse_term() {
        NodePtr left = parse_factor();
        for (;;) {
            if (eat('*')) {
                left = make(Op::mul, left, parse_factor());
            } else if (eat('/')) {
                left = make(Op::div, left, parse_factor());
            } else {
                return left;
            }
        }
    }

    NodePtr parse_factor() {
        NodePtr base = parse_unary();
        if (eat('^')) {
            skip_ws();
            bool neg = eat('-');
            skip_ws();
            if (pos >= s.size() || !std::isdigit(static_cast<unsigned char>(s[pos])))
                fail("expected integer exponent after '^'");
            long e = 0;
            while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
                e = e * 10 + (s[pos] - '0');
                if (e > 1000) fail("exponent too large");
                ++pos;
            }
            auto n = std::make_shared<Expr::Node>();
            n->op = Op::pow;
            n->a = base;
            n->exponent = neg ? -e : e;
            return n;
        }
        return base;
    }

    NodePtr parse_unary() {
        if (eat('-')) return make(Op::neg, parse_unary());
        return parse_primary();
    }

    NodePtr parse_primary() {
        skip_ws();
        if (pos >= s.size()) fail("unexpected end of expression");
        const char c = s[pos];
        if (c == '(') {
            ++pos;
            NodePtr inner = parse_expr();
            if (!eat(')')) fail("expected ')'");
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const size_t start = pos;
            while (pos < s.size() &&
                   (std::isdigit(static_cast<unsigned char>(s[pos])) || s[pos] == '.'))
                ++pos;
            auto n = std::make_shared<Expr::Node>();
            n->op = Op::constant;
            n->value = rat_from_string(s.substr(start, pos - start));
            return n;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            const size_t start = pos;
            while (pos < s.size() && std::isalpha(static_cast<unsigned char>(s[pos]))) ++pos;
            const std::string name = s.substr(start, pos - start);
            if (name == "r") return make(Op::var_r);
            if (name == "eps") return make(Op::var_eps);
            pos = start;
            fail("unknown identifier '" + name + "' (expected r or eps)");
        }
        fail(std::string("unexpected character '") + c + "'");
    }
};

double eval_node(const Expr::Node& n, double r, double eps) {
    switch (n.op) {
    case Op::constant: return rat_to_double(n.value);
    case Op::var_r: return r;
    case Op::var_eps: return eps;
    case Op::add: return eval_node(*n.a, r, eps) + eval_node(*n.b, r, eps);
    case Op::sub: return eval_node(*n.a, r, eps) - eval_node(*n.b, r, eps);
    case Op::mul: return eval_node(*n.a, r, eps) * eval_node(*n.b, r, eps);
    case Op::div: {
        const double d = eval_node(*n.b, r, eps);
        if (d == 0.0) throw std::domain_error("division by zero in modulus expression");
        return eval_node(*n.a, r, eps) / d;
    }
    case Op::neg: return -eval_node(*n.a, r, eps);
    case Op::pow: return std::pow(eval_node(*n.a, r, eps), static_cast<double>(n.exponent));
    }
    throw std::logic_error("unreachable");
}

RatInterval eval_node_iv(const Expr::Node& n, const RatInterval& r, const RatInterval& eps) {
    switch (n.op) {
    case Op::constant: return RatInterval::exact(n.value);
    case Op::var_r: return r;
    case Op::var_eps: return eps;
    case Op::add: return eval_node_iv(*n.a, r, eps) + eval_node_iv(*n.b, r, eps);
    case Op::sub: return eval_node_iv(*n.a, r, eps) - eval_node_iv(*n.b, r, eps);
    case Op::mul: return eval_node_iv(*n.a, r, eps) * eval_node_iv(*n.b, r, eps);
    case Op::div: return eval_node_iv(*n.a, r, eps) / eval_node_iv(*n.b, r, eps);
    case Op::neg: return -eval_node_iv(*n.a, r, eps);
    case Op::pow: return eval_node_iv(*n.a, r, eps).pow_int(n.exponent);
    }
    throw std::logic_error("unreachable");
}

} // namespace

Expr::Expr(std::shared_ptr<const Node> root, std::string text)
    : root_(std::move(root)), text_(std::move(text)) {}

Expr Expr::parse(const std::string& text) {
    Parser p{text};
    NodePtr root = p.parse_expr();
    p.skip_ws();
    if (p.pos != text.size()) p.fail("trailing input");
    return Expr(root, text);
}

double Expr::eval(double r, double eps) const { return eval_node(*root_, r, eps); }

RatInterval Expr::eval_interval(const RatInterval& r, const RatInterval& eps) const {
    return eval_node_iv(*root_, r, eps);
}

} // namespace geokm
