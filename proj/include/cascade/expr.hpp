#pragma once

// Scalar expressions over the two variables x and eta.
//
// Trees are immutable and shared; every Expression also carries a flattened
// postfix program so that evaluation is a tight loop instead of a recursive walk.

#include "cascade/error.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <memory>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

namespace cascade {

enum class Var { X, Eta };

namespace detail {

enum class Op { Const, VarX, VarEta, Add, Sub, Mul, Div, Pow, Neg, Sin, Cos, Exp, Sqrt, Log };

struct Node {
    Op op = Op::Const;
    double value = 0.0;
    std::shared_ptr<const Node> lhs;
    std::shared_ptr<const Node> rhs;
    bool has_x = false;
    bool has_eta = false;
};

using NodePtr = std::shared_ptr<const Node>;

struct Instr {
    Op op;
    double value;
};

struct Program {
    std::vector<Instr> code;
    std::size_t max_depth = 0;
};

inline bool isUnary(Op op) {
    return op == Op::Neg || op == Op::Sin || op == Op::Cos || op == Op::Exp || op == Op::Sqrt ||
           op == Op::Log;
}

inline void emit(const Node& n, Program& p, std::size_t& depth) {
    if (n.op == Op::Const || n.op == Op::VarX || n.op == Op::VarEta) {
        p.code.push_back({n.op, n.value});
        ++depth;
        p.max_depth = std::max(p.max_depth, depth);
        return;
    }
    emit(*n.lhs, p, depth);
    if (!isUnary(n.op)) {
        emit(*n.rhs, p, depth);
        --depth;
    }
    p.code.push_back({n.op, 0.0});
}

inline std::shared_ptr<const Program> compile(const Node& n) {
    auto p = std::make_shared<Program>();
    std::size_t depth = 0;
    emit(n, *p, depth);
    return p;
}

inline const char* opName(Op op) {
    switch (op) {
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Exp: return "exp";
    case Op::Sqrt: return "sqrt";
    case Op::Log: return "log";
    default: return "?";
    }
}

[[noreturn]] inline void evalFail(const char* what, double x, double eta) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s at (x=%.17g, eta=%.17g)", what, x, eta);
    throw EvalError(buf);
}

}  // namespace detail

class Expression {
public:
    /// The constant 0.
    Expression() : Expression(makeConst(0.0)) {}

    static Expression constant(double v) { return Expression(makeConst(v)); }
    static Expression variable(Var v) {
        auto n = std::make_shared<detail::Node>();
        n->op = v == Var::X ? detail::Op::VarX : detail::Op::VarEta;
        n->has_x = v == Var::X;
        n->has_eta = v == Var::Eta;
        return Expression(std::move(n));
    }

    /// Evaluate at (x, eta). Throws EvalError on any non-finite intermediate.
    [[nodiscard]] double operator()(double x, double eta = 0.0) const {
        using detail::Op;
        thread_local std::vector<double> stack;
        if (stack.size() < prog_->max_depth + 1) stack.resize(prog_->max_depth + 1);
        double* s = stack.data();
        std::size_t top = 0;
        for (const auto& ins : prog_->code) {
            switch (ins.op) {
            case Op::Const: s[top++] = ins.value; break;
            case Op::VarX: s[top++] = x; break;
            case Op::VarEta: s[top++] = eta; break;
            case Op::Add: --top; s[top - 1] += s[top]; break;
            case Op::Sub: --top; s[top - 1] -= s[top]; break;
            case Op::Mul: --top; s[top - 1] *= s[top]; break;
            case Op::Div:
                --top;
                if (s[top] == 0.0) detail::evalFail("division by zero", x, eta);
                s[top - 1] /= s[top];
                break;
            case Op::Pow:
                --top;
                s[top - 1] = std::pow(s[top - 1], s[top]);
                if (!std::isfinite(s[top - 1])) detail::evalFail("non-finite power", x, eta);
                break;
            case Op::Neg: s[top - 1] = -s[top - 1]; break;
            case Op::Sin: s[top - 1] = std::sin(s[top - 1]); break;
            case Op::Cos: s[top - 1] = std::cos(s[top - 1]); break;
            case Op::Exp:
                s[top - 1] = std::exp(s[top - 1]);
                if (!std::isfinite(s[top - 1])) detail::evalFail("exp overflow", x, eta);
                break;
            case Op::Sqrt:
                if (s[top - 1] < 0.0) detail::evalFail("sqrt of negative value", x, eta);
                s[top - 1] = std::sqrt(s[top - 1]);
                break;
            case Op::Log:
                if (s[top - 1] <= 0.0) detail::evalFail("log of non-positive value", x, eta);
                s[top - 1] = std::log(s[top - 1]);
                break;
            }
        }
        const double r = s[0];
        if (!std::isfinite(r)) detail::evalFail("non-finite result", x, eta);
        return r;
    }

    [[nodiscard]] bool isConstant() const { return node_->op == detail::Op::Const; }
    [[nodiscard]] double constantValue() const { return node_->value; }
    /// True only for the literal constant 0 (after folding); not a semantic zero test.
    [[nodiscard]] bool isZero() const { return isConstant() && node_->value == 0.0; }
    [[nodiscard]] bool dependsOn(Var v) const { return v == Var::X ? node_->has_x : node_->has_eta; }
    [[nodiscard]] std::size_t size() const { return prog_->code.size(); }

    /// Fully parenthesized infix text that parses back to an identical evaluator.
    [[nodiscard]] std::string str() const {
        std::string out;
        print(*node_, out);
        return out;
    }

    [[nodiscard]] const detail::NodePtr& node() const { return node_; }
    explicit Expression(detail::NodePtr n) : node_(std::move(n)), prog_(detail::compile(*node_)) {}

    friend Expression operator+(const Expression& a, const Expression& b) { return binary(detail::Op::Add, a, b); }
    friend Expression operator-(const Expression& a, const Expression& b) { return binary(detail::Op::Sub, a, b); }
    friend Expression operator*(const Expression& a, const Expression& b) { return binary(detail::Op::Mul, a, b); }
    friend Expression operator/(const Expression& a, const Expression& b) { return binary(detail::Op::Div, a, b); }
    friend Expression operator-(const Expression& a) { return unary(detail::Op::Neg, a); }
    friend Expression pow(const Expression& a, const Expression& b) { return binary(detail::Op::Pow, a, b); }
    friend Expression sin(const Expression& a) { return unary(detail::Op::Sin, a); }
    friend Expression cos(const Expression& a) { return unary(detail::Op::Cos, a); }
    friend Expression exp(const Expression& a) { return unary(detail::Op::Exp, a); }
    friend Expression sqrt(const Expression& a) { return unary(detail::Op::Sqrt, a); }
    friend Expression log(const Expression& a) { return unary(detail::Op::Log, a); }

    static Expression unary(detail::Op op, const Expression& a) {
        using detail::Op;
        if (a.isConstant()) {
            const double v = a.constantValue();
            double r = 0.0;
            switch (op) {
            case Op::Neg: r = -v; break;
            case Op::Sin: r = std::sin(v); break;
            case Op::Cos: r = std::cos(v); break;
            case Op::Exp: r = std::exp(v); break;
            case Op::Sqrt: r = v >= 0.0 ? std::sqrt(v) : NAN; break;
            case Op::Log: r = v > 0.0 ? std::log(v) : NAN; break;
            default: break;
            }
            // Keep the node when folding would hide an evaluation error.
            if (std::isfinite(r)) return constant(r);
        }
        if (op == Op::Neg && a.node_->op == Op::Neg) return Expression(a.node_->lhs);
        auto n = std::make_shared<detail::Node>();
        n->op = op;
        n->lhs = a.node_;
        n->has_x = a.node_->has_x;
        n->has_eta = a.node_->has_eta;
        return Expression(std::move(n));
    }

    static Expression binary(detail::Op op, const Expression& a, const Expression& b) {
        using detail::Op;
        const bool ac = a.isConstant(), bc = b.isConstant();
        const double av = a.node_->value, bv = b.node_->value;
        if (ac && bc) {
            double r = NAN;
            switch (op) {
            case Op::Add: r = av + bv; break;
            case Op::Sub: r = av - bv; break;
            case Op::Mul: r = av * bv; break;
            case Op::Div: r = bv != 0.0 ? av / bv : NAN; break;
            case Op::Pow: r = std::pow(av, bv); break;
            default: break;
            }
            if (std::isfinite(r)) return constant(r);
        }
        switch (op) {
        case Op::Add:
            if (ac && av == 0.0) return b;
            if (bc && bv == 0.0) return a;
            break;
        case Op::Sub:
            if (bc && bv == 0.0) return a;
            if (ac && av == 0.0) return -b;
            break;
        case Op::Mul:
            if ((ac && av == 0.0) || (bc && bv == 0.0)) return constant(0.0);
            if (ac && av == 1.0) return b;
            if (bc && bv == 1.0) return a;
            break;
        case Op::Div:
            if (bc && bv == 1.0) return a;
            if (ac && av == 0.0 && !(bc && bv == 0.0)) return constant(0.0);
            break;
        case Op::Pow:
            if (bc && bv == 1.0) return a;
            if (bc && bv == 0.0) return constant(1.0);
            break;
        default: break;
        }
        auto n = std::make_shared<detail::Node>();
        n->op = op;
        n->lhs = a.node_;
        n->rhs = b.node_;
        n->has_x = a.node_->has_x || b.node_->has_x;
        n->has_eta = a.node_->has_eta || b.node_->has_eta;
        return Expression(std::move(n));
    }

private:
    static detail::NodePtr makeConst(double v) {
        auto n = std::make_shared<detail::Node>();
        n->op = detail::Op::Const;
        n->value = v;
        return n;
    }

    static void print(const detail::Node& n, std::string& out) {
        using detail::Op;
        switch (n.op) {
        case Op::Const: {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", n.value);
            if (n.value < 0.0) {
                out += '(';
                out += buf;
                out += ')';
            } else {
                out += buf;
            }
            return;
        }
        case Op::VarX: out += 'x'; return;
        case Op::VarEta: out += "eta"; return;
        case Op::Neg:
            out += "(-";
            print(*n.lhs, out);
            out += ')';
            return;
        case Op::Sin:
        case Op::Cos:
        case Op::Exp:
        case Op::Sqrt:
        case Op::Log:
            out += detail::opName(n.op);
            out += '(';
            print(*n.lhs, out);
            out += ')';
            return;
        default: break;
        }
        const char* sym = n.op == Op::Add ? " + " : n.op == Op::Sub ? " - " : n.op == Op::Mul ? " * "
                        : n.op == Op::Div ? " / " : " ^ ";
        out += '(';
        print(*n.lhs, out);
        out += sym;
        print(*n.rhs, out);
        out += ')';
    }

    detail::NodePtr node_;
    std::shared_ptr<const detail::Program> prog_;
};

inline Expression operator+(const Expression& a, double b) { return a + Expression::constant(b); }
inline Expression operator+(double a, const Expression& b) { return Expression::constant(a) + b; }
inline Expression operator-(const Expression& a, double b) { return a - Expression::constant(b); }
inline Expression operator-(double a, const Expression& b) { return Expression::constant(a) - b; }
inline Expression operator*(const Expression& a, double b) { return a * Expression::constant(b); }
inline Expression operator*(double a, const Expression& b) { return Expression::constant(a) * b; }
inline Expression operator/(const Expression& a, double b) { return a / Expression::constant(b); }
inline Expression operator/(double a, const Expression& b) { return Expression::constant(a) / b; }

/// Exact symbolic derivative. Only constant folding is applied to the result.
inline Expression differentiate(const Expression& e, Var v) {
    using detail::Op;
    const auto& n = *e.node();
    if (!e.dependsOn(v)) return Expression::constant(0.0);
    switch (n.op) {
    case Op::Const: return Expression::constant(0.0);
    case Op::VarX: return Expression::constant(v == Var::X ? 1.0 : 0.0);
    case Op::VarEta: return Expression::constant(v == Var::Eta ? 1.0 : 0.0);
    default: break;
    }
    const Expression a(n.lhs);
    const Expression da = differentiate(a, v);
    switch (n.op) {
    case Op::Neg: return -da;
    case Op::Sin: return cos(a) * da;
    case Op::Cos: return -(sin(a) * da);
    case Op::Exp: return e * da;
    case Op::Sqrt: return da / (2.0 * e);
    case Op::Log: return da / a;
    default: break;
    }
    const Expression b(n.rhs);
    const Expression db = differentiate(b, v);
    switch (n.op) {
    case Op::Add: return da + db;
    case Op::Sub: return da - db;
    case Op::Mul: return da * b + a * db;
    case Op::Div: return (da * b - a * db) / (b * b);
    case Op::Pow:
        if (!b.dependsOn(Var::X) && !b.dependsOn(Var::Eta)) {
            return b * pow(a, b - 1.0) * da;
        }
        return e * (db * log(a) + b * da / a);
    default: break;
    }
    return Expression::constant(0.0);
}

/// Replace a variable by another expression (constant folding reapplies on the way up).
inline Expression substitute(const Expression& e, Var v, const Expression& by) {
    using detail::Op;
    if (!e.dependsOn(v)) return e;
    const auto& n = *e.node();
    switch (n.op) {
    case Op::VarX:
    case Op::VarEta: return by;
    case Op::Neg: return -substitute(Expression(n.lhs), v, by);
    case Op::Sin: return sin(substitute(Expression(n.lhs), v, by));
    case Op::Cos: return cos(substitute(Expression(n.lhs), v, by));
    case Op::Exp: return exp(substitute(Expression(n.lhs), v, by));
    case Op::Sqrt: return sqrt(substitute(Expression(n.lhs), v, by));
    case Op::Log: return log(substitute(Expression(n.lhs), v, by));
    default: break;
    }
    const Expression a = substitute(Expression(n.lhs), v, by);
    const Expression b = substitute(Expression(n.rhs), v, by);
    switch (n.op) {
    case Op::Add: return a + b;
    case Op::Sub: return a - b;
    case Op::Mul: return a * b;
    case Op::Div: return a / b;
    case Op::Pow: return pow(a, b);
    default: break;
    }
    return e;
}

namespace detail {

// Recursive-descent parser:
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('+' | '-') unary | power
//   power   := primary ('^' unary)?
//   primary := number | 'x' | 'eta' | 'pi' | func '(' expr ')' | '(' expr ')'
class Parser {
public:
    explicit Parser(std::string_view s) : s_(s) {}

    Expression run() {
        skip();
        if (pos_ >= s_.size()) throw ParseError(pos_, "empty expression");
        Expression e = expr();
        skip();
        if (pos_ < s_.size()) throw ParseError(pos_, std::string("unexpected '") + s_[pos_] + "'");
        return e;
    }

private:
    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool accept(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    Expression expr() {
        Expression e = term();
        for (;;) {
            if (accept('+')) e = e + term();
            else if (accept('-')) e = e - term();
            else return e;
        }
    }
    Expression term() {
        Expression e = unary();
        for (;;) {
            if (accept('*')) e = e * unary();
            else if (accept('/')) e = e / unary();
            else return e;
        }
    }
    Expression unary() {
        if (accept('-')) return -unary();
        if (accept('+')) return unary();
        return power();
    }
    Expression power() {
        Expression base = primary();
        if (accept('^')) return pow(base, unary());
        return base;
    }
    Expression primary() {
        skip();
        if (pos_ >= s_.size()) throw ParseError(pos_, "unexpected end of input");
        const char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            Expression e = expr();
            if (!accept(')')) throw ParseError(pos_, "expected ')'");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
        throw ParseError(pos_, std::string("unexpected '") + c + "'");
    }
    Expression number() {
        const std::size_t start = pos_;
        while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.')) ++pos_;
        if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
            std::size_t p = pos_ + 1;
            if (p < s_.size() && (s_[p] == '+' || s_[p] == '-')) ++p;
            if (p < s_.size() && std::isdigit(static_cast<unsigned char>(s_[p]))) {
                pos_ = p;
                while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
            }
        }
        const std::string text(s_.substr(start, pos_ - start));
        char* end = nullptr;
        const double v = std::strtod(text.c_str(), &end);
        if (end != text.c_str() + text.size()) throw ParseError(start, "malformed number '" + text + "'");
        return Expression::constant(v);
    }
    Expression identifier() {
        const std::size_t start = pos_;
        while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
        const std::string_view id = s_.substr(start, pos_ - start);
        if (id == "x") return Expression::variable(Var::X);
        if (id == "eta") return Expression::variable(Var::Eta);
        if (id == "pi") return Expression::constant(std::numbers::pi);
        Op op;
        if (id == "sin") op = Op::Sin;
        else if (id == "cos") op = Op::Cos;
        else if (id == "exp") op = Op::Exp;
        else if (id == "sqrt") op = Op::Sqrt;
        else if (id == "log") op = Op::Log;
        else throw ParseError(start, "unknown identifier '" + std::string(id) + "'");
        if (!accept('(')) throw ParseError(pos_, "expected '(' after " + std::string(id));
        Expression arg = expr();
        if (!accept(')')) throw ParseError(pos_, "expected ')'");
        return Expression::unary(op, arg);
    }

    std::string_view s_;
    std::size_t pos_ = 0;
};

}  // namespace detail

inline Expression parse(std::string_view text) { return detail::Parser(text).run(); }

}  // namespace cascade
