#pragma once

#include "engel/errors.hpp"
#include "engel/jet.hpp"

#include <array>
#include <memory>
#include <string>

namespace engel {

/// Variable identifiers accepted by the expression language, in canonical order.
inline constexpr std::array<const char*, 6> kVarNames = {"x", "y", "z", "t", "theta", "s"};
inline constexpr int kNumVars = 6;

/// Looks up a variable name; returns -1 if it is not one of kVarNames.
int var_index(const std::string& name);

enum class ExprOp { number, var, neg, sin, cos, exp, add, sub, mul, div, pow };

struct ExprNode;
using ExprPtr = std::shared_ptr<const ExprNode>;

struct ExprNode {
    ExprOp op;
    double value = 0.0;      // number
    int var = -1;            // var
    long long exponent = 0;  // pow
    ExprPtr a;
    ExprPtr b;
};

/// Immutable expression tree over the variables x, y, z, t, theta, s with
/// +, -, *, /, integer powers and sin/cos/exp. Trees are cheap to copy and
/// safe to share between threads.
class Expr {
public:
    Expr() = default;

    /// Parses the fixed grammar
    ///   expr   := term (('+'|'-') term)*
    ///   term   := factor (('*'|'/') factor)*
    ///   factor := NUMBER | IDENT | IDENT '(' expr ')' | '(' expr ')'
    ///           | '-' factor | factor '^' INTEGER
    /// Throws SyntaxError (with 1-based line/column and the expected token
    /// set) or UnknownIdentifier.
    static Expr parse(const std::string& text);

    static Expr number(double v);
    static Expr var(const std::string& name);
    static Expr var(int index);

    Expr operator+(const Expr& rhs) const { return binary(ExprOp::add, rhs); }
    Expr operator-(const Expr& rhs) const { return binary(ExprOp::sub, rhs); }
    Expr operator*(const Expr& rhs) const { return binary(ExprOp::mul, rhs); }
    Expr operator/(const Expr& rhs) const { return binary(ExprOp::div, rhs); }
    Expr operator-() const;

    static Expr sin(const Expr& e);
    static Expr cos(const Expr& e);
    static Expr exp(const Expr& e);
    static Expr pow(const Expr& e, long long k);

    /// Pretty-prints with minimal parentheses; parse(str()) rebuilds an
    /// identical tree.
    std::string str() const;

    bool same_structure(const Expr& other) const;

    /// True once the expression has a root (parse or builders succeeded).
    bool valid() const { return static_cast<bool>(root_); }

    const ExprPtr& root() const { return root_; }

    /// Evaluates over any scalar with jet-style arithmetic. `vars` is indexed
    /// by canonical variable id; entries for variables that do not occur are
    /// never read.
    template <class S>
    S eval(const std::array<S, kNumVars>& vars) const {
        return eval_node<S>(root_.get(), vars);
    }

    /// Marks which variables occur in the tree.
    std::array<bool, kNumVars> used_vars() const;

private:
    explicit Expr(ExprPtr root) : root_(std::move(root)) {}
    Expr binary(ExprOp op, const Expr& rhs) const;

    template <class S>
    static S eval_node(const ExprNode* n, const std::array<S, kNumVars>& vars) {
        using std::sin;
        using std::cos;
        using std::exp;
        switch (n->op) {
            case ExprOp::number: return make_const(n->value, vars[0]);
            case ExprOp::var: return vars[n->var];
            case ExprOp::neg: return -eval_node<S>(n->a.get(), vars);
            case ExprOp::sin: return sin(eval_node<S>(n->a.get(), vars));
            case ExprOp::cos: return cos(eval_node<S>(n->a.get(), vars));
            case ExprOp::exp: return exp(eval_node<S>(n->a.get(), vars));
            case ExprOp::add: return eval_node<S>(n->a.get(), vars) + eval_node<S>(n->b.get(), vars);
            case ExprOp::sub: return eval_node<S>(n->a.get(), vars) - eval_node<S>(n->b.get(), vars);
            case ExprOp::mul: return eval_node<S>(n->a.get(), vars) * eval_node<S>(n->b.get(), vars);
            case ExprOp::div: return eval_node<S>(n->a.get(), vars) / eval_node<S>(n->b.get(), vars);
            case ExprOp::pow: return pow_any(eval_node<S>(n->a.get(), vars), n->exponent);
        }
        throw NumericalError("expression: corrupt node");
    }

    // Builds a constant in the same jet shape as an existing scalar.
    static double make_const(double v, double) { return v; }
    static Jet make_const(double v, const Jet& like) { return Jet::constant(v, like.n, like.with_h); }

    static double pow_any(double base, long long k) { return std::pow(base, static_cast<double>(k)); }
    static Jet pow_any(const Jet& base, long long k) { return pow_int(base, k); }

    ExprPtr root_;
};

} // namespace engel
