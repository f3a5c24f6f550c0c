#include "engel/expr.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <utility>
#include <vector>

namespace engel {

int var_index(const std::string& name) {
    for (int i = 0; i < kNumVars; ++i)
        if (name == kVarNames[i]) return i;
    return -1;
}

namespace {

ExprPtr make_node(ExprNode n) { return std::make_shared<const ExprNode>(std::move(n)); }

ExprPtr make_number(double v) {
    ExprNode n;
    n.op = ExprOp::number;
    n.value = v;
    return make_node(std::move(n));
}

ExprPtr make_unary(ExprOp op, ExprPtr a) {
    ExprNode n;
    n.op = op;
    n.a = std::move(a);
    return make_node(std::move(n));
}

ExprPtr make_binary(ExprOp op, ExprPtr a, ExprPtr b) {
    ExprNode n;
    n.op = op;
    n.a = std::move(a);
    n.b = std::move(b);
    return make_node(std::move(n));
}

enum class Tok { number, ident, plus, minus, star, slash, caret, lparen, rparen, end };

struct Token {
    Tok kind;
    std::string text;
    double value = 0.0;
    int line = 1;
    int column = 1;
};

const char* tok_name(Tok t) {
    switch (t) {
        case Tok::number: return "NUMBER";
        case Tok::ident: return "IDENT";
        case Tok::plus: return "'+'";
        case Tok::minus: return "'-'";
        case Tok::star: return "'*'";
        case Tok::slash: return "'/'";
        case Tok::caret: return "'^'";
        case Tok::lparen: return "'('";
        case Tok::rparen: return "')'";
        case Tok::end: return "end of input";
    }
    return "?";
}

class Lexer {
public:
    explicit Lexer(const std::string& text) : text_(text) {}

    Token next() {
        skip_space_();
        Token t;
        t.line = line_;
        t.column = col_;
        if (pos_ >= text_.size()) {
            t.kind = Tok::end;
            return t;
        }
        char c = text_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            size_t start = pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) advance_();
            if (pos_ < text_.size() && text_[pos_] == '.') {
                advance_();
                while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) advance_();
            }
            if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
                size_t mark = pos_;
                advance_();
                if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) advance_();
                if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) advance_();
                } else {
                    // "1e" without digits is the number 1 followed by ident 'e'.
                    pos_ = mark;
                    col_ = t.column + static_cast<int>(mark - start);
                }
            }
            t.kind = Tok::number;
            t.text = text_.substr(start, pos_ - start);
            if (t.text == ".")
                throw SyntaxError("stray '.' at line " + std::to_string(t.line) + ", column " +
                                      std::to_string(t.column),
                                  t.line, t.column, "NUMBER");
            t.value = std::strtod(t.text.c_str(), nullptr);
            return t;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
                advance_();
            t.kind = Tok::ident;
            t.text = text_.substr(start, pos_ - start);
            return t;
        }
        advance_();
        switch (c) {
            case '+': t.kind = Tok::plus; return t;
            case '-': t.kind = Tok::minus; return t;
            case '*': t.kind = Tok::star; return t;
            case '/': t.kind = Tok::slash; return t;
            case '^': t.kind = Tok::caret; return t;
            case '(': t.kind = Tok::lparen; return t;
            case ')': t.kind = Tok::rparen; return t;
            default:
                throw SyntaxError(std::string("unexpected character '") + c + "' at line " +
                                      std::to_string(t.line) + ", column " + std::to_string(t.column),
                                  t.line, t.column, "NUMBER, IDENT, '(', or operator");
        }
    }

private:
    void advance_() {
        if (text_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }
    void skip_space_() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) advance_();
    }

    const std::string& text_;
    size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

class Parser {
public:
    explicit Parser(const std::string& text) : lex_(text) { cur_ = lex_.next(); }

    ExprPtr parse() {
        ExprPtr e = expr_();
        expect_(Tok::end, "'+', '-', '*', '/', '^', or end of input");
        return e;
    }

private:
    [[noreturn]] void fail_(const std::string& expected) {
        throw SyntaxError("expected " + expected + " but found " + tok_name(cur_.kind) + " at line " +
                              std::to_string(cur_.line) + ", column " + std::to_string(cur_.column),
                          cur_.line, cur_.column, expected);
    }

    void expect_(Tok kind, const std::string& expected) {
        if (cur_.kind != kind) fail_(expected);
    }

    void consume_() { cur_ = lex_.next(); }

    ExprPtr expr_() {
        ExprPtr e = term_();
        while (cur_.kind == Tok::plus || cur_.kind == Tok::minus) {
            ExprOp op = cur_.kind == Tok::plus ? ExprOp::add : ExprOp::sub;
            consume_();
            e = make_binary(op, std::move(e), term_());
        }
        return e;
    }

    ExprPtr term_() {
        ExprPtr e = factor_();
        while (cur_.kind == Tok::star || cur_.kind == Tok::slash) {
            ExprOp op = cur_.kind == Tok::star ? ExprOp::mul : ExprOp::div;
            consume_();
            e = make_binary(op, std::move(e), factor_());
        }
        return e;
    }

    ExprPtr factor_() {
        ExprPtr e;
        if (cur_.kind == Tok::minus) {
            consume_();
            // '-' binds the whole following factor, including its '^' suffix.
            return make_unary(ExprOp::neg, factor_());
        }
        if (cur_.kind == Tok::number) {
            e = make_number(cur_.value);
            consume_();
        } else if (cur_.kind == Tok::ident) {
            std::string name = cur_.text;
            int iline = cur_.line, icol = cur_.column;
            consume_();
            bool is_fun = (name == "sin" || name == "cos" || name == "exp");
            if (is_fun) {
                if (cur_.kind != Tok::lparen)
                    throw SyntaxError("expected '(' after function '" + name + "' at line " +
                                          std::to_string(cur_.line) + ", column " +
                                          std::to_string(cur_.column),
                                      cur_.line, cur_.column, "'('");
                consume_();
                ExprPtr arg = expr_();
                expect_(Tok::rparen, "')'");
                consume_();
                ExprOp op = name == "sin" ? ExprOp::sin : name == "cos" ? ExprOp::cos : ExprOp::exp;
                e = make_unary(op, std::move(arg));
            } else {
                int idx = var_index(name);
                if (idx < 0)
                    throw UnknownIdentifier("unknown identifier '" + name + "' at line " +
                                            std::to_string(iline) + ", column " + std::to_string(icol));
                if (cur_.kind == Tok::lparen)
                    throw SyntaxError("'" + name + "' is a variable, not a function, at line " +
                                          std::to_string(cur_.line) + ", column " +
                                          std::to_string(cur_.column),
                                      cur_.line, cur_.column, "operator or end of input");
                ExprNode n;
                n.op = ExprOp::var;
                n.var = idx;
                e = make_node(std::move(n));
            }
        } else if (cur_.kind == Tok::lparen) {
            consume_();
            e = expr_();
            expect_(Tok::rparen, "')'");
            consume_();
        } else {
            fail_("NUMBER, IDENT, '(', or '-'");
        }
        while (cur_.kind == Tok::caret) {
            consume_();
            bool negexp = false;
            if (cur_.kind == Tok::minus) {
                negexp = true;
                consume_();
            }
            expect_(Tok::number, "INTEGER");
            if (cur_.text.find_first_of(".eE") != std::string::npos)
                throw SyntaxError("exponent must be an integer at line " + std::to_string(cur_.line) +
                                      ", column " + std::to_string(cur_.column),
                                  cur_.line, cur_.column, "INTEGER");
            long long k = std::atoll(cur_.text.c_str());
            consume_();
            ExprNode n;
            n.op = ExprOp::pow;
            n.exponent = negexp ? -k : k;
            n.a = std::move(e);
            e = make_node(std::move(n));
        }
        return e;
    }

    Lexer lex_;
    Token cur_;
};

int precedence(ExprOp op) {
    switch (op) {
        case ExprOp::add:
        case ExprOp::sub: return 1;
        case ExprOp::mul:
        case ExprOp::div: return 2;
        case ExprOp::neg: return 3;
        case ExprOp::pow: return 4;
        default: return 5; // atoms and calls
    }
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    // Trim to the shortest representation that round-trips.
    for (int prec = 1; prec <= 16; ++prec) {
        char probe[32];
        std::snprintf(probe, sizeof probe, "%.*g", prec, v);
        if (std::strtod(probe, nullptr) == v) return probe;
    }
    return buf;
}

void print_node(const ExprNode* n, std::string& out);

void print_child(const ExprNode* c, std::string& out, int min_prec) {
    if (precedence(c->op) < min_prec) {
        out += '(';
        print_node(c, out);
        out += ')';
    } else {
        print_node(c, out);
    }
}

void print_node(const ExprNode* n, std::string& out) {
    switch (n->op) {
        case ExprOp::number: out += format_double(n->value); return;
        case ExprOp::var: out += kVarNames[n->var]; return;
        case ExprOp::neg:
            out += '-';
            print_child(n->a.get(), out, 3);
            return;
        case ExprOp::sin:
        case ExprOp::cos:
        case ExprOp::exp:
            out += n->op == ExprOp::sin ? "sin(" : n->op == ExprOp::cos ? "cos(" : "exp(";
            print_node(n->a.get(), out);
            out += ')';
            return;
        case ExprOp::add:
        case ExprOp::sub:
            print_child(n->a.get(), out, 1);
            out += n->op == ExprOp::add ? " + " : " - ";
            print_child(n->b.get(), out, 2);
            return;
        case ExprOp::mul:
        case ExprOp::div:
            print_child(n->a.get(), out, 2);
            out += n->op == ExprOp::mul ? "*" : "/";
            print_child(n->b.get(), out, 3);
            return;
        case ExprOp::pow:
            // '^' attaches to a full factor; negated bases need parentheses.
            print_child(n->a.get(), out, n->a->op == ExprOp::pow ? 4 : 5);
            out += '^';
            out += std::to_string(n->exponent);
            return;
    }
}

bool nodes_equal(const ExprNode* a, const ExprNode* b) {
    if (a == b) return true;
    if (!a || !b) return false;
    if (a->op != b->op || a->value != b->value || a->var != b->var || a->exponent != b->exponent)
        return false;
    return nodes_equal(a->a.get(), b->a.get()) && nodes_equal(a->b.get(), b->b.get());
}

void mark_vars(const ExprNode* n, std::array<bool, kNumVars>& used) {
    if (!n) return;
    if (n->op == ExprOp::var) used[n->var] = true;
    mark_vars(n->a.get(), used);
    mark_vars(n->b.get(), used);
}

} // namespace

Expr Expr::parse(const std::string& text) {
    Parser p(text);
    return Expr(p.parse());
}

Expr Expr::number(double v) {
    if (v < 0.0) return Expr(make_unary(ExprOp::neg, make_number(-v)));
    return Expr(make_number(v));
}

Expr Expr::var(const std::string& name) {
    int idx = var_index(name);
    if (idx < 0) throw UnknownIdentifier("unknown variable '" + name + "'");
    return var(idx);
}

Expr Expr::var(int index) {
    ExprNode n;
    n.op = ExprOp::var;
    n.var = index;
    return Expr(make_node(std::move(n)));
}

Expr Expr::binary(ExprOp op, const Expr& rhs) const {
    return Expr(make_binary(op, root_, rhs.root_));
}

Expr Expr::operator-() const { return Expr(make_unary(ExprOp::neg, root_)); }

Expr Expr::sin(const Expr& e) { return Expr(make_unary(ExprOp::sin, e.root_)); }
Expr Expr::cos(const Expr& e) { return Expr(make_unary(ExprOp::cos, e.root_)); }
Expr Expr::exp(const Expr& e) { return Expr(make_unary(ExprOp::exp, e.root_)); }

Expr Expr::pow(const Expr& e, long long k) {
    ExprNode n;
    n.op = ExprOp::pow;
    n.exponent = k;
    n.a = e.root_;
    return Expr(make_node(std::move(n)));
}

std::string Expr::str() const {
    std::string out;
    print_node(root_.get(), out);
    return out;
}

bool Expr::same_structure(const Expr& other) const {
    return nodes_equal(root_.get(), other.root_.get());
}

std::array<bool, kNumVars> Expr::used_vars() const {
    std::array<bool, kNumVars> used{};
    mark_vars(root_.get(), used);
    return used;
}

} // namespace engel
