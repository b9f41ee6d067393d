#include "hpde/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>

#include "hpde/errors.hpp"

namespace hpde::expr {

namespace {
enum class Op { constant, coord, add, sub, mul, neg, sin, cos, exp };
}

struct Expression::Node {
    Op op;
    double value = 0.0;  // constant
    int coord = 0;       // coordinate slot
    std::unique_ptr<Node> a, b;

    std::unique_ptr<Node> clone() const {
        auto n = std::make_unique<Node>();
        n->op = op;
        n->value = value;
        n->coord = coord;
        if (a) n->a = a->clone();
        if (b) n->b = b->clone();
        return n;
    }

    double eval(const double* c) const {
        switch (op) {
            case Op::constant: return value;
            case Op::coord: return c[coord];
            case Op::add: return a->eval(c) + b->eval(c);
            case Op::sub: return a->eval(c) - b->eval(c);
            case Op::mul: return a->eval(c) * b->eval(c);
            case Op::neg: return -a->eval(c);
            case Op::sin: return std::sin(a->eval(c));
            case Op::cos: return std::cos(a->eval(c));
            case Op::exp: return std::exp(a->eval(c));
        }
        return 0.0;
    }
};

namespace {

class Parser {
  public:
    Parser(const std::string& s, int p) : s_(s), p_(p) {}

    std::unique_ptr<Expression::Node> run() {
        auto n = parse_expr();
        skip_ws();
        if (pos_ != s_.size()) fail("trailing input");
        return n;
    }

  private:
    using NodePtr = std::unique_ptr<Expression::Node>;

    [[noreturn]] void fail(const std::string& what) {
        throw DomainError("expression: " + what + " at offset " + std::to_string(pos_) +
                          " in '" + s_ + "'");
    }

    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool consume(char c) {
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    NodePtr make(Op op, NodePtr a = nullptr, NodePtr b = nullptr) {
        auto n = std::make_unique<Expression::Node>();
        n->op = op;
        n->a = std::move(a);
        n->b = std::move(b);
        return n;
    }

    NodePtr parse_expr() {
        NodePtr n = parse_term();
        while (true) {
            if (consume('+'))
                n = make(Op::add, std::move(n), parse_term());
            else if (consume('-'))
                n = make(Op::sub, std::move(n), parse_term());
            else
                return n;
        }
    }

    NodePtr parse_term() {
        NodePtr n = parse_factor();
        while (consume('*')) n = make(Op::mul, std::move(n), parse_factor());
        return n;
    }

    NodePtr parse_factor() {
        skip_ws();
        if (pos_ >= s_.size()) fail("unexpected end");
        const char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            NodePtr n = parse_expr();
            if (!consume(')')) fail("missing ')'");
            return n;
        }
        if (c == '-') {
            ++pos_;
            return make(Op::neg, parse_factor());
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            char* end = nullptr;
            const double v = std::strtod(s_.c_str() + pos_, &end);
            if (end == s_.c_str() + pos_) fail("bad number");
            pos_ = end - s_.c_str();
            auto n = make(Op::constant);
            n->value = v;
            return n;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            size_t e = pos_;
            while (e < s_.size() &&
                   (std::isalnum(static_cast<unsigned char>(s_[e])) || s_[e] == '_'))
                ++e;
            const std::string word = s_.substr(pos_, e - pos_);
            pos_ = e;
            if (word == "pi") {
                auto n = make(Op::constant);
                n->value = 3.14159265358979323846264338327950288;
                return n;
            }
            if (word == "sin" || word == "cos" || word == "exp") {
                if (!consume('(')) fail("expected '(' after " + word);
                NodePtr arg = parse_expr();
                if (!consume(')')) fail("missing ')'");
                return make(word == "sin"   ? Op::sin
                            : word == "cos" ? Op::cos
                                            : Op::exp,
                            std::move(arg));
            }
            const int slot = coord_slot(word);
            if (slot < 0) fail("unknown name '" + word + "'");
            auto n = make(Op::coord);
            n->coord = slot;
            return n;
        }
        fail(std::string("unexpected character '") + c + "'");
    }

    // Coordinate order: x1, y1, ..., xp, yp, theta, s.
    int coord_slot(const std::string& w) const {
        if (w == "theta") return 2 * p_;
        if (w == "s") return 2 * p_ + 1;
        if (w.size() >= 2 && (w[0] == 'x' || w[0] == 'y')) {
            int j = 0;
            for (size_t i = 1; i < w.size(); ++i) {
                if (!std::isdigit(static_cast<unsigned char>(w[i]))) return -1;
                j = j * 10 + (w[i] - '0');
            }
            if (j < 1 || j > p_) return -1;
            return 2 * (j - 1) + (w[0] == 'y' ? 1 : 0);
        }
        return -1;
    }

    const std::string& s_;
    int p_;
    size_t pos_ = 0;
};

}  // namespace

Expression::Expression() = default;
Expression::~Expression() = default;
Expression::Expression(Expression&&) noexcept = default;
Expression& Expression::operator=(Expression&&) noexcept = default;

Expression::Expression(const Expression& other) : text_(other.text_) {
    if (other.root_) root_ = other.root_->clone();
}

Expression& Expression::operator=(const Expression& other) {
    if (this != &other) {
        text_ = other.text_;
        root_ = other.root_ ? other.root_->clone() : nullptr;
    }
    return *this;
}

Expression Expression::parse(const std::string& text, int p) {
    Expression e;
    e.text_ = text;
    e.root_ = Parser(text, p).run();
    return e;
}

double Expression::eval(const double* coords) const { return root_->eval(coords); }

}  // namespace hpde::expr
