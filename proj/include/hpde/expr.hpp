#pragma once

#include <memory>
#include <string>
#include <vector>

namespace hpde::expr {

// Closed expression grammar for config-driven fields:
//   expr   := term (('+' | '-') term)*
//   term   := factor ('*' factor)*
//   factor := number | 'pi' | coordinate | fn '(' expr ')' | '(' expr ')' | '-' factor
//   fn     := sin | cos | exp
// Coordinates are x1..xp, y1..yp, theta, s. Anything else is rejected.
class Expression {
  public:
    static Expression parse(const std::string& text, int p);

    // Coordinate order matches the grid: x1, y1, ..., xp, yp, theta, s.
    double eval(const double* coords) const;
    const std::string& text() const { return text_; }

    Expression(const Expression&);
    Expression& operator=(const Expression&);
    Expression(Expression&&) noexcept;
    Expression& operator=(Expression&&) noexcept;
    ~Expression();

    struct Node;

  private:
    Expression();
    std::unique_ptr<Node> root_;
    std::string text_;
};

}  // namespace hpde::expr
