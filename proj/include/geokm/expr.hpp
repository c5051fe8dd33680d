#pragma once

#include "geokm/exact.hpp"

#include <memory>
#include <string>

namespace geokm {

// Arithmetic expression in the variables r and eps: +, -, *, /, unary minus,
// ^ with integer exponent, parentheses, integer and decimal literals.
// Literals are kept as exact rationals so interval evaluation is exact where
// the expression is.
class Expr {
  public:
    // Throws config_error on syntax errors, naming the byte position.
    static Expr parse(const std::string& text);

    double eval(double r, double eps) const;
    RatInterval eval_interval(const RatInterval& r, const RatInterval& eps) const;

    const std::string& text() const { return text_; }

    Expr(const Expr&) = default;
    Expr(Expr&&) = default;
    Expr& operator=(const Expr&) = default;
    Expr& operator=(Expr&&) = default;

    struct Node;

  private:
    Expr(std::shared_ptr<const Node> root, std::string text);
    std::shared_ptr<const Node> root_;
    std::string text_;
};

} // namespace geokm
