#pragma once

#include <memory>
#include <string>

#include "cnls/errors.hpp"
#include "cnls/grid.hpp"

namespace cnls::cli {

/// Syntax error inside an expression; `column` is 1-based within the expression text.
class ExpressionError : public Error {
 public:
  ExpressionError(const std::string& what, int column) : Error(what), column_(column) {}
  int column() const { return column_; }

 private:
  int column_;
};

/// Scalar expression in the variable x.
///
/// Grammar:
///   expr   := term (('+' | '-') term)*
///   term   := unary (('*' | '/') unary)*
///   unary  := '-' unary | power
///   power  := atom ('^' unary)?          right associative
///   atom   := number | 'x' | func '(' expr ')' | '(' expr ')'
///   func   := sin | cos | exp | abs
class Expression {
 public:
  static Expression parse(const std::string& text);

  double operator()(double x) const;
  Field sample(const Grid& g) const;
  /// True when the expression does not mention x.
  bool is_constant() const;
  const std::string& text() const { return text_; }

  struct Node;

 private:
  std::string text_;
  std::shared_ptr<const Node> root_;
};

}  // namespace cnls::cli
