#include "cnls/cli/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <vector>

namespace cnls::cli {

struct Expression::Node {
  enum class Op { Number, Var, Neg, Add, Sub, Mul, Div, Pow, Sin, Cos, Exp, Abs };
  Op op = Op::Number;
  double value = 0.0;
  std::shared_ptr<const Node> a;
  std::shared_ptr<const Node> b;

  double eval(double x) const {
    switch (op) {
      case Op::Number: return value;
      case Op::Var: return x;
      case Op::Neg: return -a->eval(x);
      case Op::Add: return a->eval(x) + b->eval(x);
      case Op::Sub: return a->eval(x) - b->eval(x);
      case Op::Mul: return a->eval(x) * b->eval(x);
      case Op::Div: return a->eval(x) / b->eval(x);
      case Op::Pow: return std::pow(a->eval(x), b->eval(x));
      case Op::Sin: return std::sin(a->eval(x));
      case Op::Cos: return std::cos(a->eval(x));
      case Op::Exp: return std::exp(a->eval(x));
      case Op::Abs: return std::abs(a->eval(x));
    }
    return 0.0;
  }

  bool uses_x() const { return op == Op::Var || (a && a->uses_x()) || (b && b->uses_x()); }
};

namespace {

using Node = Expression::Node;
using NodePtr = std::shared_ptr<const Node>;

NodePtr make(Node::Op op, NodePtr a = nullptr, NodePtr b = nullptr, double value = 0.0) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->a = std::move(a);
  n->b = std::move(b);
  n->value = value;
  return n;
}

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  NodePtr parse() {
    NodePtr e = expr();
    skip();
    if (pos_ < s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ExpressionError("expression: " + msg + " at column " + std::to_string(pos_ + 1), static_cast<int>(pos_) + 1);
  }

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

  NodePtr expr() {
    NodePtr lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = make(Node::Op::Add, lhs, term());
      } else if (accept('-')) {
        lhs = make(Node::Op::Sub, lhs, term());
      } else {
        return lhs;
      }
    }
  }

  NodePtr term() {
    NodePtr lhs = unary();
    for (;;) {
      if (accept('*')) {
        lhs = make(Node::Op::Mul, lhs, unary());
      } else if (accept('/')) {
        lhs = make(Node::Op::Div, lhs, unary());
      } else {
        return lhs;
      }
    }
  }

  NodePtr unary() {
    if (accept('-')) return make(Node::Op::Neg, unary());
    if (accept('+')) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr base = atom();
    if (accept('^')) return make(Node::Op::Pow, base, unary());
    return base;
  }

  NodePtr atom() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of expression");
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr e = expr();
      if (!accept(')')) fail("expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = s_.c_str() + pos_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) fail("malformed number");
      pos_ += static_cast<std::size_t>(end - begin);
      return make(Node::Op::Number, nullptr, nullptr, v);
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      const std::string name = s_.substr(start, pos_ - start);
      if (name == "x") return make(Node::Op::Var);
      Node::Op op;
      if (name == "sin") {
        op = Node::Op::Sin;
      } else if (name == "cos") {
        op = Node::Op::Cos;
      } else if (name == "exp") {
        op = Node::Op::Exp;
      } else if (name == "abs") {
        op = Node::Op::Abs;
      } else {
        pos_ = start;
        fail("unknown identifier '" + name + "'");
      }
      if (!accept('(')) fail("expected '(' after " + name);
      NodePtr arg = expr();
      if (!accept(')')) fail("expected ')'");
      return make(op, arg);
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression Expression::parse(const std::string& text) {
  Expression e;
  e.text_ = text;
  e.root_ = Parser(text).parse();
  return e;
}

double Expression::operator()(double x) const { return root_->eval(x); }

Field Expression::sample(const Grid& g) const {
  Field out(g.n_interior());
  for (int k = 0; k < g.n_interior(); ++k) out[k] = (*this)(g.nodes()[k]);
  return out;
}

bool Expression::is_constant() const { return !root_->uses_x(); }

}  // namespace cnls::cli
