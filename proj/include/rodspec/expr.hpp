#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "rodspec/errors.hpp"

namespace rodspec::expr {

// Variable bindings for evaluation. A field left unset counts as unbound and
// evaluating an expression that references it is an error.
struct Env {
  std::optional<double> x1;
  std::optional<double> y1;
  std::optional<double> y2;

  static Env vars(double x1v, double y1v, double y2v) {
    Env e;
    e.x1 = x1v;
    e.y1 = y1v;
    e.y2 = y2v;
    return e;
  }
};

struct ParseError : Error {
  ParseError(std::size_t offset_, const std::string& what_)
      : Error(what_ + " (at byte " + std::to_string(offset_) + ")"),
        offset(offset_),
        message(what_) {}
  std::size_t offset;
  std::string message;
};

struct EvalError : Error {
  using Error::Error;
};

// Parsed arithmetic expression over the variables x1, y1, y2.
// Immutable after parse; evaluation has no side effects, so a single Expr may
// be evaluated concurrently from many threads.
class Expr {
 public:
  double eval(const Env& env) const;

  // Full-parenthesized form that re-parses to an equivalent expression.
  std::string to_string() const;

  bool references_x1() const;
  bool references_y() const;

  // AST node storage; public for the parser, not part of the stable API.
  enum class Op : unsigned char {
    kConst,
    kVarX1,
    kVarY1,
    kVarY2,
    kNeg,
    kAdd,
    kSub,
    kMul,
    kDiv,
    kPow,
    kSin,
    kCos,
    kExp,
    kAbs,
    kMin,
    kMax,
  };

  struct Node {
    Op op;
    double value = 0.0;  // kConst only
    int lhs = -1;
    int rhs = -1;
  };

 private:
  friend Expr parse(const std::string& src);

  double eval_node(int idx, const Env& env) const;
  void print_node(int idx, std::string& out) const;

  std::vector<Node> nodes_;
  int root_ = -1;
};

// Parses `src` or throws ParseError carrying the byte offset of the problem.
Expr parse(const std::string& src);

}  // namespace rodspec::expr
