#include "rodspec/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace rodspec::expr {
namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr int kMaxDepth = 256;

struct Parser {
  const std::string& src;
  std::size_t pos = 0;
  std::vector<Expr::Node>* nodes;

  void skip_ws() {
    while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
  }

  bool at_end() {
    skip_ws();
    return pos >= src.size();
  }

  char peek() {
    skip_ws();
    return pos < src.size() ? src[pos] : '\0';
  }

  int push(Expr::Node n) {
    nodes->push_back(n);
    return static_cast<int>(nodes->size()) - 1;
  }

  int parse_expr(int depth) {
    if (depth > kMaxDepth) throw ParseError(pos, "expression nested too deeply");
    int lhs = parse_term(depth + 1);
    while (true) {
      char c = peek();
      if (c != '+' && c != '-') break;
      ++pos;
      int rhs = parse_term(depth + 1);
      lhs = push({c == '+' ? Expr::Op::kAdd : Expr::Op::kSub, 0.0, lhs, rhs});
    }
    return lhs;
  }

  int parse_term(int depth) {
    if (depth > kMaxDepth) throw ParseError(pos, "expression nested too deeply");
    int lhs = parse_unary(depth + 1);
    while (true) {
      char c = peek();
      if (c != '*' && c != '/') break;
      ++pos;
      int rhs = parse_unary(depth + 1);
      lhs = push({c == '*' ? Expr::Op::kMul : Expr::Op::kDiv, 0.0, lhs, rhs});
    }
    return lhs;
  }

  // '^' binds tighter than unary minus: -x1^2 parses as -(x1^2).
  int parse_unary(int depth) {
    if (depth > kMaxDepth) throw ParseError(pos, "expression nested too deeply");
    if (peek() == '-') {
      ++pos;
      int operand = parse_unary(depth + 1);
      return push({Expr::Op::kNeg, 0.0, operand, -1});
    }
    return parse_power(depth + 1);
  }

  int parse_power(int depth) {
    if (depth > kMaxDepth) throw ParseError(pos, "expression nested too deeply");
    int base = parse_primary(depth + 1);
    if (peek() == '^') {
      ++pos;
      int exponent = parse_unary(depth + 1);  // right associative
      return push({Expr::Op::kPow, 0.0, base, exponent});
    }
    return base;
  }

  int parse_primary(int depth) {
    if (depth > kMaxDepth) throw ParseError(pos, "expression nested too deeply");
    skip_ws();
    if (pos >= src.size()) throw ParseError(pos, "expected operand");
    char c = src[pos];
    if (c == '(') {
      ++pos;
      int inner = parse_expr(depth + 1);
      if (peek() != ')') throw ParseError(pos, "expected ')'");
      ++pos;
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier(depth);
    throw ParseError(pos, std::string("unexpected character '") + c + "'");
  }

  int parse_number() {
    const char* begin = src.c_str() + pos;
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin) throw ParseError(pos, "malformed number");
    // Reject strtod's inf/nan spellings and exponent forms that leak past
    // what a config file should contain; plain digits, '.', 'e' are fine.
    pos += static_cast<std::size_t>(end - begin);
    if (!std::isfinite(v)) throw ParseError(pos, "number out of range");
    return push({Expr::Op::kConst, v, -1, -1});
  }

  int parse_identifier(int depth) {
    std::size_t start = pos;
    while (pos < src.size() &&
           (std::isalnum(static_cast<unsigned char>(src[pos])) || src[pos] == '_'))
      ++pos;
    std::string name = src.substr(start, pos - start);
    if (name == "x1") return push({Expr::Op::kVarX1, 0.0, -1, -1});
    if (name == "y1") return push({Expr::Op::kVarY1, 0.0, -1, -1});
    if (name == "y2") return push({Expr::Op::kVarY2, 0.0, -1, -1});
    if (name == "pi") return push({Expr::Op::kConst, kPi, -1, -1});

    Expr::Op op;
    int arity = 1;
    if (name == "sin") {
      op = Expr::Op::kSin;
    } else if (name == "cos") {
      op = Expr::Op::kCos;
    } else if (name == "exp") {
      op = Expr::Op::kExp;
    } else if (name == "abs") {
      op = Expr::Op::kAbs;
    } else if (name == "min") {
      op = Expr::Op::kMin;
      arity = 2;
    } else if (name == "max") {
      op = Expr::Op::kMax;
      arity = 2;
    } else {
      throw ParseError(start, "unknown identifier '" + name + "'");
    }

    if (peek() != '(') throw ParseError(pos, "expected '(' after '" + name + "'");
    ++pos;
    int a = parse_expr(depth + 1);
    int b = -1;
    if (arity == 2) {
      if (peek() != ',') throw ParseError(pos, "expected ',' in '" + name + "'");
      ++pos;
      b = parse_expr(depth + 1);
    }
    if (peek() != ')') throw ParseError(pos, "expected ')'");
    ++pos;
    return push({op, 0.0, a, b});
  }
};

double integer_pow(double base, long long n) {
  if (n < 0) {
    if (base == 0.0) throw EvalError("zero raised to a negative power");
    return 1.0 / integer_pow(base, -n);
  }
  double result = 1.0;
  double factor = base;
  while (n > 0) {
    if (n & 1) result *= factor;
    factor *= factor;
    n >>= 1;
  }
  return result;
}

}  // namespace

Expr parse(const std::string& src) {
  bool blank = true;
  for (char c : src)
    if (!std::isspace(static_cast<unsigned char>(c))) blank = false;
  if (blank) throw ParseError(0, "empty expression");

  Expr e;
  Parser p{src, 0, &e.nodes_};
  e.root_ = p.parse_expr(0);
  if (!p.at_end()) throw ParseError(p.pos, "trailing input");
  return e;
}

double Expr::eval(const Env& env) const { return eval_node(root_, env); }

double Expr::eval_node(int idx, const Env& env) const {
  const Node& n = nodes_[static_cast<std::size_t>(idx)];
  switch (n.op) {
    case Op::kConst:
      return n.value;
    case Op::kVarX1:
      if (!env.x1) throw EvalError("unbound variable x1");
      return *env.x1;
    case Op::kVarY1:
      if (!env.y1) throw EvalError("unbound variable y1");
      return *env.y1;
    case Op::kVarY2:
      if (!env.y2) throw EvalError("unbound variable y2");
      return *env.y2;
    case Op::kNeg:
      return -eval_node(n.lhs, env);
    case Op::kAdd:
      return eval_node(n.lhs, env) + eval_node(n.rhs, env);
    case Op::kSub:
      return eval_node(n.lhs, env) - eval_node(n.rhs, env);
    case Op::kMul:
      return eval_node(n.lhs, env) * eval_node(n.rhs, env);
    case Op::kDiv: {
      double denom = eval_node(n.rhs, env);
      if (denom == 0.0) throw EvalError("division by zero");
      return eval_node(n.lhs, env) / denom;
    }
    case Op::kPow: {
      double base = eval_node(n.lhs, env);
      double exponent = eval_node(n.rhs, env);
      // Integer exponents take an exact repeated-multiplication path so that
      // negative bases work and results are deterministic.
      if (std::floor(exponent) == exponent && std::abs(exponent) <= 1024.0)
        return integer_pow(base, static_cast<long long>(exponent));
      if (base < 0.0) throw EvalError("negative base with non-integer exponent");
      if (base == 0.0) return 0.0;
      return std::exp(exponent * std::log(base));
    }
    case Op::kSin:
      return std::sin(eval_node(n.lhs, env));
    case Op::kCos:
      return std::cos(eval_node(n.lhs, env));
    case Op::kExp:
      return std::exp(eval_node(n.lhs, env));
    case Op::kAbs:
      return std::abs(eval_node(n.lhs, env));
    case Op::kMin:
      return std::min(eval_node(n.lhs, env), eval_node(n.rhs, env));
    case Op::kMax:
      return std::max(eval_node(n.lhs, env), eval_node(n.rhs, env));
  }
  throw EvalError("corrupt expression node");
}

std::string Expr::to_string() const {
  std::string out;
  print_node(root_, out);
  return out;
}

void Expr::print_node(int idx, std::string& out) const {
  const Node& n = nodes_[static_cast<std::size_t>(idx)];
  auto binary = [&](const char* sym) {
    out += '(';
    print_node(n.lhs, out);
    out += sym;
    print_node(n.rhs, out);
    out += ')';
  };
  auto call = [&](const char* name) {
    out += name;
    out += '(';
    print_node(n.lhs, out);
    if (n.rhs >= 0) {
      out += ',';
      print_node(n.rhs, out);
    }
    out += ')';
  };
  switch (n.op) {
    case Op::kConst: {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", n.value);
      if (n.value < 0) {
        out += '(';
        out += buf;
        out += ')';
      } else {
        out += buf;
      }
      return;
    }
    case Op::kVarX1:
      out += "x1";
      return;
    case Op::kVarY1:
      out += "y1";
      return;
    case Op::kVarY2:
      out += "y2";
      return;
    case Op::kNeg:
      out += "(-";
      print_node(n.lhs, out);
      out += ')';
      return;
    case Op::kAdd:
      binary("+");
      return;
    case Op::kSub:
      binary("-");
      return;
    case Op::kMul:
      binary("*");
      return;
    case Op::kDiv:
      binary("/");
      return;
    case Op::kPow:
      binary("^");
      return;
    case Op::kSin:
      call("sin");
      return;
    case Op::kCos:
      call("cos");
      return;
    case Op::kExp:
      call("exp");
      return;
    case Op::kAbs:
      call("abs");
      return;
    case Op::kMin:
      call("min");
      return;
    case Op::kMax:
      call("max");
      return;
  }
}

bool Expr::references_x1() const {
  for (const Node& n : nodes_)
    if (n.op == Op::kVarX1) return true;
  return false;
}

bool Expr::references_y() const {
  for (const Node& n : nodes_)
    if (n.op == Op::kVarY1 || n.op == Op::kVarY2) return true;
  return false;
}

}  // namespace rodspec::expr
