#include "mcflab/expr.hpp"

#include <cctype>
#include <cmath>
#include <numbers>
#include <vector>

namespace mcflab {

struct Expr::Node {
  enum class Op { Const, Var, Time, Neg, Add, Sub, Mul, Div, Pow, Sin, Cos, Tan, Tanh, Exp, Log, Sqrt, Abs };
  Op op = Op::Const;
  double value = 0.0;
  int var = 0;
  std::unique_ptr<Node> a, b;
};

namespace {

using Node = Expr::Node;
using Op = Node::Op;

std::unique_ptr<Node> leaf(double v) {
  auto n = std::make_unique<Node>();
  n->value = v;
  return n;
}

std::unique_ptr<Node> make(Op op, std::unique_ptr<Node> a, std::unique_ptr<Node> b = nullptr) {
  auto n = std::make_unique<Node>();
  n->op = op;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

class Parser {
public:
  Parser(const std::string& s, int n) : s_(s), n_(n) {}

  std::unique_ptr<Node> parse() {
    auto e = expression();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return e;
  }

  bool uses_height = false;
  bool uses_time = false;

private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("expression '" + s_ + "': " + what + " at column " + std::to_string(pos_ + 1));
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

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  std::unique_ptr<Node> expression() {
    auto lhs = term();
    for (;;) {
      if (accept('+')) lhs = make(Op::Add, std::move(lhs), term());
      else if (accept('-')) lhs = make(Op::Sub, std::move(lhs), term());
      else return lhs;
    }
  }

  std::unique_ptr<Node> term() {
    auto lhs = unary();
    for (;;) {
      if (accept('*')) lhs = make(Op::Mul, std::move(lhs), unary());
      else if (accept('/')) lhs = make(Op::Div, std::move(lhs), unary());
      else return lhs;
    }
  }

  std::unique_ptr<Node> unary() {
    if (accept('-')) return make(Op::Neg, unary());
    if (accept('+')) return unary();
    return power();
  }

  std::unique_ptr<Node> power() {
    auto base = primary();
    if (accept('^')) return make(Op::Pow, std::move(base), unary());
    return base;
  }

  std::unique_ptr<Node> primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    const char c = s_[pos_];
    if (accept('(')) {
      auto e = expression();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
    fail(std::string("unexpected '") + c + "'");
  }

  std::unique_ptr<Node> number() {
    const char* begin = s_.c_str() + pos_;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) fail("malformed number");
    pos_ += static_cast<std::size_t>(end - begin);
    return leaf(v);
  }

  std::unique_ptr<Node> identifier() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    const std::string id = s_.substr(start, pos_ - start);

    if (id == "t") {
      uses_time = true;
      auto n = std::make_unique<Node>();
      n->op = Op::Time;
      return n;
    }
    if (id == "pi") return leaf(std::numbers::pi);
    if (id == "xn" || (id.size() >= 2 && id[0] == 'x' && std::isdigit(static_cast<unsigned char>(id[1])))) {
      int k = n_;
      if (id != "xn") {
        k = std::stoi(id.substr(1));
        if (k < 1 || k > n_) fail("coordinate " + id + " out of range for n=" + std::to_string(n_));
      }
      if (k == n_) uses_height = true;
      auto n = std::make_unique<Node>();
      n->op = Op::Var;
      n->var = k - 1;
      return n;
    }

    static const std::vector<std::pair<std::string, Op>> unary_fns = {
        {"sin", Op::Sin}, {"cos", Op::Cos}, {"tan", Op::Tan}, {"tanh", Op::Tanh}, {"exp", Op::Exp},
        {"log", Op::Log}, {"sqrt", Op::Sqrt}, {"abs", Op::Abs}};
    for (const auto& [name, op] : unary_fns) {
      if (id == name) {
        expect('(');
        auto arg = expression();
        expect(')');
        return make(op, std::move(arg));
      }
    }
    if (id == "pow") {
      expect('(');
      auto a = expression();
      expect(',');
      auto b = expression();
      expect(')');
      return make(Op::Pow, std::move(a), std::move(b));
    }
    pos_ = start;
    fail("unknown identifier '" + id + "'");
  }

  const std::string& s_;
  int n_;
  std::size_t pos_ = 0;
};

double eval(const Node& n, std::span<const double> X, double t) {
  switch (n.op) {
    case Op::Const: return n.value;
    case Op::Var: return X[static_cast<std::size_t>(n.var)];
    case Op::Time: return t;
    case Op::Neg: return -eval(*n.a, X, t);
    case Op::Add: return eval(*n.a, X, t) + eval(*n.b, X, t);
    case Op::Sub: return eval(*n.a, X, t) - eval(*n.b, X, t);
    case Op::Mul: return eval(*n.a, X, t) * eval(*n.b, X, t);
    case Op::Div: return eval(*n.a, X, t) / eval(*n.b, X, t);
    case Op::Pow: return std::pow(eval(*n.a, X, t), eval(*n.b, X, t));
    case Op::Sin: return std::sin(eval(*n.a, X, t));
    case Op::Cos: return std::cos(eval(*n.a, X, t));
    case Op::Tan: return std::tan(eval(*n.a, X, t));
    case Op::Tanh: return std::tanh(eval(*n.a, X, t));
    case Op::Exp: return std::exp(eval(*n.a, X, t));
    case Op::Log: return std::log(eval(*n.a, X, t));
    case Op::Sqrt: return std::sqrt(eval(*n.a, X, t));
    case Op::Abs: return std::abs(eval(*n.a, X, t));
  }
  return 0.0;
}

}  // namespace

Expr Expr::parse(const std::string& source, int n) {
  if (n < 1) throw ParseError("expression dimension must be positive");
  Parser p(source, n);
  Expr e;
  e.root_ = p.parse();
  e.source_ = source;
  e.n_ = n;
  e.uses_height_ = p.uses_height;
  e.uses_time_ = p.uses_time;
  return e;
}

Expr Expr::constant(double value) {
  Expr e;
  e.root_ = leaf(value);
  e.source_ = std::to_string(value);
  return e;
}

double Expr::operator()(std::span<const double> X, double t) const {
  if (!root_) throw std::logic_error("evaluating an empty expression");
  return eval(*root_, X, t);
}

}  // namespace mcflab
