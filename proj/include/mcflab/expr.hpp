#pragma once

#include <memory>
#include <span>
#include <stdexcept>
#include <string>

namespace mcflab {

/// Closed-form scalar expression in the ambient coordinates and time.
///
/// Grammar: numbers, `pi`, variables `x1`..`x{n-1}`, `xn` (alias of `x{n}`)
/// and `t`; binary `+ - * / ^`; unary minus; functions `sin cos tan tanh exp
/// log sqrt abs` and `pow(a, b)`.
class Expr {
public:
  struct Node;

  Expr() = default;
  /// Parses `source` for ambient dimension `n` (so `xn` is coordinate n).
  static Expr parse(const std::string& source, int n);
  static Expr constant(double value);

  /// `X` holds the n ambient coordinates; entries the expression does not use
  /// may be anything.
  [[nodiscard]] double operator()(std::span<const double> X, double t) const;

  [[nodiscard]] bool uses_height() const noexcept { return uses_height_; }
  [[nodiscard]] bool uses_time() const noexcept { return uses_time_; }
  [[nodiscard]] int dimension() const noexcept { return n_; }
  [[nodiscard]] const std::string& source() const noexcept { return source_; }
  [[nodiscard]] bool empty() const noexcept { return !root_; }

private:
  std::shared_ptr<const Node> root_;
  std::string source_;
  int n_ = 0;
  bool uses_height_ = false;
  bool uses_time_ = false;
};

class ParseError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace mcflab
