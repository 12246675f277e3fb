#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace geq {

/// Arithmetic expression over named variables, compiled to a postfix program.
///
/// Supports + - * / ^, unary minus, parentheses, numeric literals and the
/// functions sqrt(a), pow(a, b), min(a, ...), max(a, ...). Evaluation is
/// const and allocation-free for expressions of modest depth.
class Expression {
 public:
  Expression() = default;

  /// Throws Error(parse_error) with the character offset on malformed input.
  static Expression parse(std::string_view text, std::vector<std::string> variables);

  double evaluate(std::span<const double> values) const;

  const std::string& text() const noexcept { return text_; }
  const std::vector<std::string>& variables() const noexcept { return variables_; }
  bool empty() const noexcept { return program_.empty(); }

 private:
  enum class Op : unsigned char { constant, variable, add, sub, mul, div, pow, neg, sqrt, min, max };
  struct Instruction {
    Op op;
    int arg = 0;  // variable index or function arity
    double value = 0.0;
  };

  friend class ExpressionParser;

  std::string text_;
  std::vector<std::string> variables_;
  std::vector<Instruction> program_;
  int max_depth_ = 0;
};

/// Evaluates a variable-free expression such as "2/3" or "sqrt(3)-1".
double evaluate_constant(std::string_view text);

/// Default variable names for K goods: x1..xK, with x, y, z accepted as aliases
/// for the first three goods.
std::vector<std::string> good_symbols(std::size_t goods);

}  // namespace geq
