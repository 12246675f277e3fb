#include "geq/expression.hpp"

#include <array>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <string>

#include "geq/types.hpp"

namespace geq {

class ExpressionParser {
 public:
  ExpressionParser(std::string_view text, const std::vector<std::string>& variables)
      : text_(text), variables_(variables) {}

  std::vector<Expression::Instruction> run() {
    parse_sum();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return std::move(program_);
  }

 private:
  using Op = Expression::Op;

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::parse_error,
                "expression '" + std::string(text_) + "': " + what + " at offset " + std::to_string(pos_),
                "offset " + std::to_string(pos_));
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  void emit(Op op, int arg = 0, double value = 0.0) { program_.push_back({op, arg, value}); }

  void parse_sum() {
    parse_product();
    for (;;) {
      if (accept('+')) {
        parse_product();
        emit(Op::add);
      } else if (accept('-')) {
        parse_product();
        emit(Op::sub);
      } else {
        return;
      }
    }
  }

  void parse_product() {
    parse_unary();
    for (;;) {
      if (accept('*')) {
        parse_unary();
        emit(Op::mul);
      } else if (accept('/')) {
        parse_unary();
        emit(Op::div);
      } else {
        return;
      }
    }
  }

  void parse_unary() {
    if (accept('-')) {
      parse_unary();
      emit(Op::neg);
    } else if (accept('+')) {
      parse_unary();
    } else {
      parse_power();
    }
  }

  void parse_power() {
    parse_primary();
    if (accept('^')) {
      parse_unary();  // right associative
      emit(Op::pow);
    }
  }

  void parse_primary() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      parse_sum();
      expect(')');
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const std::string rest(text_.substr(pos_));
      char* end = nullptr;
      const double value = std::strtod(rest.c_str(), &end);
      if (end == rest.c_str()) fail("bad number");
      pos_ += static_cast<std::size_t>(end - rest.c_str());
      emit(Op::constant, 0, value);
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
        ++pos_;
      }
      const std::string name(text_.substr(start, pos_ - start));
      skip_space();
      if (pos_ < text_.size() && text_[pos_] == '(') {
        parse_call(name);
        return;
      }
      for (std::size_t i = 0; i < variables_.size(); ++i) {
        if (variables_[i] == name) {
          emit(Op::variable, static_cast<int>(i));
          return;
        }
      }
      // x, y, z alias the first three goods when the default good names are in use.
      if (name.size() == 1 && name[0] >= 'x' && name[0] <= 'z') {
        const std::size_t idx = static_cast<std::size_t>(name[0] - 'x');
        if (idx < variables_.size() && variables_[idx] == "x" + std::to_string(idx + 1)) {
          emit(Op::variable, static_cast<int>(idx));
          return;
        }
      }
      pos_ = start;
      fail("unknown symbol '" + name + "'");
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  void parse_call(const std::string& name) {
    expect('(');
    int arity = 0;
    if (!accept(')')) {
      do {
        parse_sum();
        ++arity;
      } while (accept(','));
      expect(')');
    }
    if (name == "sqrt") {
      if (arity != 1) fail("sqrt takes one argument");
      emit(Op::sqrt);
    } else if (name == "pow") {
      if (arity != 2) fail("pow takes two arguments");
      emit(Op::pow);
    } else if (name == "min" || name == "max") {
      if (arity < 1) fail(name + " needs at least one argument");
      emit(name == "min" ? Op::min : Op::max, arity);
    } else {
      fail("unknown function '" + name + "'");
    }
  }

  std::string_view text_;
  const std::vector<std::string>& variables_;
  std::size_t pos_ = 0;
  std::vector<Expression::Instruction> program_;
};

Expression Expression::parse(std::string_view text, std::vector<std::string> variables) {
  Expression e;
  e.text_ = std::string(text);
  e.variables_ = std::move(variables);
  e.program_ = ExpressionParser(e.text_, e.variables_).run();

  int depth = 0;
  for (const auto& ins : e.program_) {
    switch (ins.op) {
      case Op::constant:
      case Op::variable:
        ++depth;
        break;
      case Op::neg:
      case Op::sqrt:
        break;
      case Op::min:
      case Op::max:
        depth -= ins.arg - 1;
        break;
      default:
        --depth;
        break;
    }
    e.max_depth_ = std::max(e.max_depth_, depth);
  }
  return e;
}

namespace {

template <typename Stack>
double run_program(const auto& program, std::span<const double> values, Stack& stack) {
  using Op = std::decay_t<decltype(program.front().op)>;
  int top = -1;
  for (const auto& ins : program) {
    switch (ins.op) {
      case Op::constant:
        stack[++top] = ins.value;
        break;
      case Op::variable:
        stack[++top] = values[static_cast<std::size_t>(ins.arg)];
        break;
      case Op::add:
        stack[top - 1] += stack[top];
        --top;
        break;
      case Op::sub:
        stack[top - 1] -= stack[top];
        --top;
        break;
      case Op::mul:
        stack[top - 1] *= stack[top];
        --top;
        break;
      case Op::div:
        stack[top - 1] /= stack[top];
        --top;
        break;
      case Op::pow:
        stack[top - 1] = std::pow(stack[top - 1], stack[top]);
        --top;
        break;
      case Op::neg:
        stack[top] = -stack[top];
        break;
      case Op::sqrt:
        stack[top] = std::sqrt(stack[top]);
        break;
      case Op::min:
      case Op::max: {
        double r = stack[top - ins.arg + 1];
        for (int j = top - ins.arg + 2; j <= top; ++j) {
          r = ins.op == Op::min ? std::min(r, stack[j]) : std::max(r, stack[j]);
        }
        top -= ins.arg - 1;
        stack[top] = r;
        break;
      }
    }
  }
  return stack[0];
}

}  // namespace

double Expression::evaluate(std::span<const double> values) const {
  if (values.size() < variables_.size()) {
    throw Error(ErrorCode::dimension_mismatch, "expression '" + text_ + "' needs " +
                                                   std::to_string(variables_.size()) + " values");
  }
  if (max_depth_ <= 32) {
    std::array<double, 32> stack;
    return run_program(program_, values, stack);
  }
  std::vector<double> stack(static_cast<std::size_t>(max_depth_));
  return run_program(program_, values, stack);
}

double evaluate_constant(std::string_view text) {
  return Expression::parse(text, {}).evaluate({});
}

std::vector<std::string> good_symbols(std::size_t goods) {
  std::vector<std::string> names;
  for (std::size_t k = 0; k < goods; ++k) names.push_back("x" + std::to_string(k + 1));
  return names;
}

}  // namespace geq
