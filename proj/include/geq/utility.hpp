#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "geq/expression.hpp"
#include "geq/types.hpp"

namespace geq {

enum class Family {
  cobb_douglas,      // prod_k x_k^{a_k}
  leontief,          // min_k x_k / a_k
  max_linear,        // max_k a_k x_k
  linear,            // <a|x>
  fenchel,           // x + sqrt(y + x^2), two goods
  quasiconcavified,  // envelope of another utility on [0, w]
  custom,            // parsed arithmetic expression
};

std::string to_string(Family family);
/// Accepts the canonical names plus "custom-expression"; throws unknown_family.
Family family_from_string(std::string_view name);

struct QuasiconcaveEnvelope;

/// A consumer's preference: an immutable, cheaply copyable value.
///
/// Built-in families are nondecreasing on the nonnegative orthant. The
/// quasiconcavified wrapper is only defined on [0, cap] and shares a
/// thread-safe memo of evaluated bundles between copies.
class UtilityFunction {
 public:
  static UtilityFunction cobb_douglas(Vector exponents);
  static UtilityFunction leontief(Vector coefficients);
  static UtilityFunction max_linear(Vector coefficients);
  static UtilityFunction linear(Vector coefficients);
  static UtilityFunction fenchel();
  static UtilityFunction custom(std::string_view expression, std::size_t goods);
  static UtilityFunction quasiconcavified(const UtilityFunction& source, const Vector& cap,
                                          const SolverConfig& config);

  Family family() const noexcept { return family_; }
  const Vector& params() const noexcept { return params_; }
  std::size_t goods() const noexcept { return goods_; }
  const std::optional<Vector>& domain_cap() const noexcept { return cap_; }
  /// Expression text for the custom family; empty otherwise.
  const std::string& expression_text() const noexcept { return expression_.text(); }

  /// Checked evaluation; throws out_of_domain for negative components,
  /// wrong dimension, or bundles beyond the domain cap.
  double operator()(const VectorRef& bundle) const;

  /// Evaluation without domain checks, for inner loops that guarantee them.
  double evaluate(const VectorRef& bundle) const;

  /// True for families known to be quasiconcave.
  bool known_quasiconcave() const noexcept;

  /// An equivalent expression over x1..xK. Not available for wrappers.
  std::string to_expression() const;

  /// The wrapped utility of a quasiconcavified wrapper; nullptr otherwise.
  const UtilityFunction* source() const noexcept;
  const QuasiconcaveEnvelope* envelope() const noexcept { return envelope_.get(); }

 private:
  UtilityFunction(Family family, Vector params, std::size_t goods);

  Family family_ = Family::linear;
  Vector params_;
  std::size_t goods_ = 0;
  std::optional<Vector> cap_;
  Expression expression_;
  std::shared_ptr<const QuasiconcaveEnvelope> envelope_;
};

}  // namespace geq
