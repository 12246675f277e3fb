#include "geq/utility.hpp"

#include <cmath>
#include <sstream>

#include "geq/duality.hpp"

namespace geq {

std::string to_string(Family family) {
  switch (family) {
    case Family::cobb_douglas: return "cobb-douglas";
    case Family::leontief: return "leontief";
    case Family::max_linear: return "max-linear";
    case Family::linear: return "linear";
    case Family::fenchel: return "fenchel";
    case Family::quasiconcavified: return "quasiconcavified";
    case Family::custom: return "custom";
  }
  return "unknown";
}

Family family_from_string(std::string_view name) {
  if (name == "cobb-douglas") return Family::cobb_douglas;
  if (name == "leontief") return Family::leontief;
  if (name == "max-linear") return Family::max_linear;
  if (name == "linear") return Family::linear;
  if (name == "fenchel") return Family::fenchel;
  if (name == "custom" || name == "custom-expression") return Family::custom;
  if (name == "quasiconcavified") return Family::quasiconcavified;
  throw Error(ErrorCode::unknown_family, "unknown utility family '" + std::string(name) + "'");
}

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw Error(ErrorCode::invalid_parameter, message);
}

void require_finite(const Vector& a, const char* family) {
  require(a.size() > 0, std::string(family) + " needs one parameter per good");
  require(a.allFinite(), std::string(family) + " parameters must be finite");
}

std::string format_number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

UtilityFunction::UtilityFunction(Family family, Vector params, std::size_t goods)
    : family_(family), params_(std::move(params)), goods_(goods) {}

UtilityFunction UtilityFunction::cobb_douglas(Vector exponents) {
  require_finite(exponents, "cobb-douglas");
  require((exponents.array() > 0.0).all(), "cobb-douglas exponents must be strictly positive");
  const auto k = static_cast<std::size_t>(exponents.size());
  return {Family::cobb_douglas, std::move(exponents), k};
}

UtilityFunction UtilityFunction::leontief(Vector coefficients) {
  require_finite(coefficients, "leontief");
  require((coefficients.array() > 0.0).all(), "leontief coefficients must be strictly positive");
  const auto k = static_cast<std::size_t>(coefficients.size());
  return {Family::leontief, std::move(coefficients), k};
}

UtilityFunction UtilityFunction::max_linear(Vector coefficients) {
  require_finite(coefficients, "max-linear");
  require((coefficients.array() >= 0.0).all() && (coefficients.array() > 0.0).any(),
          "max-linear coefficients must be nonnegative and not all zero");
  const auto k = static_cast<std::size_t>(coefficients.size());
  return {Family::max_linear, std::move(coefficients), k};
}

UtilityFunction UtilityFunction::linear(Vector coefficients) {
  require_finite(coefficients, "linear");
  require((coefficients.array() >= 0.0).all() && (coefficients.array() > 0.0).any(),
          "linear coefficients must be nonnegative and not all zero");
  const auto k = static_cast<std::size_t>(coefficients.size());
  return {Family::linear, std::move(coefficients), k};
}

UtilityFunction UtilityFunction::fenchel() { return {Family::fenchel, Vector(), 2}; }

UtilityFunction UtilityFunction::custom(std::string_view expression, std::size_t goods) {
  require(goods >= 1, "custom utility needs at least one good");
  UtilityFunction u(Family::custom, Vector(), goods);
  try {
    u.expression_ = Expression::parse(expression, good_symbols(goods));
  } catch (const Error& e) {
    throw Error(ErrorCode::invalid_parameter, e.what(), e.where());
  }
  return u;
}

UtilityFunction UtilityFunction::quasiconcavified(const UtilityFunction& source, const Vector& cap,
                                                  const SolverConfig& config) {
  require(static_cast<std::size_t>(cap.size()) == source.goods(), "envelope cap has the wrong dimension");
  require((cap.array() > 0.0).all(), "envelope cap must be positive");
  UtilityFunction u(Family::quasiconcavified, Vector(), source.goods());
  u.cap_ = cap;
  u.envelope_ = std::make_shared<const QuasiconcaveEnvelope>(source, cap, config);
  return u;
}

const UtilityFunction* UtilityFunction::source() const noexcept {
  return envelope_ ? &envelope_->source : nullptr;
}

bool UtilityFunction::known_quasiconcave() const noexcept {
  switch (family_) {
    case Family::cobb_douglas:
    case Family::leontief:
    case Family::linear:
    case Family::fenchel:
    case Family::quasiconcavified:
      return true;
    case Family::max_linear:
      return (params_.array() > 0.0).count() <= 1;
    case Family::custom:
      return false;
  }
  return false;
}

double UtilityFunction::operator()(const VectorRef& bundle) const {
  if (static_cast<std::size_t>(bundle.size()) != goods_) {
    throw Error(ErrorCode::out_of_domain, "bundle has " + std::to_string(bundle.size()) +
                                              " goods, utility expects " + std::to_string(goods_));
  }
  if (!bundle.allFinite() || (bundle.array() < 0.0).any()) {
    throw Error(ErrorCode::out_of_domain, "bundle has a negative or non-finite component");
  }
  if (cap_ && (bundle.array() > cap_->array() + 1e-9).any()) {
    throw Error(ErrorCode::out_of_domain, "bundle lies outside the feasible set [0, w]");
  }
  return evaluate(bundle);
}

double UtilityFunction::evaluate(const VectorRef& x) const {
  switch (family_) {
    case Family::cobb_douglas: {
      double v = 1.0;
      for (Eigen::Index k = 0; k < x.size(); ++k) v *= std::pow(std::max(x[k], 0.0), params_[k]);
      return v;
    }
    case Family::leontief:
      return (x.array() / params_.array()).minCoeff();
    case Family::max_linear:
      return (x.array() * params_.array()).maxCoeff();
    case Family::linear:
      return x.dot(params_);
    case Family::fenchel:
      return x[0] + std::sqrt(std::max(x[1] + x[0] * x[0], 0.0));
    case Family::custom:
      return expression_.evaluate(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
    case Family::quasiconcavified:
      return envelope_->value(x);
  }
  return 0.0;
}

std::string UtilityFunction::to_expression() const {
  const auto term = [](std::size_t k) { return "x" + std::to_string(k + 1); };
  std::string s;
  switch (family_) {
    case Family::cobb_douglas:
      for (std::size_t k = 0; k < goods_; ++k) {
        if (k) s += "*";
        s += term(k) + "^" + format_number(params_[static_cast<Eigen::Index>(k)]);
      }
      return s;
    case Family::leontief:
    case Family::max_linear: {
      s = family_ == Family::leontief ? "min(" : "max(";
      for (std::size_t k = 0; k < goods_; ++k) {
        if (k) s += ",";
        const double a = params_[static_cast<Eigen::Index>(k)];
        s += family_ == Family::leontief ? term(k) + "/" + format_number(a) : format_number(a) + "*" + term(k);
      }
      return s + ")";
    }
    case Family::linear:
      for (std::size_t k = 0; k < goods_; ++k) {
        if (k) s += "+";
        s += format_number(params_[static_cast<Eigen::Index>(k)]) + "*" + term(k);
      }
      return s;
    case Family::fenchel:
      return "x1+sqrt(x2+x1^2)";
    case Family::custom:
      return expression_.text();
    case Family::quasiconcavified:
      break;
  }
  throw Error(ErrorCode::invalid_parameter, "quasiconcavified utilities have no expression form");
}

}  // namespace geq
