#include "geq/types.hpp"

#include <cmath>
#include <cstdlib>
#include <string>

namespace geq {

std::string to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::dimension_mismatch: return "dimension-mismatch";
    case ErrorCode::negative_quantity: return "negative-quantity";
    case ErrorCode::endowment_sum_mismatch: return "endowment-sum-mismatch";
    case ErrorCode::income_sum_mismatch: return "income-sum-mismatch";
    case ErrorCode::unknown_family: return "unknown-family";
    case ErrorCode::invalid_parameter: return "invalid-parameter";
    case ErrorCode::zero_total_value: return "zero-total-value";
    case ErrorCode::out_of_domain: return "out-of-domain";
    case ErrorCode::parse_error: return "parse-error";
    case ErrorCode::invalid_config: return "invalid-config";
    case ErrorCode::complexity_guard: return "complexity-guard";
    case ErrorCode::non_convergence: return "non-convergence";
    case ErrorCode::unknown_id: return "unknown-id";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& message, std::string where)
    : std::runtime_error(message), code_(code), where_(std::move(where)) {}

namespace {

std::string summarize(const std::vector<Diagnostic>& diagnostics) {
  std::string s = "invalid economy:";
  for (const auto& d : diagnostics) {
    s += "\n  " + to_string(d.code);
    if (!d.where.empty()) s += " at " + d.where;
    s += ": " + d.message;
  }
  return s;
}

}  // namespace

ValidationError::ValidationError(std::vector<Diagnostic> diagnostics)
    : Error(diagnostics.empty() ? ErrorCode::parse_error : diagnostics.front().code,
            summarize(diagnostics), diagnostics.empty() ? std::string() : diagnostics.front().where),
      diagnostics_(std::move(diagnostics)) {}

PriceVector::PriceVector(Vector values, const Vector& supply) : values_(std::move(values)) {
  if (values_.size() != supply.size()) {
    throw Error(ErrorCode::dimension_mismatch, "price and supply dimensions differ");
  }
  if ((values_.array() < 0.0).any()) {
    throw Error(ErrorCode::negative_quantity, "prices must be nonnegative");
  }
  if (std::abs(values_.dot(supply) - 1.0) > 1e-12) {
    throw Error(ErrorCode::invalid_parameter, "prices are not normalized: <p|w> != 1");
  }
}

IncomeDistribution::IncomeDistribution(Vector values) : values_(std::move(values)) {
  if ((values_.array() < 0.0).any()) {
    throw Error(ErrorCode::negative_quantity, "incomes must be nonnegative");
  }
  if (std::abs(values_.sum() - 1.0) > 1e-12) {
    throw Error(ErrorCode::income_sum_mismatch, "incomes must sum to one");
  }
}

bool is_feasible(const Allocation& x, const Vector& supply, double tol) {
  if (x.cols() != supply.size()) return false;
  if ((x.array() < -tol).any()) return false;
  const Vector used = x.colwise().sum().transpose();
  return ((used - supply).array() <= tol).all();
}

void SolverConfig::validate() const {
  auto bad = [](const std::string& what) { throw Error(ErrorCode::invalid_config, what); };
  if (grid_resolution < 2) bad("grid-resolution must be at least 2");
  if (multistart_count < 1) bad("multistart-count must be positive");
  if (refine_iterations < 1) bad("refine-iterations must be positive");
  if (!(tol_solve > 0.0)) bad("tol-solve must be positive");
  if (!(tol_accept > 0.0)) bad("tol-accept must be positive");
  if (!(price_floor > 0.0)) bad("price-floor must be positive");
  if (negishi_max_iterations < 1) bad("negishi-max-iterations must be positive");
  if (max_grid_points < 2) bad("max-grid-points must be at least 2");
  if (threads < 0) bad("threads must be nonnegative");
  if (weights.size() > 0 && !(weights.array() > 0.0).all()) bad("weights must be positive");
}

int SolverConfig::resolved_threads() const {
  if (threads > 0) return threads;
  if (const char* env = std::getenv("GEQ_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 1;
}

}  // namespace geq
