#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace geq {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Consumer-major N x K matrix; row i is consumer i's bundle.
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Vector = VectorX<double>;
using Bundle = VectorX<double>;
using Allocation = MatrixX<double>;
using VectorRef = Eigen::Ref<const Vector>;

enum class ErrorCode {
  dimension_mismatch,
  negative_quantity,
  endowment_sum_mismatch,
  income_sum_mismatch,
  unknown_family,
  invalid_parameter,
  zero_total_value,
  out_of_domain,
  parse_error,
  invalid_config,
  complexity_guard,
  non_convergence,
  unknown_id,
};

std::string to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string where = {});

  ErrorCode code() const noexcept { return code_; }
  /// JSON pointer or "line:col" anchor; empty when not applicable.
  const std::string& where() const noexcept { return where_; }

 private:
  ErrorCode code_;
  std::string where_;
};

struct Diagnostic {
  ErrorCode code;
  std::string where;
  std::string message;
};

/// Thrown by economy validation; carries every problem found, not just the first.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<Diagnostic> diagnostics);

  const std::vector<Diagnostic>& diagnostics() const noexcept { return diagnostics_; }

 private:
  std::vector<Diagnostic> diagnostics_;
};

/// Prices normalized so that the total supply is worth one: <p|w> = 1.
class PriceVector {
 public:
  PriceVector() = default;

  /// Takes already-normalized prices; throws if <p|w> deviates from one by more than 1e-12.
  PriceVector(Vector values, const Vector& supply);

  const Vector& values() const noexcept { return values_; }
  double operator[](Eigen::Index k) const { return values_[k]; }
  Eigen::Index size() const noexcept { return values_.size(); }

 private:
  Vector values_;
};

/// Nonnegative incomes summing to one.
class IncomeDistribution {
 public:
  IncomeDistribution() = default;
  explicit IncomeDistribution(Vector values);

  const Vector& values() const noexcept { return values_; }
  double operator[](Eigen::Index i) const { return values_[i]; }
  Eigen::Index size() const noexcept { return values_.size(); }

 private:
  Vector values_;
};

/// Divides raw prices by their value of the supply. Idempotent on normalized input.
template <typename Derived, typename SupplyDerived>
PriceVector normalize_prices(const Eigen::MatrixBase<Derived>& raw,
                             const Eigen::MatrixBase<SupplyDerived>& supply) {
  if (raw.size() != supply.size()) {
    throw Error(ErrorCode::dimension_mismatch, "price and supply dimensions differ");
  }
  if ((raw.array() < 0.0).any()) {
    throw Error(ErrorCode::negative_quantity, "prices must be nonnegative");
  }
  const double total = raw.dot(supply);
  if (!(total > 0.0)) {
    throw Error(ErrorCode::zero_total_value, "prices give the supply zero value");
  }
  Vector w = supply;
  return PriceVector(Vector(raw / total), w);
}

/// Checks sum_i x_ik <= w_k + tol and x >= -tol.
bool is_feasible(const Allocation& x, const Vector& supply, double tol = 1e-9);

struct SolverConfig {
  int grid_resolution = 200;
  int multistart_count = 8;
  int refine_iterations = 400;
  double tol_solve = 1e-6;
  double tol_accept = 1e-3;
  double price_floor = 1e-6;
  std::uint64_t seed = 42;
  /// Potential weights; empty means all ones.
  Vector weights;
  int negishi_max_iterations = 200;
  /// Upper bound on the points of any single grid scan.
  long max_grid_points = 40000;
  /// Worker cap for grid scans; 0 reads GEQ_THREADS, falling back to one.
  int threads = 0;

  void validate() const;
  int resolved_threads() const;
};

}  // namespace geq
