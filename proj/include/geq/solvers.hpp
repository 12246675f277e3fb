#pragma once

#include <optional>
#include <string>
#include <vector>

#include "geq/duality.hpp"
#include "geq/economy.hpp"
#include "geq/types.hpp"

namespace geq {

enum class ResultKind { walrasian, yquilibrium };

enum class SolveStatus {
  ok,
  no_root,            // best potential stays below -tol_solve
  config_too_coarse,  // search budget exhausted before a fixed point was located
  non_convergence,
};

std::string to_string(ResultKind kind);
std::string to_string(SolveStatus status);

struct SolverDiagnostics {
  long evaluations = 0;  // potential evaluations, inner and outer
  int iterations = 0;    // outer refinement or fixed-point iterations
  int restarts = 0;
  double clearing_residual = 0.0;  // || sum_i x_i - w ||_inf
  double budget_residual = 0.0;    // max_i |<p|x_i> - m_i|
  std::vector<std::string> warnings;
  SolveStatus status = SolveStatus::ok;
};

/// Another optimum within tol_accept of the reported one.
struct Alternate {
  Allocation allocation;
  Vector prices;
  double potential = 0.0;
};

struct EquilibriumResult {
  Allocation allocation;
  Vector prices;
  Vector incomes;
  double potential = 0.0;
  /// gap_i = vbar_i(p, m_i) - u_i(x_i).
  Vector gaps;
  Vector weights;
  ResultKind kind = ResultKind::walrasian;

  bool multiple = false;
  std::vector<Alternate> alternates;
  /// Grid prices whose profile value is within tol_solve of the optimum, and
  /// their componentwise range. Empty unless prices are indeterminate.
  std::vector<Vector> price_set;
  Vector price_min;
  Vector price_max;

  SolverDiagnostics diagnostics;
};

/// Y_alpha(x, p) = sum_i alpha_i (u_i(x_i) - v_i(p, m_i)) with m_i taken from
/// the economy at p. Supply-capped indirect utilities by default.
double potential(const Economy& economy, const Allocation& x, const VectorRef& prices, const VectorRef& alpha,
                 IndirectMode mode = IndirectMode::restricted, const SolverConfig& config = {});

/// Fills incomes, potential, gaps and residuals of a result from its allocation and prices.
void evaluate_result(const Economy& economy, EquilibriumResult& result, const SolverConfig& config);

/// Walrasian equilibrium at fixed incomes by maximizing the potential over
/// normalized prices and budget-exact feasible allocations.
EquilibriumResult solve_walrasian_income(const Economy& economy, const SolverConfig& config = {});

/// All located fixed points m = f(P(m)) of the income-to-price map, one
/// equilibrium each, ordered by the first consumer's income.
std::vector<EquilibriumResult> solve_walrasian_endowment(const Economy& economy, const SolverConfig& config = {});

/// Potential maximizer over individually rational, linear-price-consistent
/// allocations, checked for undominatedness among such allocations.
EquilibriumResult solve_yquilibrium(const Economy& economy, const SolverConfig& config = {});

struct DualWelfare {
  double value = 0.0;
  Vector prices;
  bool converged = true;
};

/// min over normalized prices of V_alpha(p) = sum_i alpha_i v_i(p, m_i(p)),
/// unrestricted indirect utilities.
DualWelfare minimize_dual_welfare(const Economy& economy, const VectorRef& alpha, const SolverConfig& config = {});

struct NegishiResult {
  Vector prices;
  Vector weights;
  double dual_welfare = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<Vector> price_trace;
  std::vector<Vector> weight_trace;
};

/// Alternates Negishi weights at the current price with dual welfare
/// minimization until the price moves less than tol_solve.
NegishiResult dual_negishi_minimize(const Economy& economy, const SolverConfig& config = {});

struct PriceConsistency {
  enum class Kind { none, vertices, whole_simplex };
  Kind kind = Kind::none;
  /// Extreme points of {p >= 0 : <p|x_i - omega_i> = 0, <p|w> = 1}.
  std::vector<Vector> vertices;

  bool consistent() const noexcept { return kind != Kind::none; }
};

/// Normalized prices under which every consumer's bundle costs its endowment.
PriceConsistency linear_price_consistent(const Allocation& x, const Allocation& endowments, const Vector& supply,
                                         double tol = 1e-9);

}  // namespace geq
