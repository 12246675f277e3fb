#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <shared_mutex>
#include <vector>

#include "geq/economy.hpp"
#include "geq/types.hpp"
#include "geq/utility.hpp"

namespace geq {

enum class IndirectMode {
  unrestricted,  // max over the whole budget hyperplane
  restricted,    // max over the budget hyperplane intersected with [0, w]
};

struct Demand {
  Bundle bundle;
  double utility = 0.0;
  /// Set when the maximizer is not unique; `bundle` is then the
  /// lexicographically smallest extremal maximizer.
  bool multiple = false;
  bool converged = true;
};

/// Utility-maximizing bundle on the budget {x >= 0 : <p|x> = m}, optionally
/// capped at the supply. Closed forms for the built-in families, grid scan
/// plus pattern search otherwise. Prices must be strictly positive.
Demand marshallian_demand(const UtilityFunction& u, const VectorRef& prices, double income,
                          const Vector& supply, IndirectMode mode, const SolverConfig& config = {});

/// Value of the demand bundle, v(p, m) or its supply-capped variant.
double indirect_utility(const UtilityFunction& u, const VectorRef& prices, double income,
                        const Vector& supply, IndirectMode mode, const SolverConfig& config = {});

/// An indirect utility bound to its source preference and evaluation mode.
class IndirectUtility {
 public:
  IndirectUtility(UtilityFunction source, Vector supply, IndirectMode mode, SolverConfig config = {});

  double operator()(const VectorRef& prices, double income) const;
  Demand demand(const VectorRef& prices, double income) const;

  const UtilityFunction& source() const noexcept { return source_; }
  IndirectMode mode() const noexcept { return mode_; }
  /// True when evaluation does not need numeric maximization.
  bool closed_form() const noexcept;

 private:
  UtilityFunction source_;
  Vector supply_;
  IndirectMode mode_;
  SolverConfig config_;
};

struct DualValue {
  double value = 0.0;
  Vector prices;  // a minimizing normalized price
  bool converged = true;
};

/// min over normalized prices of the supply-capped indirect utility at income
/// <p|x>; this is the quasiconcave envelope of u evaluated at x.
DualValue dual_utility(const UtilityFunction& u, const VectorRef& bundle, const Vector& supply,
                       const SolverConfig& config = {});

/// Wraps u into its quasiconcave envelope on [0, supply].
UtilityFunction quasiconcavify(const UtilityFunction& u, const Vector& supply,
                               const SolverConfig& config = {});

struct NegishiWeights {
  Vector alpha;                                // +inf where the marginal utility vanishes
  std::vector<std::size_t> zero_marginal_utility;  // consumers with unbounded weight
};

/// alpha_i = 1 / (d v_i / d m_i) at (p, m_i): closed form for Cobb-Douglas,
/// central differences with h = max(1e-6, 1e-6 m_i) otherwise.
NegishiWeights negishi_weights(const Economy& economy, const VectorRef& prices, const VectorRef& incomes,
                               IndirectMode mode = IndirectMode::unrestricted,
                               const SolverConfig& config = {});

/// d v / d m at (p, m) for a single utility, as used by negishi_weights.
double marginal_utility_of_income(const UtilityFunction& u, const VectorRef& prices, double income,
                                  const Vector& supply, IndirectMode mode, const SolverConfig& config = {});

/// Sup-norm gap between the demand and -grad_p v / dv/dm. Returns nullopt when
/// v is not differentiable at (p, m) by two-sided difference comparison.
std::optional<double> roy_identity_residual(const UtilityFunction& u, const VectorRef& prices, double income,
                                            const SolverConfig& config = {});

/// Backing store of a quasiconcavified wrapper. Shared between copies.
struct QuasiconcaveEnvelope {
  QuasiconcaveEnvelope(UtilityFunction source_utility, Vector supply_cap, SolverConfig solver_config)
      : source(std::move(source_utility)), cap(std::move(supply_cap)), config(std::move(solver_config)) {}

  UtilityFunction source;
  Vector cap;
  SolverConfig config;

  double value(const VectorRef& bundle) const;

 private:
  mutable std::shared_mutex mutex_;
  mutable std::map<std::vector<std::int64_t>, double> cache_;
};

}  // namespace geq
