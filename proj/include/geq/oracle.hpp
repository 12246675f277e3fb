#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "geq/duality.hpp"
#include "geq/economy.hpp"
#include "geq/solvers.hpp"
#include "geq/types.hpp"

/// Brute-force reference computations. Utilities are recompiled from their
/// expression form and indirect utilities are found by scanning budget sets,
/// so nothing here shares code with the solvers it is used to check.
namespace geq::oracle {

/// Largest economy the grid scans accept.
inline constexpr std::size_t kMaxConsumers = 3;
inline constexpr std::size_t kMaxGoods = 3;
/// Upper bound on the points of a single exhaustive scan.
inline constexpr double kMaxScanPoints = 2.5e8;

/// Supply-capped (or unrestricted) indirect utility by budget-set scan and zoom.
double indirect_utility(const Economy& economy, std::size_t consumer, const VectorRef& prices, double income,
                        IndirectMode mode = IndirectMode::restricted, int resolution = 400);

/// Scans a price grid times a budget-exact allocation grid for the potential
/// maximizer, then rescans once around the best point. Ties go to the
/// lexicographically smallest price, then allocation. Yquilibrium mode adds
/// individual rationality and skips candidates with a Pareto improvement
/// among linear-price-consistent allocations.
EquilibriumResult brute_force_equilibrium(const Economy& economy, ResultKind mode, int resolution,
                                          const SolverConfig& config = {});

/// A feasible allocation weakly better for everyone and better by more than
/// tol_accept for someone, or nullopt. With restrict_linear_prices the search
/// covers only allocations that are budget-exact at some common price.
std::optional<Allocation> pareto_improvement_search(const Economy& economy, const Allocation& x, int resolution,
                                                    bool restrict_linear_prices, const SolverConfig& config = {});

struct PointCloud {
  enum class Kind { ups, vps };
  Kind kind = Kind::ups;
  std::size_t consumers = 0;
  /// One row per sample: utilities u_1..u_N.
  std::vector<Vector> points;
  /// The allocation (flattened, consumer-major) or (p, m) that generated each sample.
  std::vector<Vector> generators;
  std::vector<std::string> generator_columns;
  /// Maximal (UPS) or minimal (VPS) within the cloud.
  std::vector<bool> frontier;
};

PointCloud sample_ups(const Economy& economy, int resolution, const SolverConfig& config = {});
PointCloud sample_vps(const Economy& economy, int resolution, IndirectMode mode = IndirectMode::restricted,
                      const SolverConfig& config = {});

/// Recomputes frontier flags: a point is off the frontier when another point is
/// at least as good for every consumer and better by more than `slack` for one.
void mark_frontier(PointCloud& cloud, double slack);

struct ContractPoint {
  Allocation allocation;
  std::optional<Vector> prices;
  Vector utilities;
};

/// Individually rational allocations on the grid that no other sampled
/// candidate dominates by more than tol_accept. With linear_prices the
/// candidates are budget-exact at a common grid price, which is certified
/// afterwards.
std::vector<ContractPoint> contract_surface_sample(const Economy& economy, int resolution, bool linear_prices = true,
                                                   const SolverConfig& config = {});

/// CSV with columns u_1..u_N, frontier, then the generator columns.
void write_csv(std::ostream& out, const PointCloud& cloud);

}  // namespace geq::oracle
