#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <thread>
#include <vector>

#include "geq/types.hpp"

/// Derivative-free search primitives shared by the duality and solver code:
/// tensor grids on the unit cube, compass pattern search, and charts that map
/// the unit cube onto price simplices, budget sets and budget-exact allocations.
namespace geq::search {

inline constexpr double kInfeasible = std::numeric_limits<double>::infinity();

struct PatternResult {
  Vector x;
  double value = kInfeasible;
  long evaluations = 0;
  bool converged = false;
};

/// Minimizes f over [0,1]^d by compass search with step halving.
///
/// Only strict improvements move the incumbent, so a start point on a plateau
/// stays put. A move of length `step` must gain more than flat * step, which
/// keeps the incumbent from drifting along nearly level ridges. f may return
/// +inf to mark infeasible points.
template <typename F>
PatternResult pattern_search(F&& f, Vector x0, double initial_step, double min_step,
                             long max_evaluations, double flat = 0.0) {
  PatternResult r;
  r.x = std::move(x0);
  r.value = f(r.x);
  r.evaluations = 1;
  double step = initial_step;
  Vector trial = r.x;
  while (step >= min_step && r.evaluations < max_evaluations) {
    bool improved = false;
    for (Eigen::Index d = 0; d < r.x.size() && !improved; ++d) {
      for (const double sign : {1.0, -1.0}) {
        trial = r.x;
        trial[d] = std::clamp(r.x[d] + sign * step, 0.0, 1.0);
        if (trial[d] == r.x[d]) continue;
        const double v = f(trial);
        ++r.evaluations;
        if (v < r.value - flat * step) {
          // Keep moving in the successful direction while it pays off.
          r.x = trial;
          r.value = v;
          for (;;) {
            trial[d] = std::clamp(r.x[d] + sign * step, 0.0, 1.0);
            if (trial[d] == r.x[d] || r.evaluations >= max_evaluations) break;
            const double w = f(trial);
            ++r.evaluations;
            if (!(w < r.value - flat * step)) break;
            r.x = trial;
            r.value = w;
          }
          improved = true;
          break;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  r.converged = step < min_step;
  return r;
}

/// Number of points of a tensor grid; saturates instead of overflowing.
long grid_size(int dims, int resolution);

/// Largest per-dimension resolution <= requested whose grid has at most max_points points.
int capped_resolution(int dims, int requested, long max_points);

/// Coordinates of grid point `index` on [0,1]^dims, endpoints included,
/// first coordinate varying slowest (so index order is lexicographic).
void grid_point(long index, int dims, int resolution, double* out);

/// Runs body(i) for i in [0, n) on up to `threads` workers. Results must be
/// written to per-index slots; reduction happens afterwards in index order.
template <typename Body>
void parallel_for(long n, int threads, Body&& body) {
  if (threads <= 1 || n < 2 * threads) {
    for (long i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> workers;
  const long chunk = (n + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const long begin = t * chunk;
    const long end = std::min(n, begin + chunk);
    if (begin >= end) break;
    workers.emplace_back([&body, begin, end] {
      for (long i = begin; i < end; ++i) body(i);
    });
  }
  for (auto& w : workers) w.join();
}

/// Unit cube [0,1]^{K-1} onto price vectors with <p|w> = 1 and every value
/// share p_k w_k >= floor. Lexicographic order of the cube coordinates matches
/// lexicographic order of the prices.
class PriceChart {
 public:
  PriceChart(Vector supply, double floor);

  int dims() const noexcept { return static_cast<int>(supply_.size()) - 1; }
  Vector prices(const VectorRef& theta) const;
  Vector coordinates(const VectorRef& prices) const;

 private:
  Vector supply_;
  double floor_;
};

/// Unit cube [0,1]^{K-1} onto the budget set {0 <= x <= cap, <p|x> = m},
/// filling goods in index order. Requires p > 0 and 0 <= m <= <p|cap>.
class BudgetChart {
 public:
  BudgetChart(Vector prices, Vector cap, double income);

  int dims() const noexcept { return static_cast<int>(prices_.size()) - 1; }
  void map(const double* theta, double* bundle) const;
  void coordinates(const double* bundle, double* theta) const;
  Vector map(const VectorRef& theta) const;

 private:
  Vector prices_;
  Vector cap_;
  Vector tail_value_;  // sum_{j > k} p_j cap_j
  double income_;
};

/// Unit cube onto budget-exact allocations of the whole supply: consumer i < N-1
/// picks from its budget set capped by what earlier consumers left; the last
/// consumer receives the remainder. Every allocation with sum_i x_i = w and
/// <p|x_i> = m_i is reachable. Requires sum_i m_i = <p|w>.
class AllocationChart {
 public:
  AllocationChart(Vector prices, Vector incomes, Vector supply);

  int dims() const noexcept { return dims_; }
  int consumers() const noexcept { return static_cast<int>(incomes_.size()); }
  int goods() const noexcept { return static_cast<int>(prices_.size()); }

  void map(const VectorRef& theta, Allocation& x) const;
  Allocation map(const VectorRef& theta) const;
  /// Inverse of map for allocations in the chart's image (up to rounding).
  Vector coordinates(const Allocation& x) const;

 private:
  Vector prices_;
  Vector incomes_;
  Vector supply_;
  int dims_;
};

}  // namespace geq::search
