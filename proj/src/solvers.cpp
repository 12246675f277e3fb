#include "geq/solvers.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>

#include <Eigen/LU>

#include "geq/oracle.hpp"
#include "geq/search.hpp"

namespace geq {

std::string to_string(ResultKind kind) { return kind == ResultKind::walrasian ? "walrasian" : "yquilibrium"; }

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::ok: return "ok";
    case SolveStatus::no_root: return "no-root-found";
    case SolveStatus::config_too_coarse: return "config-too-coarse";
    case SolveStatus::non_convergence: return "non-convergence";
  }
  return "unknown";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Values this close count as equal when breaking ties lexicographically.
constexpr double kTie = 1e-9;
constexpr int kMaxDominanceChecks = 400;
// Slope below which a local move is not worth taking (see pattern_search).
constexpr double kFlat = 1e-9;

Vector resolve_weights(const Economy& e, const SolverConfig& cfg) {
  if (cfg.weights.size() == 0) return Vector::Ones(static_cast<Eigen::Index>(e.consumers()));
  if (static_cast<std::size_t>(cfg.weights.size()) != e.consumers()) {
    throw Error(ErrorCode::invalid_config, "one weight per consumer is required");
  }
  if (!(cfg.weights.array() > 0.0).all()) throw Error(ErrorCode::invalid_config, "weights must be positive");
  return cfg.weights;
}

bool lex_less(const Vector& a, const Vector& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

// Start points for local refinement: grid points within `tie` of the best
// value in index order, then the remaining best values.
std::vector<long> select_starts(const std::vector<double>& values, long count, double tie) {
  const long n = static_cast<long>(values.size());
  std::vector<long> out;
  const double best = *std::min_element(values.begin(), values.end());
  if (!std::isfinite(best)) return {0};
  for (long i = 0; i < n && static_cast<long>(out.size()) < count; ++i) {
    if (values[static_cast<std::size_t>(i)] <= best + tie * std::max(1.0, std::abs(best))) out.push_back(i);
  }
  if (static_cast<long>(out.size()) >= count) return out;
  std::vector<long> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0L);
  std::stable_sort(idx.begin(), idx.end(), [&](long a, long b) {
    return values[static_cast<std::size_t>(a)] < values[static_cast<std::size_t>(b)];
  });
  for (long i : idx) {
    if (static_cast<long>(out.size()) >= count || !std::isfinite(values[static_cast<std::size_t>(i)])) break;
    if (std::find(out.begin(), out.end(), i) == out.end()) out.push_back(i);
  }
  return out;
}

struct Inner {
  Vector theta;
  Allocation x;
  double welfare = -kInf;  // sum_i alpha_i u_i(x_i)
  std::vector<double> grid;  // negated welfare on the scan grid
  int resolution = 0;
};

struct Point {
  Vector theta;
  Vector prices;
  Vector incomes;
  Vector vbar;
  Inner inner;
  double value = -kInf;  // profile value P(p)
};

// The potential profile P(p) = max_x Y(x, p) and its maximization over prices.
class Profile {
 public:
  Profile(const Economy& e, Vector alpha, bool rational, const SolverConfig& cfg)
      : e_(e), alpha_(std::move(alpha)), rational_(rational), cfg_(cfg), chart_(e.supply(), cfg.price_floor) {
    if (rational_) {
      omega_ = e.endowments();
      floor_.resize(static_cast<Eigen::Index>(e.consumers()));
      for (std::size_t i = 0; i < e.consumers(); ++i) {
        const Vector wi = omega_.row(static_cast<Eigen::Index>(i)).transpose();
        floor_[static_cast<Eigen::Index>(i)] = e.utility(i).evaluate(wi);
      }
    }
  }

  int dims() const { return chart_.dims(); }
  long evaluations() const { return evaluations_; }

  Point evaluate(const Vector& theta, double tie = kTie, double flat = kFlat, bool keep_grid = false) const {
    Point pt;
    pt.theta = theta;
    pt.prices = chart_.prices(theta);
    pt.incomes = e_.incomes_at(pt.prices);
    pt.vbar.resize(pt.incomes.size());
    for (std::size_t i = 0; i < e_.consumers(); ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      pt.vbar[ii] = indirect_utility(e_.utility(i), pt.prices, pt.incomes[ii], e_.supply(),
                                     IndirectMode::restricted, cfg_);
    }
    pt.inner = solve_inner(pt.prices, pt.incomes, tie, flat, keep_grid);
    pt.value = std::isfinite(pt.inner.welfare) ? pt.inner.welfare - alpha_.dot(pt.vbar) : -kInf;
    return pt;
  }

  // Negated welfare of allocation chart point theta at prices p, +inf when not individually rational.
  double inner_objective(const search::AllocationChart& chart, const Vector& theta, Allocation& x) const {
    ++evaluations_;
    chart.map(theta, x);
    double welfare = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const Vector xi = x.row(i).transpose();
      const double u = e_.utility(static_cast<std::size_t>(i)).evaluate(xi);
      if (rational_ && u < floor_[i] - 1e-12 * std::max(1.0, std::abs(floor_[i]))) return search::kInfeasible;
      welfare += alpha_[i] * u;
    }
    return -welfare;
  }

  Inner solve_inner(const Vector& p, const Vector& m, double tie, double flat, bool keep_grid) const {
    search::AllocationChart chart(p, m, e_.supply());
    const int dims = chart.dims();
    Inner out;
    Allocation x;
    if (dims == 0) {
      out.theta = Vector();
      const double v = inner_objective(chart, out.theta, x);
      out.x = x;
      out.welfare = -v;
      return out;
    }
    const long budget = std::max<long>(cfg_.max_grid_points / 8, 64);
    const int res = search::capped_resolution(dims, cfg_.grid_resolution + 1, budget);
    const long n = search::grid_size(dims, res);
    std::vector<double> values(static_cast<std::size_t>(n));
    Vector theta(dims);
    for (long i = 0; i < n; ++i) {
      search::grid_point(i, dims, res, theta.data());
      values[static_cast<std::size_t>(i)] = inner_objective(chart, theta, x);
    }
    std::vector<Vector> starts;
    for (long i : select_starts(values, std::clamp(cfg_.multistart_count, 1, 4), tie)) {
      search::grid_point(i, dims, res, theta.data());
      starts.push_back(theta);
    }
    // Demand-based and no-trade seeds; the latter is always individually rational.
    Allocation seed(e_.consumers(), e_.goods());
    Vector rest = e_.supply();
    for (std::size_t i = 0; i < e_.consumers(); ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      const Demand d = marshallian_demand(e_.utility(i), p, m[ii], e_.supply(), IndirectMode::restricted, cfg_);
      seed.row(ii) = d.bundle.cwiseMin(rest).transpose();
      rest = (rest - seed.row(ii).transpose()).cwiseMax(0.0);
    }
    starts.push_back(chart.coordinates(seed));
    if (rational_) starts.push_back(chart.coordinates(omega_));

    auto f = [&](const Vector& t) {
      Allocation y;
      return inner_objective(chart, t, y);
    };
    search::PatternResult best;
    for (const auto& s : starts) {
      auto r = search::pattern_search(f, s, 1.0 / (res - 1), 1e-12, cfg_.refine_iterations, flat);
      if (!std::isfinite(r.value)) continue;
      const double slack = tie * std::max(1.0, std::abs(r.value));
      if (!std::isfinite(best.value) || r.value < best.value - slack ||
          (r.value <= best.value + slack && lex_less(r.x, best.x))) {
        best = std::move(r);
      }
    }
    if (!std::isfinite(best.value)) return out;
    out.theta = best.x;
    chart.map(best.x, out.x);
    out.welfare = -best.value;
    if (keep_grid) {
      out.grid = std::move(values);
      out.resolution = res;
    }
    return out;
  }

  std::vector<double> scan(int res, int threads) const {
    const int d = dims();
    const long n = search::grid_size(d, res);
    std::vector<double> values(static_cast<std::size_t>(n));
    search::parallel_for(n, threads, [&](long i) {
      Vector theta(d);
      search::grid_point(i, d, res, theta.data());
      values[static_cast<std::size_t>(i)] = -evaluate(theta).value;
    });
    return values;
  }

  // Smallest value of coordinate d (others fixed) whose profile value stays
  // within the tie tolerance of `level`; prefers the lexicographically smallest price.
  Vector pull_down(Vector theta, double level, double step) const {
    const double tie = kTie * std::max(1.0, std::abs(level));
    auto ok = [&](const Vector& t) { return evaluate(t).value >= level - tie; };
    for (Eigen::Index d = 0; d < theta.size(); ++d) {
      Vector good = theta, probe = theta;
      bool bracketed = false;
      while (good[d] > 0.0) {
        probe[d] = std::max(0.0, good[d] - step);
        if (!ok(probe)) {
          bracketed = true;
          break;
        }
        good[d] = probe[d];
      }
      if (bracketed) {
        double lo = probe[d], hi = good[d];
        for (int it = 0; it < 60 && hi - lo > 1e-13; ++it) {
          probe[d] = 0.5 * (lo + hi);
          if (ok(probe)) hi = probe[d];
          else lo = probe[d];
        }
        good[d] = hi;
      }
      theta = good;
    }
    return theta;
  }

  const Economy& economy() const { return e_; }
  const Vector& alpha() const { return alpha_; }

 private:
  const Economy& e_;
  Vector alpha_;
  bool rational_;
  const SolverConfig& cfg_;
  search::PriceChart chart_;
  Allocation omega_;
  Vector floor_;
  mutable std::atomic<long> evaluations_{0};
};

struct Candidate {
  Vector theta;
  double value;
};

// Grid scan and multistart refinement of the profile; candidates sorted best
// first, ties by lexicographic price.
std::vector<Candidate> maximize_profile(const Profile& profile, const SolverConfig& cfg, int& restarts,
                                        std::vector<double>* grid_values = nullptr, int* grid_res = nullptr) {
  const int d = profile.dims();
  if (d == 0) return {{Vector(), profile.evaluate(Vector()).value}};
  const int res = search::capped_resolution(d, cfg.grid_resolution + 1, cfg.max_grid_points);
  const auto values = profile.scan(res, cfg.resolved_threads());
  const double h = 1.0 / (res - 1);
  std::vector<Candidate> out;
  Vector theta(d);
  auto f = [&](const Vector& t) { return -profile.evaluate(t).value; };
  for (long i : select_starts(values, std::max(1, cfg.multistart_count), kTie)) {
    search::grid_point(i, d, res, theta.data());
    auto r = search::pattern_search(f, theta, h, 1e-12, cfg.refine_iterations, kFlat);
    ++restarts;
    if (std::isfinite(r.value)) out.push_back({r.x, -r.value});
  }
  std::stable_sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) {
    const double slack = kTie * std::max({1.0, std::abs(a.value), std::abs(b.value)});
    if (std::abs(a.value - b.value) > slack) return a.value > b.value;
    return lex_less(a.theta, b.theta);
  });
  if (grid_values) *grid_values = values;
  if (grid_res) *grid_res = res;
  return out;
}

EquilibriumResult finish(const Profile& profile, const Point& pt, ResultKind kind, const SolverConfig& cfg) {
  const Economy& e = profile.economy();
  EquilibriumResult r;
  r.kind = kind;
  r.allocation = pt.inner.x;
  r.prices = pt.prices;
  r.weights = profile.alpha();
  evaluate_result(e, r, cfg);

  // Other allocations at the same prices within tol_accept: the lexicographic
  // extremes of the near-optimal inner grid points.
  if (!pt.inner.grid.empty()) {
    search::AllocationChart chart(pt.prices, pt.incomes, e.supply());
    const int dims = chart.dims();
    const double level = -pt.inner.welfare + cfg.tol_accept;
    long first = -1, last = -1;
    for (long i = 0; i < static_cast<long>(pt.inner.grid.size()); ++i) {
      if (pt.inner.grid[static_cast<std::size_t>(i)] <= level) {
        if (first < 0) first = i;
        last = i;
      }
    }
    for (long i : {first, last}) {
      if (i < 0) continue;
      Vector theta(dims);
      search::grid_point(i, dims, pt.inner.resolution, theta.data());
      Allocation y;
      auto f = [&](const Vector& t) { return profile.inner_objective(chart, t, y); };
      auto s = search::pattern_search(f, theta, 1.0 / (pt.inner.resolution - 1), 1e-12, cfg.refine_iterations,
                                      0.1 * cfg.tol_solve);
      if (!std::isfinite(s.value) || -s.value < pt.inner.welfare - cfg.tol_accept) continue;
      Allocation x = chart.map(s.x);
      bool fresh = (x - r.allocation).cwiseAbs().maxCoeff() > 10.0 * cfg.tol_accept;
      for (const auto& a : r.alternates) fresh = fresh && (x - a.allocation).cwiseAbs().maxCoeff() > 10.0 * cfg.tol_accept;
      if (fresh) r.alternates.push_back({x, pt.prices, potential(e, x, pt.prices, profile.alpha(), IndirectMode::restricted, cfg)});
    }
  }
  r.multiple = !r.alternates.empty();
  r.diagnostics.evaluations = profile.evaluations();
  return r;
}

void attach_price_set(EquilibriumResult& r, const std::vector<double>& grid, int res, double best,
                      const SolverConfig& cfg, const Economy& e) {
  if (grid.empty()) return;
  const int d = static_cast<int>(e.goods()) - 1;
  search::PriceChart chart(e.supply(), cfg.price_floor);
  std::vector<Vector> set;
  Vector theta(d);
  for (long i = 0; i < static_cast<long>(grid.size()); ++i) {
    if (-grid[static_cast<std::size_t>(i)] < best - cfg.tol_solve) continue;
    search::grid_point(i, d, res, theta.data());
    set.push_back(chart.prices(theta));
  }
  if (set.size() < 2) return;
  Vector lo = set.front(), hi = set.front();
  for (const auto& p : set) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  if ((hi - lo).maxCoeff() <= 10.0 * cfg.tol_accept) return;
  const std::size_t stride = std::max<std::size_t>(1, set.size() / 64);
  for (std::size_t i = 0; i < set.size(); i += stride) r.price_set.push_back(set[i]);
  r.price_min = lo;
  r.price_max = hi;
  r.multiple = true;
}

void check_root(EquilibriumResult& r, const SolverConfig& cfg) {
  if (r.potential < -cfg.tol_solve) {
    r.diagnostics.status = SolveStatus::no_root;
    r.diagnostics.warnings.push_back("potential maximum is negative; no root found (non-convex economy or grid too coarse)");
  }
}

}  // namespace

double potential(const Economy& economy, const Allocation& x, const VectorRef& prices, const VectorRef& alpha,
                 IndirectMode mode, const SolverConfig& config) {
  if (static_cast<std::size_t>(x.rows()) != economy.consumers() || static_cast<std::size_t>(x.cols()) != economy.goods()) {
    throw Error(ErrorCode::dimension_mismatch, "allocation must be N x K");
  }
  if (static_cast<std::size_t>(alpha.size()) != economy.consumers()) {
    throw Error(ErrorCode::dimension_mismatch, "one weight per consumer is required");
  }
  const Vector m = economy.incomes_at(prices);
  double y = 0.0;
  for (std::size_t i = 0; i < economy.consumers(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const Vector xi = x.row(ii).transpose().cwiseMax(0.0);
    y += alpha[ii] * (economy.utility(i).evaluate(xi) -
                      indirect_utility(economy.utility(i), prices, m[ii], economy.supply(), mode, config));
  }
  return y;
}

void evaluate_result(const Economy& economy, EquilibriumResult& r, const SolverConfig& config) {
  if (r.weights.size() == 0) r.weights = Vector::Ones(static_cast<Eigen::Index>(economy.consumers()));
  r.incomes = economy.incomes_at(r.prices);
  r.gaps.resize(r.incomes.size());
  for (std::size_t i = 0; i < economy.consumers(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const Vector xi = r.allocation.row(ii).transpose().cwiseMax(0.0);
    r.gaps[ii] = indirect_utility(economy.utility(i), r.prices, r.incomes[ii], economy.supply(),
                                  IndirectMode::restricted, config) -
                 economy.utility(i).evaluate(xi);
  }
  r.potential = -r.weights.dot(r.gaps);
  r.diagnostics.clearing_residual = (r.allocation.colwise().sum().transpose() - economy.supply()).cwiseAbs().maxCoeff();
  r.diagnostics.budget_residual = (r.allocation * r.prices - r.incomes).cwiseAbs().maxCoeff();
}

EquilibriumResult solve_walrasian_income(const Economy& economy, const SolverConfig& config) {
  config.validate();
  if (economy.parameterization() != Parameterization::income) {
    throw Error(ErrorCode::invalid_parameter, "walrasian income solver needs an income-parameterized economy");
  }
  Profile profile(economy, resolve_weights(economy, config), false, config);
  int restarts = 0;
  std::vector<double> grid;
  int res = 0;
  auto candidates = maximize_profile(profile, config, restarts, &grid, &res);
  const Candidate& best = candidates.front();
  const Vector theta = profile.dims() ? profile.pull_down(best.theta, best.value, 1.0 / (res - 1)) : best.theta;
  const Point pt = profile.evaluate(theta, 0.1 * config.tol_solve, 0.1 * config.tol_solve, true);
  EquilibriumResult r = finish(profile, pt, ResultKind::walrasian, config);
  attach_price_set(r, grid, res, best.value, config, economy);
  r.diagnostics.restarts = restarts;
  r.diagnostics.iterations = static_cast<int>(candidates.size());
  r.diagnostics.evaluations = profile.evaluations();
  check_root(r, config);
  return r;
}

std::vector<EquilibriumResult> solve_walrasian_endowment(const Economy& economy, const SolverConfig& config) {
  config.validate();
  if (economy.parameterization() != Parameterization::endowment) {
    throw Error(ErrorCode::invalid_parameter, "walrasian endowment solver needs an endowment-parameterized economy");
  }
  const std::size_t n = economy.consumers();
  const Allocation omega = economy.endowments();
  long evaluations = 0;
  // f(P(m)): endowment incomes at the equilibrium price for incomes m.
  auto image = [&](const Vector& m) {
    const Economy at = economy.with_incomes(m);
    EquilibriumResult r = solve_walrasian_income(at, config);
    evaluations += r.diagnostics.evaluations;
    Vector f = omega * r.prices;
    return std::make_pair(Vector(f / f.sum()), std::move(r));
  };
  auto solve_at = [&](Vector m) {
    auto [f, r] = image(m);
    // Snap to the image; at a fixed point this is a no-op up to rounding.
    if ((f - m).cwiseAbs().maxCoeff() > 0.0) std::tie(f, r) = image(f);
    const double residual = (f - r.incomes).cwiseAbs().maxCoeff();
    if (residual > config.tol_solve) {
      r.diagnostics.status = SolveStatus::config_too_coarse;
      r.diagnostics.warnings.push_back("fixed-point residual " + std::to_string(residual) + " exceeds tol-solve");
    }
    return r;
  };

  std::vector<EquilibriumResult> out;
  if (n == 1) {
    out.push_back(solve_at(Vector::Ones(1)));
  } else if (n == 2) {
    auto resid = [&](double m1) {
      Vector m(2);
      m << m1, 1.0 - m1;
      return image(m).first[0] - m1;
    };
    const int points = 21;
    std::vector<double> xs(points), rs(points);
    for (int i = 0; i < points; ++i) {
      xs[static_cast<std::size_t>(i)] = static_cast<double>(i) / (points - 1);
      rs[static_cast<std::size_t>(i)] = resid(xs[static_cast<std::size_t>(i)]);
    }
    std::vector<double> roots;
    for (int i = 0; i + 1 < points; ++i) {
      double a = xs[static_cast<std::size_t>(i)], b = xs[static_cast<std::size_t>(i + 1)];
      double fa = rs[static_cast<std::size_t>(i)], fb = rs[static_cast<std::size_t>(i + 1)];
      if (fa == 0.0) {
        roots.push_back(a);
        continue;
      }
      if (i + 2 == points && fb == 0.0) roots.push_back(b);
      if (fa * fb >= 0.0) continue;
      // Illinois regula falsi.
      int side = 0;
      double c = a;
      for (int it = 0; it < 100 && b - a > 1e-13; ++it) {
        c = (a * fb - b * fa) / (fb - fa);
        const double fc = resid(c);
        if (std::abs(fc) < 1e-3 * config.tol_solve) break;
        if (fc * fb > 0.0) {
          b = c;
          fb = fc;
          if (side == -1) fa *= 0.5;
          side = -1;
        } else {
          a = c;
          fa = fc;
          if (side == 1) fb *= 0.5;
          side = 1;
        }
      }
      roots.push_back(c);
    }
    for (double m1 : roots) {
      if (!out.empty() && std::abs(out.back().incomes[0] - m1) < 1e-6) continue;
      Vector m(2);
      m << m1, 1.0 - m1;
      out.push_back(solve_at(m));
    }
  } else {
    const int d = static_cast<int>(n) - 1;
    search::PriceChart simplex(Vector::Ones(static_cast<Eigen::Index>(n)), 0.0);
    auto f = [&](const Vector& t) {
      const Vector m = simplex.prices(t);
      return (image(m).first - m).cwiseAbs().maxCoeff();
    };
    const int res = 6;
    const long points = search::grid_size(d, res);
    double best = kInf;
    Vector theta(d), start(d);
    for (long i = 0; i < points; ++i) {
      search::grid_point(i, d, res, theta.data());
      const double v = f(theta);
      if (v < best) {
        best = v;
        start = theta;
      }
    }
    auto r = search::pattern_search(f, start, 1.0 / (res - 1), 1e-10, config.refine_iterations);
    out.push_back(solve_at(simplex.prices(r.x)));
  }
  for (auto& r : out) r.diagnostics.evaluations = evaluations;
  return out;
}

EquilibriumResult solve_yquilibrium(const Economy& economy, const SolverConfig& config) {
  config.validate();
  if (economy.parameterization() != Parameterization::endowment) {
    throw Error(ErrorCode::invalid_parameter, "yquilibrium solver needs an endowment-parameterized economy");
  }
  Profile profile(economy, resolve_weights(economy, config), true, config);
  int restarts = 0;
  std::vector<double> grid;
  int res = 0;
  auto candidates = maximize_profile(profile, config, restarts, &grid, &res);
  const bool checkable = economy.consumers() <= oracle::kMaxConsumers && economy.goods() <= oracle::kMaxGoods;
  const int dominance_res = std::min(config.grid_resolution, economy.consumers() > 2 ? 60 : 200);

  std::vector<EquilibriumResult> tried;
  std::vector<Vector> seen;
  for (const auto& c : candidates) {
    const Vector theta = profile.dims() ? profile.pull_down(c.theta, c.value, 1.0 / (res - 1)) : c.theta;
    if (std::any_of(seen.begin(), seen.end(), [&](const Vector& s) {
          return (s - theta).cwiseAbs().maxCoeff() <= 10.0 * config.tol_accept;
        })) {
      continue;
    }
    seen.push_back(theta);
    const Point pt = profile.evaluate(theta, 0.1 * config.tol_solve, 0.1 * config.tol_solve, true);
    EquilibriumResult r = finish(profile, pt, ResultKind::yquilibrium, config);
    r.diagnostics.restarts = restarts;
    r.diagnostics.iterations = static_cast<int>(candidates.size());
    if (!checkable) {
      r.diagnostics.warnings.push_back("economy too large for the dominance check; undominatedness not verified");
      return r;
    }
    if (!oracle::pareto_improvement_search(economy, r.allocation, dominance_res, true, config)) {
      if (!tried.empty()) {
        r.diagnostics.warnings.push_back(std::to_string(tried.size()) +
                                         " higher-potential candidate(s) were dominated and skipped");
      }
      r.diagnostics.evaluations = profile.evaluations();
      return r;
    }
    tried.push_back(std::move(r));
  }

  // Every refined candidate is dominated, e.g. when no-trade has the larger
  // potential. Walk the price grid best first and refine the first
  // undominated point with dominated prices treated as infeasible.
  if (profile.dims() > 0) {
    std::vector<Allocation> rejected;
    for (const auto& t : tried) rejected.push_back(t.allocation);
    auto dominated = [&](const Allocation& x) {
      for (const auto& a : rejected) {
        if ((a - x).cwiseAbs().maxCoeff() <= config.tol_solve) return true;
      }
      if (oracle::pareto_improvement_search(economy, x, dominance_res, true, config)) {
        rejected.push_back(x);
        return true;
      }
      return false;
    };
    std::vector<long> order(grid.size());
    std::iota(order.begin(), order.end(), 0L);
    std::stable_sort(order.begin(), order.end(),
                     [&](long a, long b) { return grid[static_cast<std::size_t>(a)] < grid[static_cast<std::size_t>(b)]; });
    const int d = profile.dims();
    int checks = 0;
    for (long i : order) {
      if (!std::isfinite(grid[static_cast<std::size_t>(i)]) || checks >= kMaxDominanceChecks) break;
      Vector theta(d);
      search::grid_point(i, d, res, theta.data());
      const Point start = profile.evaluate(theta);
      ++checks;
      if (dominated(start.inner.x)) continue;
      auto f = [&](const Vector& t) {
        const Point pt = profile.evaluate(t);
        if (!std::isfinite(pt.value) || dominated(pt.inner.x)) return search::kInfeasible;
        return -pt.value;
      };
      const auto refined = search::pattern_search(f, theta, 1.0 / (res - 1), 1e-12, config.refine_iterations, kFlat);
      const Point pt = profile.evaluate(refined.x, 0.1 * config.tol_solve, 0.1 * config.tol_solve, true);
      EquilibriumResult r = finish(profile, pt, ResultKind::yquilibrium, config);
      r.diagnostics.restarts = restarts;
      r.diagnostics.iterations = static_cast<int>(candidates.size()) + checks;
      r.diagnostics.warnings.push_back(std::to_string(rejected.size()) +
                                       " higher-potential allocation(s) were dominated and skipped");
      r.diagnostics.evaluations = profile.evaluations();
      return r;
    }
  }
  if (tried.empty()) throw Error(ErrorCode::non_convergence, "no individually rational point on the price grid");
  EquilibriumResult r = std::move(tried.front());
  r.diagnostics.status = SolveStatus::config_too_coarse;
  r.diagnostics.warnings.push_back("every candidate has a Pareto improvement on the dominance grid");
  r.diagnostics.evaluations = profile.evaluations();
  return r;
}

DualWelfare minimize_dual_welfare(const Economy& economy, const VectorRef& alpha, const SolverConfig& config) {
  if (static_cast<std::size_t>(alpha.size()) != economy.consumers()) {
    throw Error(ErrorCode::dimension_mismatch, "one weight per consumer is required");
  }
  search::PriceChart chart(economy.supply(), config.price_floor);
  const int d = chart.dims();
  auto f = [&](const Vector& theta) {
    const Vector p = chart.prices(theta);
    const Vector m = economy.incomes_at(p);
    double v = 0.0;
    for (std::size_t i = 0; i < economy.consumers(); ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      v += alpha[ii] * indirect_utility(economy.utility(i), p, m[ii], economy.supply(), IndirectMode::unrestricted, config);
    }
    return v;
  };
  DualWelfare out;
  if (d == 0) {
    out.prices = chart.prices(Vector());
    out.value = f(Vector());
    return out;
  }
  const int res = search::capped_resolution(d, config.grid_resolution + 1, config.max_grid_points);
  const long n = search::grid_size(d, res);
  std::vector<double> values(static_cast<std::size_t>(n));
  search::parallel_for(n, config.resolved_threads(), [&](long i) {
    Vector theta(d);
    search::grid_point(i, d, res, theta.data());
    values[static_cast<std::size_t>(i)] = f(theta);
  });
  search::PatternResult best;
  Vector theta(d);
  for (long i : select_starts(values, std::max(1, config.multistart_count), kTie)) {
    search::grid_point(i, d, res, theta.data());
    auto r = search::pattern_search(f, theta, 1.0 / (res - 1), 1e-13, config.refine_iterations);
    if (r.value < best.value) best = std::move(r);
  }
  out.value = best.value;
  out.prices = chart.prices(best.x);
  out.converged = best.converged;
  return out;
}

NegishiResult dual_negishi_minimize(const Economy& economy, const SolverConfig& config) {
  config.validate();
  NegishiResult out;
  out.prices = (Vector::Ones(economy.supply().size()).array() /
                (economy.supply().array() * static_cast<double>(economy.goods())))
                   .matrix();
  for (int it = 0; it < config.negishi_max_iterations; ++it) {
    const Vector m = economy.incomes_at(out.prices);
    const NegishiWeights w = negishi_weights(economy, out.prices, m, IndirectMode::unrestricted, config);
    if (!w.zero_marginal_utility.empty()) {
      out.weights = w.alpha;
      return out;
    }
    const DualWelfare dw = minimize_dual_welfare(economy, w.alpha, config);
    out.weights = w.alpha;
    out.weight_trace.push_back(w.alpha);
    out.price_trace.push_back(dw.prices);
    out.iterations = it + 1;
    const double moved = (dw.prices - out.prices).cwiseAbs().maxCoeff();
    out.prices = dw.prices;
    out.dual_welfare = dw.value;
    if (moved < config.tol_solve) {
      out.converged = true;
      break;
    }
  }
  return out;
}

PriceConsistency linear_price_consistent(const Allocation& x, const Allocation& endowments, const Vector& supply,
                                         double tol) {
  if (x.rows() != endowments.rows() || x.cols() != endowments.cols() || x.cols() != supply.size()) {
    throw Error(ErrorCode::dimension_mismatch, "allocation, endowments and supply dimensions differ");
  }
  const Eigen::Index k = supply.size();
  if (k > 16) throw Error(ErrorCode::complexity_guard, "vertex enumeration supports at most 16 goods");
  const Eigen::MatrixXd trade = x - endowments;
  PriceConsistency out;
  if (trade.cwiseAbs().maxCoeff() <= tol) {
    out.kind = PriceConsistency::Kind::whole_simplex;
    return out;
  }
  // Basic feasible solutions of {p >= 0, trade p = 0, <p|w> = 1}.
  Eigen::MatrixXd a(trade.rows() + 1, k);
  a << trade, supply.transpose();
  Vector b = Vector::Zero(a.rows());
  b[a.rows() - 1] = 1.0;
  for (unsigned mask = 1; mask < (1u << k); ++mask) {
    std::vector<Eigen::Index> cols;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (mask & (1u << j)) cols.push_back(j);
    }
    Eigen::MatrixXd sub(a.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) sub.col(static_cast<Eigen::Index>(c)) = a.col(cols[c]);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(sub);
    lu.setThreshold(1e-10);
    if (lu.rank() != static_cast<Eigen::Index>(cols.size())) continue;
    const Vector ps = lu.solve(b);
    if ((sub * ps - b).cwiseAbs().maxCoeff() > tol * std::max(1.0, trade.cwiseAbs().maxCoeff())) continue;
    if ((ps.array() < -tol).any()) continue;
    Vector p = Vector::Zero(k);
    for (std::size_t c = 0; c < cols.size(); ++c) p[cols[c]] = std::max(0.0, ps[static_cast<Eigen::Index>(c)]);
    p /= p.dot(supply);
    const bool fresh = std::none_of(out.vertices.begin(), out.vertices.end(),
                                    [&](const Vector& q) { return (q - p).cwiseAbs().maxCoeff() <= 1e-9; });
    if (fresh) out.vertices.push_back(p);
  }
  std::sort(out.vertices.begin(), out.vertices.end(), lex_less);
  if (!out.vertices.empty()) out.kind = PriceConsistency::Kind::vertices;
  return out;
}

}  // namespace geq
