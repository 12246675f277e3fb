#include "geq/duality.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>

#include "geq/search.hpp"

namespace geq {

namespace {

constexpr double kTie = 1e-12;

bool ties(double a, double b) { return std::abs(a - b) <= kTie * std::max({1.0, std::abs(a), std::abs(b)}); }

void check_prices(const VectorRef& p, std::size_t goods) {
  if (static_cast<std::size_t>(p.size()) != goods) {
    throw Error(ErrorCode::dimension_mismatch, "price vector has " + std::to_string(p.size()) +
                                                   " goods, utility expects " + std::to_string(goods));
  }
  if (!p.allFinite() || (p.array() <= 0.0).any()) {
    throw Error(ErrorCode::out_of_domain, "demand needs strictly positive prices");
  }
}

// Spends `money` on goods in reverse index order up to their spare capacity,
// which yields the lexicographically smallest completion of a bundle.
double fill_from_back(Bundle& x, const VectorRef& p, const Vector& cap, double money, Eigen::Index skip = -1) {
  for (Eigen::Index k = x.size() - 1; k >= 0 && money > 0.0; --k) {
    if (k == skip) continue;
    const double room = cap[k] - x[k];
    if (room <= 0.0) continue;
    const double take = std::min(room, money / p[k]);
    x[k] += take;
    money -= take * p[k];
  }
  return money;
}

Demand cobb_douglas_demand(const UtilityFunction& u, const VectorRef& p, double m, const Vector* cap) {
  const Vector& a = u.params();
  const Eigen::Index k = a.size();
  Demand d;
  d.bundle = Vector::Zero(k);
  std::vector<bool> capped(static_cast<std::size_t>(k), false);
  for (;;) {
    double money = m, share = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (capped[static_cast<std::size_t>(j)]) money -= p[j] * (*cap)[j];
      else share += a[j];
    }
    bool changed = false;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (capped[static_cast<std::size_t>(j)]) {
        d.bundle[j] = (*cap)[j];
        continue;
      }
      d.bundle[j] = share > 0.0 ? a[j] / share * std::max(money, 0.0) / p[j] : 0.0;
      if (cap && d.bundle[j] > (*cap)[j]) {
        capped[static_cast<std::size_t>(j)] = true;
        changed = true;
      }
    }
    if (!cap || !changed) break;
  }
  d.utility = u.evaluate(d.bundle);
  return d;
}

Demand leontief_demand(const UtilityFunction& u, const VectorRef& p, double m, const Vector* cap) {
  const Vector& a = u.params();
  Demand d;
  double t = m / p.dot(a);
  if (cap) t = std::min(t, ((*cap).array() / a.array()).minCoeff());
  d.bundle = t * a;
  if (cap) {
    const double left = m - p.dot(d.bundle);
    if (left > kTie * std::max(1.0, m)) {
      fill_from_back(d.bundle, p, *cap, left);
      d.multiple = true;
    }
  }
  d.utility = u.evaluate(d.bundle);
  return d;
}

Demand linear_demand(const UtilityFunction& u, const VectorRef& p, double m, const Vector* cap) {
  const Vector& a = u.params();
  const Eigen::Index k = a.size();
  Vector ratio = a.array() / p.array();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), 0);
  // Best bang per buck first; among equals the higher index first.
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) {
    if (ties(ratio[i], ratio[j])) return i > j;
    return ratio[i] > ratio[j];
  });
  Demand d;
  d.bundle = Vector::Zero(k);
  double money = m;
  for (const Eigen::Index j : order) {
    if (money <= 0.0) break;
    const double take = cap ? std::min((*cap)[j], money / p[j]) : money / p[j];
    d.bundle[j] = take;
    money -= take * p[j];
  }
  for (Eigen::Index i = 0; i < k && !d.multiple; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      if (i == j || !ties(ratio[i], ratio[j]) || d.bundle[i] <= 0.0) continue;
      if (!cap || d.bundle[j] < (*cap)[j]) d.multiple = true;
    }
  }
  d.utility = u.evaluate(d.bundle);
  return d;
}

Demand max_linear_demand(const UtilityFunction& u, const VectorRef& p, double m, const Vector* cap) {
  const Vector& a = u.params();
  const Eigen::Index k = a.size();
  Eigen::Index best = -1;
  double value = -1.0;
  bool tied = false;
  for (Eigen::Index j = 0; j < k; ++j) {
    const double q = cap ? std::min((*cap)[j], m / p[j]) : m / p[j];
    const double v = a[j] * q;
    if (best >= 0 && ties(v, value)) {
      tied = true;
      best = j;  // higher index keeps the bundle lexicographically smaller
    } else if (v > value) {
      value = v;
      best = j;
      tied = false;
    }
  }
  Demand d;
  d.bundle = Vector::Zero(k);
  d.bundle[best] = cap ? std::min((*cap)[best], m / p[best]) : m / p[best];
  const double left = m - p[best] * d.bundle[best];
  if (cap && left > kTie * std::max(1.0, m)) {
    fill_from_back(d.bundle, p, *cap, left, best);
    tied = true;
  }
  d.multiple = tied && m > 0.0;
  d.utility = u.evaluate(d.bundle);
  return d;
}

Demand fenchel_demand(const UtilityFunction& u, const VectorRef& p, double m, const Vector* cap) {
  // Utility is monotone along every budget line, so an endpoint is optimal.
  double lo = 0.0, hi = m / p[0];
  if (cap) {
    lo = std::max(0.0, (m - p[1] * (*cap)[1]) / p[0]);
    hi = std::min((*cap)[0], hi);
  }
  Bundle a(2), b(2);
  a << lo, std::max(0.0, (m - p[0] * lo) / p[1]);
  b << hi, std::max(0.0, (m - p[0] * hi) / p[1]);
  const double ua = u.evaluate(a), ub = u.evaluate(b);
  Demand d;
  if (ties(ua, ub)) {
    d.bundle = a;
    d.utility = ua;
    d.multiple = hi - lo > kTie;
  } else if (ua > ub) {
    d.bundle = a;
    d.utility = ua;
  } else {
    d.bundle = b;
    d.utility = ub;
  }
  return d;
}

Demand numeric_demand(const UtilityFunction& u, const VectorRef& p, double m, const Vector& cap,
                      const SolverConfig& cfg) {
  const int dims = static_cast<int>(p.size()) - 1;
  search::BudgetChart chart(Vector(p), cap, m);
  Demand d;
  if (dims == 0) {
    d.bundle = chart.map(Vector());
    d.utility = u.evaluate(d.bundle);
    return d;
  }
  const int res = search::capped_resolution(dims, cfg.grid_resolution + 1, cfg.max_grid_points);
  const long n = search::grid_size(dims, res);
  std::vector<double> values(static_cast<std::size_t>(n));
  Vector theta(dims);
  Bundle x(p.size());
  for (long i = 0; i < n; ++i) {
    search::grid_point(i, dims, res, theta.data());
    chart.map(theta.data(), x.data());
    values[static_cast<std::size_t>(i)] = -u.evaluate(x);
  }
  std::vector<long> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0L);
  const auto starts = std::min<long>(n, std::max(1, cfg.multistart_count));
  std::partial_sort(idx.begin(), idx.begin() + starts, idx.end(), [&](long i, long j) {
    return values[static_cast<std::size_t>(i)] < values[static_cast<std::size_t>(j)] ||
           (values[static_cast<std::size_t>(i)] == values[static_cast<std::size_t>(j)] && i < j);
  });
  const double h = 1.0 / (res - 1);
  auto f = [&](const Vector& t) {
    Bundle b(p.size());
    chart.map(t.data(), b.data());
    return -u.evaluate(b);
  };
  search::PatternResult best;
  for (long s = 0; s < starts; ++s) {
    search::grid_point(idx[static_cast<std::size_t>(s)], dims, res, theta.data());
    auto r = search::pattern_search(f, theta, h, 1e-12, cfg.refine_iterations);
    if (r.value < best.value - kTie * std::max(1.0, std::abs(r.value)) ||
        (ties(r.value, best.value) && std::lexicographical_compare(r.x.begin(), r.x.end(), best.x.begin(), best.x.end()))) {
      best = std::move(r);
    }
  }
  d.bundle = chart.map(best.x);
  d.utility = -best.value;
  d.converged = best.converged;
  const double flat = 1e-9 * std::max(1.0, std::abs(d.utility));
  for (long i = 0; i < n && !d.multiple; ++i) {
    if (-values[static_cast<std::size_t>(i)] < d.utility - flat) continue;
    search::grid_point(i, dims, res, theta.data());
    if ((theta - best.x).cwiseAbs().maxCoeff() > 2.5 * h) d.multiple = true;
  }
  return d;
}

}  // namespace

Demand marshallian_demand(const UtilityFunction& u, const VectorRef& prices, double income, const Vector& supply,
                          IndirectMode mode, const SolverConfig& config) {
  check_prices(prices, u.goods());
  if (!std::isfinite(income) || income < -1e-12) {
    throw Error(ErrorCode::out_of_domain, "income must be nonnegative");
  }
  double m = std::max(income, 0.0);

  if (u.family() == Family::quasiconcavified) {
    // The envelope shares the restricted indirect utility of its source, and the
    // source's restricted demand attains it.
    const auto& env = *u.envelope();
    Demand d = marshallian_demand(env.source, prices, m, env.cap, IndirectMode::restricted, config);
    d.utility = std::max(d.utility, u.evaluate(d.bundle));
    return d;
  }

  const Vector* cap = nullptr;
  if (mode == IndirectMode::restricted) {
    if (static_cast<std::size_t>(supply.size()) != u.goods()) {
      throw Error(ErrorCode::dimension_mismatch, "supply and utility dimensions differ");
    }
    const double worth = prices.dot(supply);
    if (m > worth * (1.0 + 1e-9) + 1e-15) {
      throw Error(ErrorCode::out_of_domain, "income exceeds the value of the supply; budget set is empty");
    }
    m = std::min(m, worth);
    cap = &supply;
  }

  Demand d;
  switch (u.family()) {
    case Family::cobb_douglas: d = cobb_douglas_demand(u, prices, m, cap); break;
    case Family::leontief: d = leontief_demand(u, prices, m, cap); break;
    case Family::linear: d = linear_demand(u, prices, m, cap); break;
    case Family::max_linear: d = max_linear_demand(u, prices, m, cap); break;
    case Family::fenchel: d = fenchel_demand(u, prices, m, cap); break;
    default: {
      Vector c = (m / prices.array()).matrix();
      if (cap) c = c.cwiseMin(*cap);
      d = numeric_demand(u, prices, m, c, config);
    }
  }
  return d;
}

double indirect_utility(const UtilityFunction& u, const VectorRef& prices, double income, const Vector& supply,
                        IndirectMode mode, const SolverConfig& config) {
  return marshallian_demand(u, prices, income, supply, mode, config).utility;
}

IndirectUtility::IndirectUtility(UtilityFunction source, Vector supply, IndirectMode mode, SolverConfig config)
    : source_(std::move(source)), supply_(std::move(supply)), mode_(mode), config_(std::move(config)) {}

double IndirectUtility::operator()(const VectorRef& prices, double income) const {
  return indirect_utility(source_, prices, income, supply_, mode_, config_);
}

Demand IndirectUtility::demand(const VectorRef& prices, double income) const {
  return marshallian_demand(source_, prices, income, supply_, mode_, config_);
}

bool IndirectUtility::closed_form() const noexcept {
  const UtilityFunction* u = source_.source() ? source_.source() : &source_;
  return u->family() != Family::custom;
}

DualValue dual_utility(const UtilityFunction& u, const VectorRef& bundle, const Vector& supply,
                       const SolverConfig& config) {
  if (static_cast<std::size_t>(bundle.size()) != u.goods() || supply.size() != bundle.size()) {
    throw Error(ErrorCode::dimension_mismatch, "bundle, supply and utility dimensions differ");
  }
  if ((bundle.array() < -1e-12).any() || (bundle.array() > supply.array() * (1.0 + 1e-12) + 1e-12).any()) {
    throw Error(ErrorCode::out_of_domain, "bundle lies outside [0, w]");
  }
  const Bundle x = bundle.cwiseMax(0.0).cwiseMin(supply);
  // On the axes the infimum sits at a vanishing price, so the floor must be tiny.
  search::PriceChart chart(supply, std::min(config.price_floor, 1e-12));
  const int dims = chart.dims();
  auto objective = [&](const Vector& theta) {
    const Vector p = chart.prices(theta);
    return indirect_utility(u, p, p.dot(x), supply, IndirectMode::restricted, config);
  };
  DualValue out;
  if (dims == 0) {
    out.prices = chart.prices(Vector());
    out.value = objective(Vector());
    return out;
  }
  const int res = search::capped_resolution(dims, config.grid_resolution + 1, config.max_grid_points);
  const long n = search::grid_size(dims, res);
  std::vector<double> values(static_cast<std::size_t>(n));
  Vector theta(dims);
  for (long i = 0; i < n; ++i) {
    search::grid_point(i, dims, res, theta.data());
    values[static_cast<std::size_t>(i)] = objective(theta);
  }
  std::vector<long> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0L);
  const auto starts = std::min<long>(n, std::max(1, config.multistart_count));
  std::partial_sort(idx.begin(), idx.begin() + starts, idx.end(), [&](long i, long j) {
    return values[static_cast<std::size_t>(i)] < values[static_cast<std::size_t>(j)] ||
           (values[static_cast<std::size_t>(i)] == values[static_cast<std::size_t>(j)] && i < j);
  });
  search::PatternResult best;
  for (long s = 0; s < starts; ++s) {
    search::grid_point(idx[static_cast<std::size_t>(s)], dims, res, theta.data());
    auto r = search::pattern_search(objective, theta, 1.0 / (res - 1), 1e-12, config.refine_iterations);
    if (r.value < best.value) best = std::move(r);
  }
  out.value = best.value;
  out.prices = chart.prices(best.x);
  out.converged = best.converged;
  return out;
}

UtilityFunction quasiconcavify(const UtilityFunction& u, const Vector& supply, const SolverConfig& config) {
  if (u.family() == Family::quasiconcavified) return u;
  return UtilityFunction::quasiconcavified(u, supply, config);
}

double QuasiconcaveEnvelope::value(const VectorRef& bundle) const {
  std::vector<std::int64_t> key(static_cast<std::size_t>(bundle.size()));
  for (Eigen::Index k = 0; k < bundle.size(); ++k) {
    key[static_cast<std::size_t>(k)] = std::llround(bundle[k] * 1e9);
  }
  {
    std::shared_lock lock(mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  const Bundle x = bundle.cwiseMax(0.0).cwiseMin(cap);
  const double v = std::max(dual_utility(source, x, cap, config).value, source.evaluate(x));
  std::unique_lock lock(mutex_);
  cache_.emplace(std::move(key), v);
  return v;
}

double marginal_utility_of_income(const UtilityFunction& u, const VectorRef& prices, double income,
                                  const Vector& supply, IndirectMode mode, const SolverConfig& config) {
  if (u.family() == Family::cobb_douglas && mode == IndirectMode::unrestricted && income > 0.0) {
    return u.params().sum() * indirect_utility(u, prices, income, supply, mode, config) / income;
  }
  const double h = std::max(1e-6, 1e-6 * income);
  auto v = [&](double m) { return indirect_utility(u, prices, m, supply, mode, config); };
  if (income < h) return (v(income + h) - v(income)) / h;
  if (mode == IndirectMode::restricted && income + h > prices.dot(supply)) return (v(income) - v(income - h)) / h;
  return (v(income + h) - v(income - h)) / (2.0 * h);
}

NegishiWeights negishi_weights(const Economy& economy, const VectorRef& prices, const VectorRef& incomes,
                               IndirectMode mode, const SolverConfig& config) {
  if (static_cast<std::size_t>(incomes.size()) != economy.consumers()) {
    throw Error(ErrorCode::dimension_mismatch, "one income per consumer is required");
  }
  NegishiWeights w;
  w.alpha.resize(incomes.size());
  for (std::size_t i = 0; i < economy.consumers(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const double dv = marginal_utility_of_income(economy.utility(i), prices, incomes[ii], economy.supply(), mode, config);
    if (!(dv > 1e-14)) {
      w.alpha[ii] = std::numeric_limits<double>::infinity();
      w.zero_marginal_utility.push_back(i);
    } else {
      w.alpha[ii] = 1.0 / dv;
    }
  }
  return w;
}

std::optional<double> roy_identity_residual(const UtilityFunction& u, const VectorRef& prices, double income,
                                            const SolverConfig& config) {
  const Vector none;
  auto v = [&](const Vector& p, double m) {
    return indirect_utility(u, p, m, none, IndirectMode::unrestricted, config);
  };
  const Vector p0 = prices;
  const double v0 = v(p0, income);
  const double tol = 10.0 * config.tol_solve;

  auto derivative = [&](auto&& shifted, double h) -> std::optional<double> {
    const double fwd = (shifted(h) - v0) / h;
    const double bwd = (v0 - shifted(-h)) / h;
    if (std::abs(fwd - bwd) > tol * std::max(1.0, std::abs(fwd))) return std::nullopt;
    return 0.5 * (fwd + bwd);
  };

  const double hm = 1e-7 * std::max(1.0, income);
  if (income <= hm) return std::nullopt;
  const auto dm = derivative([&](double h) { return v(p0, income + h); }, hm);
  if (!dm || !(*dm > 0.0)) return std::nullopt;

  const Demand d = marshallian_demand(u, p0, income, none, IndirectMode::unrestricted, config);
  double residual = 0.0;
  for (Eigen::Index k = 0; k < p0.size(); ++k) {
    const double hp = 1e-7 * std::max(1.0, p0[k]);
    const auto dp = derivative(
        [&](double h) {
          Vector p = p0;
          p[k] += h;
          return v(p, income);
        },
        hp);
    if (!dp) return std::nullopt;
    residual = std::max(residual, std::abs(d.bundle[k] + *dp / *dm));
  }
  return residual;
}

}  // namespace geq
