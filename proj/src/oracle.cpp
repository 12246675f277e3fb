#include "geq/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>

#include "geq/expression.hpp"

namespace geq::oracle {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTie = 1e-7;
constexpr int kZoomPasses = 3;

void guard(const Economy& e, int resolution) {
  if (e.consumers() > kMaxConsumers || e.goods() > kMaxGoods) {
    throw Error(ErrorCode::complexity_guard, "oracle scans support at most " + std::to_string(kMaxConsumers) +
                                                 " consumers and " + std::to_string(kMaxGoods) + " goods");
  }
  if (resolution < 2) throw Error(ErrorCode::complexity_guard, "oracle resolution must be at least 2");
}

double scale(double v) { return std::max(1.0, std::abs(v)); }

// A utility recompiled from its expression text; wrappers are evaluated as the
// minimum over a price grid of the scanned supply-capped indirect utility.
class Preference {
 public:
  Preference(const UtilityFunction& u, const Vector& supply) : goods_(u.goods()) {
    const UtilityFunction* base = &u;
    if (u.source()) {
      base = u.source();
      envelope_ = true;
      cap_ = *u.domain_cap();
    }
    expr_ = Expression::parse(base->to_expression(), good_symbols(goods_));
    if (!envelope_) cap_ = supply;
  }

  double direct(const double* x) const { return expr_.evaluate(std::span<const double>(x, goods_)); }

  double operator()(const double* x) const {
    if (!envelope_) return direct(x);
    return std::max(envelope(x), direct(x));
  }

  std::size_t goods() const { return goods_; }
  bool wrapped() const { return envelope_; }
  const Vector& cap() const { return cap_; }

  double envelope(const double* x) const;

 private:
  Expression expr_;
  std::size_t goods_;
  bool envelope_ = false;
  Vector cap_;
};

// Points of {x >= 0 : <p|x> = m, x <= cap} indexed by t in [0,1]^{K-1}: good j
// takes a share t_j of its feasible range given the goods before it.
bool budget_point(const Vector& p, double m, const Vector* cap, const double* t, double* x) {
  const Eigen::Index k = p.size();
  double rest = m;
  for (Eigen::Index j = 0; j + 1 < k; ++j) {
    double tail = 0.0;  // most the later goods can absorb
    bool bounded = cap != nullptr;
    if (bounded) {
      for (Eigen::Index l = j + 1; l < k; ++l) tail += p[l] * (*cap)[l];
    }
    const double lo = bounded ? std::max(0.0, (rest - tail) / p[j]) : 0.0;
    double hi = rest / p[j];
    if (cap) hi = std::min(hi, (*cap)[j]);
    if (hi < lo - 1e-12) return false;
    hi = std::max(hi, lo);
    x[j] = lo + t[j] * (hi - lo);
    rest -= p[j] * x[j];
  }
  x[k - 1] = std::max(0.0, rest / p[k - 1]);
  return !(cap && x[k - 1] > (*cap)[k - 1] * (1.0 + 1e-12) + 1e-12);
}

// Maximizes f over a box of [0,1]^d by tensor scan, keeping the first point
// (in index order) within the tie tolerance, then zooming in around it.
template <typename F>
double zoom_scan(F&& f, int d, int res, int zoom_res, std::vector<double>& best_t, int passes = kZoomPasses) {
  std::vector<double> lo(static_cast<std::size_t>(d), 0.0), hi(static_cast<std::size_t>(d), 1.0);
  best_t.assign(static_cast<std::size_t>(d), 0.0);
  double best = -kInf;
  std::vector<double> t(static_cast<std::size_t>(d));
  for (int pass = 0; pass <= passes; ++pass) {
    const int r = pass == 0 ? res : zoom_res;
    long total = 1;
    for (int i = 0; i < d; ++i) total *= r;
    for (long idx = 0; idx < total; ++idx) {
      long rem = idx;
      for (int i = d - 1; i >= 0; --i) {
        const long c = rem % r;
        rem /= r;
        const auto ui = static_cast<std::size_t>(i);
        t[ui] = r > 1 ? lo[ui] + (hi[ui] - lo[ui]) * static_cast<double>(c) / (r - 1) : lo[ui];
      }
      const double v = f(t.data());
      if (!std::isfinite(v)) continue;
      // Strictly better beyond the tie band, or equal and lexicographically smaller.
      const double band = std::isfinite(best) ? kTie * 1e-5 * scale(best) : 0.0;
      if (!std::isfinite(best) || v > best + band ||
          (v >= best - band && std::lexicographical_compare(t.begin(), t.end(), best_t.begin(), best_t.end()))) {
        best = std::max(best, v);
        best_t = t;
      }
    }
    if (!std::isfinite(best) || d == 0) break;
    for (int i = 0; i < d; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      const double cell = (hi[ui] - lo[ui]) / std::max(1, r - 1);
      lo[ui] = std::max(0.0, best_t[ui] - 2.0 * cell);
      hi[ui] = std::min(1.0, best_t[ui] + 2.0 * cell);
    }
  }
  return best;
}

double scan_indirect(const Preference& u, const Vector& p, double m, const Vector* cap, int res) {
  const int d = static_cast<int>(p.size()) - 1;
  std::vector<double> x(static_cast<std::size_t>(p.size())), t;
  const int r = d >= 2 ? std::min(res, 61) : res;
  auto f = [&](const double* tt) {
    if (!budget_point(p, m, cap, tt, x.data())) return -kInf;
    return u.direct(x.data());
  };
  return zoom_scan(f, d, r, 21, t);
}

double Preference::envelope(const double* x) const {
  const Eigen::Index k = static_cast<Eigen::Index>(goods_);
  Vector bundle(k);
  for (Eigen::Index j = 0; j < k; ++j) bundle[j] = std::clamp(x[j], 0.0, cap_[j]);
  // Stick-breaking value shares on a centered grid.
  const int d = static_cast<int>(k) - 1;
  auto prices = [&](const double* t) {
    Vector p(k);
    double rest = 1.0;
    for (Eigen::Index j = 0; j + 1 < k; ++j) {
      const double s = rest * (1e-6 + (1.0 - 2e-6) * t[j]);
      p[j] = s / cap_[j];
      rest -= s;
    }
    p[k - 1] = rest / cap_[k - 1];
    return p;
  };
  std::vector<double> t;
  auto f = [&](const double* tt) {
    const Vector p = prices(tt);
    return -scan_indirect(*this, p, p.dot(bundle), &cap_, 101);
  };
  return -zoom_scan(f, d, d >= 2 ? 41 : 201, 21, t);
}

std::vector<Preference> preferences(const Economy& e) {
  std::vector<Preference> out;
  for (std::size_t i = 0; i < e.consumers(); ++i) out.emplace_back(e.utility(i), e.supply());
  return out;
}

Vector weights(const Economy& e, const SolverConfig& cfg) {
  return cfg.weights.size() ? cfg.weights : Vector::Ones(static_cast<Eigen::Index>(e.consumers()));
}

// Value-share grid point j of `res` cell centers, stick-breaking for K = 3.
Vector grid_prices(const Vector& w, const double* t) {
  const Eigen::Index k = w.size();
  Vector p(k);
  double rest = 1.0;
  for (Eigen::Index j = 0; j + 1 < k; ++j) {
    const double s = rest * t[j];
    p[j] = s / w[j];
    rest -= s;
  }
  p[k - 1] = rest / w[k - 1];
  return p;
}

struct InnerBest {
  double welfare = -kInf;
  Allocation x;
};

// Best budget-exact feasible allocation at prices p: consumers before the last
// scan their own budget sets, the last takes the remainder if it is nonnegative.
InnerBest scan_allocations(const Economy& e, const std::vector<Preference>& prefs, const Vector& alpha,
                           const Vector& p, const Vector& m, const Vector* floor, int res) {
  const std::size_t n = e.consumers();
  const Eigen::Index k = static_cast<Eigen::Index>(e.goods());
  const Vector& w = e.supply();
  const int per = static_cast<int>(k) - 1;
  const int d = per * static_cast<int>(n - 1);
  Allocation x(static_cast<Eigen::Index>(n), k);
  auto f = [&](const double* t) {
    Vector rest = w;
    double welfare = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      double* row = x.row(ii).data();
      Vector b(k);
      if (i + 1 < n) {
        if (!budget_point(p, m[ii], &w, t + i * static_cast<std::size_t>(per), b.data())) return -kInf;
        if (((rest - b).array() < -1e-12).any()) return -kInf;
      } else {
        b = rest.cwiseMax(0.0);
      }
      for (Eigen::Index j = 0; j < k; ++j) row[j] = b[j];
      rest -= b;
      const double u = prefs[i](b.data());
      if (floor && u < (*floor)[ii] - 1e-12 * scale((*floor)[ii])) return -kInf;
      welfare += alpha[ii] * u;
    }
    return welfare;
  };
  std::vector<double> t;
  const int r = d >= 2 ? std::max(2, static_cast<int>(std::floor(std::pow(kMaxScanPoints / 400.0, 1.0 / d)))) : res;
  InnerBest out;
  out.welfare = zoom_scan(f, d, std::min(res, r), 21, t);
  if (std::isfinite(out.welfare)) {
    f(t.data());
    out.x = x;
  }
  return out;
}

struct PriceEval {
  double value = -kInf;
  Vector p;
  Vector vbar;
  Allocation x;
};

PriceEval evaluate_price(const Economy& e, const std::vector<Preference>& prefs, const Vector& alpha,
                         const Vector& p, const Vector* floor, int res) {
  PriceEval out;
  out.p = p;
  const Vector m = e.incomes_at(p);
  out.vbar.resize(m.size());
  for (std::size_t i = 0; i < e.consumers(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    out.vbar[ii] = scan_indirect(prefs[i], p, m[ii], &prefs[i].cap(), res);
  }
  const InnerBest inner = scan_allocations(e, prefs, alpha, p, m, floor, res);
  if (!std::isfinite(inner.welfare)) return out;
  out.value = inner.welfare - alpha.dot(out.vbar);
  out.x = inner.x;
  return out;
}

}  // namespace

double indirect_utility(const Economy& economy, std::size_t consumer, const VectorRef& prices, double income,
                        IndirectMode mode, int resolution) {
  const Preference u(economy.utility(consumer), economy.supply());
  const Vector p = prices;
  if (!(p.array() > 0.0).all()) throw Error(ErrorCode::out_of_domain, "oracle needs strictly positive prices");
  const Vector* cap = mode == IndirectMode::restricted || u.wrapped() ? &u.cap() : nullptr;
  return scan_indirect(u, p, std::max(income, 0.0), cap, resolution);
}

EquilibriumResult brute_force_equilibrium(const Economy& economy, ResultKind mode, int resolution,
                                          const SolverConfig& config) {
  guard(economy, resolution);
  const auto prefs = preferences(economy);
  const Vector alpha = weights(economy, config);
  const Vector& w = economy.supply();
  const int d = static_cast<int>(economy.goods()) - 1;
  std::optional<Vector> floor;
  if (mode == ResultKind::yquilibrium) {
    const Allocation omega = economy.endowments();
    floor = Vector(static_cast<Eigen::Index>(economy.consumers()));
    for (std::size_t i = 0; i < economy.consumers(); ++i) {
      const Vector oi = omega.row(static_cast<Eigen::Index>(i)).transpose();
      (*floor)[static_cast<Eigen::Index>(i)] = prefs[i](oi.data());
    }
  }
  const Vector* fl = floor ? &*floor : nullptr;

  // Cell-centered price grid, so no price is zero.
  long total = 1;
  for (int i = 0; i < d; ++i) total *= resolution;
  std::vector<PriceEval> evals(static_cast<std::size_t>(total));
  std::vector<double> t(static_cast<std::size_t>(std::max(d, 1)));
  auto point = [&](long idx, double* tt) {
    for (int i = d - 1; i >= 0; --i) {
      tt[i] = (static_cast<double>(idx % resolution) + 0.5) / resolution;
      idx /= resolution;
    }
  };
  for (long idx = 0; idx < total; ++idx) {
    point(idx, t.data());
    evals[static_cast<std::size_t>(idx)] = evaluate_price(economy, prefs, alpha, grid_prices(w, t.data()), fl, resolution);
  }

  std::vector<long> order(static_cast<std::size_t>(total));
  std::iota(order.begin(), order.end(), 0L);
  const auto value = [&](long i) { return evals[static_cast<std::size_t>(i)].value; };
  double top = -kInf;
  for (long i : order) top = std::max(top, value(i));
  // Best first; values within the tie band are ordered by grid index.
  std::stable_sort(order.begin(), order.end(), [&](long a, long b) {
    const bool ta = value(a) >= top - kTie * scale(top), tb = value(b) >= top - kTie * scale(top);
    if (ta != tb) return ta;
    if (ta) return a < b;
    return value(a) > value(b);
  });

  const int candidates = mode == ResultKind::yquilibrium ? 12 : 1;
  EquilibriumResult result;
  bool found = false;
  for (int c = 0; c < candidates && c < static_cast<int>(order.size()) && !found; ++c) {
    const long idx = order[static_cast<std::size_t>(c)];
    if (!std::isfinite(value(idx))) break;
    // One local pass: rescan the neighbouring cells on a finer grid.
    point(idx, t.data());
    const int fine = std::min(resolution, 41);
    std::vector<double> lo(t.begin(), t.begin() + d), hi(lo);
    for (int i = 0; i < d; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      lo[ui] = std::max(1e-9, t[ui] - 1.0 / resolution);
      hi[ui] = std::min(1.0 - 1e-9, t[ui] + 1.0 / resolution);
    }
    PriceEval best = evals[static_cast<std::size_t>(idx)];
    std::vector<double> tt(static_cast<std::size_t>(std::max(d, 1)));
    std::vector<double> best_t(t.begin(), t.begin() + d);
    long local = 1;
    for (int i = 0; i < d; ++i) local *= fine;
    for (long j = 0; j < local; ++j) {
      long rem = j;
      for (int i = d - 1; i >= 0; --i) {
        const auto ui = static_cast<std::size_t>(i);
        tt[ui] = lo[ui] + (hi[ui] - lo[ui]) * static_cast<double>(rem % fine) / (fine - 1);
        rem /= fine;
      }
      PriceEval pe = evaluate_price(economy, prefs, alpha, grid_prices(w, tt.data()), fl, resolution);
      const double v = pe.value;
      const bool ties = v >= best.value - kTie * scale(best.value);
      if (v > best.value + kTie * scale(best.value) ||
          (ties && std::lexicographical_compare(tt.begin(), tt.begin() + d, best_t.begin(), best_t.end()))) {
        best = std::move(pe);
        best_t.assign(tt.begin(), tt.begin() + d);
      }
    }
    result = EquilibriumResult{};
    result.kind = mode;
    result.prices = best.p;
    result.allocation = best.x;
    result.weights = alpha;
    result.incomes = economy.incomes_at(best.p);
    result.gaps.resize(result.incomes.size());
    for (std::size_t i = 0; i < economy.consumers(); ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      const Vector xi = best.x.row(ii).transpose();
      result.gaps[ii] = best.vbar[ii] - prefs[i](xi.data());
    }
    result.potential = best.value;
    result.diagnostics.clearing_residual = (best.x.colwise().sum().transpose() - w).cwiseAbs().maxCoeff();
    result.diagnostics.budget_residual = (best.x * best.p - result.incomes).cwiseAbs().maxCoeff();
    result.diagnostics.restarts = c;
    found = mode == ResultKind::walrasian ||
            !pareto_improvement_search(economy, best.x, economy.consumers() > 2 ? 60 : 200, true, config);
  }
  if (!found) {
    result.diagnostics.status = SolveStatus::config_too_coarse;
    result.diagnostics.warnings.push_back("no undominated candidate among the best grid cells");
  }
  return result;
}

std::optional<Allocation> pareto_improvement_search(const Economy& economy, const Allocation& x, int resolution,
                                                    bool restrict_linear_prices, const SolverConfig& config) {
  guard(economy, resolution);
  const auto prefs = preferences(economy);
  const std::size_t n = economy.consumers();
  const Eigen::Index k = static_cast<Eigen::Index>(economy.goods());
  const Vector& w = economy.supply();
  Vector base(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const Vector xi = x.row(static_cast<Eigen::Index>(i)).transpose().cwiseMax(0.0);
    base[static_cast<Eigen::Index>(i)] = prefs[i](xi.data());
  }
  Allocation y(static_cast<Eigen::Index>(n), k);
  auto improves = [&]() {
    bool strict = false;
    for (std::size_t i = 0; i < n; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      const Vector yi = y.row(ii).transpose();
      const double u = prefs[i](yi.data());
      if (u < base[ii] - 1e-12 * scale(base[ii])) return false;
      strict = strict || u > base[ii] + config.tol_accept;
    }
    return strict;
  };

  if (!restrict_linear_prices) {
    // Every good split among consumers on a grid of shares.
    int r = resolution;
    auto splits = [&](int rr) { return n == 2 ? double(rr) : 0.5 * rr * (rr + 1); };
    while (r > 2 && std::pow(splits(r), static_cast<double>(k)) > kMaxScanPoints) --r;
    std::vector<std::vector<int>> shares;  // per-good share tuples in units of 1/(r-1)
    for (int a = 0; a < r; ++a) {
      if (n == 1) {
        shares.push_back({r - 1});
        break;
      }
      if (n == 2) shares.push_back({a, r - 1 - a});
      else
        for (int b = 0; a + b < r; ++b) shares.push_back({a, b, r - 1 - a - b});
    }
    const long per = static_cast<long>(shares.size());
    long total = 1;
    for (Eigen::Index j = 0; j < k; ++j) total *= per;
    for (long idx = 0; idx < total; ++idx) {
      long rem = idx;
      for (Eigen::Index j = k - 1; j >= 0; --j) {
        const auto& s = shares[static_cast<std::size_t>(rem % per)];
        rem /= per;
        for (std::size_t i = 0; i < n; ++i) y(static_cast<Eigen::Index>(i), j) = w[j] * s[i] / (r - 1);
      }
      if (improves()) return y;
    }
    return std::nullopt;
  }

  // Linear-price-consistent allocations: a price grid times budget grids.
  const int dp = static_cast<int>(k) - 1;
  const int dx = dp * static_cast<int>(n - 1);
  int r = resolution;
  while (r > 2 && std::pow(double(r), dp + dx) > kMaxScanPoints) --r;
  long total = 1;
  for (int i = 0; i < dp + dx; ++i) total *= r;
  std::vector<double> t(static_cast<std::size_t>(dp + dx));
  for (long idx = 0; idx < total; ++idx) {
    long rem = idx;
    for (int i = dp + dx - 1; i >= 0; --i) {
      const double c = static_cast<double>(rem % r);
      rem /= r;
      t[static_cast<std::size_t>(i)] = i < dp ? (c + 0.5) / r : c / (r - 1);
    }
    const Vector p = grid_prices(w, t.data());
    const Vector m = economy.incomes_at(p);
    Vector rest = w;
    bool ok = true;
    for (std::size_t i = 0; i + 1 < n && ok; ++i) {
      Vector b(k);
      ok = budget_point(p, m[static_cast<Eigen::Index>(i)], &w, t.data() + dp + i * static_cast<std::size_t>(dp), b.data());
      ok = ok && ((rest - b).array() >= -1e-12).all();
      y.row(static_cast<Eigen::Index>(i)) = b.transpose();
      rest -= b;
    }
    if (!ok) continue;
    y.row(static_cast<Eigen::Index>(n - 1)) = rest.cwiseMax(0.0).transpose();
    if (improves()) return y;
  }
  return std::nullopt;
}

void mark_frontier(PointCloud& cloud, double slack) {
  const std::size_t count = cloud.points.size();
  cloud.frontier.assign(count, true);
  if (count == 0) return;
  const double sign = cloud.kind == PointCloud::Kind::ups ? 1.0 : -1.0;
  auto at = [&](std::size_t i, Eigen::Index j) { return sign * cloud.points[i][j]; };
  const auto dim = cloud.points.front().size();
  if (dim == 2) {
    // Sorted by the first coordinate descending; prefix maxima of the second.
    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return at(a, 0) > at(b, 0); });
    std::vector<double> first(count), prefix(count);
    double running = -kInf;
    for (std::size_t r = 0; r < count; ++r) {
      first[r] = at(order[r], 0);
      running = std::max(running, at(order[r], 1));
      prefix[r] = running;
    }
    auto best_second = [&](double threshold, bool strict) {
      // max of the second coordinate over points whose first is >= (or >) threshold
      const auto it = strict ? std::partition_point(first.begin(), first.end(), [&](double v) { return v > threshold; })
                             : std::partition_point(first.begin(), first.end(), [&](double v) { return v >= threshold; });
      const auto len = static_cast<std::size_t>(it - first.begin());
      return len == 0 ? -kInf : prefix[len - 1];
    };
    for (std::size_t i = 0; i < count; ++i) {
      const double a0 = at(i, 0), a1 = at(i, 1);
      const bool by_first = best_second(a0 + slack, true) >= a1;
      const bool by_second = best_second(a0, false) > a1 + slack;
      cloud.frontier[i] = !(by_first || by_second);
    }
    return;
  }
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t j = 0; j < count && cloud.frontier[i]; ++j) {
      if (i == j) continue;
      bool weak = true, strict = false;
      for (Eigen::Index c = 0; c < dim && weak; ++c) {
        weak = at(j, c) >= at(i, c);
        strict = strict || at(j, c) > at(i, c) + slack;
      }
      if (weak && strict) cloud.frontier[i] = false;
    }
  }
}

PointCloud sample_ups(const Economy& economy, int resolution, const SolverConfig& config) {
  guard(economy, resolution);
  const auto prefs = preferences(economy);
  const std::size_t n = economy.consumers();
  const Eigen::Index k = static_cast<Eigen::Index>(economy.goods());
  const Vector& w = economy.supply();
  PointCloud cloud;
  cloud.kind = PointCloud::Kind::ups;
  cloud.consumers = n;
  for (std::size_t i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      cloud.generator_columns.push_back("x_" + std::to_string(i + 1) + "_" + std::to_string(j + 1));
    }
  }
  std::vector<std::vector<int>> shares;
  const int r = resolution;
  for (int a = 0; a < r; ++a) {
    if (n == 1) {
      shares.push_back({r - 1});
      break;
    }
    if (n == 2) shares.push_back({a, r - 1 - a});
    else
      for (int b = 0; a + b < r; ++b) shares.push_back({a, b, r - 1 - a - b});
  }
  const long per = static_cast<long>(shares.size());
  if (std::pow(double(per), double(k)) > kMaxScanPoints) {
    throw Error(ErrorCode::complexity_guard, "UPS grid too large; lower the resolution");
  }
  long total = 1;
  for (Eigen::Index j = 0; j < k; ++j) total *= per;
  Allocation y(static_cast<Eigen::Index>(n), k);
  for (long idx = 0; idx < total; ++idx) {
    long rem = idx;
    for (Eigen::Index j = k - 1; j >= 0; --j) {
      const auto& s = shares[static_cast<std::size_t>(rem % per)];
      rem /= per;
      for (std::size_t i = 0; i < n; ++i) y(static_cast<Eigen::Index>(i), j) = w[j] * s[i] / (r - 1);
    }
    Vector u(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      const Vector yi = y.row(static_cast<Eigen::Index>(i)).transpose();
      u[static_cast<Eigen::Index>(i)] = prefs[i](yi.data());
    }
    cloud.points.push_back(u);
    cloud.generators.push_back(Eigen::Map<const Vector>(y.data(), y.size()));
  }
  mark_frontier(cloud, config.tol_accept);
  return cloud;
}

PointCloud sample_vps(const Economy& economy, int resolution, IndirectMode mode, const SolverConfig& config) {
  guard(economy, resolution);
  const auto prefs = preferences(economy);
  const std::size_t n = economy.consumers();
  const Eigen::Index k = static_cast<Eigen::Index>(economy.goods());
  const Vector& w = economy.supply();
  PointCloud cloud;
  cloud.kind = PointCloud::Kind::vps;
  cloud.consumers = n;
  for (Eigen::Index j = 0; j < k; ++j) cloud.generator_columns.push_back("p_" + std::to_string(j + 1));
  for (std::size_t i = 0; i < n; ++i) cloud.generator_columns.push_back("m_" + std::to_string(i + 1));

  const int dp = static_cast<int>(k) - 1;
  const int r = resolution;
  std::vector<Vector> incomes;
  for (int a = 0; a < r; ++a) {
    const double ma = double(a) / (r - 1);
    if (n == 1) {
      incomes.push_back(Vector::Ones(1));
      break;
    }
    if (n == 2) incomes.push_back((Vector(2) << ma, 1.0 - ma).finished());
    else
      for (int b = 0; a + b < r; ++b) incomes.push_back((Vector(3) << ma, double(b) / (r - 1), double(r - 1 - a - b) / (r - 1)).finished());
  }
  long prices = 1;
  for (int i = 0; i < dp; ++i) prices *= r;
  if (double(prices) * double(incomes.size()) * double(n) * 150.0 > kMaxScanPoints * 4) {
    throw Error(ErrorCode::complexity_guard, "VPS grid too large; lower the resolution");
  }
  std::vector<double> t(static_cast<std::size_t>(std::max(dp, 1)));
  const Vector* cap = mode == IndirectMode::restricted ? &w : nullptr;
  for (long idx = 0; idx < prices; ++idx) {
    long rem = idx;
    for (int i = dp - 1; i >= 0; --i) {
      t[static_cast<std::size_t>(i)] = (static_cast<double>(rem % r) + 0.5) / r;
      rem /= r;
    }
    const Vector p = grid_prices(w, t.data());
    for (const auto& m : incomes) {
      Vector v(static_cast<Eigen::Index>(n));
      for (std::size_t i = 0; i < n; ++i) {
        const Vector* c = prefs[i].wrapped() ? &prefs[i].cap() : cap;
        v[static_cast<Eigen::Index>(i)] = scan_indirect(prefs[i], p, m[static_cast<Eigen::Index>(i)], c, 101);
      }
      cloud.points.push_back(v);
      Vector g(k + static_cast<Eigen::Index>(n));
      g << p, m;
      cloud.generators.push_back(g);
    }
  }
  mark_frontier(cloud, config.tol_accept);
  return cloud;
}

std::vector<ContractPoint> contract_surface_sample(const Economy& economy, int resolution, bool linear_prices,
                                                   const SolverConfig& config) {
  guard(economy, resolution);
  if (economy.goods() != 2) throw Error(ErrorCode::complexity_guard, "contract surface sampling needs two goods");
  const auto prefs = preferences(economy);
  const std::size_t n = economy.consumers();
  const Vector& w = economy.supply();
  const Allocation omega = economy.endowments();
  Vector floor(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const Vector oi = omega.row(static_cast<Eigen::Index>(i)).transpose();
    floor[static_cast<Eigen::Index>(i)] = prefs[i](oi.data());
  }
  std::vector<ContractPoint> cand;
  auto consider = [&](const Allocation& y, std::optional<Vector> p) {
    Vector u(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      const Vector yi = y.row(ii).transpose();
      u[ii] = prefs[i](yi.data());
      if (u[ii] < floor[ii] - 1e-12 * scale(floor[ii])) return;
    }
    cand.push_back({y, std::move(p), u});
  };

  const int r = resolution;
  Allocation y(static_cast<Eigen::Index>(n), 2);
  if (linear_prices) {
    if (std::pow(double(r), double(n)) > kMaxScanPoints) throw Error(ErrorCode::complexity_guard, "contract grid too large");
    for (int a = 0; a < r; ++a) {
      const double share = (a + 0.5) / r;
      const Vector p = (Vector(2) << share / w[0], (1.0 - share) / w[1]).finished();
      const Vector m = economy.incomes_at(p);
      long total = 1;
      for (std::size_t i = 0; i + 1 < n; ++i) total *= r;
      for (long idx = 0; idx < total; ++idx) {
        long rem = idx;
        Vector rest = w;
        bool ok = true;
        for (std::size_t i = 0; i + 1 < n && ok; ++i) {
          const double t = static_cast<double>(rem % r) / (r - 1);
          rem /= r;
          Vector b(2);
          ok = budget_point(p, m[static_cast<Eigen::Index>(i)], &w, &t, b.data()) && ((rest - b).array() >= -1e-12).all();
          y.row(static_cast<Eigen::Index>(i)) = b.transpose();
          rest -= b;
        }
        if (!ok) continue;
        y.row(static_cast<Eigen::Index>(n - 1)) = rest.cwiseMax(0.0).transpose();
        consider(y, p);
      }
    }
  } else {
    for (int a = 0; a < r; ++a) {
      for (int b = 0; b < r; ++b) {
        if (n == 2) {
          y << w[0] * a / (r - 1), w[1] * b / (r - 1), w[0] * (r - 1 - a) / (r - 1), w[1] * (r - 1 - b) / (r - 1);
          consider(y, std::nullopt);
          continue;
        }
        for (int c = 0; a + c < r; ++c) {
          for (int d = 0; b + d < r; ++d) {
            y << w[0] * a / (r - 1), w[1] * b / (r - 1), w[0] * c / (r - 1), w[1] * d / (r - 1),
                w[0] * (r - 1 - a - c) / (r - 1), w[1] * (r - 1 - b - d) / (r - 1);
            consider(y, std::nullopt);
          }
        }
      }
    }
  }

  PointCloud cloud;
  cloud.kind = PointCloud::Kind::ups;
  for (const auto& c : cand) cloud.points.push_back(c.utilities);
  mark_frontier(cloud, config.tol_accept);
  std::vector<ContractPoint> out;
  for (std::size_t i = 0; i < cand.size(); ++i) {
    if (!cloud.frontier[i]) continue;
    ContractPoint cp = cand[i];
    const PriceConsistency pc = linear_price_consistent(cp.allocation, omega, w, 1e-9);
    if (pc.kind == PriceConsistency::Kind::vertices) {
      const Vector hint = cp.prices.value_or(pc.vertices.front());
      cp.prices = *std::min_element(pc.vertices.begin(), pc.vertices.end(), [&](const Vector& a, const Vector& b) {
        return (a - hint).cwiseAbs().maxCoeff() < (b - hint).cwiseAbs().maxCoeff();
      });
    } else if (pc.kind == PriceConsistency::Kind::none) {
      cp.prices.reset();
    }
    out.push_back(std::move(cp));
  }
  return out;
}

void write_csv(std::ostream& out, const PointCloud& cloud) {
  for (std::size_t i = 0; i < cloud.consumers; ++i) out << (i ? "," : "") << "u_" << i + 1;
  out << ",frontier";
  for (const auto& c : cloud.generator_columns) out << ',' << c;
  out << '\n';
  out << std::setprecision(10);
  for (std::size_t r = 0; r < cloud.points.size(); ++r) {
    for (Eigen::Index i = 0; i < cloud.points[r].size(); ++i) out << (i ? "," : "") << cloud.points[r][i];
    out << ',' << (cloud.frontier.empty() ? 0 : int(cloud.frontier[r]));
    for (Eigen::Index j = 0; j < cloud.generators[r].size(); ++j) out << ',' << cloud.generators[r][j];
    out << '\n';
  }
}

}  // namespace geq::oracle
