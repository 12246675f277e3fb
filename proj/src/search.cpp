#include "geq/search.hpp"

#include <cmath>

namespace geq::search {

long grid_size(int dims, int resolution) {
  long n = 1;
  for (int d = 0; d < dims; ++d) {
    if (n > std::numeric_limits<long>::max() / std::max(resolution, 1)) {
      return std::numeric_limits<long>::max();
    }
    n *= resolution;
  }
  return n;
}

int capped_resolution(int dims, int requested, long max_points) {
  int r = requested;
  while (r > 2 && grid_size(dims, r) > max_points) {
    r = std::max(2, static_cast<int>(std::floor(std::pow(static_cast<double>(max_points), 1.0 / dims))));
    if (grid_size(dims, r) > max_points) --r;
  }
  return r;
}

void grid_point(long index, int dims, int resolution, double* out) {
  const double h = resolution > 1 ? 1.0 / (resolution - 1) : 0.0;
  for (int d = dims - 1; d >= 0; --d) {
    out[d] = static_cast<double>(index % resolution) * h;
    index /= resolution;
  }
}

PriceChart::PriceChart(Vector supply, double floor) : supply_(std::move(supply)), floor_(floor) {
  const double k = static_cast<double>(supply_.size());
  if (!(floor_ >= 0.0) || floor_ * k >= 1.0) {
    throw Error(ErrorCode::invalid_config, "price floor leaves no room on the simplex");
  }
}

Vector PriceChart::prices(const VectorRef& theta) const {
  const Eigen::Index k = supply_.size();
  const double spread = 1.0 - floor_ * static_cast<double>(k);
  Vector p(k);
  double rest = 1.0;
  for (Eigen::Index j = 0; j + 1 < k; ++j) {
    const double share = rest * std::clamp(theta[j], 0.0, 1.0);
    p[j] = share;
    rest -= share;
  }
  p[k - 1] = std::max(rest, 0.0);
  for (Eigen::Index j = 0; j < k; ++j) p[j] = (floor_ + spread * p[j]) / supply_[j];
  return p;
}

Vector PriceChart::coordinates(const VectorRef& prices) const {
  const Eigen::Index k = supply_.size();
  const double spread = 1.0 - floor_ * static_cast<double>(k);
  Vector theta(k - 1);
  double rest = 1.0;
  for (Eigen::Index j = 0; j + 1 < k; ++j) {
    const double share = std::max(0.0, (prices[j] * supply_[j] - floor_) / spread);
    theta[j] = rest > 0.0 ? std::clamp(share / rest, 0.0, 1.0) : 0.0;
    rest -= share;
  }
  return theta;
}

BudgetChart::BudgetChart(Vector prices, Vector cap, double income)
    : prices_(std::move(prices)), cap_(std::move(cap)), income_(income) {
  const Eigen::Index k = prices_.size();
  tail_value_.resize(k);
  double tail = 0.0;
  for (Eigen::Index j = k - 1; j >= 0; --j) {
    tail_value_[j] = tail;
    tail += prices_[j] * cap_[j];
  }
}

void BudgetChart::map(const double* theta, double* bundle) const {
  const Eigen::Index k = prices_.size();
  double rest = income_;
  for (Eigen::Index j = 0; j + 1 < k; ++j) {
    const double lo = std::max(0.0, (rest - tail_value_[j]) / prices_[j]);
    const double hi = std::max(lo, std::min(cap_[j], rest / prices_[j]));
    bundle[j] = lo + std::clamp(theta[j], 0.0, 1.0) * (hi - lo);
    rest = std::max(0.0, rest - prices_[j] * bundle[j]);
  }
  bundle[k - 1] = std::clamp(rest / prices_[k - 1], 0.0, cap_[k - 1]);
}

void BudgetChart::coordinates(const double* bundle, double* theta) const {
  const Eigen::Index k = prices_.size();
  double rest = income_;
  for (Eigen::Index j = 0; j + 1 < k; ++j) {
    const double lo = std::max(0.0, (rest - tail_value_[j]) / prices_[j]);
    const double hi = std::max(lo, std::min(cap_[j], rest / prices_[j]));
    theta[j] = hi > lo ? std::clamp((bundle[j] - lo) / (hi - lo), 0.0, 1.0) : 0.0;
    const double used = lo + theta[j] * (hi - lo);
    rest = std::max(0.0, rest - prices_[j] * used);
  }
}

Vector BudgetChart::map(const VectorRef& theta) const {
  Vector b(prices_.size());
  map(theta.data(), b.data());
  return b;
}

AllocationChart::AllocationChart(Vector prices, Vector incomes, Vector supply)
    : prices_(std::move(prices)), incomes_(std::move(incomes)), supply_(std::move(supply)) {
  dims_ = static_cast<int>((incomes_.size() - 1) * (prices_.size() - 1));
}

void AllocationChart::map(const VectorRef& theta, Allocation& x) const {
  const Eigen::Index n = incomes_.size();
  const Eigen::Index k = prices_.size();
  x.resize(n, k);
  Vector remaining = supply_;
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    const double budget = std::min(incomes_[i], prices_.dot(remaining));
    BudgetChart chart(prices_, remaining, std::max(budget, 0.0));
    Vector b(k);
    chart.map(theta.data() + i * (k - 1), b.data());
    x.row(i) = b.transpose();
    remaining = (remaining - b).cwiseMax(0.0);
  }
  x.row(n - 1) = remaining.transpose();
}

Allocation AllocationChart::map(const VectorRef& theta) const {
  Allocation x;
  map(theta, x);
  return x;
}

Vector AllocationChart::coordinates(const Allocation& x) const {
  const Eigen::Index n = incomes_.size();
  const Eigen::Index k = prices_.size();
  Vector theta(dims_);
  Vector remaining = supply_;
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    const double budget = std::min(incomes_[i], prices_.dot(remaining));
    BudgetChart chart(prices_, remaining, std::max(budget, 0.0));
    Vector b = x.row(i).transpose();
    chart.coordinates(b.data(), theta.data() + i * (k - 1));
    Vector mapped(k);
    chart.map(theta.data() + i * (k - 1), mapped.data());
    remaining = (remaining - mapped).cwiseMax(0.0);
  }
  return theta;
}

}  // namespace geq::search
