#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "geq/economy.hpp"
#include "geq/types.hpp"

namespace geq::testing {

inline std::filesystem::path data(const std::string& name) { return std::filesystem::path(GEQ_DATA_DIR) / name; }

inline Economy bundled(const std::string& name) { return load_economy(data(name)); }

inline Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

inline Allocation alloc2(double a, double b, double c, double d) {
  Allocation x(2, 2);
  x << a, b, c, d;
  return x;
}

inline Economy with_omega1(const Economy& e, double a, double b) {
  return e.with_endowments(alloc2(a, b, e.supply()[0] - a, e.supply()[1] - b));
}

inline const double kSqrt3 = std::sqrt(3.0);

// Price and x_11 of the top-edge Yquilibrium of the max(2x,y) / x^(2/3) y^(1/3) economy.
struct RegionForm {
  int region = 0;
  double p = 0.0;
  double x11 = 0.0;
};

inline RegionForm region_closed_form(double a, double b) {
  const double sb = std::sqrt(b);
  if (a <= 0.75 && b <= 3.0 - 4.0 * a) return {1, (3.0 - b) / (3.0 + a - b), 2.0 * a / (3.0 - b)};
  if (a >= 0.5 && a <= 1.0 && b >= 3.0 - 4.0 * a && b <= std::min(1.0 / (4.0 * a * a), 2.0 - 2.0 * a))
    return {2, (2.0 - 2.0 * b) / (1.0 + 2.0 * a - 2.0 * b), 0.5};
  if (a >= (1.0 + std::sqrt(5.0)) / 4.0 && b >= 2.0 - 2.0 * a && b <= (2.0 * a - 1.0) * (2.0 * a - 1.0))
    return {3, 2.0 / 3.0, a + b / 2.0 - 0.5};
  if (a >= 0.5 && b >= std::max(1.0 / (4.0 * a * a), (2.0 * a - 1.0) * (2.0 * a - 1.0)))
    return {4, (1.0 + sb) / (1.0 + a + sb), a * sb};
  return {};
}

// Walrasian price of the u1 = x sqrt(y), u2 = sqrt(x) y economy given omega_1.
inline double cobb_douglas_price(double w11, double w12) { return (1.0 + w12) / (3.0 - w11 + w12); }

}  // namespace geq::testing
