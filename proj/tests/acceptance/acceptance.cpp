// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "geq/duality.hpp"
#include "geq/oracle.hpp"
#include "geq/search.hpp"
#include "geq/solvers.hpp"
#include "support.hpp"

using namespace geq;
using geq::testing::alloc2;
using geq::testing::bundled;
using geq::testing::kSqrt3;
using geq::testing::region_closed_form;
using geq::testing::vec;
using geq::testing::with_omega1;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (pass) detail << "failed: ";
      else detail << "; ";
      detail << what;
      pass = false;
    }
  }
};

double sup(const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }
double sup(const Allocation& x) { return x.size() ? x.cwiseAbs().maxCoeff() : 0.0; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double utility_of(const Economy& e, const Allocation& x, std::size_t i) {
  return e.utility(i)(Vector(x.row(static_cast<Eigen::Index>(i)).transpose()));
}

char buf[512];
template <typename... A>
std::string fmt(const char* f, A... a) {
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

// Yquilibria of the nonconvex economy, kept for the property suite.
struct RegionRun {
  double a = 0.0, b = 0.0;
  Economy economy;
  EquilibriumResult result;
};
std::vector<RegionRun> region_runs;

void fenchel(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const EquilibriumResult r = solve_walrasian_income(bundled("fenchel.json"));
  const double t = seconds_since(t0);
  const double dp = sup(Vector(r.prices - vec({kSqrt3 - 1.0, 2.0 - kSqrt3})));
  const double line = std::abs(r.allocation(0, 1) - (1.0 + kSqrt3 / 2.0 - (1.0 + kSqrt3) * r.allocation(0, 0)));
  o.require(dp < 1e-3, fmt("price error %.2e", dp));
  o.require(line < 1e-3, fmt("line residual %.2e", line));
  o.require(std::abs(r.potential) < 1e-6, fmt("potential %.2e", r.potential));
  o.require(t < 10.0, fmt("runtime %.1f s", t));
  o.detail << fmt(" p=(%.6f, %.6f) line residual %.1e Y=%.1e in %.2f s", r.prices[0], r.prices[1], line, r.potential, t);
}

void regions(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const Economy base = bundled("nonconvex.json");
  std::vector<std::pair<double, double>> points = {{0.5, 0.5}, {0.9, 0.3}};
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.1, 0.95);
  int per_region[5] = {0, 0, 0, 0, 0};
  while (per_region[1] + per_region[2] + per_region[3] + per_region[4] < 20) {
    const double a = u(rng), b = u(rng);
    const int reg = region_closed_form(a, b).region;
    if (reg == 0 || per_region[reg] == 5) continue;
    ++per_region[reg];
    points.push_back({a, b});
  }
  double worst_p = 0.0, worst_x = 0.0;
  for (std::size_t k = 0; k < points.size(); ++k) {
    const auto [a, b] = points[k];
    const auto form = region_closed_form(a, b);
    const Economy e = with_omega1(base, a, b);
    const EquilibriumResult r = solve_yquilibrium(e);
    const double dp = std::abs(r.prices[0] - form.p);
    const double dx = std::max(std::abs(r.allocation(0, 0) - form.x11), std::abs(r.allocation(0, 1) - 1.0));
    worst_p = std::max(worst_p, dp);
    worst_x = std::max(worst_x, dx);
    o.require(dp < 1e-3 && dx < 1e-3, fmt("omega1=(%.3f, %.3f) region %d: p %.6f vs %.6f, x11 %.6f vs %.6f", a, b,
                                         form.region, r.prices[0], form.p, r.allocation(0, 0), form.x11));
    region_runs.push_back({a, b, e, r});
  }
  const EquilibriumResult& s1 = region_runs[0].result;
  const EquilibriumResult& s3 = region_runs[1].result;
  o.require(std::abs(s1.prices[0] - 5.0 / 6.0) < 1e-3 && sup(Allocation(s1.allocation.row(0) - vec({0.4, 1}).transpose())) < 1e-3,
            "spot value at (1/2, 1/2)");
  o.require(std::abs(s3.prices[0] - 2.0 / 3.0) < 1e-3 &&
                sup(Allocation(s3.allocation.row(0) - vec({0.55, 1}).transpose())) < 1e-3,
            "spot value at (9/10, 3/10)");
  const double t = seconds_since(t0);
  o.require(t < 60.0, fmt("runtime %.1f s", t));
  o.detail << fmt(" 20 sampled endowments (5 per region) + 2 spot values: max |dp| %.1e, max |dx1| %.1e in %.1f s", worst_p,
                  worst_x, t);
}

// W*(w') = min over <p|w'> = 1 of sum_i alpha_i v_i(p, m_i) at fixed alpha and m.
double fixed_weight_dual(const Economy& e, const Vector& supply, const Vector& alpha, const Vector& incomes) {
  std::vector<Consumer> cs = e.consumer_list();
  for (std::size_t i = 0; i < cs.size(); ++i) {
    cs[i].endowment.reset();
    cs[i].income = incomes[static_cast<Eigen::Index>(i)];
  }
  SolverConfig cfg;
  cfg.tol_solve = 1e-10;
  return minimize_dual_welfare(make_economy(e.good_names(), supply, cs), alpha, cfg).value;
}

void negishi(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const Economy base = bundled("cobb_douglas_endowment.json");
  const std::vector<std::pair<double, double>> grid = {{0.1, 0.9}, {0.2, 0.5}, {0.3, 0.6}, {0.4, 0.2}, {0.5, 0.5},
                                                       {0.6, 0.8}, {0.7, 0.3}, {0.8, 0.6}, {0.9, 0.1}, {0.25, 0.75}};
  double worst_p = 0.0, worst_grad = 0.0;
  for (const auto& [a, b] : grid) {
    const Economy e = with_omega1(base, a, b);
    const NegishiResult n = dual_negishi_minimize(e);
    const double target = geq::testing::cobb_douglas_price(a, b);
    const double dp = std::abs(n.prices[0] - target);
    worst_p = std::max(worst_p, dp);
    o.require(n.converged && dp < 1e-3, fmt("omega1=(%.2f, %.2f): p %.6f vs %.6f", a, b, n.prices[0], target));

    const Vector m = e.incomes_at(n.prices);
    const double h = 1e-4;
    Vector grad(2);
    for (Eigen::Index k = 0; k < 2; ++k) {
      Vector up = e.supply(), dn = e.supply();
      up[k] += h;
      dn[k] -= h;
      grad[k] = (fixed_weight_dual(e, up, n.weights, m) - fixed_weight_dual(e, dn, n.weights, m)) / (2 * h);
    }
    const double dg = sup(Vector(grad - n.prices));
    worst_grad = std::max(worst_grad, dg);
    o.require(dg < 1e-2, fmt("omega1=(%.2f, %.2f): grad W* (%.5f, %.5f) vs p (%.5f, %.5f)", a, b, grad[0], grad[1],
                             n.prices[0], n.prices[1]));
  }
  o.detail << fmt(" 10 endowments: max |p - closed form| %.1e, max |grad W* - p| %.1e in %.1f s", worst_p, worst_grad,
                  seconds_since(t0));
}

void envelope(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const Vector unit = vec({1, 1});
  const auto base = UtilityFunction::max_linear(vec({2, 1}));
  const auto ubar = quasiconcavify(base, unit);
  double worst = 0.0, below = 0.0;
  for (int i = 0; i < 50; ++i) {
    for (int j = 0; j < 50; ++j) {
      const double x = i / 49.0, y = j / 49.0;
      const Vector b = vec({x, y});
      const double v = ubar(b);
      worst = std::max(worst, std::abs(v - std::max(std::min(2 * x + y, 1.0), 2 * x)));
      below = std::max(below, base(b) - v);
    }
  }
  o.require(worst < 1e-3, fmt("closed form error %.2e", worst));
  o.require(below <= 1e-9, fmt("envelope below source by %.2e", below));

  double fixed = 0.0;
  for (const auto& f : {UtilityFunction::cobb_douglas(vec({2.0 / 3.0, 1.0 / 3.0})), UtilityFunction::leontief(vec({1, 1})),
                        UtilityFunction::linear(vec({2, 1})), UtilityFunction::fenchel()}) {
    const auto w = quasiconcavify(f, unit);
    double err = 0.0;
    for (int i = 0; i < 20; ++i) {
      for (int j = 0; j < 20; ++j) {
        const Vector b = vec({i / 19.0, j / 19.0});
        err = std::max(err, std::abs(w(b) - f(b)));
      }
    }
    o.require(err < 1e-3, fmt("%s is not a fixed point (%.2e)", to_string(f.family()).c_str(), err));
    fixed = std::max(fixed, err);
  }
  o.detail << fmt(" 50x50 closed-form error %.1e, dominance slack %.1e, fixed-point error %.1e in %.1f s", worst, below,
                  fixed, seconds_since(t0));
}

void potential_sign(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = -1e300, worst_root = 0.0;
  for (const char* name : {"fenchel.json", "fenchel_endowment.json", "cobb_douglas.json", "cobb_douglas_endowment.json",
                           "leontief.json"}) {
    const Economy e = bundled(name);
    const Vector alpha = Vector::Ones(static_cast<Eigen::Index>(e.consumers()));
    search::PriceChart chart(e.supply(), 1e-6);
    double top = -1e300;
    for (int t = 0; t < 10000; ++t) {
      Vector theta(chart.dims());
      for (Eigen::Index k = 0; k < theta.size(); ++k) theta[k] = u(rng);
      const Vector p = chart.prices(theta);
      search::AllocationChart ac(p, e.incomes_at(p), e.supply());
      Vector phi(ac.dims());
      for (Eigen::Index k = 0; k < phi.size(); ++k) phi[k] = u(rng);
      top = std::max(top, potential(e, ac.map(phi), p, alpha));
    }
    o.require(top <= 1e-9, fmt("%s: potential %.2e on a random point", name, top));
    worst = std::max(worst, top);

    const std::vector<EquilibriumResult> rs = e.parameterization() == Parameterization::income
                                                  ? std::vector<EquilibriumResult>{solve_walrasian_income(e)}
                                                  : solve_walrasian_endowment(e);
    for (const auto& r : rs) {
      o.require(std::abs(r.potential) < 1e-6, fmt("%s: solver potential %.2e", name, r.potential));
      worst_root = std::max(worst_root, std::abs(r.potential));
    }
  }
  double most_negative = 0.0;
  int negative = 0;
  for (const auto& run : region_runs) {
    if (run.result.potential < -1e-4) {
      ++negative;
      most_negative = std::min(most_negative, run.result.potential);
    }
  }
  const EquilibriumResult r3 = solve_yquilibrium(bundled("region3.json"));
  o.require(r3.potential < -1e-4, fmt("region3 potential %.2e", r3.potential));
  o.require(negative >= 10, fmt("only %d negative potentials among the sampled endowments", negative));
  o.detail << fmt(" max Y on 5x10000 points %.1e, max |Y*| %.1e, nonconvex Y* < -1e-4 at %d endowments (min %.4f, "
                  "region3 %.4f) in %.1f s",
                  worst, worst_root, negative, most_negative, r3.potential, seconds_since(t0));
}

void oracle_equivalence(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  struct Case {
    const char* file;
    ResultKind kind;
  };
  const Case cases[] = {{"fenchel.json", ResultKind::walrasian},          {"leontief.json", ResultKind::walrasian},
                        {"cobb_douglas_endowment.json", ResultKind::walrasian}, {"nonconvex.json", ResultKind::yquilibrium},
                        {"three_consumer.json", ResultKind::yquilibrium},        {"adam_bob.json", ResultKind::yquilibrium}};
  for (const auto& c : cases) {
    const Economy e = bundled(c.file);
    EquilibriumResult s;
    if (c.kind == ResultKind::yquilibrium) s = solve_yquilibrium(e);
    else if (e.parameterization() == Parameterization::income) s = solve_walrasian_income(e);
    else s = solve_walrasian_endowment(e).front();
    const EquilibriumResult b = oracle::brute_force_equilibrium(e, c.kind, 400);
    // Prices compare relative to the supply scale.
    const double dp = sup(Vector(s.prices.cwiseProduct(e.supply()) - b.prices.cwiseProduct(e.supply())));
    const double dx = sup(Allocation(s.allocation - b.allocation));
    o.require(dp < 5e-3 && dx < 5e-3, fmt("%s: |dp| %.2e |dx| %.2e", c.file, dp, dx));
    o.detail << fmt(" %s %.0e/%.0e", c.file, dp, dx);
  }
  const double t = seconds_since(t0);
  o.require(t < 300.0, fmt("runtime %.1f s", t));
  o.detail << fmt(" in %.1f s", t);
}

void contract_surface(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const Economy e = bundled("three_consumer.json");
  const auto pts = oracle::contract_surface_sample(e, 101);
  int family = 0;
  double worst = 0.0, lo = 1e300, hi = -1e300;
  for (const auto& c : pts) {
    const Allocation& x = c.allocation;
    if (x(0, 1) > 1e-9 || x(1, 0) > 1e-9 || x(0, 0) <= 0) continue;
    const double a = x(1, 1), b = x(0, 0);
    if (a < 0.4 - 1e-9 || a > 0.9 + 1e-9) continue;
    ++family;
    worst = std::max(worst, std::abs(b - (10 * a + 7) / (100 * a - 10)));
    if (!c.prices) {
      o.require(false, fmt("family point alpha=%.3f has no certifying price", a));
      continue;
    }
    const double ratio = (*c.prices)[0] / (*c.prices)[1];
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  o.require(family >= 20, fmt("only %d family points", family));
  o.require(worst < 5e-3, fmt("beta error %.2e", worst));
  o.require(lo >= 3.0 / 8.0 - 0.01 && hi <= 1.0 + 0.01, fmt("price ratios [%.4f, %.4f]", lo, hi));

  // The full contract surface: x1 = (a,0), x2 = (0,a), x3 = (1-a,1-a).
  int unpriced = 0;
  for (double a = 0.4; a <= 0.9 + 1e-9; a += 0.01) {
    Allocation x(3, 2);
    x << a, 0, 0, a, 1 - a, 1 - a;
    if (!linear_price_consistent(x, e.endowments(), e.supply()).consistent()) ++unpriced;
  }
  o.require(unpriced == 51, fmt("%d of 51 E(omega) allocations lack a price", unpriced));
  int full = 0;
  for (const auto& c : oracle::contract_surface_sample(e, 21, false)) {
    o.require(!c.prices.has_value(), "an unrestricted contract point has a linear price");
    ++full;
  }
  o.require(full > 0, "empty unrestricted contract surface");
  o.detail << fmt(" %d family points, max beta error %.1e, ratios [%.4f, %.4f]; %d/51 E(omega) points unpriced, %d "
                  "unrestricted samples unpriced in %.1f s",
                  family, worst, lo, hi, unpriced, full, seconds_since(t0));
}

void properties(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const Vector unit = vec({1, 1});
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.05, 0.95);

  // Degree-zero homogeneity.
  double homog = 0.0;
  for (const auto& f : {UtilityFunction::cobb_douglas(vec({2.0 / 3.0, 1.0 / 3.0})), UtilityFunction::leontief(vec({1, 2})),
                        UtilityFunction::max_linear(vec({2, 1})), UtilityFunction::linear(vec({1, 3})),
                        UtilityFunction::fenchel(), UtilityFunction::custom("x^0.4*y^0.6", 2),
                        quasiconcavify(UtilityFunction::max_linear(vec({2, 1})), unit)}) {
    for (int t = 0; t < 10; ++t) {
      const double p = u(rng), m = 0.9 * u(rng);
      const Vector pv = vec({p, 1 - p});
      for (auto mode : {IndirectMode::unrestricted, IndirectMode::restricted}) {
        if (f.family() == Family::quasiconcavified && mode == IndirectMode::unrestricted) continue;
        const double v = indirect_utility(f, pv, m, unit, mode);
        for (double s : {0.5, 2.0, 10.0}) {
          const double d = std::abs(indirect_utility(f, Vector(s * pv), s * m, unit, mode) - v) / std::max(1.0, std::abs(v));
          homog = std::max(homog, d);
        }
      }
    }
  }
  o.require(homog < 1e-6, fmt("homogeneity error %.2e", homog));

  // Roy's identity where v is differentiable.
  double roy = 0.0;
  int smooth = 0;
  for (const auto& f : {UtilityFunction::cobb_douglas(vec({2.0 / 3.0, 1.0 / 3.0})), UtilityFunction::fenchel(),
                        UtilityFunction::linear(vec({1, 3})), UtilityFunction::leontief(vec({1, 2})),
                        UtilityFunction::custom("x^0.4*y^0.6", 2)}) {
    for (int t = 0; t < 20; ++t) {
      const double p = u(rng), m = u(rng);
      if (const auto r = roy_identity_residual(f, vec({p, 1 - p}), m)) {
        roy = std::max(roy, *r);
        ++smooth;
      }
    }
  }
  o.require(roy < 1e-4, fmt("Roy residual %.2e", roy));

  // Weight invariance of a convex economy's argmax.
  const Economy cd = bundled("cobb_douglas.json");
  const EquilibriumResult ref = solve_walrasian_income(cd);
  double moved = 0.0;
  std::uniform_real_distribution<double> wdist(0.2, 5.0);
  for (int t = 0; t < 3; ++t) {
    SolverConfig cfg;
    cfg.weights = vec({wdist(rng), wdist(rng)});
    const EquilibriumResult r = solve_walrasian_income(cd, cfg);
    moved = std::max({moved, sup(Vector(r.prices - ref.prices)), sup(Allocation(r.allocation - ref.allocation))});
  }
  o.require(moved < 1e-3, fmt("weights moved the argmax by %.2e", moved));

  // Individual rationality and bilateral Pareto optimality of every Yquilibrium.
  int ir_fail = 0, dominated = 0;
  for (const auto& run : region_runs) {
    const Allocation om = run.economy.endowments();
    for (std::size_t i = 0; i < 2; ++i)
      if (utility_of(run.economy, run.result.allocation, i) < utility_of(run.economy, om, i) - 1e-9) ++ir_fail;
    if (oracle::pareto_improvement_search(run.economy, run.result.allocation, 200, false)) ++dominated;
  }
  for (const char* name : {"region1.json", "region3.json", "adam_bob.json"}) {
    const Economy e = bundled(name);
    const EquilibriumResult r = solve_yquilibrium(e);
    for (std::size_t i = 0; i < 2; ++i)
      if (utility_of(e, r.allocation, i) < utility_of(e, e.endowments(), i) - 1e-9) ++ir_fail;
    if (oracle::pareto_improvement_search(e, r.allocation, 200, false)) ++dominated;
  }
  o.require(ir_fail == 0, fmt("%d individual rationality violations", ir_fail));
  o.require(dominated == 0, fmt("%d Yquilibria dominated", dominated));

  // Diagonal endowments reduce to the income economy.
  double diag = 0.0;
  for (const char* name : {"fenchel.json", "cobb_douglas.json"}) {
    const Economy inc = bundled(name);
    for (double m : {0.3, 0.5, 0.7}) {
      const EquilibriumResult a = solve_walrasian_income(inc.with_incomes(vec({m, 1 - m})));
      const auto b = solve_walrasian_endowment(inc.with_endowments(alloc2(m, m, 1 - m, 1 - m)));
      if (b.size() != 1) {
        o.require(false, fmt("%s m=%.1f: %zu endowment solutions", name, m, b.size()));
        continue;
      }
      diag = std::max({diag, sup(Vector(a.prices - b[0].prices)), sup(Allocation(a.allocation - b[0].allocation))});
    }
  }
  o.require(diag < 1e-6, fmt("diagonal reduction error %.2e", diag));

  o.detail << fmt(" homogeneity %.1e, Roy %.1e at %d smooth points, weight shift %.1e, %zu Yquilibria IR and "
                  "undominated, diagonal reduction %.1e in %.1f s",
                  homog, roy, smooth, moved, region_runs.size() + 3, diag, seconds_since(t0));
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<void(Outcome&)> run;
  };
  const Criterion criteria[] = {
      {"Fenchel Walrasian equilibrium", fenchel},
      {"Yquilibrium region formulas", regions},
      {"dual Negishi and the welfare gradient", negishi},
      {"quasiconcave envelope", envelope},
      {"potential sign and roots", potential_sign},
      {"oracle equivalence", oracle_equivalence},
      {"three-consumer contract surface", contract_surface},
      {"property suites", properties},
  };
  int failed = 0;
  int index = 1;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    std::printf("criterion %d: %s  %s:%s\n", index++, o.pass ? "PASS" : "FAIL", c.name, o.detail.str().c_str());
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
