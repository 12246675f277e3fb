#include <doctest.h>

#include <random>

#include "geq/oracle.hpp"
#include "geq/search.hpp"
#include "geq/solvers.hpp"
#include "support.hpp"

using namespace geq;
using geq::testing::alloc2;
using geq::testing::bundled;
using geq::testing::kSqrt3;
using geq::testing::vec;
using geq::testing::with_omega1;

namespace {

double line_residual(const Allocation& x) { return x(0, 1) - (1.0 + kSqrt3 / 2.0 - (1.0 + kSqrt3) * x(0, 0)); }

double sup(const Vector& v) { return v.cwiseAbs().maxCoeff(); }

void check_result_invariants(const Economy& e, const EquilibriumResult& r, const SolverConfig& cfg = {}) {
  CHECK(is_feasible(r.allocation, e.supply()));
  CHECK(r.diagnostics.budget_residual < cfg.tol_solve);
  CHECK(r.gaps.minCoeff() >= -1e-9);
  CHECK(std::abs(r.potential + r.weights.dot(r.gaps)) < 1e-9);
  CHECK(std::abs(r.prices.dot(e.supply()) - 1.0) < 1e-12);
}

// Finite-difference MRS of the first two goods.
double mrs(const UtilityFunction& u, const Vector& x) {
  const double h = 1e-6;
  const double d0 = (u(Vector(x + h * vec({1, 0}))) - u(Vector(x - h * vec({1, 0})))) / (2 * h);
  const double d1 = (u(Vector(x + h * vec({0, 1}))) - u(Vector(x - h * vec({0, 1})))) / (2 * h);
  return d0 / d1;
}

}  // namespace

TEST_CASE("potential examples") {
  const Economy e = bundled("fenchel.json");
  const Vector p = vec({kSqrt3 - 1.0, 2.0 - kSqrt3});
  const double x11 = (3.0 - kSqrt3) / 4.0;
  const Allocation x = alloc2(x11, 1.0, 1.0 - x11, 0.0);
  CHECK(std::abs(potential(e, x, p, vec({1, 1}))) < 1e-6);

  const Economy cd = bundled("cobb_douglas.json");
  const Allocation y = alloc2(0.3, 0.6, 0.7, 0.4);
  const Vector q = vec({0.45, 0.55});
  CHECK(potential(cd, y, q, vec({2, 2})) == doctest::Approx(2.0 * potential(cd, y, q, vec({1, 1}))).epsilon(1e-14));
}

TEST_CASE("potential is nonpositive on budget-exact feasible points") {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const char* name : {"fenchel.json", "cobb_douglas.json", "leontief.json", "cobb_douglas_endowment.json"}) {
    const Economy e = bundled(name);
    search::PriceChart prices(e.supply(), 1e-6);
    double worst = -1e300;
    for (int t = 0; t < 1000; ++t) {
      const Vector p = prices.prices(vec({u(rng)}));
      search::AllocationChart chart(p, e.incomes_at(p), e.supply());
      const Allocation x = chart.map(vec({u(rng)}));
      worst = std::max(worst, potential(e, x, p, vec({1, 1})));
    }
    CHECK_MESSAGE(worst <= 1e-9, name);
  }
}

TEST_CASE("Fenchel economy at equal incomes") {
  const Economy e = bundled("fenchel.json");
  const EquilibriumResult r = solve_walrasian_income(e);
  CHECK(r.prices[0] == doctest::Approx(kSqrt3 - 1.0).epsilon(1e-6));
  CHECK(r.prices[1] == doctest::Approx(2.0 - kSqrt3).epsilon(1e-6));
  CHECK(std::abs(line_residual(r.allocation)) < 1e-6);
  CHECK(std::abs(r.potential) < 1e-6);
  CHECK(r.diagnostics.clearing_residual < 1e-6);
  CHECK(r.diagnostics.status == SolveStatus::ok);
  // The allocation is a segment; the lexicographically smallest end is reported.
  CHECK(r.allocation(0, 0) == doctest::Approx((3.0 - kSqrt3) / 4.0).epsilon(1e-4));
  CHECK(r.multiple);
  REQUIRE(!r.alternates.empty());
  for (const auto& a : r.alternates) CHECK(std::abs(line_residual(a.allocation)) < 1e-3);
  check_result_invariants(e, r);
}

TEST_CASE("Cobb-Douglas economy at equal incomes clears at p = 1/2") {
  const Economy e = bundled("cobb_douglas.json");
  const EquilibriumResult r = solve_walrasian_income(e);
  CHECK(r.prices[0] == doctest::Approx(0.5).epsilon(1e-4));
  CHECK(std::abs(r.potential) < 1e-6);
  CHECK_FALSE(r.multiple);
  check_result_invariants(e, r);
}

TEST_CASE("Leontief economies have indeterminate prices") {
  const Economy base = bundled("leontief.json");
  for (double m : {0.25, 0.4, 0.7}) {
    const EquilibriumResult r = solve_walrasian_income(base.with_incomes(vec({m, 1 - m})));
    CHECK(r.allocation(0, 0) == doctest::Approx(m).epsilon(1e-6));
    CHECK(r.allocation(0, 1) == doctest::Approx(m).epsilon(1e-6));
    CHECK(r.allocation(1, 0) == doctest::Approx(1 - m).epsilon(1e-6));
    CHECK(r.multiple);
    CHECK(r.price_set.size() > 2);
    CHECK(r.price_max[0] - r.price_min[0] > 0.9);
    CHECK(std::abs(r.potential) < 1e-6);
  }
}

TEST_CASE("utility clearing and first-order conditions at Walrasian results") {
  const Economy e = bundled("cobb_douglas.json");
  for (double m : {0.3, 0.5, 0.65}) {
    const Economy at = e.with_incomes(vec({m, 1 - m}));
    const EquilibriumResult r = solve_walrasian_income(at);
    for (std::size_t i = 0; i < 2; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      const Vector xi = r.allocation.row(ii).transpose();
      const double v = indirect_utility(at.utility(i), r.prices, r.incomes[ii], at.supply(), IndirectMode::unrestricted);
      CHECK(std::abs(at.utility(i)(xi) - v) < 1e-3);
      REQUIRE(xi.minCoeff() > 1e-3);
      CHECK(mrs(at.utility(i), xi) == doctest::Approx(r.prices[0] / r.prices[1]).epsilon(1e-2));
    }
  }
}

TEST_CASE("weights do not move the argmax of a convex economy") {
  const Economy e = bundled("cobb_douglas.json");
  const EquilibriumResult base = solve_walrasian_income(e);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.2, 5.0);
  for (int t = 0; t < 3; ++t) {
    SolverConfig cfg;
    cfg.weights = vec({u(rng), u(rng)});
    const EquilibriumResult r = solve_walrasian_income(e, cfg);
    CHECK(sup(r.prices - base.prices) < 1e-3);
    CHECK((r.allocation - base.allocation).cwiseAbs().maxCoeff() < 1e-3);
  }
}

TEST_CASE("endowment economies: fixed points of the income map") {
  const Economy e = with_omega1(bundled("cobb_douglas_endowment.json"), 0.5, 0.5);
  const auto rs = solve_walrasian_endowment(e);
  REQUIRE(rs.size() == 1);
  CHECK(rs[0].prices[0] == doctest::Approx(0.5).epsilon(1e-4));
  check_result_invariants(e, rs[0]);

  const Economy f = bundled("cobb_douglas_endowment.json");
  const auto fs = solve_walrasian_endowment(f);
  REQUIRE(fs.size() == 1);
  CHECK(fs[0].prices[0] == doctest::Approx(geq::testing::cobb_douglas_price(0.3, 0.6)).epsilon(1e-4));
}

TEST_CASE("diagonal endowments reproduce the income solution exactly") {
  for (const char* name : {"fenchel.json", "cobb_douglas.json"}) {
    const Economy inc = bundled(name);
    for (double m : {0.3, 0.5}) {
      const Economy a = inc.with_incomes(vec({m, 1 - m}));
      const Economy b = inc.with_endowments(alloc2(m, m, 1 - m, 1 - m));
      const EquilibriumResult ra = solve_walrasian_income(a);
      const auto rb = solve_walrasian_endowment(b);
      REQUIRE(rb.size() == 1);
      CHECK(sup(ra.prices - rb[0].prices) < 1e-6);
      CHECK((ra.allocation - rb[0].allocation).cwiseAbs().maxCoeff() < 1e-6);
    }
  }
  const auto fe = solve_walrasian_endowment(bundled("fenchel_endowment.json"));
  REQUIRE(fe.size() == 1);
  CHECK(fe[0].prices[0] == doctest::Approx(kSqrt3 - 1.0).epsilon(1e-6));
}

TEST_CASE("Yquilibrium closed forms for the max(2x,y) economy") {
  const EquilibriumResult r1 = solve_yquilibrium(bundled("region1.json"));
  CHECK(r1.prices[0] == doctest::Approx(5.0 / 6.0).epsilon(1e-4));
  CHECK(r1.allocation(0, 0) == doctest::Approx(0.4).epsilon(1e-4));
  CHECK(r1.allocation(0, 1) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(std::abs(r1.potential) < 1e-6);

  const Economy e3 = bundled("region3.json");
  const EquilibriumResult r3 = solve_yquilibrium(e3);
  CHECK(r3.prices[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-4));
  CHECK(r3.allocation(0, 0) == doctest::Approx(0.55).epsilon(1e-4));
  CHECK(r3.allocation(0, 1) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r3.potential < -1e-4);
  check_result_invariants(e3, r3);
}

TEST_CASE("Yquilibria are individually rational and bilaterally Pareto optimal") {
  const Economy base = bundled("nonconvex.json");
  for (auto [a, b] : {std::pair{0.5, 0.5}, {0.9, 0.3}, {0.75, 0.75}, {0.3, 0.8}}) {
    CAPTURE(a);
    CAPTURE(b);
    const Economy e = with_omega1(base, a, b);
    const EquilibriumResult r = solve_yquilibrium(e);
    const Allocation om = e.endowments();
    for (std::size_t i = 0; i < 2; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      CHECK(e.utility(i)(Vector(r.allocation.row(ii).transpose())) >= e.utility(i)(Vector(om.row(ii).transpose())) - 1e-9);
    }
    CHECK(r.gaps.minCoeff() >= -1e-9);
    CHECK(std::abs(r.gaps.sum() + r.potential) < 1e-9);
    CHECK_FALSE(oracle::pareto_improvement_search(e, r.allocation, 200, false).has_value());
  }
}

TEST_CASE("Yquilibrium coincides with Walrasian equilibrium in convex economies") {
  const Economy f = bundled("fenchel_endowment.json");
  const EquilibriumResult y = solve_yquilibrium(f);
  CHECK(std::abs(y.potential) < 1e-6);
  CHECK(y.prices[0] == doctest::Approx(kSqrt3 - 1.0).epsilon(1e-4));

  const Economy c = bundled("cobb_douglas_endowment.json");
  const EquilibriumResult yc = solve_yquilibrium(c);
  const auto wc = solve_walrasian_endowment(c);
  REQUIRE(wc.size() == 1);
  CHECK(sup(yc.prices - wc[0].prices) < 1e-3);
  CHECK((yc.allocation - wc[0].allocation).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("max preferences: both traders end with three identical tickets") {
  const Economy e = bundled("adam_bob.json");
  const EquilibriumResult r = solve_yquilibrium(e);
  const Vector u = vec({e.utility(0)(Vector(r.allocation.row(0).transpose())),
                        e.utility(1)(Vector(r.allocation.row(1).transpose()))});
  CHECK(u[0] == doctest::Approx(3.0).epsilon(1e-6));
  CHECK(u[1] == doctest::Approx(3.0).epsilon(1e-6));
  const bool first = std::abs(r.allocation(0, 0) - 3.0) < 1e-6 && std::abs(r.allocation(0, 1)) < 1e-6;
  const bool second = std::abs(r.allocation(0, 0)) < 1e-6 && std::abs(r.allocation(0, 1) - 3.0) < 1e-6;
  CHECK((first || second));
  // Capped at the supply, the outcome clears; uncapped, each trader would buy six of the cheap ticket.
  CHECK(std::abs(r.potential) < 1e-6);
  CHECK(potential(e, r.allocation, r.prices, vec({1, 1}), IndirectMode::unrestricted) < -1e-4);
}

TEST_CASE("linear price consistency") {
  const Vector w = vec({1, 1});
  const Allocation om = alloc2(0.5, 0.5, 0.5, 0.5);
  CHECK(linear_price_consistent(om, om, w).kind == PriceConsistency::Kind::whole_simplex);

  Allocation om3(3, 2), x3(3, 2);
  om3 << 0.1, 0.1, 0.8, 0.1, 0.1, 0.8;
  x3 << 0.5, 0.0, 0.0, 0.5, 0.5, 0.5;
  CHECK(linear_price_consistent(x3, om3, w).kind == PriceConsistency::Kind::none);

  const Economy e = bundled("region1.json");
  const EquilibriumResult r = solve_yquilibrium(e);
  const PriceConsistency pc = linear_price_consistent(r.allocation, e.endowments(), w, 1e-6);
  REQUIRE(pc.kind == PriceConsistency::Kind::vertices);
  REQUIRE(pc.vertices.size() == 1);
  CHECK(pc.vertices[0][0] == doctest::Approx(r.prices[0]).epsilon(1e-4));
}

TEST_CASE("dual Negishi iteration") {
  const Economy e = bundled("cobb_douglas_endowment.json");
  for (double t : {0.2, 0.5, 0.8}) {
    const Economy at = with_omega1(e, t, t);
    const NegishiResult n = dual_negishi_minimize(at);
    CHECK(n.converged);
    CHECK(n.prices[0] == doctest::Approx(geq::testing::cobb_douglas_price(t, t)).epsilon(1e-4));
    CHECK(n.price_trace.size() == static_cast<std::size_t>(n.iterations));
  }
  const NegishiResult inc = dual_negishi_minimize(bundled("cobb_douglas.json"));
  CHECK(inc.converged);
  CHECK(inc.prices[0] == doctest::Approx(0.5).epsilon(1e-4));
}

TEST_CASE("solver preconditions") {
  CHECK_THROWS_AS(solve_walrasian_income(bundled("region1.json")), Error);
  CHECK_THROWS_AS(solve_walrasian_endowment(bundled("fenchel.json")), Error);
  CHECK_THROWS_AS(solve_yquilibrium(bundled("fenchel.json")), Error);
  SolverConfig bad;
  bad.grid_resolution = 1;
  CHECK_THROWS_AS(solve_walrasian_income(bundled("fenchel.json"), bad), Error);
}
