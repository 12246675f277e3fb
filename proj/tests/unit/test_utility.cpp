#include <doctest.h>

#include <random>

#include "geq/utility.hpp"
#include "support.hpp"

using namespace geq;
using geq::testing::vec;

TEST_CASE("built-in families evaluate as documented") {
  CHECK(UtilityFunction::fenchel()(vec({1, 0})) == doctest::Approx(2.0));
  CHECK(UtilityFunction::leontief(vec({1, 1}))(vec({0.3, 0.7})) == doctest::Approx(0.3));
  CHECK(UtilityFunction::max_linear(vec({2, 1}))(vec({0.25, 0.4})) == doctest::Approx(0.5));
  CHECK(UtilityFunction::linear(vec({2, 1}))(vec({0.25, 0.4})) == doctest::Approx(0.9));
  CHECK(UtilityFunction::cobb_douglas(vec({1, 0.5}))(vec({0.5, 0.25})) == doctest::Approx(0.25));
  CHECK(UtilityFunction::leontief(vec({2, 1}))(vec({1, 1})) == doctest::Approx(0.5));
  CHECK(UtilityFunction::custom("x1*x2 + 1", 2)(vec({2, 3})) == doctest::Approx(7.0));
}

TEST_CASE("parameter validation per family") {
  auto code_of = [](auto&& make) {
    try {
      make();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::unknown_id;
  };
  CHECK(code_of([] { UtilityFunction::cobb_douglas(vec({0, 1})); }) == ErrorCode::invalid_parameter);
  CHECK(code_of([] { UtilityFunction::leontief(vec({1, -1})); }) == ErrorCode::invalid_parameter);
  CHECK(code_of([] { UtilityFunction::max_linear(vec({0, 0})); }) == ErrorCode::invalid_parameter);
  CHECK(code_of([] { UtilityFunction::custom("x1 +* 2", 2); }) == ErrorCode::invalid_parameter);
  CHECK(code_of([] { family_from_string("quadratic"); }) == ErrorCode::unknown_family);
  CHECK_NOTHROW(UtilityFunction::max_linear(vec({0, 1})));
}

TEST_CASE("evaluation rejects bundles outside the domain") {
  const auto u = UtilityFunction::fenchel();
  CHECK_THROWS_AS(u(vec({-0.1, 0.5})), Error);
  CHECK_THROWS_AS(u(vec({0.1, 0.5, 0.2})), Error);
  CHECK_THROWS_AS(u(vec({std::nan(""), 0.5})), Error);
  const auto wrapped = UtilityFunction::quasiconcavified(UtilityFunction::max_linear(vec({2, 1})), vec({1, 1}), SolverConfig{});
  CHECK_THROWS_AS(wrapped(vec({1.5, 0.5})), Error);
  CHECK(wrapped(vec({0.5, 1.0})) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(wrapped(vec({1.0, 1.0})) == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("evaluation is deterministic") {
  const auto u = UtilityFunction::custom("x^0.3*y^0.7 + max(x, y)", 2);
  const Vector b = vec({0.123, 0.456});
  const double first = u(b);
  for (int i = 0; i < 10; ++i) CHECK(u(b) == first);
}

TEST_CASE("built-in families are nondecreasing on 1000 seeded pairs") {
  const std::vector<UtilityFunction> families = {
      UtilityFunction::cobb_douglas(vec({2.0 / 3.0, 1.0 / 3.0})), UtilityFunction::leontief(vec({1, 2})),
      UtilityFunction::max_linear(vec({2, 1})), UtilityFunction::linear(vec({1, 3})), UtilityFunction::fenchel()};
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto& f : families) {
    int violations = 0;
    for (int t = 0; t < 1000; ++t) {
      const Vector a = vec({u(rng), u(rng)});
      const Vector b = a + vec({u(rng) * 0.5, u(rng) * 0.5});
      if (f(a) > f(b) + 1e-12) ++violations;
    }
    CHECK_MESSAGE(violations == 0, to_string(f.family()));
  }
}

TEST_CASE("expression form reproduces every built-in") {
  const std::vector<UtilityFunction> families = {
      UtilityFunction::cobb_douglas(vec({2.0 / 3.0, 1.0 / 3.0})), UtilityFunction::leontief(vec({1, 2})),
      UtilityFunction::max_linear(vec({2, 1})), UtilityFunction::linear(vec({1, 3})), UtilityFunction::fenchel()};
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (const auto& f : families) {
    const auto g = UtilityFunction::custom(f.to_expression(), 2);
    for (int t = 0; t < 50; ++t) {
      const Vector b = vec({u(rng), u(rng)});
      CHECK(g(b) == doctest::Approx(f(b)).epsilon(1e-12));
    }
  }
}

TEST_CASE("known quasiconcavity") {
  CHECK(UtilityFunction::cobb_douglas(vec({1, 1})).known_quasiconcave());
  CHECK(UtilityFunction::fenchel().known_quasiconcave());
  CHECK_FALSE(UtilityFunction::max_linear(vec({2, 1})).known_quasiconcave());
  CHECK(UtilityFunction::max_linear(vec({0, 1})).known_quasiconcave());
  CHECK_FALSE(UtilityFunction::custom("x*y", 2).known_quasiconcave());
}

TEST_CASE("family names round trip") {
  for (auto f : {Family::cobb_douglas, Family::leontief, Family::max_linear, Family::linear,
                 Family::fenchel, Family::custom}) {
    CHECK(family_from_string(to_string(f)) == f);
  }
  CHECK(to_string(Family::max_linear) == "max-linear");
  CHECK(family_from_string("custom-expression") == Family::custom);
}
