#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "relax/model.hpp"
#include "relax/quadrature.hpp"
#include "relax/rootfind.hpp"
#include "relax/singular.hpp"

using namespace relax;

TEST_CASE("phase wrapping edges") {
  CHECK(Phase(0.0).radians() == 0.0);
  CHECK(Phase(kTwoPi).radians() == 0.0);
  CHECK(Phase(-1e-18).radians() >= 0.0);
  CHECK(Phase(-1e-18).radians() < kTwoPi);
  CHECK(Phase(3.0 * kTwoPi + 1.0).radians() == doctest::Approx(1.0));
  CHECK(Phase(-1.0).radians() == doctest::Approx(kTwoPi - 1.0));

  const double pi = 0.5 * kTwoPi;
  CHECK(wrap_shift(0.3) == doctest::Approx(0.3));
  CHECK(wrap_shift(pi) == -pi);  // half-open on the positive side
  CHECK(wrap_shift(-pi) == -pi);
  CHECK(wrap_shift(pi + 0.1) == doctest::Approx(-pi + 0.1));
  CHECK(wrap_shift(5.0 * kTwoPi + 0.2) == doctest::Approx(0.2));
}

TEST_CASE("brent finds bracketed roots") {
  const double r = brent([](double x) { return std::cos(x); }, 1.0, 2.0);
  CHECK(r == doctest::Approx(0.25 * kTwoPi).epsilon(1e-12));
  const double r2 = brent([](double x) { return x * x * x - 2.0; }, 0.0, 2.0);
  CHECK(r2 == doctest::Approx(std::cbrt(2.0)).epsilon(1e-12));
  CHECK_THROWS_AS(brent([](double x) { return 1.0 + x * x; }, -1.0, 1.0), RootFindError);
}

TEST_CASE("safeguarded newton hits the residual target") {
  const auto f = [](double x) { return std::sin(x) - 0.5; };
  const auto df = [](double x) { return std::cos(x); };
  const double r = newton_bisect(f, df, 0.0, 1.5, 0.2, 1e-14);
  CHECK(std::abs(f(r)) <= 1e-14);
  // flat derivative falls back to bisection and still converges
  const auto g = [](double x) { return x * x * x; };
  const auto dg = [](double) { return 0.0; };
  const double r2 = newton_bisect(g, dg, -1.0, 2.0, 1.9, 1e-12);
  CHECK(std::abs(g(r2)) <= 1e-12);
}

TEST_CASE("adaptive quadrature on smooth and peaked integrands") {
  const double a = integrate_adaptive([](double x) { return x * x; }, 0.0, 1.0, 1e-13);
  CHECK(a == doctest::Approx(1.0 / 3.0).epsilon(1e-13));
  // narrow Lorentzian peak forces subdivision
  const double w = 1e-2;
  const double b =
      integrate_adaptive([&](double x) { return 1.0 / (w * w + x * x); }, -1.0, 1.0, 1e-11);
  CHECK(b == doctest::Approx(2.0 / w * std::atan(1.0 / w)).epsilon(1e-12));
  // an interval budget too small for the requested accuracy is an error
  CHECK_THROWS_AS(
      integrate_adaptive([&](double x) { return 1.0 / (1e-8 + x * x); }, -1.0, 1.0, 1e-13, 8),
      QuadratureError);
  // orientation carries the sign
  const double c = integrate_adaptive([](double x) { return x; }, 1.0, 0.0, 1e-13);
  CHECK(c == doctest::Approx(-0.5));
}

TEST_CASE("randomized S-shaped systems keep the branch invariants") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int accepted = 0;
  for (int trial = 0; trial < 60; ++trial) {
    // f = c1 x + c3 x^3 with c1 > 0 > c3 is always S-shaped
    const double c1 = 0.3 + 2.0 * unit(rng);
    const double c3 = -(0.1 + unit(rng));
    const double current = -1.0 + 2.0 * unit(rng);
    const auto sys = FastSlowSystem::polynomial(
        Polynomial({0.0, c1, 0.0, c3}), Polynomial({unit(rng) - 0.5, 1.0}),
        -(0.2 + unit(rng)), current, 0.0);
    const auto geom = fold_points(sys);
    CHECK(geom.lower_fold.z < geom.upper_fold.z);
    CHECK(geom.lower_fold.x < geom.upper_fold.x);
    ++accepted;

    const double u_bar = 0.5 * (unit(rng) - 0.5);
    for (int k = 0; k < 8; ++k) {
      const double z = geom.lower_fold.z + u_bar +
                       (geom.upper_fold.z - geom.lower_fold.z) * (0.02 + 0.96 * unit(rng));
      const double lo = branch_solve(geom, z, Branch::Lower, u_bar);
      const double mid = branch_solve(geom, z, Branch::Repelling, u_bar);
      const double hi = branch_solve(geom, z, Branch::Upper, u_bar);
      CHECK(lo < mid);
      CHECK(mid < hi);
      for (double x : {lo, mid, hi}) CHECK(std::abs(eval_fast(sys, x, z, u_bar)) <= 1e-12);
    }

    // signed travel times are antisymmetric wherever the slow field allows
    const double za = geom.lower_fold.z + 0.2 * (geom.upper_fold.z - geom.lower_fold.z);
    const double zb = geom.lower_fold.z + 0.8 * (geom.upper_fold.z - geom.lower_fold.z);
    try {
      const double fwd = travel_time(geom, Branch::Upper, za, zb);
      CHECK(fwd == -travel_time(geom, Branch::Upper, zb, za));
    } catch (const SlowFieldVanishes&) {
      // equilibrium on the arc; nothing to assert
    }
  }
  CHECK(accepted == 60);
}
