#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "relax/numeric.hpp"

using namespace relax;

namespace {

FastSlowSystem fhn(double eps) { return FastSlowSystem::fitzhugh_nagumo(0.7, 0.8, 1.0, eps); }

SingularOrbit fhn_orbit() { return build_orbit(fold_points(fhn(0.0))); }

}  // namespace

TEST_CASE("stepper order on the harmonic oscillator") {
  // y = (cos t, -sin t); fixed steps over [0, 2]
  const auto rhs = [](double, const Vec2& y) -> Vec2 { return {y[1], -y[0]}; };
  const auto run = [&](double h) {
    Vec2 y = {1.0, 0.0};
    auto r = rhs;
    double t = 0.0;
    double dense_err = 0.0;
    const int n = static_cast<int>(std::round(2.0 / h));
    for (int i = 0; i < n; ++i) {
      Vec2 k1 = rhs(t, y), y1, k7, err;
      DenseStep d;
      detail::dp45_step(r, t, y, h, k1, y1, k7, err, d);
      const double tm = t + 0.5 * h;
      const Vec2 ym = d.eval(tm);
      dense_err = std::max(dense_err, std::abs(ym[0] - std::cos(tm)));
      t += h;
      y = y1;
    }
    const double end_err = std::hypot(y[0] - std::cos(2.0), y[1] + std::sin(2.0));
    return std::make_pair(end_err, dense_err);
  };
  const auto [e1, d1] = run(0.2);
  const auto [e2, d2] = run(0.1);
  const double end_ratio = e1 / e2;
  const double dense_ratio = d1 / d2;
  CHECK(end_ratio > 20.0);  // fifth order endpoints
  CHECK(end_ratio < 50.0);
  CHECK(dense_ratio > 8.0);  // at least fourth order between nodes
}

TEST_CASE("adaptive tolerance is honored") {
  const auto rhs = [](double, const Vec2& y) -> Vec2 { return {y[1], -y[0]}; };
  for (double rtol : {1e-6, 1e-9}) {
    Vec2 y = {1.0, 0.0};
    integrate_dp45(rhs, 0.0, 10.0, y, {rtol, rtol * 1e-2},
                   [](double, const Vec2&, const DenseStep&) {});
    const double err = std::hypot(y[0] - std::cos(10.0), y[1] + std::sin(10.0));
    CHECK(err < 200.0 * rtol);
  }
}

TEST_CASE("impulse jump semantics") {
  const auto sys = fhn(0.1);
  const State s0{-1.5, 1.0};
  const auto traj = integrate(sys, s0, Impulse{1.5}, {0.0, 1.0});
  CHECK(traj.front().x == s0.x + 1.5);  // exact jump, never resolved by steps
  CHECK(traj.front().z == s0.z);        // slow variable continuous
  CHECK(traj.t_begin() == 0.0);
  CHECK(traj.t_end() == 1.0);
}

TEST_CASE("integrator failure modes") {
  // mirrored cubic blows up in finite time from the right; relative error
  // control collapses the step before the state overflows
  const auto bad = FastSlowSystem::polynomial(Polynomial({0.0, -1.0, 0.0, 1.0 / 3.0}),
                                              Polynomial({0.0, 1.0}), -1.0, 0.0, 0.1);
  CHECK_THROWS_AS(integrate(bad, State{3.0, 0.0}, {0.0, 10.0}), StepSizeUnderflow);
  const auto sys = fhn(0.1);
  CHECK_THROWS_AS(
      integrate(sys, State{std::numeric_limits<double>::quiet_NaN(), 0.0}, {0.0, 1.0}),
      NonFiniteState);
  // unreachable tolerance forces the controller into the floor
  CHECK_THROWS_AS(integrate(sys, State{2.0, 1.0 / 3.0}, {0.0, 1.0}, {1e-300, 1e-300}),
                  StepSizeUnderflow);
}

TEST_CASE("limit cycle detection and period scaling") {
  const auto orbit = fhn_orbit();
  const auto c1 = find_limit_cycle(fhn(0.1));
  const auto c2 = find_limit_cycle(fhn(0.01));

  CHECK(c1.period_fast > 0.0);
  CHECK(c1.anchor_return_gap < 1e-8);
  CHECK(c2.anchor_return_gap < 1e-8);

  // slow periods approach the singular one from above; the fold delays decay
  // like eps^(2/3) with a sizable prefactor here, so the gap at eps = 0.1 is
  // still large while eps = 0.01 sits within twenty percent
  CHECK(c1.period_slow > orbit.period_slow);
  CHECK(std::abs(c2.period_slow - orbit.period_slow) / orbit.period_slow < 0.20);
  CHECK(std::abs(c2.period_slow - orbit.period_slow) <
        std::abs(c1.period_slow - orbit.period_slow));
  // fast period blows up in the singular limit
  CHECK(c2.period_fast > c1.period_fast);
  // the anchor shadows the lower fold
  CHECK(std::abs(c2.anchor.z - orbit.geom.lower_fold.z) < 0.06);
  CHECK(std::abs(c2.anchor.z - orbit.geom.lower_fold.z) <
        std::abs(c1.anchor.z - orbit.geom.lower_fold.z));

  // periodicity: one full period returns to the anchor
  const auto traj = integrate(fhn(0.1), c1.anchor, {0.0, c1.period_fast});
  CHECK(std::hypot(traj.back().x - c1.anchor.x, traj.back().z - c1.anchor.z) < 1e-6);
}

TEST_CASE("no oscillation without baseline current") {
  const auto resting = FastSlowSystem::fitzhugh_nagumo(0.7, 0.8, 0.0, 0.1);
  CHECK_THROWS_AS(find_limit_cycle(resting), NoOscillation);
}

TEST_CASE("zero input produces zero shift") {
  const auto sys = fhn(0.1);
  const auto cycle = find_limit_cycle(sys);
  for (int i = 0; i < 16; ++i) {
    const double th = kTwoPi * i / 16.0;
    CHECK(std::abs(numeric_phase_shift(sys, cycle, Impulse{0.0}, Phase(th))) < 1e-8);
  }
  // the curve closes: a full turn is the same phase
  CHECK(numeric_phase_shift(sys, cycle, Impulse{1.5}, Phase(kTwoPi)) ==
        numeric_phase_shift(sys, cycle, Impulse{1.5}, Phase(0.0)));
}

TEST_CASE("phase algebra composes") {
  const auto sys = fhn(0.1);
  const auto cycle = find_limit_cycle(sys);
  const double T = cycle.period_fast;
  const double omega = kTwoPi / T;
  const double alpha = 1.5;

  const double s1 = numeric_phase_shift(sys, cycle, Impulse{alpha}, Phase(0.0));
  const double s2 = numeric_phase_shift(sys, cycle, Impulse{alpha}, Phase(s1));

  // composed experiment: impulse at the anchor, settle for six periods,
  // impulse again, then read the asymptotic offset from section crossings
  State s = cycle.anchor;
  s.x += alpha;
  State mid{};
  section_crossings(sys, s, 0.0, 6.0 * T, cycle.section_z, {}, &mid);
  mid.x += alpha;
  const auto crossings = section_crossings(sys, mid, 6.0 * T, 20.0 * T, cycle.section_z, {});
  REQUIRE(crossings.size() >= 2);
  const double c = crossings.back();
  const double ref0 = cycle.section_time;  // unperturbed crossings at ref0 + k T
  const double k = std::round((c - ref0 - wrap_shift(-(s1 + s2)) / omega) / T);
  const double composed = wrap_shift(omega * (ref0 + k * T - c));
  CHECK(std::abs(wrap_shift(composed - (s1 + s2))) < 1e-5);
}

TEST_CASE("numeric curve basics") {
  const auto sys = fhn(0.1);
  const auto cycle = find_limit_cycle(sys);
  const auto empty = numeric_prc(sys, cycle, Impulse{1.5}, 0);
  CHECK(empty.samples.empty());

  // forcing convergence failure aggregates per-sample errors with indices
  ShiftOptions impossible;
  impossible.converge_tol = 0.0;
  try {
    numeric_prc(sys, cycle, Impulse{1.5}, 4, 2, impossible);
    FAIL("expected PrcSampleError");
  } catch (const PrcSampleError& e) {
    CHECK(e.failures.size() == 4);
    CHECK(e.failures.front().first == 0);
  }
}

TEST_CASE("numeric impulse response concentrates before the lower fold") {
  const auto sys = fhn(0.01);
  const auto cycle = find_limit_cycle(sys);
  const auto orbit = fhn_orbit();
  const auto thr = crossing_threshold(orbit, 1.5, +1);
  REQUIRE(thr.has_value());
  // inside the advance zone
  const double advancing =
      numeric_phase_shift(sys, cycle, Impulse{1.5}, Phase(thr->theta_c.radians() + 0.4));
  CHECK(advancing > 0.3);
  // mid upper branch: nothing happens
  const double quiet = numeric_phase_shift(sys, cycle, Impulse{1.5}, Phase(1.0));
  CHECK(std::abs(quiet) < 0.05);
}

TEST_CASE("adjoint infinitesimal response") {
  const auto sys = fhn(0.1);
  const auto cycle = find_limit_cycle(sys);
  const auto iprc = adjoint_iprc(sys, cycle, 512);
  CHECK(iprc.q.size() == 512);
  CHECK(iprc.max_normalization_residual < 1e-6);
  CHECK(!iprc.monodromy_warning);

  // finite-difference cross-check at the 8 strongest phases
  const double alpha = 1e-4 * sys.epsilon;
  std::vector<std::size_t> order(iprc.q.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return std::abs(iprc.q[a]) > std::abs(iprc.q[b]); });
  std::vector<std::size_t> picked;
  for (std::size_t idx : order) {
    bool ok = true;
    for (std::size_t j : picked)
      if (std::abs(wrap_shift(iprc.theta[idx] - iprc.theta[j])) < 0.1) ok = false;
    if (ok) picked.push_back(idx);
    if (picked.size() == 8) break;
  }
  REQUIRE(picked.size() == 8);
  ShiftOptions tight;
  tight.tol = {1e-11, 1e-13};
  for (std::size_t idx : picked) {
    const double fd =
        numeric_phase_shift(sys, cycle, Impulse{alpha}, Phase(iprc.theta[idx]), tight) / alpha;
    CHECK(std::abs(fd - iprc.q[idx]) < 0.05 * std::abs(iprc.q[idx]));
  }

  // the deep relaxation regime is flagged as poorly conditioned
  const auto sys2 = fhn(0.01);
  const auto cycle2 = find_limit_cycle(sys2);
  const auto iprc2 = adjoint_iprc(sys2, cycle2, 256);
  CHECK(iprc2.monodromy_warning);
}

TEST_CASE("large impulses break the linear prediction") {
  const auto sys = fhn(0.1);
  const auto cycle = find_limit_cycle(sys);
  const auto iprc = adjoint_iprc(sys, cycle, 256);
  const double small = 1e-4 * sys.epsilon;
  double err_small = 0.0, err_big = 0.0;
  for (int i = 0; i < 16; ++i) {
    const double th = kTwoPi * i / 16.0;
    const double q = iprc.q[(i * 256) / 16];
    const double s_small = numeric_phase_shift(sys, cycle, Impulse{small}, Phase(th));
    const double s_big = numeric_phase_shift(sys, cycle, Impulse{1.5}, Phase(th));
    err_small = std::max(err_small, std::abs(small * q - s_small));
    err_big = std::max(err_big, std::abs(1.5 * q - s_big));
  }
  CHECK(err_big > 10.0 * err_small);
}

TEST_CASE("convolution of the infinitesimal response") {
  const auto sys = fhn(0.1);
  const auto cycle = find_limit_cycle(sys);
  const auto iprc = adjoint_iprc(sys, cycle, 512);

  // impulses reproduce alpha * q exactly
  const auto imp = convolve_iprc(iprc, Impulse{1.5});
  for (std::size_t i = 0; i < iprc.q.size(); ++i)
    CHECK(imp.samples[i].shift == 1.5 * iprc.q[i]);
  const auto zero = convolve_iprc(iprc, Impulse{0.0});
  for (const auto& s : zero.samples) CHECK(s.shift == 0.0);

  // a pulse lasting one full period integrates q around the whole circle
  const auto full = convolve_iprc(iprc, SquarePulse{0.25, cycle.period_slow});
  double loop = 0.0;
  const double h = kTwoPi / static_cast<double>(iprc.q.size());
  for (std::size_t i = 0; i < iprc.q.size(); ++i)
    loop += 0.5 * (iprc.q[i] + iprc.q[(i + 1) % iprc.q.size()]) * h;
  const double expect = 0.25 * loop / (kTwoPi / cycle.period_fast);
  for (const auto& s : full.samples) CHECK(s.shift == doctest::Approx(expect).epsilon(1e-10));

  // grid convergence of the full-period value
  const auto iprc_dense = adjoint_iprc(sys, cycle, 2048);
  const auto full_dense = convolve_iprc(iprc_dense, SquarePulse{0.25, cycle.period_slow});
  CHECK(std::abs(full.samples[0].shift - full_dense.samples[0].shift) < 1e-6);
}

TEST_CASE("pulse simulation slides along the shifted manifold") {
  const auto sys = fhn(0.05);
  const auto cycle = find_limit_cycle(sys);
  const auto geom = fold_points(fhn(0.0));
  const double dt_slow = 0.3 * cycle.period_slow;
  const double dt_fast = dt_slow / sys.epsilon;
  const auto traj = integrate(sys, cycle.anchor, SquarePulse{0.25, dt_slow},
                              {0.0, dt_fast});
  // after the initial layer transient the trajectory hugs b+(z - u)
  for (double f : {0.3, 0.5, 0.7, 0.9}) {
    const State s = traj.eval(f * dt_fast);
    const double expect = branch_solve(geom, s.z, Branch::Upper, 0.25);
    CHECK(std::abs(s.x - expect) < 5.0 * sys.epsilon);
  }
}

TEST_CASE("asymmetric oscillator: prediction matches simulation off the built-in model") {
  const auto sys0 = FastSlowSystem::polynomial(Polynomial({0.0, 1.2, 0.0, -0.25}),
                                               Polynomial({0.3, 1.0}), -0.6, 0.8, 0.0);
  const auto orbit = build_orbit(fold_points(sys0));
  const auto sys = sys0.with_epsilon(0.05);
  const auto cycle = find_limit_cycle(sys);
  CHECK(cycle.period_slow > orbit.period_slow);
  const auto thr = crossing_threshold(orbit, 1.2, +1);
  REQUIRE(thr.has_value());
  for (double th : {1.0, thr->theta_c.radians() + 0.5, kTwoPi - 0.2}) {
    const double s0 = impulse_shift(orbit, 1.2, Phase(th));
    const double se = numeric_phase_shift(sys, cycle, Impulse{1.2}, Phase(th));
    CHECK(std::abs(se - s0) < 0.12);
  }
}

TEST_CASE("error sweep structure") {
  SweepOptions so;
  so.n_samples = 16;
  so.threads = 2;
  const auto report = error_sweep(fhn(0.0), {0.1, 0.05, 0.02}, Impulse{1.5}, so);
  REQUIRE(report.entries.size() == 3);
  for (const auto& e : report.entries) {
    CHECK(e.sup_error_singular > 0.0);
    CHECK(e.sup_error_infinitesimal > 0.0);
    CHECK(e.period_fast > 0.0);
  }
  CHECK(report.entries[0].sup_error_singular > report.entries[2].sup_error_singular);
  CHECK(std::isfinite(report.beta_hat));
  CHECK(!report.excluded_phases.empty());
  CHECK_THROWS_AS(error_sweep(fhn(0.0), {0.1, 0.05}, Impulse{1.5}, so), ValidationError);
}

TEST_CASE("sweep with a pulse input shows the opposite trade-off") {
  const auto orbit = fhn_orbit();
  SweepOptions so;
  so.n_samples = 24;
  so.threads = 2;
  so.exclusion_band = 0.35;
  const auto report =
      error_sweep(fhn(0.0), {0.1, 0.05, 0.02}, SquarePulse{0.25, 0.1 * orbit.period_slow}, so);
  REQUIRE(report.entries.size() == 3);
  // the geometric prediction improves toward the singular limit...
  CHECK(report.entries[2].sup_error_singular < report.entries[0].sup_error_singular);
  // ...while the linear prediction for this fixed finite input degrades
  CHECK(report.entries[2].sup_error_infinitesimal > report.entries[0].sup_error_infinitesimal);
  // the advance-region jump on the lower arc was located for the exclusion
  bool has_jump = false;
  for (double d : report.excluded_phases)
    if (d > orbit.theta_plus + 0.3 && d < kTwoPi - 0.3) has_jump = true;
  CHECK(has_jump);
}
