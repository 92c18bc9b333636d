// Adaptive Dormand-Prince 5(4) integration with dense output, plus the
// Trajectory container for simulated fast-slow systems.
#pragma once

#include <array>
#include <cmath>
#include <utility>
#include <vector>

#include "relax/errors.hpp"
#include "relax/model.hpp"
#include "relax/singular.hpp"

namespace relax {

struct State {
  double x = 0.0, z = 0.0;
};

struct OdeTolerances {
  double rel = 1e-9;
  double abs = 1e-11;
};

using Vec2 = std::array<double, 2>;

// Quartic continuous extension of one accepted step.
struct DenseStep {
  double t0 = 0.0, h = 0.0;
  Vec2 c0{}, c1{}, c2{}, c3{}, c4{};

  Vec2 eval(double t) const {
    const double th = (t - t0) / h;
    const double th1 = 1.0 - th;
    Vec2 y;
    for (int i = 0; i < 2; ++i)
      y[i] = c0[i] + th * (c1[i] + th1 * (c2[i] + th * (c3[i] + th1 * c4[i])));
    return y;
  }
};

namespace detail {

// Dormand-Prince 5(4) tableau.
inline constexpr double kC2 = 1.0 / 5, kC3 = 3.0 / 10, kC4 = 4.0 / 5, kC5 = 8.0 / 9;
inline constexpr double kA21 = 1.0 / 5;
inline constexpr double kA31 = 3.0 / 40, kA32 = 9.0 / 40;
inline constexpr double kA41 = 44.0 / 45, kA42 = -56.0 / 15, kA43 = 32.0 / 9;
inline constexpr double kA51 = 19372.0 / 6561, kA52 = -25360.0 / 2187, kA53 = 64448.0 / 6561,
                        kA54 = -212.0 / 729;
inline constexpr double kA61 = 9017.0 / 3168, kA62 = -355.0 / 33, kA63 = 46732.0 / 5247,
                        kA64 = 49.0 / 176, kA65 = -5103.0 / 18656;
inline constexpr double kA71 = 35.0 / 384, kA73 = 500.0 / 1113, kA74 = 125.0 / 192,
                        kA75 = -2187.0 / 6784, kA76 = 11.0 / 84;
inline constexpr double kE1 = 71.0 / 57600, kE3 = -71.0 / 16695, kE4 = 71.0 / 1920,
                        kE5 = -17253.0 / 339200, kE6 = 22.0 / 525, kE7 = -1.0 / 40;
inline constexpr double kD1 = -12715105075.0 / 11282082432.0;
inline constexpr double kD3 = 87487479700.0 / 32700410799.0;
inline constexpr double kD4 = -10690763975.0 / 1880347072.0;
inline constexpr double kD5 = 701980252875.0 / 199316789632.0;
inline constexpr double kD6 = -1453857185.0 / 822651844.0;
inline constexpr double kD7 = 69997945.0 / 29380423.0;

// One explicit step; k1 = rhs(t, y) must be supplied (FSAL).
template <class Rhs>
void dp45_step(Rhs& rhs, double t, const Vec2& y, double h, const Vec2& k1, Vec2& y_out,
               Vec2& k7_out, Vec2& err_out, DenseStep& dense) {
  Vec2 w, k2, k3, k4, k5, k6;
  for (int i = 0; i < 2; ++i) w[i] = y[i] + h * kA21 * k1[i];
  k2 = rhs(t + kC2 * h, w);
  for (int i = 0; i < 2; ++i) w[i] = y[i] + h * (kA31 * k1[i] + kA32 * k2[i]);
  k3 = rhs(t + kC3 * h, w);
  for (int i = 0; i < 2; ++i) w[i] = y[i] + h * (kA41 * k1[i] + kA42 * k2[i] + kA43 * k3[i]);
  k4 = rhs(t + kC4 * h, w);
  for (int i = 0; i < 2; ++i)
    w[i] = y[i] + h * (kA51 * k1[i] + kA52 * k2[i] + kA53 * k3[i] + kA54 * k4[i]);
  k5 = rhs(t + kC5 * h, w);
  for (int i = 0; i < 2; ++i)
    w[i] = y[i] + h * (kA61 * k1[i] + kA62 * k2[i] + kA63 * k3[i] + kA64 * k4[i] + kA65 * k5[i]);
  k6 = rhs(t + h, w);
  for (int i = 0; i < 2; ++i)
    y_out[i] = y[i] + h * (kA71 * k1[i] + kA73 * k3[i] + kA74 * k4[i] + kA75 * k5[i] + kA76 * k6[i]);
  k7_out = rhs(t + h, y_out);
  for (int i = 0; i < 2; ++i)
    err_out[i] = h * (kE1 * k1[i] + kE3 * k3[i] + kE4 * k4[i] + kE5 * k5[i] + kE6 * k6[i] +
                      kE7 * k7_out[i]);

  dense.t0 = t;
  dense.h = h;
  for (int i = 0; i < 2; ++i) {
    const double ydiff = y_out[i] - y[i];
    const double bspl = h * k1[i] - ydiff;
    dense.c0[i] = y[i];
    dense.c1[i] = ydiff;
    dense.c2[i] = bspl;
    dense.c3[i] = ydiff - h * k7_out[i] - bspl;
    dense.c4[i] = h * (kD1 * k1[i] + kD3 * k3[i] + kD4 * k4[i] + kD5 * k5[i] + kD6 * k6[i] +
                       kD7 * k7_out[i]);
  }
}

inline double error_norm(const Vec2& err, const Vec2& y0, const Vec2& y1,
                         const OdeTolerances& tol) {
  double s = 0.0;
  for (int i = 0; i < 2; ++i) {
    const double sk = tol.abs + tol.rel * std::max(std::abs(y0[i]), std::abs(y1[i]));
    const double e = err[i] / sk;
    s += e * e;
  }
  return std::sqrt(0.5 * s);
}

}  // namespace detail

// Integrates y' = rhs(t, y) from t0 to t1 (t1 >= t0), calling
// on_step(t_new, y_new, dense) after every accepted step.
template <class Rhs, class OnStep>
void integrate_dp45(Rhs&& rhs, double t0, double t1, Vec2& y, const OdeTolerances& tol,
                    OnStep&& on_step) {
  if (t1 == t0) return;
  if (t1 < t0) throw Error("bad_span", "integration span must run forward");

  Vec2 k1 = rhs(t0, y);
  if (!std::isfinite(k1[0]) || !std::isfinite(k1[1]))
    throw NonFiniteState("non-finite derivative at the initial state");

  // initial step size: one explicit Euler probe
  double h;
  {
    double d0 = detail::error_norm({y[0], y[1]}, y, y, tol);
    double d1 = detail::error_norm(k1, y, y, tol);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, t1 - t0);
    Vec2 y1 = {y[0] + h0 * k1[0], y[1] + h0 * k1[1]};
    Vec2 k2 = rhs(t0 + h0, y1);
    Vec2 dk = {(k2[0] - k1[0]) / h0, (k2[1] - k1[1]) / h0};
    double d2 = detail::error_norm(dk, y, y, tol);
    double h1 = (std::max(d1, d2) <= 1e-15) ? std::max(1e-6, h0 * 1e-3)
                                            : std::pow(0.01 / std::max(d1, d2), 0.2);
    h = std::min({100.0 * h0, h1, t1 - t0});
  }

  double t = t0;
  double facmax = 5.0;
  while (t < t1) {
    if (!(h > 0.0) || t + h == t)
      throw StepSizeUnderflow("step size underflow at t = " + std::to_string(t));
    bool last = false;
    if (t + h >= t1) {
      h = t1 - t;
      last = true;
    }
    Vec2 y_new, k7, err;
    DenseStep dense;
    detail::dp45_step(rhs, t, y, h, k1, y_new, k7, err, dense);
    if (!std::isfinite(y_new[0]) || !std::isfinite(y_new[1]))
      throw NonFiniteState("state became non-finite at t = " + std::to_string(t));
    const double en = detail::error_norm(err, y, y_new, tol);
    if (en <= 1.0) {
      t = last ? t1 : t + h;
      y = y_new;
      k1 = k7;  // first-same-as-last
      on_step(t, y, dense);
      const double fac = (en == 0.0) ? facmax : std::clamp(0.9 * std::pow(en, -0.2), 0.2, facmax);
      h *= fac;
      facmax = 5.0;
    } else {
      h *= std::clamp(0.9 * std::pow(en, -0.2), 0.2, 1.0);
      facmax = 1.0;  // no growth right after a rejection
    }
  }
}

// Piecewise-dense solution record.
class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(double t0, State s0) { reset(t0, s0); }

  void reset(double t0, State s0) {
    t_ = {t0};
    y_ = {s0};
    steps_.clear();
  }

  void append(double t1, State y1, const DenseStep& dense) {
    t_.push_back(t1);
    y_.push_back(y1);
    steps_.push_back(dense);
  }

  bool empty() const { return steps_.empty(); }
  double t_begin() const { return t_.front(); }
  double t_end() const { return t_.back(); }
  const std::vector<double>& times() const { return t_; }
  const std::vector<State>& states() const { return y_; }
  const std::vector<DenseStep>& steps() const { return steps_; }
  State front() const { return y_.front(); }
  State back() const { return y_.back(); }

  // Dense evaluation; t is clamped to the covered span.
  State eval(double t) const;

 private:
  std::vector<double> t_;
  std::vector<State> y_;
  std::vector<DenseStep> steps_;
};

// Direct simulation of the fast-time dynamics with constant input u.
Trajectory integrate(const FastSlowSystem& sys, State s0, std::pair<double, double> t_span,
                     const OdeTolerances& tol = {}, double u_const = 0.0);

// Simulation with a phase-resetting input applied at the start of the span:
// impulses are exact state jumps x += area at t_span.first (never resolved
// through the integrator); square pulses switch the constant input at the
// exact end-of-pulse time.
Trajectory integrate(const FastSlowSystem& sys, State s0, const InputSignal& input,
                     std::pair<double, double> t_span, const OdeTolerances& tol = {});

}  // namespace relax
