#include "relax/ode.hpp"

#include <algorithm>

namespace relax {

State Trajectory::eval(double t) const {
  if (steps_.empty()) return y_.front();
  t = std::clamp(t, t_.front(), t_.back());
  // index of the step whose [t0, t1] contains t
  auto it = std::upper_bound(t_.begin(), t_.end(), t);
  std::size_t idx = static_cast<std::size_t>(std::distance(t_.begin(), it));
  idx = (idx == 0) ? 0 : idx - 1;
  if (idx >= steps_.size()) idx = steps_.size() - 1;
  const Vec2 y = steps_[idx].eval(t);
  return {y[0], y[1]};
}

namespace {

struct SystemRhs {
  const FastSlowSystem* sys;
  double u;
  Vec2 operator()(double, const Vec2& y) const {
    return {eval_fast(*sys, y[0], y[1], u), sys->epsilon * eval_slow(*sys, y[0], y[1])};
  }
};

void run_segment(const FastSlowSystem& sys, double u, double t0, double t1,
                 const OdeTolerances& tol, Trajectory& traj) {
  Vec2 y = {traj.back().x, traj.back().z};
  integrate_dp45(SystemRhs{&sys, u}, t0, t1, y, tol,
                 [&](double t, const Vec2& yn, const DenseStep& d) {
                   traj.append(t, {yn[0], yn[1]}, d);
                 });
}

}  // namespace

Trajectory integrate(const FastSlowSystem& sys, State s0, std::pair<double, double> t_span,
                     const OdeTolerances& tol, double u_const) {
  if (!(sys.epsilon > 0.0)) throw ValidationError("epsilon");
  Trajectory traj(t_span.first, s0);
  run_segment(sys, u_const, t_span.first, t_span.second, tol, traj);
  return traj;
}

Trajectory integrate(const FastSlowSystem& sys, State s0, const InputSignal& input,
                     std::pair<double, double> t_span, const OdeTolerances& tol) {
  if (!(sys.epsilon > 0.0)) throw ValidationError("epsilon");
  if (const auto* imp = std::get_if<Impulse>(&input)) {
    s0.x += imp->area;  // exact jump at onset; z continuous
    Trajectory traj(t_span.first, s0);
    run_segment(sys, 0.0, t_span.first, t_span.second, tol, traj);
    return traj;
  }
  const auto& p = std::get<SquarePulse>(input);
  if (p.duration_slow < 0.0) throw ValidationError("duration_slow");
  const double dt_fast = p.duration_slow / sys.epsilon;
  const double t_off = std::min(t_span.first + dt_fast, t_span.second);
  Trajectory traj(t_span.first, s0);
  if (t_off > t_span.first) run_segment(sys, p.amplitude, t_span.first, t_off, tol, traj);
  if (t_span.second > t_off) run_segment(sys, 0.0, t_off, t_span.second, tol, traj);
  return traj;
}

}  // namespace relax
