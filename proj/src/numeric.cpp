#include "relax/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

#include "relax/parallel.hpp"
#include "relax/rootfind.hpp"

namespace relax {

namespace {

struct SystemRhs {
  const FastSlowSystem* sys;
  double u;
  Vec2 operator()(double, const Vec2& y) const {
    return {eval_fast(*sys, y[0], y[1], u), sys->epsilon * eval_slow(*sys, y[0], y[1])};
  }
};

double state_dist(const State& a, const State& b) { return std::hypot(a.x - b.x, a.z - b.z); }

// Streams one constant-input segment, reporting upward section crossings
// (z through zs with x > 0) to on_cross.
template <class OnCross>
void run_collect(const FastSlowSystem& sys, double u, double t0, double t1, Vec2& y,
                 const OdeTolerances& tol, double zs, OnCross&& on_cross) {
  double z_prev = y[1];
  integrate_dp45(SystemRhs{&sys, u}, t0, t1, y, tol,
                 [&](double t, const Vec2& yn, const DenseStep& d) {
                   if (z_prev < zs && yn[1] >= zs) {
                     const double tc =
                         brent([&](double tt) { return d.eval(tt)[1] - zs; }, d.t0, t, 1e-10);
                     const Vec2 yc = d.eval(tc);
                     if (yc[0] > 0.0) on_cross(tc, State{yc[0], yc[1]});
                   }
                   z_prev = yn[1];
                 });
}

double nominal_slow_period(const ManifoldGeometry& geom) {
  try {
    return build_orbit(geom).period_slow;
  } catch (const SlowFieldVanishes&) {
    // crude budget scale for systems without a singular cycle
    return 4.0 * (geom.upper_fold.z - geom.lower_fold.z);
  }
}

}  // namespace

std::vector<double> section_crossings(const FastSlowSystem& sys, State s0, double t0, double t1,
                                      double section_z, const OdeTolerances& tol, State* s_end) {
  std::vector<double> out;
  Vec2 y = {s0.x, s0.z};
  run_collect(sys, 0.0, t0, t1, y, tol, section_z,
              [&](double t, const State&) { out.push_back(t); });
  if (s_end) *s_end = {y[0], y[1]};
  return out;
}

LimitCycle find_limit_cycle(const FastSlowSystem& sys, const CycleOptions& opts) {
  if (!(sys.epsilon > 0.0)) throw ValidationError("epsilon");
  const ManifoldGeometry geom = fold_points(sys, opts.model);
  const double z_minus = geom.lower_fold.z;
  const double z_plus = geom.upper_fold.z;
  const double t_nom = nominal_slow_period(geom) / sys.epsilon;
  const double zs = 0.5 * (z_minus + z_plus);

  Vec2 y = {branch_solve(geom, z_minus, Branch::Upper, 0.0), z_minus};
  integrate_dp45(SystemRhs{&sys, 0.0}, 0.0, opts.transient_periods * t_nom, y, opts.tol,
                 [](double, const Vec2&, const DenseStep&) {});

  // hunt for a closed return through the section
  std::optional<std::pair<double, State>> prev_cross;
  double period = 0.0;
  State cycle_seed{};
  bool found = false;
  double t = 0.0;
  while (!found && t < opts.max_search_periods * t_nom) {
    const double t_next = t + t_nom;
    run_collect(sys, 0.0, t, t_next, y, opts.tol, zs, [&](double tc, const State& sc) {
      if (found) return;
      if (prev_cross && state_dist(sc, prev_cross->second) < opts.crossing_state_tol) {
        period = tc - prev_cross->first;
        cycle_seed = sc;
        found = true;
        return;
      }
      prev_cross = {tc, sc};
    });
    t = t_next;
  }
  if (!found) throw NoOscillation("no closed return through the section within the time budget");

  // one full loop from the section; the anchor is the minimum of z, i.e. the
  // upward zero of the slow field along the loop
  Trajectory loop(0.0, cycle_seed);
  {
    Vec2 w = {cycle_seed.x, cycle_seed.z};
    integrate_dp45(SystemRhs{&sys, 0.0}, 0.0, period, w, opts.tol,
                   [&](double tt, const Vec2& yn, const DenseStep& d) {
                     loop.append(tt, {yn[0], yn[1]}, d);
                   });
  }
  double t_min = 0.0;
  double z_min = cycle_seed.z;
  {
    const auto& ts = loop.times();
    const auto& ss = loop.states();
    double g_prev = eval_slow(sys, ss[0].x, ss[0].z);
    for (std::size_t i = 1; i < ts.size(); ++i) {
      const double g_i = eval_slow(sys, ss[i].x, ss[i].z);
      if (g_prev < 0.0 && g_i >= 0.0) {
        const auto& d = loop.steps()[i - 1];
        const double tc = brent(
            [&](double tt) {
              const Vec2 w = d.eval(tt);
              return eval_slow(sys, w[0], w[1]);
            },
            ts[i - 1], ts[i], 1e-12);
        const State sc = loop.eval(tc);
        if (sc.z < z_min) {
          z_min = sc.z;
          t_min = tc;
        }
      }
      g_prev = g_i;
    }
  }

  LimitCycle out;
  out.epsilon = sys.epsilon;
  out.period_fast = period;
  out.period_slow = sys.epsilon * period;
  out.anchor = loop.eval(t_min);
  out.section_z = zs;

  out.cycle.reset(0.0, out.anchor);
  {
    Vec2 w = {out.anchor.x, out.anchor.z};
    const Polynomial df = sys.f.derivative();
    double trace_integral = 0.0;
    double t_prev = 0.0;
    double tr_prev = df(out.anchor.x) + sys.epsilon * sys.g_z;
    integrate_dp45(SystemRhs{&sys, 0.0}, 0.0, period, w, opts.tol,
                   [&](double tt, const Vec2& yn, const DenseStep& d) {
                     out.cycle.append(tt, {yn[0], yn[1]}, d);
                     const double tr = df(yn[0]) + sys.epsilon * sys.g_z;
                     trace_integral += 0.5 * (tr + tr_prev) * (tt - t_prev);
                     tr_prev = tr;
                     t_prev = tt;
                   });
    out.log_second_multiplier = trace_integral;
  }
  out.anchor_return_gap = state_dist(out.cycle.back(), out.anchor);

  // section crossing time relative to the anchor
  {
    const auto& ts = out.cycle.times();
    const auto& ss = out.cycle.states();
    bool got = false;
    for (std::size_t i = 1; i < ts.size() && !got; ++i) {
      if (ss[i - 1].z < zs && ss[i].z >= zs) {
        const auto& d = out.cycle.steps()[i - 1];
        const double tc =
            brent([&](double tt) { return d.eval(tt)[1] - zs; }, ts[i - 1], ts[i], 1e-10);
        if (out.cycle.eval(tc).x > 0.0) {
          out.section_time = tc;
          got = true;
        }
      }
    }
    if (!got) throw NoOscillation("cycle does not cross the section");
  }
  return out;
}

State cycle_point(const LimitCycle& cycle, Phase theta) {
  return cycle.cycle.eval(theta.radians() / kTwoPi * cycle.period_fast);
}

double numeric_phase_shift(const FastSlowSystem& sys, const LimitCycle& cycle,
                           const InputSignal& input, Phase theta, const ShiftOptions& opts) {
  if (!(sys.epsilon > 0.0)) throw ValidationError("epsilon");
  const double T = cycle.period_fast;
  const double omega = kTwoPi / T;
  const double t_theta = theta.radians() / omega;
  State s = cycle.cycle.eval(t_theta);

  // unperturbed crossings occur at ref0 + k T from the input onset
  const double ref0 = std::fmod(cycle.section_time - t_theta + T, T);

  double pulse_len = 0.0;
  double pulse_amp = 0.0;
  if (const auto* imp = std::get_if<Impulse>(&input)) {
    s.x += imp->area;
  } else {
    const auto& p = std::get<SquarePulse>(input);
    if (p.duration_slow < 0.0) throw ValidationError("duration_slow");
    pulse_len = p.duration_slow / sys.epsilon;
    pulse_amp = p.amplitude;
  }

  std::vector<double> crossings;
  Vec2 y = {s.x, s.z};
  double t_done = 0.0;
  const auto advance = [&](double t_to) {
    if (pulse_len > t_done) {
      const double t_sw = std::min(pulse_len, t_to);
      run_collect(sys, pulse_amp, t_done, t_sw, y, opts.tol, cycle.section_z,
                  [&](double tc, const State&) { crossings.push_back(tc); });
      t_done = t_sw;
    }
    if (t_to > t_done) {
      run_collect(sys, 0.0, t_done, t_to, y, opts.tol, cycle.section_z,
                  [&](double tc, const State&) { crossings.push_back(tc); });
      t_done = t_to;
    }
  };

  const auto offset_of = [&](double c) {
    const double k = std::round((c - ref0) / T);
    return wrap_shift(omega * (ref0 + k * T - c));
  };

  double horizon = pulse_len + opts.horizon_periods * T;
  for (int attempt = 0; attempt < 2; ++attempt) {
    advance(horizon);
    if (crossings.size() >= 2) {
      const double d_last = offset_of(crossings.back());
      const double d_prev = offset_of(crossings[crossings.size() - 2]);
      if (std::abs(wrap_shift(d_last - d_prev)) <= opts.converge_tol) return d_last;
    }
    horizon += opts.horizon_periods * T;  // double once on slow convergence
  }
  throw NotConverged("section-crossing offsets still drift after extending the horizon");
}

PrcCurve numeric_prc(const FastSlowSystem& sys, const LimitCycle& cycle, const InputSignal& input,
                     std::size_t n_samples, unsigned threads, const ShiftOptions& opts) {
  PrcCurve curve;
  curve.method = "numeric";
  curve.input = input;
  curve.epsilon = sys.epsilon;
  curve.samples.resize(n_samples);
  if (n_samples == 0) return curve;

  std::vector<std::pair<std::size_t, std::string>> failures;
  std::mutex fail_mutex;
  parallel_for(n_samples, threads, [&](std::size_t i) {
    const double th = kTwoPi * static_cast<double>(i) / static_cast<double>(n_samples);
    try {
      curve.samples[i] = {th, numeric_phase_shift(sys, cycle, input, Phase(th), opts)};
    } catch (const std::exception& e) {
      std::lock_guard<std::mutex> lock(fail_mutex);
      failures.emplace_back(i, e.what());
    }
  });
  if (!failures.empty()) {
    std::sort(failures.begin(), failures.end());
    std::ostringstream os;
    os << failures.size() << " of " << n_samples << " samples failed; first at index "
       << failures.front().first << ": " << failures.front().second;
    throw PrcSampleError(std::move(failures), os.str());
  }
  return curve;
}

Iprc adjoint_iprc(const FastSlowSystem& sys, const LimitCycle& cycle, std::size_t n_samples,
                  const OdeTolerances& tol) {
  if (!(sys.epsilon > 0.0)) throw ValidationError("epsilon");
  if (n_samples == 0) throw ValidationError("iprc_samples");
  const double T = cycle.period_fast;
  const double omega = kTwoPi / T;
  const Polynomial df = sys.f.derivative();
  const Polynomial dgx = sys.g_x.derivative();

  const auto velocity = [&](const State& s) -> Vec2 {
    return {eval_fast(sys, s.x, s.z, 0.0), sys.epsilon * eval_slow(sys, s.x, s.z)};
  };

  // q solves dq/dt = -J(t)^T q; substituting u = 2T - t gives dq/du = J^T q
  // with the cycle state evaluated at 2T - u. Two backward periods: the first
  // damps the transient, the second is sampled.
  const auto rhs = [&](double u, const Vec2& q) -> Vec2 {
    double tm = 2.0 * T - u;
    if (tm >= T) tm -= T;
    tm = std::clamp(tm, 0.0, T);
    const State s = cycle.cycle.eval(tm);
    const double j11 = df(s.x);
    const double j21 = sys.epsilon * dgx(s.x);
    const double j22 = sys.epsilon * sys.g_z;
    return {j11 * q[0] + j21 * q[1], -q[0] + j22 * q[1]};
  };

  // sample targets in integration order (u increasing); theta_i = 2*pi*i/n
  // lives at t_i = i*T/n, i.e. u_i = 2*T - t_i
  std::vector<std::pair<double, std::size_t>> targets(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i)
    targets[i] = {2.0 * T - static_cast<double>(i) / static_cast<double>(n_samples) * T, i};
  std::sort(targets.begin(), targets.end());

  Iprc out;
  out.epsilon = sys.epsilon;
  out.period_fast = T;
  out.theta.resize(n_samples);
  out.q.resize(n_samples);

  const Vec2 v0 = velocity(cycle.anchor);
  const double v0n2 = v0[0] * v0[0] + v0[1] * v0[1];
  Vec2 q = {omega * v0[0] / v0n2, omega * v0[1] / v0n2};

  std::vector<Vec2> q_samples(n_samples);
  std::size_t next = 0;
  integrate_dp45(rhs, 0.0, 2.0 * T, q, tol, [&](double u, const Vec2&, const DenseStep& d) {
    while (next < targets.size() && targets[next].first <= u + 1e-12) {
      q_samples[targets[next].second] = d.eval(std::min(targets[next].first, u));
      ++next;
    }
  });
  if (next != n_samples) throw NotConverged("adjoint sampling incomplete");

  double max_resid = 0.0;
  bool warn = cycle.log_second_multiplier < std::log(1e-16);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const double th = kTwoPi * static_cast<double>(i) / static_cast<double>(n_samples);
    out.theta[i] = th;
    const State s = cycle.cycle.eval(th / kTwoPi * T);
    const Vec2 v = velocity(s);
    const double qv = q_samples[i][0] * v[0] + q_samples[i][1] * v[1];
    const double qn = std::hypot(q_samples[i][0], q_samples[i][1]);
    const double vn = std::hypot(v[0], v[1]);
    max_resid = std::max(max_resid, std::abs(qv - omega) / omega);
    if (std::abs(qv) < 1e-6 * qn * vn) warn = true;  // normalization direction lost
    out.q[i] = q_samples[i][0] * (omega / qv);
  }
  out.max_normalization_residual = max_resid;
  out.monodromy_warning = warn;
  return out;
}

namespace {

// Integral of the piecewise-linear periodic interpolant of q from grid node i
// to an arbitrary angle within the same period.
struct IprcIntegral {
  const Iprc* ip;
  double h;
  std::vector<double> cum;  // cum[k] = integral over [0, theta_k], cum[n] = full turn

  explicit IprcIntegral(const Iprc& iprc) : ip(&iprc) {
    const std::size_t n = iprc.q.size();
    h = kTwoPi / static_cast<double>(n);
    cum.resize(n + 1);
    cum[0] = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double q0 = iprc.q[k];
      const double q1 = iprc.q[(k + 1) % n];
      cum[k + 1] = cum[k] + 0.5 * (q0 + q1) * h;
    }
  }

  double at(double phi) const {  // phi in [0, 2*pi]
    const std::size_t n = ip->q.size();
    if (phi >= kTwoPi) return cum[n];
    const double r = phi / h;
    std::size_t k = static_cast<std::size_t>(r);
    if (k >= n) k = n - 1;
    const double d = phi - static_cast<double>(k) * h;
    const double q0 = ip->q[k];
    const double q1 = ip->q[(k + 1) % n];
    return cum[k] + q0 * d + 0.5 * (q1 - q0) * d * d / h;
  }
};

}  // namespace

PrcCurve convolve_iprc(const Iprc& iprc, const InputSignal& input) {
  PrcCurve curve;
  curve.method = "infinitesimal";
  curve.input = input;
  curve.epsilon = iprc.epsilon;
  const std::size_t n = iprc.q.size();
  curve.samples.resize(n);

  if (const auto* imp = std::get_if<Impulse>(&input)) {
    for (std::size_t i = 0; i < n; ++i)
      curve.samples[i] = {iprc.theta[i], imp->area * iprc.q[i]};
    return curve;
  }

  const auto& p = std::get<SquarePulse>(input);
  if (!(iprc.epsilon > 0.0) || !(iprc.period_fast > 0.0))
    throw ValidationError("iprc period");
  const double omega = kTwoPi / iprc.period_fast;
  // phase swept during the pulse: omega * duration_fast = 2*pi * Ds / Ts
  const double sweep = kTwoPi * p.duration_slow / (iprc.epsilon * iprc.period_fast);
  const double turns = std::floor(sweep / kTwoPi);
  const double rest = sweep - turns * kTwoPi;

  const IprcIntegral I(iprc);
  const double full = I.cum.back();
  for (std::size_t i = 0; i < n; ++i) {
    const double th = iprc.theta[i];
    double end = th + rest;
    double extra = turns * full;
    if (end >= kTwoPi) {
      end -= kTwoPi;
      extra += full;
    }
    const double integral = extra + I.at(end) - I.cum[i];
    curve.samples[i] = {th, p.amplitude / omega * integral};
  }
  return curve;
}

namespace {

double circular_distance(double a, double b) { return std::abs(wrap_shift(a - b)); }

// Piecewise-linear periodic interpolation of a PRC sampled on a uniform grid.
double interp_curve(const PrcCurve& c, double theta) {
  const std::size_t n = c.samples.size();
  const double h = kTwoPi / static_cast<double>(n);
  const double r = Phase::wrap(theta) / h;
  std::size_t k = static_cast<std::size_t>(r);
  if (k >= n) k = n - 1;
  const double w = r - static_cast<double>(k);
  return (1.0 - w) * c.samples[k].shift + w * c.samples[(k + 1) % n].shift;
}

}  // namespace

SweepReport error_sweep(const FastSlowSystem& sys_family, const std::vector<double>& eps_list,
                        const InputSignal& input, const SweepOptions& opts) {
  if (eps_list.size() < 3) throw ValidationError("epsilon_list");
  SweepReport report;
  report.input = input;
  report.band = opts.exclusion_band;

  const ManifoldGeometry geom = fold_points(sys_family, opts.model);
  const SingularOrbit orbit = build_orbit(geom);
  report.excluded_phases = prc_discontinuities(orbit, input);

  const std::size_t n = opts.n_samples;
  std::vector<double> thetas(n), q0(n);
  std::vector<bool> included(n);
  for (std::size_t j = 0; j < n; ++j) {
    thetas[j] = kTwoPi * static_cast<double>(j) / static_cast<double>(n);
    bool keep = true;
    for (double d : report.excluded_phases)
      if (circular_distance(thetas[j], d) <= opts.exclusion_band) keep = false;
    included[j] = keep;
    if (const auto* imp = std::get_if<Impulse>(&input)) {
      q0[j] = impulse_shift(orbit, imp->area, Phase(thetas[j]));
    } else {
      const auto& p = std::get<SquarePulse>(input);
      q0[j] = pulse_shift(orbit, p.amplitude, p.duration_slow, Phase(thetas[j]));
    }
  }

  for (double eps : eps_list) {
    const FastSlowSystem sys = sys_family.with_epsilon(eps);
    const LimitCycle cycle = find_limit_cycle(sys, opts.cycle);
    const PrcCurve qnum = numeric_prc(sys, cycle, input, n, opts.threads, opts.shift);
    const Iprc iprc = adjoint_iprc(sys, cycle, opts.iprc_samples, opts.shift.tol);
    const PrcCurve qinf = convolve_iprc(iprc, input);

    SweepEntry e;
    e.epsilon = eps;
    e.period_fast = cycle.period_fast;
    e.period_slow = cycle.period_slow;
    e.anchor_z_gap = std::abs(cycle.anchor.z - geom.lower_fold.z);
    for (std::size_t j = 0; j < n; ++j) {
      if (!included[j]) continue;
      e.sup_error_singular =
          std::max(e.sup_error_singular, std::abs(qnum.samples[j].shift - q0[j]));
      e.sup_error_infinitesimal = std::max(
          e.sup_error_infinitesimal, std::abs(qnum.samples[j].shift - interp_curve(qinf, thetas[j])));
    }
    report.entries.push_back(e);
  }

  // least-squares slope of log sup_error vs log epsilon
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double m = static_cast<double>(report.entries.size());
  for (const auto& e : report.entries) {
    const double lx = std::log(e.epsilon);
    const double ly = std::log(std::max(e.sup_error_singular, 1e-300));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  report.beta_hat = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  return report;
}

}  // namespace relax
