#include "relax/singular.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "relax/quadrature.hpp"
#include "relax/rootfind.hpp"

namespace relax {

double wrap_shift(double s) {
  double w = s - kTwoPi * std::floor(s / kTwoPi + 0.5);
  if (w < -0.5 * kTwoPi) w = -0.5 * kTwoPi;
  if (w >= 0.5 * kTwoPi) w = -0.5 * kTwoPi;
  return w;
}

std::string input_label(const InputSignal& input) {
  std::ostringstream os;
  if (const auto* imp = std::get_if<Impulse>(&input)) {
    os << "impulse(area=" << imp->area << ")";
  } else {
    const auto& p = std::get<SquarePulse>(input);
    os << "pulse(amplitude=" << p.amplitude << ", duration_slow=" << p.duration_slow << ")";
  }
  return os.str();
}

namespace {

BranchWindow shifted_window(const ManifoldGeometry& g, Branch b, double u_bar) {
  BranchWindow w;
  switch (b) {
    case Branch::Lower: w = g.lower_window; break;
    case Branch::Repelling: w = g.repelling_window; break;
    case Branch::Upper: w = g.upper_window; break;
  }
  w.z_min += u_bar;
  w.z_max += u_bar;
  return w;
}

// Scans the slow field along a branch arc; throws when it vanishes.
void require_nonvanishing_slow_field(const ManifoldGeometry& geom, Branch branch, double a,
                                     double b, double u_bar) {
  const int n = 128;
  double prev = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double z = a + (b - a) * static_cast<double>(i) / n;
    const double g = eval_slow(geom.sys, branch_solve(geom, z, branch, u_bar), z);
    if (std::abs(g) <= geom.opts.slow_field_tol || (i > 0 && (prev > 0.0) != (g > 0.0))) {
      std::ostringstream os;
      os << "slow field vanishes on the " << branch_name(branch) << " branch near z = " << z;
      throw SlowFieldVanishes(os.str());
    }
    prev = g;
  }
}

// First zero of the shifted reduced field g(b(z - u_bar), z) strictly between
// z_from and z_to, if any.
std::optional<double> first_slow_zero(const ManifoldGeometry& geom, Branch branch, double u_bar,
                                      double z_from, double z_to) {
  const int n = 256;
  double zprev = z_from;
  double gprev = eval_slow(geom.sys, branch_solve(geom, zprev, branch, u_bar), zprev);
  for (int i = 1; i <= n; ++i) {
    const double z = z_from + (z_to - z_from) * static_cast<double>(i) / n;
    const double g = eval_slow(geom.sys, branch_solve(geom, z, branch, u_bar), z);
    if ((gprev > 0.0) != (g > 0.0)) {
      const double zc = brent(
          [&](double zz) {
            return eval_slow(geom.sys, branch_solve(geom, zz, branch, u_bar), zz);
          },
          zprev, z, 1e-13);
      return zc;
    }
    zprev = z;
    gprev = g;
  }
  return std::nullopt;
}

}  // namespace

double travel_time(const ManifoldGeometry& geom, Branch branch, double z0, double z1,
                   double u_bar) {
  if (branch == Branch::Repelling)
    throw BranchOutOfDomain("travel time is defined on stable branches only");
  if (z0 == z1) return 0.0;
  if (z0 > z1) return -travel_time(geom, branch, z1, z0, u_bar);

  const BranchWindow w = shifted_window(geom, branch, u_bar);
  const double slack = 1e-12 * (1.0 + std::abs(z0) + std::abs(z1));
  if (z0 < w.z_min - slack || z1 > w.z_max + slack) {
    std::ostringstream os;
    os << "interval [" << z0 << ", " << z1 << "] outside " << branch_name(branch)
       << " branch domain [" << w.z_min << ", " << w.z_max << "]";
    throw BranchOutOfDomain(os.str());
  }

  double a = z0, b = z1;
  if (geom.opts.fold_offset > 0.0) {
    // keep quadrature endpoints off fold heights for degenerate slow fields
    const double fo = geom.opts.fold_offset;
    for (double fz : {geom.lower_fold.z + u_bar, geom.upper_fold.z + u_bar}) {
      if (std::abs(a - fz) < fo) a = std::min(a + fo, b);
      if (std::abs(b - fz) < fo) b = std::max(b - fo, a);
    }
    if (a >= b) return 0.0;
  }

  require_nonvanishing_slow_field(geom, branch, a, b, u_bar);

  const auto integrand = [&](double z) {
    const double x = branch_solve(geom, z, branch, u_bar);
    return 1.0 / eval_slow(geom.sys, x, z);
  };
  return integrate_adaptive(integrand, a, b, geom.opts.quad_tol);
}

SingularOrbit build_orbit(const ManifoldGeometry& geom) {
  const double z_minus = geom.lower_fold.z;
  const double z_plus = geom.upper_fold.z;
  const double dt_up = travel_time(geom, Branch::Upper, z_minus, z_plus, 0.0);
  const double dt_down = travel_time(geom, Branch::Lower, z_plus, z_minus, 0.0);
  if (!(dt_up > 0.0) || !(dt_down > 0.0))
    throw SlowFieldVanishes("reduced flow does not traverse the branches toward the folds");
  SingularOrbit orbit;
  orbit.geom = geom;
  orbit.period_slow = dt_up + dt_down;
  orbit.omega_slow = kTwoPi / orbit.period_slow;
  orbit.theta_plus = orbit.omega_slow * dt_up;
  return orbit;
}

OrbitPoint orbit_point(const SingularOrbit& orbit, Phase theta) {
  const auto& geom = orbit.geom;
  const double z_minus = geom.lower_fold.z;
  const double z_plus = geom.upper_fold.z;
  const double th = theta.radians();
  OrbitPoint p;
  if (th < orbit.theta_plus) {
    p.branch = Branch::Upper;
    if (th == 0.0) {
      p.z = z_minus;
    } else {
      p.z = brent(
          [&](double z) {
            return orbit.omega_slow * travel_time(geom, Branch::Upper, z_minus, z, 0.0) - th;
          },
          z_minus, z_plus, 1e-13);
    }
  } else {
    p.branch = Branch::Lower;
    if (th == orbit.theta_plus) {
      p.z = z_plus;
    } else {
      p.z = brent(
          [&](double z) {
            return orbit.theta_plus +
                   orbit.omega_slow * travel_time(geom, Branch::Lower, z_plus, z, 0.0) - th;
          },
          z_minus, z_plus, 1e-13);
    }
  }
  p.x = branch_solve(geom, p.z, p.branch, 0.0);
  return p;
}

Phase phase_of(const SingularOrbit& orbit, double x, double z) {
  const auto& geom = orbit.geom;
  const Branch basin = basin_of(geom, x, z, 0.0);
  if (basin == Branch::Upper) {
    return Phase(orbit.omega_slow * travel_time(geom, Branch::Upper, geom.lower_fold.z, z, 0.0));
  }
  return Phase(orbit.theta_plus +
               orbit.omega_slow * travel_time(geom, Branch::Lower, geom.upper_fold.z, z, 0.0));
}

std::optional<CrossingThreshold> crossing_threshold(const SingularOrbit& orbit, double alpha,
                                                    int sign) {
  if (!(alpha > 0.0)) return std::nullopt;
  const auto& geom = orbit.geom;
  const double z_minus = geom.lower_fold.z;
  const double z_plus = geom.upper_fold.z;
  const Branch source = sign > 0 ? Branch::Lower : Branch::Upper;

  // x-distance from the source branch to the separatrix; zero at the source
  // fold, maximal at the opposite fold.
  const auto gap = [&](double z) {
    const double xr = branch_solve(geom, z, Branch::Repelling, 0.0);
    const double xs = branch_solve(geom, z, source, 0.0);
    return sign > 0 ? xr - xs : xs - xr;
  };
  const double z_far = sign > 0 ? z_plus : z_minus;
  CrossingThreshold thr;
  if (alpha >= gap(z_far)) {
    thr.z_c = z_far;  // the impulse crosses everywhere on the branch
  } else {
    thr.z_c = brent([&](double z) { return gap(z) - alpha; }, z_minus, z_plus, 1e-13);
  }
  // phase of the threshold point through its own branch formula, so a z_c
  // grazing the source fold stays on the 2*pi side rather than wrapping to 0
  if (source == Branch::Lower) {
    thr.theta_c = Phase(orbit.theta_plus +
                        orbit.omega_slow * travel_time(geom, Branch::Lower, z_plus, thr.z_c, 0.0));
  } else {
    thr.theta_c =
        Phase(orbit.omega_slow * travel_time(geom, Branch::Upper, z_minus, thr.z_c, 0.0));
  }
  return thr;
}

double impulse_shift(const SingularOrbit& orbit, double alpha, Phase theta) {
  if (alpha == 0.0) return 0.0;
  const int sign = alpha > 0.0 ? +1 : -1;
  const auto thr = crossing_threshold(orbit, std::abs(alpha), sign);
  if (!thr) return 0.0;
  const auto& geom = orbit.geom;
  const double th = theta.radians();
  const OrbitPoint p = orbit_point(orbit, theta);
  // crossing zone expressed in z along the source branch (z == z_c stays on
  // the zero side); equivalent to theta_c < theta within the branch arc
  if (sign > 0) {
    if (p.branch != Branch::Lower || !(p.z < thr->z_c)) return 0.0;
    return wrap_shift(
        orbit.omega_slow * travel_time(geom, Branch::Upper, geom.lower_fold.z, p.z, 0.0) - th);
  }
  if (p.branch != Branch::Upper || !(p.z > thr->z_c)) return 0.0;
  return wrap_shift(orbit.theta_plus +
                    orbit.omega_slow * travel_time(geom, Branch::Lower, geom.upper_fold.z, p.z, 0.0) -
                    th);
}

double impulse_shift_by_reset(const SingularOrbit& orbit, double alpha, Phase theta) {
  const OrbitPoint p = orbit_point(orbit, theta);
  return wrap_shift(phase_of(orbit, p.x + alpha, p.z).radians() - theta.radians());
}

namespace {

Branch opposite(Branch b) { return b == Branch::Upper ? Branch::Lower : Branch::Upper; }

}  // namespace

PulseEndpoint pulse_endpoint(const SingularOrbit& orbit, double u_bar, double duration_slow,
                             Phase theta) {
  if (duration_slow < 0.0) throw ValidationError("duration_slow");
  const auto& geom = orbit.geom;
  const auto& sys = geom.sys;

  PulseEndpoint out;
  const OrbitPoint start = orbit_point(orbit, theta);
  Branch br = basin_of(geom, start.x, start.z, u_bar);
  double z = start.z;
  double x = branch_solve(geom, z, br, u_bar);
  out.trace.push_back({PulseSegment::Kind::Jump, br, start.x, start.z, x, z, 0.0});

  double rem = duration_slow;
  int legs = 0;
  while (rem > 0.0) {
    if (++legs > 4096) throw NotConverged("pulse evolution did not settle");
    const double g0 = eval_slow(sys, x, z);
    if (std::abs(g0) <= geom.opts.slow_field_tol) {
      out.parked = true;
      out.trace.push_back({PulseSegment::Kind::Park, br, x, z, x, z, rem});
      break;
    }
    const bool up = g0 > 0.0;
    double limit;
    bool limit_is_fold;
    if (br == Branch::Upper) {
      limit = up ? geom.upper_fold.z + u_bar : geom.upper_window.z_min + u_bar;
      limit_is_fold = up;
    } else {
      limit = up ? geom.lower_window.z_max + u_bar : geom.lower_fold.z + u_bar;
      limit_is_fold = !up;
    }

    const auto slide_to = [&](double z_end, double dt) {
      const double x_end = branch_solve(geom, z_end, br, u_bar);
      out.trace.push_back({PulseSegment::Kind::Slide, br, x, z, x_end, z_end, dt});
      x = x_end;
      z = z_end;
    };

    if (const auto zstar = first_slow_zero(geom, br, u_bar, z, limit)) {
      // an equilibrium blocks the way to the fold; the flow can only approach it
      const double z_probe = z + (*zstar - z) * (1.0 - 1e-6);
      const double t_probe = travel_time(geom, br, z, z_probe, u_bar);
      if (t_probe <= rem) {
        slide_to(z_probe, t_probe);
        out.parked = true;
        out.trace.push_back({PulseSegment::Kind::Park, br, x, z, branch_solve(geom, *zstar, br, u_bar),
                             *zstar, rem - t_probe});
        x = out.trace.back().x1;
        z = *zstar;
      } else {
        const double z_end = brent(
            [&](double zz) { return travel_time(geom, br, z, zz, u_bar) - rem; }, z, z_probe,
            1e-13);
        slide_to(z_end, rem);
      }
      break;
    }

    const double t_limit = travel_time(geom, br, z, limit, u_bar);
    if (t_limit > rem) {
      const double z_end =
          brent([&](double zz) { return travel_time(geom, br, z, zz, u_bar) - rem; }, z, limit,
                1e-13);
      slide_to(z_end, rem);
      break;
    }
    if (!limit_is_fold)
      throw BranchOutOfDomain("reduced flow leaves the computational window during the pulse");
    slide_to(limit, t_limit);
    rem -= t_limit;
    // instantaneous jump at the shifted fold
    const Branch next = opposite(br);
    const double x_land = branch_solve(geom, limit, next, u_bar);
    out.trace.push_back({PulseSegment::Kind::Jump, next, x, z, x_land, z, 0.0});
    br = next;
    x = x_land;
  }

  out.x = x;
  out.z = z;
  return out;
}

double pulse_shift(const SingularOrbit& orbit, double u_bar, double duration_slow, Phase theta) {
  if (u_bar == 0.0 || duration_slow == 0.0) return 0.0;  // identity input
  const PulseEndpoint ep = pulse_endpoint(orbit, u_bar, duration_slow, theta);
  const double advanced = theta.radians() + orbit.omega_slow * duration_slow;
  return wrap_shift(phase_of(orbit, ep.x, ep.z).radians() - advanced);
}

PrcCurve singular_prc(const SingularOrbit& orbit, const InputSignal& input,
                      std::size_t n_samples) {
  PrcCurve curve;
  curve.method = "singular";
  curve.input = input;
  curve.epsilon = 0.0;
  curve.samples.reserve(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const double th = kTwoPi * static_cast<double>(i) / static_cast<double>(n_samples);
    double s;
    if (const auto* imp = std::get_if<Impulse>(&input)) {
      s = impulse_shift(orbit, imp->area, Phase(th));
    } else {
      const auto& p = std::get<SquarePulse>(input);
      s = pulse_shift(orbit, p.amplitude, p.duration_slow, Phase(th));
    }
    curve.samples.push_back({th, s});
  }
  return curve;
}

std::vector<double> prc_discontinuities(const SingularOrbit& orbit, const InputSignal& input) {
  std::vector<double> d = {0.0, orbit.theta_plus};
  if (const auto* imp = std::get_if<Impulse>(&input)) {
    if (const auto thr =
            crossing_threshold(orbit, std::abs(imp->area), imp->area > 0.0 ? +1 : -1)) {
      d.push_back(thr->theta_c.radians());
    }
  } else {
    const auto& p = std::get<SquarePulse>(input);
    if (p.amplitude != 0.0 && p.duration_slow > 0.0) {
      // locate jumps of the sampled curve
      const int n = 2048;
      std::vector<double> s(n);
      double lo = 0.0, hi = 0.0;
      for (int i = 0; i < n; ++i) {
        s[i] = pulse_shift(orbit, p.amplitude, p.duration_slow, Phase(kTwoPi * i / n));
        lo = std::min(lo, s[i]);
        hi = std::max(hi, s[i]);
      }
      const double jump = std::max(0.2, 0.25 * (hi - lo));
      for (int i = 0; i < n; ++i) {
        const int j = (i + 1) % n;
        if (std::abs(s[j] - s[i]) > jump)
          d.push_back(Phase::wrap(kTwoPi * (i + 0.5) / n));
      }
    }
  }
  std::sort(d.begin(), d.end());
  d.erase(std::unique(d.begin(), d.end(),
                      [](double a, double b) { return std::abs(a - b) < 1e-9; }),
          d.end());
  return d;
}

}  // namespace relax
