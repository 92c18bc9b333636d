// Independent reference computations for the tests. These deliberately avoid
// the library's root finder, quadrature and integrator: branch solving is
// plain bisection, travel times come from fixed-step RK4 on dtau/dz, and
// layer-flow basins from fixed-step RK4 with frozen z.
#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>

namespace oracle {

using Fn1 = std::function<double(double)>;
using Fn2 = std::function<double(double, double)>;

// Bisection on [lo, hi]; requires a sign change.
inline double bisect(const Fn1& f, double lo, double hi, int iters = 200) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0)) throw std::runtime_error("oracle bisect: no sign change");
  for (int i = 0; i < iters; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// x on the manifold f(x) + I + u = z inside the x-bracket [xlo, xhi].
inline double manifold_x(const Fn1& f, double current, double u, double z, double xlo,
                         double xhi) {
  return bisect([&](double x) { return f(x) + current + u - z; }, xlo, xhi);
}

// Slow time spent between two branch points, parameterized by x: with
// z = f(x) + I on the branch, dtau = f'(x) dx / g(x, f(x) + I). The integrand
// is smooth across folds, so fixed-step RK4 on dtau/dx converges cleanly.
inline double travel_time_rk4(const Fn1& f, const Fn1& df, const Fn2& g, double current,
                              double x0, double x1, int n = 20000) {
  const auto rate = [&](double x) { return df(x) / g(x, f(x) + current); };
  const double h = (x1 - x0) / n;
  double tau = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = x0 + h * i;
    const double k1 = rate(x);
    const double k2 = rate(x + 0.5 * h);
    const double k3 = rate(x + 0.5 * h);
    const double k4 = rate(x + h);
    tau += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return tau;
}

// Layer dynamics with frozen z: integrates x' = f(x) + I + u - z by RK4 until
// x settles; returns the limit, or nullopt when it neither settles nor stays
// bounded within the budget.
inline std::optional<double> layer_limit(const Fn1& f, double current, double u, double x0,
                                         double z, double t_max = 200.0, double h = 0.01) {
  const auto rhs = [&](double x) { return f(x) + current + u - z; };
  double x = x0;
  const int n = static_cast<int>(t_max / h);
  for (int i = 0; i < n; ++i) {
    const double k1 = rhs(x);
    const double k2 = rhs(x + 0.5 * h * k1);
    const double k3 = rhs(x + 0.5 * h * k2);
    const double k4 = rhs(x + h * k3);
    const double x_next = x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!std::isfinite(x_next)) return std::nullopt;
    if (std::abs(x_next - x) < 1e-13 && std::abs(rhs(x_next)) < 1e-10) return x_next;
    x = x_next;
  }
  if (std::abs(rhs(x)) < 1e-8) return x;
  return std::nullopt;
}

// FitzHugh-Nagumo pieces used throughout the tests.
inline double fhn_f(double x) { return x - x * x * x / 3.0; }
inline double fhn_g(double a, double b, double x, double z) { return x + a - b * z; }

}  // namespace oracle
