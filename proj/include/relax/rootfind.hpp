// Bracketed scalar root finding: Brent's method and a bisection-safeguarded
// Newton iteration for use when the derivative is cheap.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "relax/errors.hpp"

namespace relax {

// Brent's method on [a, b]; f(a) and f(b) must not have the same strict sign.
// Returns x with |b - a| shrunk below xtol (plus machine slack) or f(x) == 0.
template <class F>
double brent(F&& f, double a, double b, double xtol = 1e-14, int max_iter = 200) {
  double fa = f(a);
  double fb = f(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if ((fa > 0.0) == (fb > 0.0))
    throw RootFindError("brent: endpoints do not bracket a root");

  if (std::abs(fa) < std::abs(fb)) {
    std::swap(a, b);
    std::swap(fa, fb);
  }
  double c = a, fc = fa;
  double d = b - a, e = d;

  for (int it = 0; it < max_iter; ++it) {
    if ((fb > 0.0) == (fc > 0.0)) {
      c = a;
      fc = fa;
      d = e = b - a;
    }
    if (std::abs(fc) < std::abs(fb)) {
      a = b; b = c; c = a;
      fa = fb; fb = fc; fc = fa;
    }
    const double tol1 = 2.0 * std::numeric_limits<double>::epsilon() * std::abs(b) + 0.5 * xtol;
    const double xm = 0.5 * (c - b);
    if (std::abs(xm) <= tol1 || fb == 0.0) return b;

    if (std::abs(e) >= tol1 && std::abs(fa) > std::abs(fb)) {
      // inverse quadratic / secant step
      double p, q;
      const double s = fb / fa;
      if (a == c) {
        p = 2.0 * xm * s;
        q = 1.0 - s;
      } else {
        const double qq = fa / fc;
        const double r = fb / fc;
        p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
        q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0.0) q = -q;
      p = std::abs(p);
      if (2.0 * p < std::min(3.0 * xm * q - std::abs(tol1 * q), std::abs(e * q))) {
        e = d;
        d = p / q;
      } else {
        d = xm;
        e = d;
      }
    } else {
      d = xm;
      e = d;
    }
    a = b;
    fa = fb;
    b += (std::abs(d) > tol1) ? d : (xm > 0.0 ? tol1 : -tol1);
    fb = f(b);
  }
  return b;
}

// Newton iteration from x0, kept inside [lo, hi] by falling back to bisection.
// The bracket endpoints must have opposite (or zero) residual signs.
// Stops when |f(x)| <= residual_tol.
template <class F, class DF>
double newton_bisect(F&& f, DF&& df, double lo, double hi, double x0,
                     double residual_tol = 1e-12, int max_iter = 200) {
  double flo = f(lo);
  double fhi = f(hi);
  if (std::abs(flo) <= residual_tol) return lo;
  if (std::abs(fhi) <= residual_tol) return hi;
  if ((flo > 0.0) == (fhi > 0.0))
    throw RootFindError("newton_bisect: endpoints do not bracket a root");

  double x = std::clamp(x0, lo, hi);
  double fx = f(x);
  for (int it = 0; it < max_iter; ++it) {
    if (std::abs(fx) <= residual_tol) return x;
    // shrink the bracket
    if ((fx > 0.0) == (flo > 0.0)) {
      lo = x;
      flo = fx;
    } else {
      hi = x;
      fhi = fx;
    }
    const double d = df(x);
    double xn = (d != 0.0) ? x - fx / d : lo;
    if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
    if (xn == x) {
      if (hi - lo <= std::numeric_limits<double>::epsilon() * (std::abs(lo) + std::abs(hi)))
        break;
      xn = 0.5 * (lo + hi);
    }
    x = xn;
    fx = f(x);
  }
  if (std::abs(fx) <= residual_tol) return x;
  // Bracket exhausted at machine precision: accept the best endpoint if the
  // residual target is unreachable only through rounding.
  const double mid = 0.5 * (lo + hi);
  const double fmid = f(mid);
  if (std::abs(fmid) <= residual_tol) return mid;
  throw RootFindError("newton_bisect: residual tolerance not reached");
}

}  // namespace relax
