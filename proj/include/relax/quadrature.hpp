// Adaptive Gauss-Kronrod 15(7) quadrature with interval bisection.
#pragma once

#include <array>
#include <cmath>
#include <queue>
#include <vector>

#include "relax/errors.hpp"

namespace relax {
namespace detail {

// Kronrod-15 abscissae on [0, 1] side (symmetric) and weights; Gauss-7 weights.
inline constexpr std::array<double, 8> kGk15X = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};

inline constexpr std::array<double, 8> kGk15Wk = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};

inline constexpr std::array<double, 4> kGk15Wg = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

template <class F>
void gk15(F& f, double a, double b, double& kronrod, double& err) {
  const double h = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double resk = 0.0, resg = 0.0;
  // center point
  {
    const double fc = f(mid);
    resk += kGk15Wk[7] * fc;
    resg += kGk15Wg[3] * fc;
  }
  for (int i = 0; i < 7; ++i) {
    const double dx = h * kGk15X[i];
    const double f1 = f(mid - dx);
    const double f2 = f(mid + dx);
    resk += kGk15Wk[i] * (f1 + f2);
    if (i % 2 == 1) resg += kGk15Wg[i / 2] * (f1 + f2);
  }
  kronrod = resk * h;
  err = std::abs((resk - resg) * h);
}

}  // namespace detail

// Integrates f over [a, b] (a <= b not required; the sign convention of the
// Riemann integral applies). Splits the worst interval until the summed
// Kronrod-Gauss discrepancy falls below abs_tol.
template <class F>
double integrate_adaptive(F&& f, double a, double b, double abs_tol = 1e-11,
                          int max_intervals = 4000) {
  if (a == b) return 0.0;
  struct Piece {
    double a, b, value, err;
    bool operator<(const Piece& o) const { return err < o.err; }
  };
  std::priority_queue<Piece> q;
  double v0, e0;
  detail::gk15(f, a, b, v0, e0);
  q.push({a, b, v0, e0});
  double total = v0, total_err = e0;
  int n = 1;
  while (total_err > abs_tol) {
    if (n >= max_intervals)
      throw QuadratureError("adaptive quadrature failed to converge");
    Piece p = q.top();
    q.pop();
    const double m = 0.5 * (p.a + p.b);
    if (m == p.a || m == p.b) {
      // interval at machine resolution; keep its estimate
      total_err -= p.err;
      continue;
    }
    double vl, el, vr, er;
    detail::gk15(f, p.a, m, vl, el);
    detail::gk15(f, m, p.b, vr, er);
    total += (vl + vr) - p.value;
    total_err += (el + er) - p.err;
    q.push({p.a, m, vl, el});
    q.push({m, p.b, vr, er});
    ++n;
  }
  if (!std::isfinite(total)) throw QuadratureError("non-finite quadrature result");
  return total;
}

}  // namespace relax
