#include "relax/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "relax/rootfind.hpp"

namespace relax {

const char* branch_name(Branch b) {
  switch (b) {
    case Branch::Lower: return "lower";
    case Branch::Repelling: return "repelling";
    case Branch::Upper: return "upper";
  }
  return "?";
}

FastSlowSystem FastSlowSystem::with_epsilon(double eps) const {
  FastSlowSystem s = *this;
  if (!(eps >= 0.0)) throw ValidationError("epsilon");
  s.epsilon = eps;
  return s;
}

FastSlowSystem FastSlowSystem::fitzhugh_nagumo(double a, double b, double current,
                                               double epsilon) {
  FastSlowSystem s;
  s.f = Polynomial({0.0, 1.0, 0.0, -1.0 / 3.0});
  s.g_x = Polynomial({a, 1.0});
  s.g_z = -b;
  s.baseline = current;
  if (!(epsilon >= 0.0)) throw ValidationError("epsilon");
  s.epsilon = epsilon;
  s.params = {{"a", a}, {"b", b}, {"I", current}};
  return s;
}

FastSlowSystem FastSlowSystem::polynomial(Polynomial f, Polynomial g_x, double g_z,
                                          double current, double epsilon) {
  if (f.degree() > 5) throw ValidationError("f_coeffs");
  if (g_x.degree() > 3) throw ValidationError("g_x_coeffs");
  FastSlowSystem s;
  s.f = std::move(f);
  s.g_x = std::move(g_x);
  s.g_z = g_z;
  s.baseline = current;
  if (!(epsilon >= 0.0)) throw ValidationError("epsilon");
  s.epsilon = epsilon;
  return s;
}

double eval_fast(const FastSlowSystem& sys, double x, double z, double u) {
  return sys.f(x) + sys.baseline - z + u;
}

double eval_slow(const FastSlowSystem& sys, double x, double z) {
  return sys.g_x(x) + sys.g_z * z;
}

namespace {

// All simple roots of p inside [lo, hi], located by sign changes on a dense
// scan followed by Brent refinement.
std::vector<double> scan_roots(const Polynomial& p, double lo, double hi, int n = 4096) {
  std::vector<double> roots;
  double xprev = lo;
  double fprev = p(xprev);
  for (int i = 1; i <= n; ++i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) / n;
    const double fx = p(x);
    if (fprev == 0.0) {
      roots.push_back(xprev);
    } else if ((fprev > 0.0) != (fx > 0.0) && fx != 0.0) {
      roots.push_back(brent([&](double t) { return p(t); }, xprev, x));
    }
    xprev = x;
    fprev = fx;
  }
  if (fprev == 0.0) roots.push_back(xprev);
  return roots;
}

std::pair<double, double> branch_bracket(const ManifoldGeometry& g, Branch b) {
  switch (b) {
    case Branch::Lower: return {-g.opts.x_max, g.lower_fold.x};
    case Branch::Repelling: return {g.lower_fold.x, g.upper_fold.x};
    case Branch::Upper: return {g.upper_fold.x, g.opts.x_max};
  }
  return {0, 0};
}

BranchWindow branch_window(const ManifoldGeometry& g, Branch b) {
  switch (b) {
    case Branch::Lower: return g.lower_window;
    case Branch::Repelling: return g.repelling_window;
    case Branch::Upper: return g.upper_window;
  }
  return {};
}

}  // namespace

ManifoldGeometry fold_points(const FastSlowSystem& sys, const ModelOptions& opts) {
  const Polynomial df = sys.f.derivative();
  const Polynomial d2f = df.derivative();
  const auto roots = scan_roots(df, -opts.x_max, opts.x_max);
  if (roots.size() != 2)
    throw ShapeError("f' must have exactly two simple roots in the search window, found " +
                     std::to_string(roots.size()));
  const double x_lo = roots[0];
  const double x_hi = roots[1];
  if (!(d2f(x_lo) > 0.0) || !(d2f(x_hi) < 0.0))
    throw ShapeError("critical points of f are not a minimum followed by a maximum");

  ManifoldGeometry geom;
  geom.sys = sys;
  geom.opts = opts;
  geom.lower_fold = {x_lo, sys.f(x_lo) + sys.baseline};
  geom.upper_fold = {x_hi, sys.f(x_hi) + sys.baseline};
  const double z_minus = geom.lower_fold.z;
  const double z_plus = geom.upper_fold.z;
  if (!(z_minus < z_plus)) throw ShapeError("fold heights are not ordered");

  geom.lower_window = {z_minus, sys.f(-opts.x_max) + sys.baseline};
  geom.repelling_window = {z_minus, z_plus};
  geom.upper_window = {sys.f(opts.x_max) + sys.baseline, z_plus};
  if (!(geom.lower_window.z_max > z_minus) || !(geom.upper_window.z_min < z_plus))
    throw ShapeError("branch windows collapse inside the x search window");
  return geom;
}

double branch_solve(const ManifoldGeometry& geom, double z, Branch branch, double u_bar) {
  const BranchWindow w = branch_window(geom, branch);
  const double zeta = z - u_bar;  // solve on the unshifted manifold
  const double slack = 1e-12 * (1.0 + std::abs(zeta));
  if (zeta < w.z_min - slack || zeta > w.z_max + slack) {
    std::ostringstream os;
    os << "z = " << z << " outside " << branch_name(branch) << " branch domain ["
       << w.z_min + u_bar << ", " << w.z_max + u_bar << "]";
    throw BranchOutOfDomain(os.str());
  }
  const double zc = std::clamp(zeta, w.z_min, w.z_max);
  auto [lo, hi] = branch_bracket(geom, branch);
  const auto f = [&](double x) { return geom.sys.f(x) + geom.sys.baseline - zc; };
  const Polynomial df = geom.sys.f.derivative();
  return newton_bisect(f, [&](double x) { return df(x); }, lo, hi, 0.5 * (lo + hi),
                       geom.opts.root_residual_tol);
}

Branch basin_of(const ManifoldGeometry& geom, double x, double z, double u_bar) {
  const double z_lo = geom.lower_fold.z + u_bar;
  const double z_hi = geom.upper_fold.z + u_bar;
  const double slack = 1e-12 * (1.0 + std::abs(z_lo) + std::abs(z_hi));
  if (z <= z_lo + slack) return Branch::Upper;  // only the upper branch exists
  if (z >= z_hi - slack) return Branch::Lower;
  const double xr = branch_solve(geom, z, Branch::Repelling, u_bar);
  if (std::abs(x - xr) < geom.opts.separatrix_tol)
    throw OnSeparatrix("point lies on the repelling branch; phase undefined");
  return x > xr ? Branch::Upper : Branch::Lower;
}

}  // namespace relax
