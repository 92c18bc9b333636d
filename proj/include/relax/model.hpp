// Planar fast-slow systems and the geometry of their S-shaped critical
// manifold: branch functions, folds and basins of attraction.
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "relax/errors.hpp"
#include "relax/poly.hpp"

namespace relax {

enum class Branch { Lower, Repelling, Upper };

const char* branch_name(Branch b);

// x' = f(x) + baseline - z + u   (fast time scale)
// z' = epsilon * g(x, z),        g(x, z) = g_x(x) + g_z * z
//
// f must have exactly two nondegenerate critical points so the manifold
// {f(x) + baseline + u = z} is S-shaped; this is checked by fold_points.
struct FastSlowSystem {
  Polynomial f;      // fast nullcline shape, degree <= 5
  Polynomial g_x;    // x-part of the slow field, degree <= 3
  double g_z = 0.0;  // linear z coefficient of the slow field
  double baseline = 0.0;  // constant current added to the fast equation
  double epsilon = 0.0;   // time-scale separation; 0 denotes the singular limit
  std::vector<std::pair<std::string, double>> params;  // named parameters, informational

  FastSlowSystem with_epsilon(double eps) const;

  // v' = v - v^3/3 - w + current + u,  w' = eps (v + a - b w)
  static FastSlowSystem fitzhugh_nagumo(double a, double b, double current, double epsilon);
  static FastSlowSystem polynomial(Polynomial f, Polynomial g_x, double g_z, double current,
                                   double epsilon);
};

// Fast-time derivative of x at (x, z) under exogenous input u.
double eval_fast(const FastSlowSystem& sys, double x, double z, double u);
// Slow-time derivative of z at (x, z).
double eval_slow(const FastSlowSystem& sys, double x, double z);

struct FoldPoint {
  double x = 0.0, z = 0.0;
};

struct BranchWindow {
  double z_min = 0.0, z_max = 0.0;  // z-domain of the branch at u = 0
};

struct ModelOptions {
  double x_max = 10.0;             // half-width of the x search window
  double root_residual_tol = 1e-12;
  double separatrix_tol = 1e-9;    // |x - b_r(z)| below this is "on the separatrix"
  double slow_field_tol = 1e-10;   // |g| below this counts as an equilibrium
  double quad_tol = 1e-11;         // absolute tolerance of travel-time quadratures
  double fold_offset = 0.0;        // optional z-offset away from folds in quadratures
};

struct ManifoldGeometry {
  FastSlowSystem sys;
  FoldPoint lower_fold;  // (x-, z-), local minimum of f + baseline
  FoldPoint upper_fold;  // (x+, z+), local maximum of f + baseline
  BranchWindow lower_window;      // b-: z >= z-
  BranchWindow repelling_window;  // b_r: [z-, z+]
  BranchWindow upper_window;      // b+: z <= z+
  ModelOptions opts;
};

// Locates both folds and the branch z-domains. Throws ShapeError when f'
// does not have exactly two simple roots (with min-then-max ordering) inside
// [-x_max, x_max].
ManifoldGeometry fold_points(const FastSlowSystem& sys, const ModelOptions& opts = {});

// Unique x on the requested branch with f(x) + baseline + u_bar = z, i.e. the
// branch function evaluated at z - u_bar. Throws BranchOutOfDomain when z is
// outside the (shifted) branch z-interval.
double branch_solve(const ManifoldGeometry& geom, double z, Branch branch, double u_bar = 0.0);

// Stable branch the layer dynamics (frozen z, constant input u_bar) carries
// (x, z) to. Throws OnSeparatrix when x is within separatrix_tol of the
// repelling branch.
Branch basin_of(const ManifoldGeometry& geom, double x, double z, double u_bar = 0.0);

}  // namespace relax
