// Singular-limit machinery: travel times along stable branches, the singular
// periodic orbit, the asymptotic phase map, and finite phase response curves
// for impulses and square pulses.
#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "relax/model.hpp"

namespace relax {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

// Angle on the unit circle, stored in [0, 2*pi).
class Phase {
 public:
  Phase() = default;
  explicit Phase(double radians) : v_(wrap(radians)) {}
  double radians() const { return v_; }

  static double wrap(double r) {
    double w = r - kTwoPi * std::floor(r / kTwoPi);
    if (w >= kTwoPi || w < 0.0) w = 0.0;  // rounding at the seam
    return w;
  }

 private:
  double v_ = 0.0;
};

// Wraps a phase difference into [-pi, pi).
double wrap_shift(double s);

struct Impulse {
  double area = 0.0;  // added to x instantaneously
};

struct SquarePulse {
  double amplitude = 0.0;      // constant input while active
  double duration_slow = 0.0;  // length in slow-time units, >= 0
};

using InputSignal = std::variant<Impulse, SquarePulse>;

std::string input_label(const InputSignal& input);

// Singular periodic orbit. Phase zero sits at the lower fold; theta_plus is
// the phase of the upper fold. period_slow = time up the upper branch plus
// time down the lower branch (jumps are instantaneous).
struct SingularOrbit {
  ManifoldGeometry geom;
  double theta_plus = 0.0;
  double period_slow = 0.0;
  double omega_slow = 0.0;  // 2*pi / period_slow
  static constexpr double theta_minus = 0.0;
};

// Signed slow time to move from z0 to z1 along a stable branch under constant
// input u_bar; positive when the motion follows the reduced flow. Throws
// SlowFieldVanishes when g has a zero on the path.
double travel_time(const ManifoldGeometry& geom, Branch branch, double z0, double z1,
                   double u_bar = 0.0);

// Throws SlowFieldVanishes unless the reduced flow runs up the upper branch
// and down the lower branch between the folds.
SingularOrbit build_orbit(const ManifoldGeometry& geom);

struct OrbitPoint {
  double x = 0.0, z = 0.0;
  Branch branch = Branch::Upper;
};

// Point of the orbit at a given phase. Fiber phases map to the post-jump
// landing point: theta = 0 gives (b+(z-), z-), theta = theta_plus gives
// (b-(z+), z+).
OrbitPoint orbit_point(const SingularOrbit& orbit, Phase theta);

// Asymptotic phase of any point of the basin of attraction. Isochrons are
// vertical: the result depends on x only through the basin choice.
Phase phase_of(const SingularOrbit& orbit, double x, double z);

struct CrossingThreshold {
  double z_c = 0.0;
  Phase theta_c;
};

// Critical slow value where an impulse of size alpha stops crossing the
// separatrix. sign = +1 solves b-(z) + alpha = b_r(z) (kick to the right from
// the lower branch), sign = -1 solves b+(z) - alpha = b_r(z). Returns nullopt
// when no crossing is possible (PRC identically zero).
std::optional<CrossingThreshold> crossing_threshold(const SingularOrbit& orbit, double alpha,
                                                    int sign);

// Closed-form piecewise impulse response: nonzero only past the crossing
// threshold, where the shift equals the skipped portion of the orbit.
double impulse_shift(const SingularOrbit& orbit, double alpha, Phase theta);

// Same quantity through the geometric reset: phase_of(x + alpha, z) - theta.
double impulse_shift_by_reset(const SingularOrbit& orbit, double alpha, Phase theta);

struct PulseSegment {
  enum class Kind { Jump, Slide, Park };
  Kind kind = Kind::Slide;
  Branch branch = Branch::Upper;  // branch of the shifted manifold
  double x0 = 0.0, z0 = 0.0;
  double x1 = 0.0, z1 = 0.0;
  double dt_slow = 0.0;
};

struct PulseEndpoint {
  double x = 0.0, z = 0.0;  // on the shifted manifold
  bool parked = false;      // reduced flow reached an equilibrium asymptotically
  std::vector<PulseSegment> trace;
};

// Hybrid evolution on the manifold shifted by u_bar: jump to the basin-selected
// shifted branch, slide with jumps at shifted folds until the slow-time budget
// is spent, and return the final state (still on the shifted manifold).
PulseEndpoint pulse_endpoint(const SingularOrbit& orbit, double u_bar, double duration_slow,
                             Phase theta);

// Square-pulse response: phase of the endpoint after it falls back onto the
// unshifted manifold, minus the freely advanced phase. A zero-amplitude or
// zero-duration pulse is the identity input and returns exactly 0.
double pulse_shift(const SingularOrbit& orbit, double u_bar, double duration_slow, Phase theta);

struct PrcSample {
  double theta = 0.0;
  double shift = 0.0;
};

struct PrcCurve {
  std::vector<PrcSample> samples;  // thetas strictly increasing in [0, 2*pi)
  std::string method;              // "singular", "numeric" or "infinitesimal"
  InputSignal input;
  double epsilon = 0.0;  // 0 for the singular limit
};

// Samples the singular PRC on a uniform phase grid.
PrcCurve singular_prc(const SingularOrbit& orbit, const InputSignal& input,
                      std::size_t n_samples);

// Phases where the singular PRC jumps (fold phases plus input-dependent
// thresholds); used to build exclusion bands for sup-norm comparisons.
std::vector<double> prc_discontinuities(const SingularOrbit& orbit, const InputSignal& input);

}  // namespace relax
