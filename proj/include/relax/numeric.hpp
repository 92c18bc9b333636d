// Ground truth for epsilon > 0: limit-cycle detection, numerically measured
// finite PRCs, the adjoint infinitesimal PRC with convolution, and the
// epsilon-sweep comparison against the singular prediction.
#pragma once

#include <cstddef>
#include <vector>

#include "relax/ode.hpp"
#include "relax/singular.hpp"

namespace relax {

struct LimitCycle {
  double epsilon = 0.0;
  double period_fast = 0.0;        // T in the fast time scale
  double period_slow = 0.0;        // epsilon * period_fast
  Trajectory cycle;                // one period starting at the anchor
  State anchor;                    // point of minimum z on the cycle (phase 0)
  double anchor_return_gap = 0.0;  // |flow(anchor, T) - anchor|
  double section_z = 0.0;          // Poincare section height
  double section_time = 0.0;       // time from the anchor to the section crossing
  double log_second_multiplier = 0.0;  // integral of the Jacobian trace over one period
};

struct CycleOptions {
  OdeTolerances tol;
  double transient_periods = 3.0;
  double max_search_periods = 20.0;
  double crossing_state_tol = 1e-8;
  ModelOptions model;  // for the section geometry and period budget
};

// Locates the attracting relaxation cycle: integrate past the transient, then
// detect returns through the section {z = (z- + z+)/2, z increasing, x > 0}.
// Throws NoOscillation when the section is not revisited within the budget.
LimitCycle find_limit_cycle(const FastSlowSystem& sys, const CycleOptions& opts = {});

// Cycle state at a given phase (elapsed time from the anchor times omega).
State cycle_point(const LimitCycle& cycle, Phase theta);

// Times of upward crossings of {z = section_z, x > 0} for the zero-input flow
// from s0 over [t0, t1]; the final state is written to s_end when non-null.
std::vector<double> section_crossings(const FastSlowSystem& sys, State s0, double t0, double t1,
                                      double section_z, const OdeTolerances& tol = {},
                                      State* s_end = nullptr);

struct ShiftOptions {
  OdeTolerances tol;
  int horizon_periods = 12;
  double converge_tol = 1e-6;  // drift allowance between successive offsets
};

// Asymptotic phase shift produced by the input applied at phase theta,
// wrapped to [-pi, pi), advance positive. Throws NotConverged when crossing
// offsets still drift after doubling the horizon once.
double numeric_phase_shift(const FastSlowSystem& sys, const LimitCycle& cycle,
                           const InputSignal& input, Phase theta, const ShiftOptions& opts = {});

// Maps numeric_phase_shift over a uniform phase grid; samples run
// concurrently. Per-sample failures are aggregated into PrcSampleError.
PrcCurve numeric_prc(const FastSlowSystem& sys, const LimitCycle& cycle, const InputSignal& input,
                     std::size_t n_samples, unsigned threads = 0, const ShiftOptions& opts = {});

struct Iprc {
  std::vector<double> theta;  // uniform grid on [0, 2*pi)
  std::vector<double> q;      // fast-variable component, radians per unit area
  double epsilon = 0.0;
  double period_fast = 0.0;  // cycle period, needed to convolve pulses
  double max_normalization_residual = 0.0;  // before per-sample renormalization
  bool monodromy_warning = false;  // second Floquet mode decays beyond resolution
};

// Infinitesimal PRC from the adjoint variational equation, integrated
// backward around the cycle and normalized so <q, velocity> = omega_fast.
Iprc adjoint_iprc(const FastSlowSystem& sys, const LimitCycle& cycle, std::size_t n_samples,
                  const OdeTolerances& tol = {});

// Convolution prediction from the infinitesimal PRC: alpha * q for impulses,
// the running integral of q over the pulse window for square pulses. The
// returned shifts are the raw linear prediction (not wrapped).
PrcCurve convolve_iprc(const Iprc& iprc, const InputSignal& input);

struct SweepOptions {
  std::size_t n_samples = 64;
  std::size_t iprc_samples = 1024;
  double exclusion_band = 0.05;  // radians removed around singular discontinuities
  unsigned threads = 0;
  ShiftOptions shift;
  CycleOptions cycle;
  ModelOptions model;
};

struct SweepEntry {
  double epsilon = 0.0;
  double period_fast = 0.0;
  double period_slow = 0.0;
  double anchor_z_gap = 0.0;  // |anchor z - z-|, phase-alignment diagnostic
  double sup_error_singular = 0.0;
  double sup_error_infinitesimal = 0.0;
};

struct SweepReport {
  std::vector<SweepEntry> entries;  // in the order of eps_list
  double beta_hat = 0.0;            // slope of log sup_error_singular vs log epsilon
  std::vector<double> excluded_phases;
  double band = 0.0;
  InputSignal input;
};

// Runs the numeric PRC for every epsilon and measures sup-norm distances to
// the singular prediction and to the infinitesimal prediction on a common
// grid, excluding a band around the singular curve's discontinuities.
SweepReport error_sweep(const FastSlowSystem& sys_family, const std::vector<double>& eps_list,
                        const InputSignal& input, const SweepOptions& opts = {});

}  // namespace relax
