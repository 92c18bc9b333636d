// Line-oriented run configuration: [section] headers, key = value pairs,
// '#' comments. Unknown sections and keys are rejected.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "relax/model.hpp"
#include "relax/ode.hpp"
#include "relax/singular.hpp"

namespace relax {

struct DurationSpec {
  double value = 0.0;
  bool period_fraction = false;  // true: fraction of the slow period, resolved at run time

  double resolve(double period_slow) const {
    return period_fraction ? value * period_slow : value;
  }
};

struct ModelConfig {
  std::string family;  // "fhn" or "poly"
  double a = 0.0, b = 0.0;        // fhn
  std::vector<double> f_coeffs;   // poly
  std::vector<double> g_x_coeffs; // poly
  double g_z = 0.0;               // poly
  double current = 0.0;           // baseline I, both families
  std::optional<double> epsilon;
  std::vector<double> epsilon_list;
};

struct InputConfig {
  std::string kind;  // "impulse" or "pulse"
  double alpha = 0.0;
  double u_bar = 0.0;
  DurationSpec duration;
};

struct NumericsConfig {
  double rel_tol = 1e-9;
  double abs_tol = 1e-11;
  double quad_tol = 1e-11;
  double root_tol = 1e-12;
  double separatrix_tol = 1e-9;
  double x_max = 10.0;
  double fold_offset = 0.0;
  double exclusion_band = 0.05;
  double transient_periods = 3.0;
  int n_samples = 256;
  int iprc_samples = 1024;
  int horizon_periods = 12;
  int grid_n = 40;
};

struct OutputConfig {
  std::string dir = "out";
};

struct RunConfig {
  ModelConfig model;
  std::optional<InputConfig> input;
  NumericsConfig numerics;
  OutputConfig output;

  FastSlowSystem system(double epsilon) const;
  ModelOptions model_options() const;
  OdeTolerances ode_tolerances() const;
  // Input signal with pulse durations resolved against the slow period.
  InputSignal input_signal(double period_slow) const;
  std::string dump() const;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

}  // namespace relax
