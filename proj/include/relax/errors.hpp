// Error types shared across the library.
#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace relax {

// Base class; code() is a stable machine-readable tag used by the CLI
// error records.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

struct BranchOutOfDomain : Error {
  explicit BranchOutOfDomain(const std::string& m) : Error("branch_out_of_domain", m) {}
};

struct ShapeError : Error {
  explicit ShapeError(const std::string& m) : Error("shape_error", m) {}
};

struct OnSeparatrix : Error {
  explicit OnSeparatrix(const std::string& m) : Error("on_separatrix", m) {}
};

struct SlowFieldVanishes : Error {
  explicit SlowFieldVanishes(const std::string& m) : Error("slow_field_vanishes", m) {}
};

struct NoOscillation : Error {
  explicit NoOscillation(const std::string& m) : Error("no_oscillation", m) {}
};

struct NotConverged : Error {
  explicit NotConverged(const std::string& m) : Error("not_converged", m) {}
};

struct StepSizeUnderflow : Error {
  explicit StepSizeUnderflow(const std::string& m) : Error("step_size_underflow", m) {}
};

struct NonFiniteState : Error {
  explicit NonFiniteState(const std::string& m) : Error("non_finite_state", m) {}
};

struct QuadratureError : Error {
  explicit QuadratureError(const std::string& m) : Error("quadrature_error", m) {}
};

struct RootFindError : Error {
  explicit RootFindError(const std::string& m) : Error("root_find_error", m) {}
};

struct ParseError : Error {
  explicit ParseError(const std::string& m) : Error("parse_error", m) {}
};

struct ValidationError : Error {
  explicit ValidationError(const std::string& field)
      : Error("validation_error", "invalid or missing field: " + field), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// Aggregate for per-sample failures in curve sweeps.
struct PrcSampleError : Error {
  PrcSampleError(std::vector<std::pair<std::size_t, std::string>> fails, const std::string& m)
      : Error("prc_sample_error", m), failures(std::move(fails)) {}
  std::vector<std::pair<std::size_t, std::string>> failures;
};

}  // namespace relax
