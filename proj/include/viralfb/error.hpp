#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace viralfb {

/// Base class for every error raised by the library. Carries a short machine
/// readable kind plus optional numeric payload (iteration counts, residuals,
/// failing times) so front ends can serialize it without parsing messages.
class Error : public std::runtime_error {
 public:
  using Field = std::pair<std::string, double>;

  Error(std::string kind, const std::string& what, std::vector<Field> fields = {})
      : std::runtime_error(what), kind_(std::move(kind)), fields_(std::move(fields)) {}

  const std::string& kind() const noexcept { return kind_; }
  const std::vector<Field>& fields() const noexcept { return fields_; }
  void add_field(std::string name, double value) { fields_.emplace_back(std::move(name), value); }

  /// True for errors caused by bad inputs rather than by a numerical failure.
  virtual bool is_input_error() const noexcept { return false; }

 private:
  std::string kind_;
  std::vector<Field> fields_;
};

// Input-side failures.

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what, std::vector<Field> f = {})
      : Error("domain", what, std::move(f)) {}
  bool is_input_error() const noexcept override { return true; }
};

class PreconditionError : public Error {
 public:
  explicit PreconditionError(const std::string& what, std::vector<Field> f = {})
      : Error("precondition", what, std::move(f)) {}
  bool is_input_error() const noexcept override { return true; }
};

class InputError : public Error {
 public:
  explicit InputError(const std::string& what, std::vector<Field> f = {})
      : Error("input", what, std::move(f)) {}
  bool is_input_error() const noexcept override { return true; }
};

/// Parameters sit on the wrong side of an existence threshold (bk*beta <= cq,
/// or R0 <= 1 where a positive solution is requested).
class ThresholdError : public Error {
 public:
  explicit ThresholdError(const std::string& what, std::vector<Field> f = {})
      : Error("threshold", what, std::move(f)) {}
};

// Numerical failures.

class IterationError : public Error {
 public:
  IterationError(const std::string& what, double last_residual, int iterations)
      : Error("iteration", what, {{"residual", last_residual}, {"iterations", double(iterations)}}),
        last_residual_(last_residual) {}
  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

class PositivityError : public Error {
 public:
  PositivityError(const std::string& what, double min_value)
      : Error("positivity", what, {{"min_value", min_value}}) {}
};

class ConsistencyError : public Error {
 public:
  explicit ConsistencyError(const std::string& what, std::vector<Field> f = {})
      : Error("consistency", what, std::move(f)) {}
};

class ContinuationError : public Error {
 public:
  explicit ContinuationError(const std::string& what, std::vector<Field> f = {})
      : Error("continuation", what, std::move(f)) {}
};

class StepSizeError : public Error {
 public:
  StepSizeError(const std::string& what, double t, double dt, double courant)
      : Error("step_size", what, {{"t", t}, {"dt", dt}, {"courant", courant}}) {}
};

/// The free boundary tried to retreat, which the model forbids.
class ModelConsistencyError : public Error {
 public:
  ModelConsistencyError(const std::string& what, double t, double h_prime)
      : Error("model_consistency", what, {{"t", t}, {"h_prime", h_prime}}) {}
};

}  // namespace viralfb
