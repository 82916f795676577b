#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "viralfb/behavior.hpp"
#include "viralfb/serialize.hpp"

namespace viralfb::cli {

enum ExitCode { kOk = 0, kConfigError = 2, kSolverError = 3 };

struct SimulationConfig {
  std::optional<double> T;  ///< default 200 / min(c, q)
  int n = 400;
  double dt = 1e-2;
  bool adaptive = true;
  std::array<double, 3> amplitudes{1.0, 1.0, 1.0};
  double observer_dt = 1.0;
  int snapshots = 10;
};

struct EquilibriumConfig {
  double window = 10.0;
  int window_cells = 400;
  double rtol = 1e-6;
  RightBoundary right_bc = RightBoundary::Zero;
};

struct SweepAxis {
  std::string param;
  double min = 0.0;
  double max = 0.0;
  int points = 0;
};

struct EigenConfig {
  double l = 10.0;
  std::optional<double> eps;
  std::optional<double> beta;  ///< default theta / a
};

struct RunConfig {
  ModelParams params{};
  SimulationConfig simulation{};
  EquilibriumConfig equilibrium{};
  ClassifyOptions classify{};
  std::vector<SweepAxis> axes;
  EigenConfig eigen{};

  double final_time() const;
  RunOptions run_options() const;
  ContinuationOptions continuation() const;
};

/// Parameters may sit in a "params" block or at the top level. Unknown keys,
/// wrong types and inadmissible values raise InputError or DomainError.
RunConfig parse_config(const json& j);
RunConfig load_config(const std::string& path);

/// Mutable access to a parameter by its config name; InputError if unknown.
double& param_ref(ModelParams& p, const std::string& name);

struct PointResult {
  Trajectory trajectory;
  std::optional<EquilibriumChain> chain;
  ClassificationResult result;
};

/// Simulate, build the chain when R0 > 1, classify.
PointResult classify_point(const RunConfig& cfg);

/// Every grid point of the sweep axes in row-major order (first axis slowest).
std::vector<ModelParams> sweep_points(const RunConfig& cfg);

/// Full command line entry point. Returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace viralfb::cli
