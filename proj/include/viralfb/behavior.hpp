#pragma once

#include <string>
#include <vector>

#include "viralfb/equilibrium.hpp"
#include "viralfb/fbsim.hpp"

namespace viralfb {

enum class Regime {
  Extinction,
  PersistenceVerified,
  PersistenceUnverified,
  /// The predicted branch was taken but its checks did not pass.
  Inconclusive,
};

std::string to_string(Regime r);

struct Criterion {
  std::string name;
  bool pass = false;
  double measured = 0.0;
  double bound = 0.0;
};

struct ClassificationResult {
  double r0 = 0.0;
  bool persistence_condition = false;
  Regime regime = Regime::Inconclusive;
  double t_final = 0.0;
  bool quiescent = false;
  double quiescence_change = 0.0;
  std::vector<Criterion> evidence;
  /// Smallest nodewise distance to the lower / upper sandwich bounds on the
  /// window (negative when violated); NaN when not checked.
  std::array<double, 3> lower_margin{};
  std::array<double, 3> upper_margin{};
};

struct ClassifyOptions {
  double window = 10.0;
  double slack_rel = 0.02;
  double slack_abs = 1e-3;
  double extinction_tol = 1e-4;
  double u1_tol = 1e-3;
  double quiescence_tol = 1e-6;
};

/// R0 <= 1: extinction of u2, u3 and u1 close to the closed-form profile on
/// the window. R0 > 1: nodewise sandwich against the chain, the lower half
/// only when the persistence condition holds. Quiescence is reported, not
/// enforced. InputError if R0 > 1 and the chain is missing, or if the
/// trajectory is empty.
ClassificationResult classify(const ModelParams& p, const Trajectory& traj, const EquilibriumChain* chain,
                              const ClassifyOptions& options = {});

}  // namespace viralfb
