#pragma once

#include <array>
#include <functional>
#include <optional>
#include <vector>

#include "viralfb/model.hpp"
#include "viralfb/profile.hpp"

namespace viralfb {

/// Initial densities on [0, h0], each vanishing at both ends.
struct InitialData {
  std::array<std::function<double(double)>, 3> u;

  /// amplitude[i] * sin(pi x / h0).
  static InitialData sine_bumps(double h0, std::array<double, 3> amplitude = {1.0, 1.0, 1.0});
};

/// State of the moving-boundary problem in the normalized coordinate
/// y = x / h(t) in [0, 1]. U has three components on Grid{1, n}.
struct SimState {
  double t = 0.0;
  double h = 1.0;
  double h_prime = 0.0;  ///< boundary speed used by the last step
  Profile U;
  double clipped_mass = 0.0;  ///< cumulative, in physical units (sum |u| dx)
  long clip_events = 0;
  double last_min_before_clip = 0.0;
  double last_clipped_mass = 0.0;

  /// Samples `init` on n interior nodes. InputError if the samples are not
  /// zero at the ends and nonnegative inside, or if any is not finite.
  static SimState initial(const ModelParams& p, const InitialData& init, int n);

  double dy() const { return U.grid().dx(); }
  /// The same values on the physical grid x_j = y_j * h.
  Profile physical() const;
};

/// h' = -sum_i mu_i (1/h) dU_i/dy at y = 1, one-sided second-order stencil.
double boundary_speed(const SimState& state, const ModelParams& p);

/// |y h'/h| dt / dy at y = 1.
double courant_number(const SimState& state, double h_prime, double dt);

struct StepOptions {
  double courant_limit = 0.9;
};

/// One IMEX step: explicit advection and reaction, implicit diffusion with the
/// updated length, forward Euler for h. StepSizeError if the Courant number
/// exceeds the limit; ModelConsistencyError if h' < -1e-12.
SimState step(const SimState& state, const ModelParams& p, double dt, const StepOptions& options = {});

/// A priori caps (max(theta/a, |u10|), max(|u20|, b M1/c), max(|u30|, k M2/q)).
std::array<double, 3> solution_caps(const ModelParams& p, const SimState& initial);

struct Observation {
  double t = 0.0;
  double h = 0.0;
  double h_prime = 0.0;
  std::array<double, 3> sup{};
  std::optional<Profile> snapshot;  ///< physical coordinates
};

struct RunOptions {
  double T = 1.0;
  int n = 400;
  double dt = 1e-2;       ///< fixed step, or the largest step when adaptive
  bool adaptive = true;   ///< shrink steps to keep the Courant number at 0.5
  double observer_dt = 1.0;
  std::vector<double> snapshot_times;  ///< the final state is always snapshotted
  double clip_budget = 1e-8;
  StepOptions step{};
  std::function<void(const Observation&)> observer;
};

struct RunStats {
  long steps = 0;
  double min_h_prime = 0.0;
  long nonpositive_h_prime = 0;
  double min_before_clip = 0.0;
  double clipped_mass = 0.0;
  double max_step_clip = 0.0;
  std::array<double, 3> caps{};
  std::array<double, 3> max_sup{};
};

struct Trajectory {
  ModelParams params{};
  std::vector<Observation> observations;
  RunStats stats;
  SimState final_state;
};

/// Integrates to T, observing at multiples of observer_dt and at T. Step
/// errors are rethrown with the failing time attached; ConsistencyError when
/// the cumulative clipped mass exceeds the budget.
Trajectory run(const InitialData& init, const ModelParams& p, const RunOptions& options);

struct OdeComparisonState {
  double t = 0.0;
  double z2 = 0.0;
  double z3 = 0.0;
};

/// RK4 for z2' = f2(theta/a + eps, z2, z3), z3' = f3(z2, z3) from t0 to t0 + T.
std::vector<OdeComparisonState> ode_comparison(const ModelParams& p, double eps, std::array<double, 2> z0, double T,
                                               double dt, double t0 = 0.0);

/// First observation time at which sup u1 < theta/a + eps.
std::optional<double> alignment_time(const Trajectory& traj, double eps);

struct DominanceReport {
  bool inconclusive = false;
  double t_align = 0.0;
  double excess2 = 0.0;  ///< max over observations of (sup u2 - z2)^+
  double excess3 = 0.0;
  bool ordering_failure = false;  ///< sup u_i > z_i at the alignment time
  int checked = 0;
};

/// Compares observed sup-norms of (u2, u3) with the ODE trajectory, linearly
/// interpolated at observer times from the alignment time on.
DominanceReport dominance_check(const Trajectory& traj, const std::vector<OdeComparisonState>& ode, double eps);

/// Alignment, z0 = (C, C) with C = max(sup u2, sup u3) at the alignment time,
/// the ODE run and the dominance check in one call.
DominanceReport comparison_witness(const Trajectory& traj, double eps, double dt = 1e-3);

}  // namespace viralfb
