#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "viralfb/bvp.hpp"

namespace viralfb {

/// A half-line equilibrium approximated by a truncated problem on
/// [0, converged_l], reported on the window [0, window].
struct HalfLineSolution {
  std::string label;
  double window = 0.0;
  Profile profile;                ///< restriction to [0, window]
  std::vector<double> farfield;   ///< plateau value per component
  double converged_l = 0.0;
  Profile full;                   ///< the last truncated solution on [0, converged_l]

  int comps() const { return profile.comps(); }
  /// Trusted part of `full` is [0, 0.8*converged_l]; beyond it the far-field
  /// constant is used, so the solution can drive problems on longer domains.
  double value(int comp, double x) const;
  std::vector<double> sample(int comp, const Grid& grid) const;
};

/// A truncated problem family indexed by the domain length l.
struct HalfLineProblem {
  std::string label;
  Coupling coupling = Coupling::Scalar;
  ModelParams params{};
  double scalar_diffusivity = 1.0;          ///< Scalar only
  std::function<double(double)> rho;        ///< Pair only, defined on [0, inf)
  double rho_limit = 0.0;                   ///< Pair only, limit of rho at infinity
  std::function<double(double)> virus;      ///< Scalar only, optional
  /// Right Dirichlet data as a function of l; zero when empty.
  std::function<std::vector<double>(double)> right_data;
  /// Starting guess for the first truncation (component, x); caps when empty.
  std::function<double(int, double)> initial_guess;
};

struct ContinuationOptions {
  double window = 10.0;
  int window_cells = 400;  ///< dx = window / window_cells
  double rtol = 1e-6;
  double l0 = 0.0;         ///< 0: max(40 sqrt(max d / min(a,c,q)), 4 window)
  double l_max = 0.0;      ///< 0: 64 * l0
  NewtonOptions newton{};
};

/// Default first truncation length, rounded up to a multiple of the window.
double default_l0(const ModelParams& p, double window);

/// Solves the truncated problem at l0, 2 l0, 4 l0, ... until both the window
/// restriction and the far-field plateau (mean over [0.8 l, 0.9 l]) change by
/// less than rtol (relative, max norm) between consecutive doublings.
/// ThresholdError for a pair problem with b*k*beta <= c*q; ContinuationError
/// if l_max is exceeded.
HalfLineSolution continue_to_halfline(const HalfLineProblem& problem, const ContinuationOptions& options);

/// The four half-line objects bracketing the positive equilibrium:
/// ol_u1 (no infection), ol_u23 (pair driven by ol_u1), ud_u1 (uninfected
/// cells under the ol_u23 virus load) and ud_u23 (pair driven by ud_u1).
struct EquilibriumChain {
  double r0 = 0.0;
  bool persistence_condition = false;
  HalfLineSolution ol_u1;
  HalfLineSolution ol_u23;
  HalfLineSolution ud_u1;
  std::optional<HalfLineSolution> ud_u23;  ///< absent when the persistence condition fails

  bool complete() const { return ud_u23.has_value(); }
  /// ol and ud values for the full triple at x: {U1, U2, U3}.
  std::array<double, 3> upper_at(double x) const;
  std::array<double, 3> lower_at(double x) const;
};

/// ThresholdError when R0 <= 1.
EquilibriumChain build_chain(const ModelParams& p, const ContinuationOptions& options);

enum class RightBoundary { Zero, Chain };

/// Positive solution of the full equilibrium system on the half line via
/// continuation. With RightBoundary::Chain the truncated problems take the
/// ol chain values at x = l; with Zero they vanish there. If the requested
/// variant fails to converge the other one is tried; IterationError (or
/// ContinuationError) when both fail. The label records which variant
/// produced the result.
HalfLineSolution solve_full_equilibrium(const ModelParams& p, const ContinuationOptions& options, RightBoundary bc,
                                        const EquilibriumChain* chain = nullptr);

}  // namespace viralfb
