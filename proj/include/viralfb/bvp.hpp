#pragma once

#include <array>
#include <functional>
#include <optional>
#include <vector>

#include "viralfb/model.hpp"
#include "viralfb/profile.hpp"

namespace viralfb {

/// Which truncated two-point problem a BvpSpec describes. All problems use
/// U = 0 at x = 0 and prescribed values at x = l.
enum class Coupling {
  /// -d U'' = theta - a U - b U w(x)/(1+w(x)), w an optional sampled virus
  /// density (absent: the plain production/decay problem).
  Scalar,
  /// (U2, U3) driven by a sampled uninfected density rho(x).
  Pair,
  /// The full (U1, U2, U3) system.
  Triple,
};

struct BvpSpec {
  Grid grid{};
  Coupling coupling = Coupling::Scalar;
  ModelParams params{};
  std::vector<double> diffusivity;  ///< one per component
  std::vector<double> right;        ///< Dirichlet data at x = l, one per component
  std::vector<double> rho;          ///< Pair only: rho sampled at every node
  std::vector<double> virus;        ///< Scalar only: optional w sampled at every node

  int comps() const { return coupling == Coupling::Scalar ? 1 : coupling == Coupling::Pair ? 2 : 3; }
  void validate() const;

  static BvpSpec scalar(const ModelParams& p, Grid g, double d, double right, std::vector<double> virus = {});
  static BvpSpec pair(const ModelParams& p, Grid g, std::vector<double> rho, std::array<double, 2> right = {0, 0});
  static BvpSpec triple(const ModelParams& p, Grid g, std::array<double, 3> right = {0, 0, 0});
};

struct BvpSolution {
  Profile profile;
  double residual = 0.0;  ///< max-norm PDE residual at return
  int iterations = 0;
};

/// Constant caps from the maximum principle (theta/a for U1, b*beta_m/c and
/// b*k*beta_m/(c*q) for the infected pair, beta_m = sup rho), raised to the
/// right boundary data where that is larger.
std::vector<double> upper_caps(const BvpSpec& spec);

/// Interior filled with `interior[c]`, boundary nodes set to the Dirichlet data.
Profile boundary_profile(const BvpSpec& spec, const std::vector<double>& interior);

/// The default Newton starting point: the caps with boundary data imposed.
Profile default_initial_guess(const BvpSpec& spec);

/// Max-norm of d_i U_i'' + f_i(U) over interior nodes, evaluated through
/// model::reaction (independent of the Newton assembly). Negative values
/// are clipped to zero before the kinetics are evaluated.
double pde_residual(const BvpSpec& spec, const Profile& u);

struct NewtonOptions {
  double tol = 1e-10;
  int max_iter = 50;
  int max_halvings = 30;
  /// On Newton failure, run monotone sweeps from the caps and retry once.
  bool monotone_fallback = true;
  int fallback_sweeps = 400;
};

/// Damped Newton on the centered-difference discretization. Every accepted
/// step strictly decreases the residual. Throws IterationError on
/// non-convergence and PositivityError if the converged profile has
/// interior values below -1e-12.
BvpSolution solve_newton(const BvpSpec& spec, const Profile& initial, const NewtonOptions& options = {});
BvpSolution solve_newton(const BvpSpec& spec, const NewtonOptions& options = {});

/// Smallest zeta with zeta > 1, b*beta/(c(1+zeta)) < 1 and k/(q(1+zeta)) < 1,
/// doubled. beta = sup rho.
double default_zeta(const BvpSpec& pair_spec);

struct AlternatingOptions {
  double tol = 1e-10;
  int max_iter = 200;
  /// Called with the (U2, U3) iterate after each outer sweep.
  std::function<void(const Profile&)> on_iterate;
};

/// Fixed point of U3 -> U2 -> U3': solve the linear U2 equation for the
/// current U3, then the scalar U3 equation for that U2. With `zeta` both
/// components take the value zeta at x = l (zeta must satisfy the two
/// smallness inequalities and rho must be nondecreasing); without it the
/// problem's own right boundary data is used. Stops once the pair residual is
/// below tol.
BvpSolution solve_alternating(const BvpSpec& pair_spec, std::optional<double> zeta,
                              const AlternatingOptions& options = {});

struct Bracket {
  Profile lower;
  Profile upper;
  std::vector<double> widths;  ///< max(upper - lower) after each sweep, entry width first
};

/// Coupled monotone iteration on an ordered pair of lower/upper solutions,
/// using the mixed quasimonotone pattern of the kinetics: f1 is nonincreasing
/// in U3, f2 nondecreasing in U1 and U3, f3 nondecreasing in U2.
/// PreconditionError if lower > upper on entry; ConsistencyError if the
/// iterates lose order by more than 1e-10.
Bracket monotone_bracket(const BvpSpec& spec, const Profile& lower, const Profile& upper, int sweeps);

enum class Side { Left, Right };

/// One-sided three-point second-order derivative at a boundary node.
double boundary_flux(const Profile& profile, Side side, int comp);

}  // namespace viralfb
