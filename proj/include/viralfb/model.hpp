#pragma once

#include <array>
#include <optional>

namespace viralfb {

/// Constants of the three-species infection model: uninfected cells u1,
/// infected cells u2 and free virus u3 diffusing on (0, h(t)).
///
/// Kinetics:
///   f1 = theta - a*u1 - b*u1*u3/(1+u3)
///   f2 = b*u1*u3/(1+u3) - c*u2
///   f3 = k*u2/(1+u3) - q*u3
struct ModelParams {
  double theta = 1.0;  ///< production rate of uninfected cells
  double a = 1.0;      ///< death rate of uninfected cells
  double b = 1.0;      ///< infection rate
  double c = 1.0;      ///< death rate of infected cells
  double k = 1.0;      ///< virion production rate
  double q = 1.0;      ///< virus clearance rate
  double d1 = 1.0, d2 = 1.0, d3 = 1.0;
  double mu1 = 1.0, mu2 = 1.0, mu3 = 1.0;  ///< Stefan expansion coefficients
  double h0 = 1.0;                         ///< initial habitat length

  /// Throws DomainError unless the constants are admissible. Stefan
  /// coefficients may be zero (frozen boundary); everything else must be
  /// strictly positive and finite.
  void validate() const;

  std::array<double, 3> diffusivities() const { return {d1, d2, d3}; }
  std::array<double, 3> stefan() const { return {mu1, mu2, mu3}; }
};

struct StateTriple {
  double u1 = 0.0;
  double u2 = 0.0;
  double u3 = 0.0;
};

struct Rates {
  double f1 = 0.0;
  double f2 = 0.0;
  double f3 = 0.0;
};

/// Reaction terms (f1, f2, f3) at `s`. With `rho_override` the infected-cell
/// source uses rho in place of u1 and f1 is returned as NaN.
Rates reaction(const ModelParams& p, const StateTriple& s,
               std::optional<double> rho_override = std::nullopt);

// Building blocks shared by the discretized operators. Callers are
// responsible for passing nonnegative virus densities.
inline double infection(double b, double uninfected, double virus) {
  return b * uninfected * virus / (1.0 + virus);
}
inline double virion_release(double k, double infected, double virus) {
  return k * infected / (1.0 + virus);
}

/// R0 = k*b*theta / (a*c*q).
double basic_reproduction_number(const ModelParams& p);

/// R0 + sqrt(R0) > b/a; the gate for the lower persistence bound.
bool persistence_condition(const ModelParams& p);

/// Bounded solution of -d U'' = theta - a U on the half line with U(0) = 0:
/// (theta/a) * (1 - exp(-x sqrt(a/d))).
double ubar1_closed_form(const ModelParams& p, double d, double x);

/// Far-field values (U2, U3) of the pair problem driven by a nondecreasing
/// coefficient with limit beta. Requires b*k*beta > c*q (ThresholdError).
std::array<double, 2> farfield_limits(const ModelParams& p, double beta);

/// theta*sqrt(R0) / ((a+b)*sqrt(R0) - b); DomainError if the denominator is
/// not positive.
double udbar1_farfield(const ModelParams& p);

struct FixedPoint {
  double v = 0.0;  ///< infected cells
  double w = 0.0;  ///< virus
};

/// Positive root of f2(rho, v, w) = 0, f3(v, w) = 0, or nullopt when
/// b*k*rho/(c*q) <= 1 and only the trivial root exists.
std::optional<FixedPoint> homogeneous_fixed_point(const ModelParams& p, double rho);

/// Principal Dirichlet eigenvalue of -psi'' on an interval of length l.
double principal_eigenvalue(double l);

/// b*k*(beta - eps) > (c + d2*lambda1(l)) * (q + d3*lambda1(l)).
bool eigen_condition(const ModelParams& p, double l, double beta, double eps);

/// Half the admissible margin: the eps used when the caller does not supply
/// one, chosen so that b*k*(beta - eps) > c*q still holds.
double default_eigen_margin(const ModelParams& p, double beta);

}  // namespace viralfb
