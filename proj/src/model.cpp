#include "viralfb/model.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "viralfb/error.hpp"

namespace viralfb {

namespace {

void require_positive(double value, const char* name) {
  if (!std::isfinite(value) || value <= 0.0) {
    throw DomainError(std::string("parameter ") + name + " must be positive and finite",
                      {{name, value}});
  }
}

void require_nonnegative(double value, const char* name) {
  if (!std::isfinite(value) || value < 0.0) {
    throw DomainError(std::string("parameter ") + name + " must be nonnegative and finite",
                      {{name, value}});
  }
}

}  // namespace

void ModelParams::validate() const {
  require_positive(theta, "theta");
  require_positive(a, "a");
  require_positive(b, "b");
  require_positive(c, "c");
  require_positive(k, "k");
  require_positive(q, "q");
  require_positive(d1, "d1");
  require_positive(d2, "d2");
  require_positive(d3, "d3");
  require_nonnegative(mu1, "mu1");
  require_nonnegative(mu2, "mu2");
  require_nonnegative(mu3, "mu3");
  require_positive(h0, "h0");
}

Rates reaction(const ModelParams& p, const StateTriple& s, std::optional<double> rho_override) {
  if (s.u1 < 0.0 || s.u2 < 0.0 || s.u3 < 0.0) {
    throw DomainError("reaction: densities must be nonnegative",
                      {{"u1", s.u1}, {"u2", s.u2}, {"u3", s.u3}});
  }
  Rates r;
  r.f3 = virion_release(p.k, s.u2, s.u3) - p.q * s.u3;
  if (rho_override) {
    if (*rho_override < 0.0) {
      throw DomainError("reaction: rho must be nonnegative", {{"rho", *rho_override}});
    }
    r.f1 = std::numeric_limits<double>::quiet_NaN();
    r.f2 = infection(p.b, *rho_override, s.u3) - p.c * s.u2;
    return r;
  }
  const double inf = infection(p.b, s.u1, s.u3);
  r.f1 = p.theta - p.a * s.u1 - inf;
  r.f2 = inf - p.c * s.u2;
  return r;
}

double basic_reproduction_number(const ModelParams& p) {
  return p.k * p.b * p.theta / (p.a * p.c * p.q);
}

bool persistence_condition(const ModelParams& p) {
  const double r0 = basic_reproduction_number(p);
  return r0 + std::sqrt(r0) > p.b / p.a;
}

double ubar1_closed_form(const ModelParams& p, double d, double x) {
  if (d <= 0.0) throw DomainError("ubar1_closed_form: diffusivity must be positive", {{"d", d}});
  if (x < 0.0) throw DomainError("ubar1_closed_form: x must be nonnegative", {{"x", x}});
  return (p.theta / p.a) * -std::expm1(-x * std::sqrt(p.a / d));
}

std::array<double, 2> farfield_limits(const ModelParams& p, double beta) {
  const double ratio = p.b * p.k * beta / (p.c * p.q);
  if (!(ratio > 1.0)) {
    throw ThresholdError("farfield_limits: b*k*beta must exceed c*q", {{"ratio", ratio}});
  }
  const double root = std::sqrt(ratio);
  return {p.b * beta * (1.0 - 1.0 / root) / p.c, root - 1.0};
}

double udbar1_farfield(const ModelParams& p) {
  const double s = std::sqrt(basic_reproduction_number(p));
  const double denom = (p.a + p.b) * s - p.b;
  if (!(denom > 0.0)) {
    throw DomainError("udbar1_farfield: nonpositive denominator", {{"denominator", denom}});
  }
  return p.theta * s / denom;
}

std::optional<FixedPoint> homogeneous_fixed_point(const ModelParams& p, double rho) {
  if (rho <= 0.0) throw DomainError("homogeneous_fixed_point: rho must be positive", {{"rho", rho}});
  const double ratio = p.b * p.k * rho / (p.c * p.q);
  if (!(ratio > 1.0)) return std::nullopt;
  FixedPoint fp;
  fp.w = std::sqrt(ratio) - 1.0;
  fp.v = (p.q / p.k) * fp.w * (1.0 + fp.w);
  return fp;
}

double principal_eigenvalue(double l) {
  if (!(l > 0.0)) throw DomainError("principal_eigenvalue: length must be positive", {{"l", l}});
  const double r = std::numbers::pi / l;
  return r * r;
}

bool eigen_condition(const ModelParams& p, double l, double beta, double eps) {
  const double lam = principal_eigenvalue(l);
  return p.b * p.k * (beta - eps) > (p.c + p.d2 * lam) * (p.q + p.d3 * lam);
}

double default_eigen_margin(const ModelParams& p, double beta) {
  const double excess = p.b * p.k * beta - p.c * p.q;
  if (!(excess > 0.0)) {
    throw ThresholdError("eigen margin: b*k*beta must exceed c*q", {{"excess", excess}});
  }
  return 0.5 * excess / (p.b * p.k);
}

}  // namespace viralfb
