#include <doctest.h>

#include <cmath>

#include "viralfb/bvp.hpp"
#include "viralfb/error.hpp"

using namespace viralfb;

namespace {

ModelParams endemic() {
  ModelParams p;
  p.b = 2.0;
  return p;
}

// Closed-form solution of -d U'' = theta - L U, U(0) = 0, bounded.
double plateau_profile(double theta, double L, double d, double x) {
  return theta / L * -std::expm1(-x * std::sqrt(L / d));
}

double scalar_error(int cells, double l, double window) {
  const ModelParams p;
  const Grid g = Grid::make(l, cells - 1);
  const auto spec = BvpSpec::scalar(p, g, 1.0, ubar1_closed_form(p, 1.0, l));
  const auto sol = solve_newton(spec);
  double err = 0.0;
  for (int j = 0; j < g.nodes() && g.x(j) <= window + 1e-12; ++j)
    err = std::max(err, std::abs(sol.profile(0, j) - ubar1_closed_form(p, 1.0, g.x(j))));
  return err;
}

std::vector<double> sampled_closed_form(const ModelParams& p, const Grid& g) {
  std::vector<double> rho(std::size_t(g.nodes()));
  for (int j = 0; j < g.nodes(); ++j) rho[std::size_t(j)] = ubar1_closed_form(p, p.d1, g.x(j));
  return rho;
}

}  // namespace

TEST_CASE("scalar problem: second-order agreement with the closed form") {
  const double e1 = scalar_error(1600, 40.0, 10.0);  // dx = 0.025
  const double e2 = scalar_error(3200, 40.0, 10.0);
  CHECK(e1 <= 5 * 0.025 * 0.025);
  CHECK(e1 / e2 >= 3.5);
}

TEST_CASE("scalar problem with a constant virus load") {
  const ModelParams p = endemic();
  const double w = 0.3;
  const Grid g = Grid::make(40.0, 1599);
  const double L = p.a + p.b * w / (1 + w);
  const auto spec = BvpSpec::scalar(p, g, 1.0, plateau_profile(p.theta, L, 1.0, 40.0),
                                    std::vector<double>(std::size_t(g.nodes()), w));
  const auto sol = solve_newton(spec);
  for (int j = 0; j < g.nodes(); j += 37)
    CHECK(std::abs(sol.profile(0, j) - plateau_profile(p.theta, L, 1.0, g.x(j))) < 1e-3);
  CHECK(sol.residual <= 1e-10);
  CHECK(pde_residual(spec, sol.profile) <= 1e-9);
}

TEST_CASE("pair problem: Newton and the alternating map agree") {
  const ModelParams p = endemic();
  const Grid g = Grid::make(80.0, 3199);
  const auto spec = BvpSpec::pair(p, g, sampled_closed_form(p, g));
  const auto newton = solve_newton(spec);
  int iterates = 0;
  AlternatingOptions opt;
  opt.on_iterate = [&](const Profile&) { ++iterates; };
  const auto alt = solve_alternating(spec, std::nullopt, opt);
  CHECK(newton.profile.max_abs_diff(alt.profile) <= 1e-8);
  CHECK(iterates == alt.iterations);
  CHECK(newton.profile.min() >= -1e-12);
  CHECK(pde_residual(spec, newton.profile) <= 1e-9);
  // Plateau approaches the homogeneous far field.
  const auto ff = farfield_limits(p, 1.0);
  CHECK(newton.profile.interpolate(0, 40.0) == doctest::Approx(ff[0]).epsilon(1e-3));
  CHECK(newton.profile.interpolate(1, 40.0) == doctest::Approx(ff[1]).epsilon(1e-3));
}

TEST_CASE("pair problem: increasing coefficient gives nondecreasing profiles") {
  for (double b : {2.0, 3.0, 5.0}) {
    ModelParams p;
    p.b = b;
    const Grid g = Grid::make(40.0, 1599);
    auto spec = BvpSpec::pair(p, g, sampled_closed_form(p, g));
    const double zeta = default_zeta(spec);
    const auto sol = solve_alternating(spec, zeta);
    int violations = 0;
    for (int c = 0; c < 2; ++c)
      for (int j = 1; j < g.nodes(); ++j)
        if (sol.profile(c, j) < sol.profile(c, j - 1)) ++violations;
    CHECK(violations == 0);
    CHECK(sol.profile(0, g.nodes() - 1) == zeta);
    CHECK(sol.profile.max(0) <= zeta);
  }
}

TEST_CASE("alternating map preconditions") {
  const ModelParams p = endemic();
  const Grid g = Grid::make(20.0, 399);
  auto spec = BvpSpec::pair(p, g, sampled_closed_form(p, g));
  CHECK_THROWS_AS(solve_alternating(spec, 0.1), PreconditionError);
  auto decreasing = spec;
  for (int j = 0; j < g.nodes(); ++j) decreasing.rho[std::size_t(j)] = 2.0 - g.x(j) / 20.0;
  CHECK_THROWS_AS(solve_alternating(decreasing, 10.0), PreconditionError);
  const auto scalar = BvpSpec::scalar(p, g, 1.0, 0.0);
  CHECK_THROWS_AS(solve_alternating(scalar, std::nullopt), PreconditionError);
}

TEST_CASE("spec validation") {
  const ModelParams p;
  const Grid g = Grid::make(10.0, 99);
  CHECK_THROWS_AS(BvpSpec::scalar(p, g, 0.0, 0.0), PreconditionError);
  CHECK_THROWS_AS(BvpSpec::scalar(p, g, 1.0, -1.0), PreconditionError);
  CHECK_THROWS_AS(BvpSpec::pair(p, g, std::vector<double>(5, 1.0)), PreconditionError);
  CHECK_THROWS_AS(BvpSpec::pair(p, g, std::vector<double>(std::size_t(g.nodes()), -1.0)), PreconditionError);
  ModelParams bad;
  bad.a = -1.0;
  CHECK_THROWS_AS(BvpSpec::triple(bad, g), DomainError);
}

TEST_CASE("Newton failure and starting-point checks") {
  const ModelParams p = endemic();
  const Grid g = Grid::make(40.0, 799);
  const auto spec = BvpSpec::triple(p, g);
  NewtonOptions opt;
  opt.max_iter = 1;
  opt.monotone_fallback = false;
  CHECK_THROWS_AS(solve_newton(spec, opt), IterationError);
  Profile wrong(g, 3, 1.0);
  CHECK_THROWS_AS(solve_newton(spec, wrong), PreconditionError);
  CHECK_THROWS_AS(solve_newton(spec, Profile(Grid::make(40.0, 99), 3)), PreconditionError);
}

TEST_CASE("below threshold the pair collapses to zero") {
  ModelParams p;
  p.c = 2.0;
  const Grid g = Grid::make(40.0, 799);
  const auto spec = BvpSpec::pair(p, g, sampled_closed_form(p, g));
  const auto sol = solve_newton(spec);
  CHECK(sol.profile.max(0) < 1e-8);
  CHECK(sol.profile.max(1) < 1e-8);
}

TEST_CASE("monotone bracket narrows around the Newton solution") {
  const ModelParams p = endemic();
  const Grid g = Grid::make(40.0, 399);
  const auto spec = BvpSpec::triple(p, g);
  const auto newton = solve_newton(spec);
  // Lower start: the zero profile (a lower solution since f(0) >= 0).
  // Upper start: the maximum-principle caps.
  const Bracket br = monotone_bracket(spec, Profile(g, 3), default_initial_guess(spec), 300);
  for (std::size_t s = 1; s < br.widths.size(); ++s) CHECK(br.widths[s] <= br.widths[s - 1] + 1e-12);
  for (int c = 0; c < 3; ++c) {
    for (int j = 0; j < g.nodes(); ++j) {
      CHECK(br.lower(c, j) <= br.upper(c, j) + 1e-10);
      CHECK(br.upper(c, j) >= newton.profile(c, j) - 1e-8);
    }
  }
  // Zero as the lower start keeps the infected lower iterates at zero, so
  // the bracket stays open; started at the solution it closes onto it.
  CHECK(br.widths.back() > 1e-2);
  const Bracket tight = monotone_bracket(spec, newton.profile, default_initial_guess(spec), 300);
  CHECK(tight.lower.max_abs_diff(newton.profile) < 1e-6);
  CHECK(tight.upper.max_abs_diff(newton.profile) < 1e-6);

  Profile lo = default_initial_guess(spec);
  CHECK_THROWS_AS(monotone_bracket(spec, lo, Profile(g, 3), 1), PreconditionError);
}

TEST_CASE("scalar and pair brackets contain their solutions") {
  const ModelParams p = endemic();
  const Grid g = Grid::make(30.0, 299);
  const auto scalar = BvpSpec::scalar(p, g, 1.0, 0.0);
  const auto s_sol = solve_newton(scalar);
  const Bracket sb = monotone_bracket(scalar, Profile(g, 1), default_initial_guess(scalar), 400);
  CHECK(sb.widths.back() < 1e-8);
  CHECK(sb.lower.max_abs_diff(s_sol.profile) < 1e-8);

  const auto pair = BvpSpec::pair(p, g, sampled_closed_form(p, g));
  const auto p_sol = solve_newton(pair);
  const Bracket pb = monotone_bracket(pair, p_sol.profile, default_initial_guess(pair), 50);
  for (int c = 0; c < 2; ++c)
    for (int j = 0; j < g.nodes(); ++j) CHECK(pb.lower(c, j) == doctest::Approx(p_sol.profile(c, j)).epsilon(1e-8));
}

TEST_CASE("one-sided boundary flux is exact on quadratics") {
  Profile u(Grid::make(2.0, 19), 1);
  for (int j = 0; j < u.nodes(); ++j) {
    const double x = u.grid().x(j);
    u(0, j) = 3.0 * x * x - 2.0 * x + 1.0;
  }
  CHECK(boundary_flux(u, Side::Left, 0) == doctest::Approx(-2.0));
  CHECK(boundary_flux(u, Side::Right, 0) == doctest::Approx(10.0));
}

TEST_CASE("residual evaluation is independent of the Newton assembly") {
  const ModelParams p = endemic();
  const Grid g = Grid::make(10.0, 9);
  const auto spec = BvpSpec::triple(p, g);
  Profile u(g, 3);
  for (int c = 0; c < 3; ++c)
    for (int j = 1; j <= g.n; ++j) u(c, j) = 0.1 * (c + 1) * std::sin(3.14159265358979 * g.x(j) / 10.0);
  const double dx2 = g.dx() * g.dx();
  double worst = 0.0;
  for (int jj = 1; jj <= g.n; ++jj) {
    const Rates rr = reaction(p, {u(0, jj), u(1, jj), u(2, jj)});
    const double f[3] = {rr.f1, rr.f2, rr.f3};
    for (int c = 0; c < 3; ++c)
      worst = std::max(worst, std::abs((u(c, jj - 1) - 2 * u(c, jj) + u(c, jj + 1)) / dx2 + f[c]));
  }
  CHECK(pde_residual(spec, u) == doctest::Approx(worst).epsilon(1e-12));
}
