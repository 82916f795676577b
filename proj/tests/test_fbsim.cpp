#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "viralfb/equilibrium.hpp"
#include "viralfb/error.hpp"
#include "viralfb/fbsim.hpp"

using namespace viralfb;

namespace {

ModelParams endemic() {
  ModelParams p;
  p.b = 2.0;
  return p;
}

ModelParams extinct() {
  ModelParams p;
  p.c = 2.0;
  return p;
}

// Uninfected bump only; the infected cells and the virus start at zero.
InitialData virus_free(double h0, double amplitude) {
  InitialData d = InitialData::sine_bumps(h0);
  d.u[0] = [=](double x) { return amplitude * std::sin(std::numbers::pi * x / h0); };
  d.u[1] = d.u[2] = [](double) { return 0.0; };
  return d;
}

RunOptions fixed_steps(double T, int n, double dt) {
  RunOptions o;
  o.T = T;
  o.n = n;
  o.dt = dt;
  o.adaptive = false;
  o.observer_dt = T;
  return o;
}

}  // namespace

TEST_CASE("initial state samples the bumps on the normalized grid") {
  const ModelParams p = endemic();
  const SimState s = SimState::initial(p, InitialData::sine_bumps(1.0, {1.0, 0.5, 0.25}), 99);
  CHECK(s.h == 1.0);
  CHECK(s.dy() == doctest::Approx(0.01));
  CHECK(s.U(1, 50) == doctest::Approx(0.5));
  for (int c = 0; c < 3; ++c) {
    CHECK(s.U(c, 0) == 0.0);
    CHECK(s.U(c, 100) == 0.0);
  }
  // Flux of sin(pi y) at y = 1 is -pi per unit amplitude.
  CHECK(boundary_speed(s, p) == doctest::Approx(std::numbers::pi * 1.75).epsilon(1e-3));
  const auto caps = solution_caps(p, s);
  CHECK(caps[0] == doctest::Approx(1.0));
  CHECK(caps[1] == doctest::Approx(2.0));
  CHECK(caps[2] == doctest::Approx(2.0));
}

TEST_CASE("initial data validation") {
  const ModelParams p;
  InitialData bad = InitialData::sine_bumps(1.0);
  bad.u[1] = [](double x) { return -x * (1 - x); };
  CHECK_THROWS_AS(SimState::initial(p, bad, 50), InputError);
  InitialData open = InitialData::sine_bumps(1.0);
  open.u[0] = [](double) { return 1.0; };
  CHECK_THROWS_AS(SimState::initial(p, open, 50), InputError);
  InitialData nan = InitialData::sine_bumps(1.0);
  nan.u[2] = [](double) { return std::nan(""); };
  CHECK_THROWS_AS(SimState::initial(p, nan, 50), InputError);
}

TEST_CASE("zero Stefan coefficients freeze the boundary") {
  ModelParams p = endemic();
  p.mu1 = p.mu2 = p.mu3 = 0.0;
  RunOptions o;
  o.T = 5.0;
  o.n = 100;
  const auto tr = run(InitialData::sine_bumps(p.h0), p, o);
  for (const auto& ob : tr.observations) {
    CHECK(ob.h == p.h0);
    CHECK(ob.h_prime == 0.0);
  }
}

TEST_CASE("virus-free data: positive speed from the uninfected cells alone") {
  const ModelParams p;
  const SimState s = SimState::initial(p, virus_free(1.0, 1e-3), 80);
  CHECK(s.U.max(1) == 0.0);
  const double hp = boundary_speed(s, p);
  CHECK(hp > 0.0);
  const SimState next = step(s, p, 1e-3);
  CHECK(next.h > s.h);
  CHECK(next.U.max(1) == 0.0);
  CHECK(next.U.max(2) == 0.0);
}

TEST_CASE("step errors") {
  const ModelParams p = endemic();
  const SimState s = SimState::initial(p, InitialData::sine_bumps(1.0), 400);
  // h' is about 3 pi at t = 0, so dt = 1e-2 moves the front several cells.
  CHECK(courant_number(s, boundary_speed(s, p), 1e-2) > 0.9);
  CHECK_THROWS_AS(step(s, p, 1e-2), StepSizeError);
  CHECK_THROWS_AS(step(s, p, 0.0), StepSizeError);

  SimState shrinking = s;
  for (int c = 0; c < 3; ++c)
    for (int j = 1; j < shrinking.U.nodes() - 1; ++j) shrinking.U(c, j) = 0.0;
  shrinking.U(0, shrinking.U.nodes() - 2) = -1.0;
  CHECK(boundary_speed(shrinking, p) < 0.0);
  CHECK_THROWS_AS(step(shrinking, p, 1e-6), ModelConsistencyError);

  try {
    run(InitialData::sine_bumps(1.0), p, fixed_steps(1.0, 400, 0.5));
    FAIL("expected a step-size error");
  } catch (const StepSizeError& e) {
    bool tagged = false;
    for (const auto& f : e.fields()) tagged |= f.first == "t_fail";
    CHECK(tagged);
  }
}

TEST_CASE("invariants along an adaptive endemic run") {
  const ModelParams p = endemic();
  RunOptions o;
  o.T = 20.0;
  o.n = 200;
  o.observer_dt = 0.5;
  o.snapshot_times = {0.0, 10.0};
  int seen = 0;
  o.observer = [&](const Observation&) { ++seen; };
  const auto tr = run(InitialData::sine_bumps(p.h0), p, o);
  CHECK(seen == int(tr.observations.size()));
  CHECK(tr.observations.size() == 41);
  CHECK(tr.observations.back().t == doctest::Approx(20.0));
  CHECK(tr.stats.nonpositive_h_prime == 0);
  CHECK(tr.stats.min_h_prime > 0.0);
  CHECK(tr.stats.min_before_clip >= -1e-13);
  CHECK(tr.stats.max_step_clip <= 1e-12 * o.n);
  CHECK(tr.stats.clipped_mass <= 1e-8);
  for (std::size_t i = 1; i < tr.observations.size(); ++i) {
    const auto& ob = tr.observations[i];
    CHECK(ob.h > tr.observations[i - 1].h);
    for (int c = 0; c < 3; ++c) CHECK(ob.sup[std::size_t(c)] <= tr.stats.caps[std::size_t(c)] * (1 + 1e-12));
  }
  int snaps = 0;
  for (const auto& ob : tr.observations) {
    if (!ob.snapshot) continue;
    ++snaps;
    CHECK(ob.snapshot->grid().l == doctest::Approx(ob.h));
    CHECK(ob.snapshot->min() >= 0.0);
    for (int c = 0; c < 3; ++c) CHECK(ob.snapshot->max(c) == ob.sup[std::size_t(c)]);
  }
  CHECK(snaps == 3);
  const auto& f = tr.final_state;
  CHECK(f.h == tr.observations.back().h);
  for (int c = 0; c < 3; ++c) {
    CHECK(f.U(c, 0) == 0.0);
    CHECK(f.U(c, f.U.nodes() - 1) == 0.0);
  }
}

TEST_CASE("first-order convergence in time") {
  const ModelParams p = endemic();
  const auto init = InitialData::sine_bumps(p.h0);
  std::vector<double> h;
  for (double dt : {8e-4, 4e-4, 2e-4}) h.push_back(run(init, p, fixed_steps(2.0, 50, dt)).final_state.h);
  CHECK(std::abs(h[0] - h[1]) / std::abs(h[1] - h[2]) >= 1.8);
}

TEST_CASE("second-order convergence in space") {
  const ModelParams p = endemic();
  const auto init = InitialData::sine_bumps(p.h0);
  std::vector<std::array<double, 3>> sup;
  for (int n : {39, 79, 159}) sup.push_back(run(init, p, fixed_steps(1.0, n, 2e-5)).observations.back().sup);
  for (std::size_t c = 0; c < 3; ++c) CHECK(std::abs(sup[0][c] - sup[1][c]) / std::abs(sup[1][c] - sup[2][c]) >= 3.5);
}

TEST_CASE("comparison ODE: decay, fixed point and stationarity") {
  const ModelParams below = extinct();
  const auto z = ode_comparison(below, 0.05, {2.0, 2.0}, 400.0, 1e-2);
  CHECK(z.front().t == 0.0);
  CHECK(z.back().t == doctest::Approx(400.0));
  CHECK(z.back().z2 <= 1e-8);
  CHECK(z.back().z3 <= 1e-8);
  for (const auto& s : z) CHECK((s.z2 >= 0.0 && s.z3 >= 0.0));

  const ModelParams above = endemic();
  const auto fp = homogeneous_fixed_point(above, 1.05);
  REQUIRE(fp);
  const auto y = ode_comparison(above, 0.05, {2.0, 2.0}, 400.0, 1e-2);
  CHECK(std::abs(y.back().z2 - fp->v) <= 1e-8);
  CHECK(std::abs(y.back().z3 - fp->w) <= 1e-8);

  const auto still = ode_comparison(above, 0.05, {fp->v, fp->w}, 50.0, 1e-2, 3.0);
  CHECK(still.front().t == 3.0);
  for (const auto& s : still) {
    CHECK(std::abs(s.z2 - fp->v) <= 1e-10);
    CHECK(std::abs(s.z3 - fp->w) <= 1e-10);
  }
  CHECK_THROWS_AS(ode_comparison(above, 0.05, {-1.0, 0.0}, 1.0, 1e-2), PreconditionError);
}

TEST_CASE("dominance of the comparison ODE below threshold") {
  const ModelParams p = extinct();
  RunOptions o;
  o.T = 60.0;
  o.n = 200;
  o.observer_dt = 0.5;
  const auto tr = run(InitialData::sine_bumps(p.h0), p, o);
  const auto rep = comparison_witness(tr, 0.05);
  REQUIRE_FALSE(rep.inconclusive);
  CHECK_FALSE(rep.ordering_failure);
  CHECK(rep.checked > 10);
  CHECK(rep.excess2 <= 1e-3);
  CHECK(rep.excess3 <= 1e-3);

  // Starting the ODE below the observed sup-norms breaks the ordering.
  const auto& at = *std::find_if(tr.observations.begin(), tr.observations.end(),
                                 [&](const Observation& ob) { return ob.t >= rep.t_align; });
  const auto low = ode_comparison(p, 0.05, {0.5 * at.sup[1], 0.5 * at.sup[2]}, o.T - at.t, 1e-3, at.t);
  CHECK(dominance_check(tr, low, 0.05).ordering_failure);

  // Uninfected cells that never drop below theta/a + eps: no alignment.
  Trajectory high;
  high.params = p;
  for (int i = 0; i <= 4; ++i) {
    Observation ob;
    ob.t = i;
    ob.sup = {2.0, 0.1, 0.1};
    high.observations.push_back(ob);
  }
  CHECK(comparison_witness(high, 0.05).inconclusive);
}

TEST_CASE("small data with a frozen boundary is dominated trivially") {
  ModelParams p = extinct();
  p.mu1 = p.mu2 = p.mu3 = 0.0;
  RunOptions o;
  o.T = 10.0;
  o.n = 100;
  o.observer_dt = 0.5;
  const auto tr = run(InitialData::sine_bumps(p.h0, {0.5, 1e-6, 1e-6}), p, o);
  const auto rep = comparison_witness(tr, 0.05);
  REQUIRE_FALSE(rep.inconclusive);
  CHECK(rep.excess2 <= 0.0);
  CHECK(rep.excess3 <= 0.0);
}

TEST_CASE("extinction run: infected cells and virus vanish, h keeps growing") {
  const ModelParams p = extinct();
  RunOptions o;
  o.T = 200.0;
  o.n = 400;
  const auto tr = run(InitialData::sine_bumps(p.h0), p, o);
  CHECK(tr.observations.back().sup[1] <= 1e-4);
  CHECK(tr.observations.back().sup[2] <= 1e-4);
  CHECK(tr.stats.nonpositive_h_prime == 0);
  CHECK(tr.final_state.h > 5 * p.h0);
}

TEST_CASE("virus-free data converge to the uninfected profile on a window") {
  const ModelParams p;
  RunOptions o;
  o.T = 200.0;
  o.n = 800;
  const auto tr = run(virus_free(p.h0, 1.0), p, o);
  CHECK(tr.stats.max_sup[1] == 0.0);
  CHECK(tr.stats.max_sup[2] == 0.0);
  const Profile u = tr.final_state.physical();
  double err = 0.0;
  for (int j = 0; j < u.nodes() && u.grid().x(j) <= 10.0; ++j)
    err = std::max(err, std::abs(u(0, j) - ubar1_closed_form(p, p.d1, u.grid().x(j))));
  CHECK(err <= 1e-3);
}
