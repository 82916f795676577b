#include "viralfb/fbsim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "viralfb/error.hpp"
#include "viralfb/linalg.hpp"

namespace viralfb {

InitialData InitialData::sine_bumps(double h0, std::array<double, 3> amplitude) {
  if (!(h0 > 0.0)) throw DomainError("initial length must be positive");
  InitialData init;
  for (int i = 0; i < 3; ++i) {
    const double A = amplitude[std::size_t(i)];
    if (!(A > 0.0) || !std::isfinite(A)) throw DomainError("initial amplitudes must be positive");
    init.u[std::size_t(i)] = [A, h0](double x) { return A * std::sin(std::numbers::pi * x / h0); };
  }
  return init;
}

SimState SimState::initial(const ModelParams& p, const InitialData& init, int n) {
  p.validate();
  SimState s;
  s.h = p.h0;
  s.U = Profile(Grid::make(1.0, n), 3);
  const Grid& g = s.U.grid();
  for (int c = 0; c < 3; ++c) {
    const auto& f = init.u[std::size_t(c)];
    if (!f) throw InputError("initial datum missing");
    for (int j = 1; j + 1 < g.nodes(); ++j) {
      const double v = f(g.x(j) * p.h0);
      if (!std::isfinite(v) || v < 0.0) throw InputError("initial data must be finite and nonnegative");
      s.U(c, j) = v;
    }
    const double ends = std::max(std::abs(f(0.0)), std::abs(f(p.h0)));
    if (ends > 1e-12) throw InputError("initial data must vanish at x = 0 and x = h0");
  }
  return s;
}

Profile SimState::physical() const {
  Profile out(Grid{h, U.grid().n}, 3);
  for (int c = 0; c < 3; ++c)
    for (int j = 0; j < U.nodes(); ++j) out(c, j) = U(c, j);
  return out;
}

double boundary_speed(const SimState& s, const ModelParams& p) {
  const int last = s.U.nodes() - 1;
  const auto mu = p.stefan();
  double flux = 0.0;
  for (int c = 0; c < 3; ++c) {
    const double dUdy = (3.0 * s.U(c, last) - 4.0 * s.U(c, last - 1) + s.U(c, last - 2)) / (2.0 * s.dy());
    flux += mu[std::size_t(c)] * dUdy;
  }
  return -flux / s.h;
}

double courant_number(const SimState& s, double h_prime, double dt) { return std::abs(h_prime / s.h) * dt / s.dy(); }

SimState step(const SimState& s, const ModelParams& p, double dt, const StepOptions& opt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw StepSizeError("time step must be positive", s.t, dt, 0.0);
  const double hp = boundary_speed(s, p);
  if (hp < -1e-12) throw ModelConsistencyError("free boundary would retreat", s.t, hp);
  const double courant = courant_number(s, hp, dt);
  if (courant > opt.courant_limit) throw StepSizeError("advection Courant limit exceeded", s.t, dt, courant);

  const Grid& g = s.U.grid();
  const int n = g.n;
  const double dy = g.dx();
  const double h_new = s.h + dt * hp;

  SimState out = s;
  out.t = s.t + dt;
  out.h = h_new;
  out.h_prime = hp;

  // Explicit part.
  Profile star(g, 3);
  for (int j = 1; j <= n; ++j) {
    const StateTriple u{s.U(0, j), s.U(1, j), s.U(2, j)};
    const Rates r = reaction(p, u);
    const std::array<double, 3> f{r.f1, r.f2, r.f3};
    const double drift = g.x(j) * hp / s.h / (2.0 * dy);
    for (int c = 0; c < 3; ++c)
      star(c, j) = s.U(c, j) + dt * (drift * (s.U(c, j + 1) - s.U(c, j - 1)) + f[std::size_t(c)]);
  }

  // Implicit diffusion on the updated length.
  const auto d = p.diffusivities();
  const auto m = std::size_t(n);
  std::vector<double> lower(m), diag(m), upper(m), rhs(m);
  double min_before = 0.0, clipped = 0.0;
  long events = 0;
  for (int c = 0; c < 3; ++c) {
    const double r = dt * d[std::size_t(c)] / (h_new * h_new * dy * dy);
    std::fill(lower.begin(), lower.end(), -r);
    std::fill(upper.begin(), upper.end(), -r);
    std::fill(diag.begin(), diag.end(), 1.0 + 2.0 * r);
    for (int j = 1; j <= n; ++j) rhs[std::size_t(j - 1)] = star(c, j);
    const auto sol = linalg::solve_tridiagonal(lower, diag, upper, rhs);
    for (int j = 1; j <= n; ++j) {
      double v = sol[std::size_t(j - 1)];
      if (!std::isfinite(v)) throw StepSizeError("non-finite density", s.t, dt, courant);
      min_before = std::min(min_before, v);
      if (v < 0.0) {
        clipped += -v * dy * h_new;
        ++events;
        v = 0.0;
      }
      out.U(c, j) = v;
    }
  }
  out.last_min_before_clip = min_before;
  out.last_clipped_mass = clipped;
  out.clipped_mass += clipped;
  out.clip_events += events;
  return out;
}

std::array<double, 3> solution_caps(const ModelParams& p, const SimState& init) {
  const double m1 = std::max(p.theta / p.a, init.U.max(0));
  const double m2 = std::max(init.U.max(1), p.b * m1 / p.c);
  const double m3 = std::max(init.U.max(2), p.k * m2 / p.q);
  return {m1, m2, m3};
}

namespace {

Observation observe(const SimState& s, double h_prime, bool snapshot) {
  Observation o;
  o.t = s.t;
  o.h = s.h;
  o.h_prime = h_prime;
  for (int c = 0; c < 3; ++c) o.sup[std::size_t(c)] = s.U.max(c);
  if (snapshot) o.snapshot = s.physical();
  return o;
}

}  // namespace

Trajectory run(const InitialData& init, const ModelParams& p, const RunOptions& opt) {
  if (!(opt.T > 0.0) || !std::isfinite(opt.T)) throw InputError("final time must be positive");
  if (!(opt.dt > 0.0)) throw InputError("time step must be positive");
  if (!(opt.observer_dt > 0.0)) throw InputError("observer interval must be positive");

  Trajectory traj;
  traj.params = p;
  SimState s = SimState::initial(p, init, opt.n);
  RunStats& st = traj.stats;
  st.caps = solution_caps(p, s);
  st.min_h_prime = std::numeric_limits<double>::infinity();
  for (int c = 0; c < 3; ++c) st.max_sup[std::size_t(c)] = s.U.max(c);

  std::vector<double> targets;
  for (long k = 1; double(k) * opt.observer_dt < opt.T * (1 - 1e-12); ++k) targets.push_back(double(k) * opt.observer_dt);
  for (double ts : opt.snapshot_times)
    if (ts > 0.0 && ts < opt.T) targets.push_back(ts);
  targets.push_back(opt.T);
  std::sort(targets.begin(), targets.end());
  targets.erase(std::unique(targets.begin(), targets.end(), [](double x, double y) { return std::abs(x - y) < 1e-9; }),
                targets.end());
  auto wants_snapshot = [&](double t) {
    if (std::abs(t - opt.T) < 1e-9) return true;
    return std::any_of(opt.snapshot_times.begin(), opt.snapshot_times.end(),
                       [t](double ts) { return std::abs(ts - t) < 1e-9; });
  };
  auto record = [&](const Observation& o) {
    if (opt.observer) opt.observer(o);
    traj.observations.push_back(o);
  };
  record(observe(s, boundary_speed(s, p), wants_snapshot(0.0)));

  for (double target : targets) {
    while (s.t < target) {
      double dt = opt.dt;
      if (opt.adaptive) {
        const double hp = boundary_speed(s, p);
        if (hp > 0.0) dt = std::min(dt, 0.5 * s.dy() * s.h / hp);
      }
      const bool lands = s.t + dt >= target - 1e-12 * std::max(1.0, target);
      if (lands) dt = target - s.t;
      try {
        s = step(s, p, dt, opt.step);
      } catch (Error& e) {
        e.add_field("t_fail", s.t);
        throw;
      }
      if (lands) s.t = target;
      ++st.steps;
      st.min_h_prime = std::min(st.min_h_prime, s.h_prime);
      if (!(s.h_prime > 0.0)) ++st.nonpositive_h_prime;
      st.min_before_clip = std::min(st.min_before_clip, s.last_min_before_clip);
      st.max_step_clip = std::max(st.max_step_clip, s.last_clipped_mass);
      st.clipped_mass = s.clipped_mass;
      for (int c = 0; c < 3; ++c) st.max_sup[std::size_t(c)] = std::max(st.max_sup[std::size_t(c)], s.U.max(c));
      if (s.clipped_mass > opt.clip_budget) {
        ConsistencyError e("clipped mass exceeds budget");
        e.add_field("t_fail", s.t);
        e.add_field("clipped_mass", s.clipped_mass);
        throw e;
      }
    }
    record(observe(s, s.h_prime, wants_snapshot(target)));
  }
  traj.final_state = std::move(s);
  return traj;
}

std::vector<OdeComparisonState> ode_comparison(const ModelParams& p, double eps, std::array<double, 2> z0, double T,
                                               double dt, double t0) {
  if (z0[0] < 0.0 || z0[1] < 0.0) throw PreconditionError("comparison start must be nonnegative");
  if (!(dt > 0.0) || !(T >= 0.0)) throw InputError("comparison needs dt > 0 and T >= 0");
  const double rho = p.theta / p.a + eps;
  auto rhs = [&](double z2, double z3) {
    const Rates r = reaction(p, {0.0, std::max(z2, 0.0), std::max(z3, 0.0)}, rho);
    return std::array<double, 2>{r.f2, r.f3};
  };
  std::vector<OdeComparisonState> out;
  const long steps = long(std::ceil(T / dt - 1e-9));
  out.reserve(std::size_t(steps + 1));
  double z2 = z0[0], z3 = z0[1];
  out.push_back({t0, z2, z3});
  for (long i = 0; i < steps; ++i) {
    const double h = std::min(dt, T - double(i) * dt);
    const auto k1 = rhs(z2, z3);
    const auto k2 = rhs(z2 + 0.5 * h * k1[0], z3 + 0.5 * h * k1[1]);
    const auto k3 = rhs(z2 + 0.5 * h * k2[0], z3 + 0.5 * h * k2[1]);
    const auto k4 = rhs(z2 + h * k3[0], z3 + h * k3[1]);
    z2 = std::max(0.0, z2 + h / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]));
    z3 = std::max(0.0, z3 + h / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]));
    out.push_back({i + 1 == steps ? t0 + T : t0 + double(i + 1) * dt, z2, z3});
  }
  return out;
}

std::optional<double> alignment_time(const Trajectory& traj, double eps) {
  const double bound = traj.params.theta / traj.params.a + eps;
  for (const auto& o : traj.observations)
    if (o.sup[0] < bound) return o.t;
  return std::nullopt;
}

DominanceReport dominance_check(const Trajectory& traj, const std::vector<OdeComparisonState>& ode, double eps) {
  DominanceReport rep;
  const auto ta = alignment_time(traj, eps);
  if (!ta || ode.empty()) {
    rep.inconclusive = true;
    return rep;
  }
  rep.t_align = *ta;
  std::size_t k = 0;
  for (const auto& o : traj.observations) {
    if (o.t < *ta || o.t < ode.front().t - 1e-12 || o.t > ode.back().t + 1e-9) continue;
    while (k + 1 < ode.size() && ode[k + 1].t < o.t) ++k;
    double z2 = ode[k].z2, z3 = ode[k].z3;
    if (k + 1 < ode.size()) {
      const auto& a = ode[k];
      const auto& b = ode[k + 1];
      const double w = std::clamp((o.t - a.t) / (b.t - a.t), 0.0, 1.0);
      z2 = a.z2 + w * (b.z2 - a.z2);
      z3 = a.z3 + w * (b.z3 - a.z3);
    }
    const double e2 = o.sup[1] - z2, e3 = o.sup[2] - z3;
    if (rep.checked == 0 && (e2 > 0.0 || e3 > 0.0)) rep.ordering_failure = true;
    rep.excess2 = std::max(rep.excess2, e2);
    rep.excess3 = std::max(rep.excess3, e3);
    ++rep.checked;
  }
  if (rep.checked == 0) rep.inconclusive = true;
  return rep;
}

DominanceReport comparison_witness(const Trajectory& traj, double eps, double dt) {
  const auto ta = alignment_time(traj, eps);
  if (!ta) {
    DominanceReport rep;
    rep.inconclusive = true;
    return rep;
  }
  const Observation* start = nullptr;
  for (const auto& o : traj.observations)
    if (o.t == *ta) start = &o;
  const double C = std::max(start->sup[1], start->sup[2]);
  const double T = traj.observations.back().t - *ta;
  const auto ode = ode_comparison(traj.params, eps, {C, C}, T, dt, *ta);
  return dominance_check(traj, ode, eps);
}

}  // namespace viralfb
