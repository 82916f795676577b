#include "viralfb/bvp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "viralfb/error.hpp"
#include "viralfb/linalg.hpp"

namespace viralfb {

namespace {

constexpr double kNegativeTolerance = 1e-12;
constexpr double kOrderSlack = 1e-10;

double pos(double v) { return v > 0.0 ? v : 0.0; }

void require_shape(const BvpSpec& spec, const Profile& u, const char* who) {
  if (u.comps() != spec.comps() || u.nodes() != spec.grid.nodes()) {
    throw PreconditionError(std::string(who) + ": profile does not match the problem grid");
  }
}

// Local kinetics and their Jacobian at node j. `u` holds the M unknowns.
template <int M>
void local_kinetics(const BvpSpec& spec, int j, const double* u, double* f, double* jac) {
  const ModelParams& p = spec.params;
  if constexpr (M == 1) {
    const double w = spec.virus.empty() ? 0.0 : pos(spec.virus[j]);
    const double loss = p.a + p.b * w / (1.0 + w);
    f[0] = p.theta - loss * u[0];
    jac[0] = -loss;
  } else if constexpr (M == 2) {
    const double rho = spec.rho[j];
    const double v = u[0];
    const double w = pos(u[1]);
    const double inv = 1.0 / (1.0 + w);
    f[0] = p.b * rho * w * inv - p.c * v;
    f[1] = p.k * v * inv - p.q * u[1];
    // row-major: jac[r*M + c]
    jac[0] = -p.c;
    jac[1] = p.b * rho * inv * inv;
    jac[2] = p.k * inv;
    jac[3] = (u[1] > 0.0 ? -p.k * v * inv * inv : 0.0) - p.q;
  } else {
    const double s = u[0];
    const double v = u[1];
    const double w = pos(u[2]);
    const double inv = 1.0 / (1.0 + w);
    const double frac = w * inv;
    const double dfrac = u[2] > 0.0 ? inv * inv : 1.0;
    const double inf = p.b * s * frac;
    f[0] = p.theta - p.a * s - inf;
    f[1] = inf - p.c * v;
    f[2] = p.k * v * inv - p.q * u[2];
    jac[0] = -p.a - p.b * frac;
    jac[1] = 0.0;
    jac[2] = -p.b * s * dfrac;
    jac[3] = p.b * frac;
    jac[4] = -p.c;
    jac[5] = p.b * s * dfrac;
    jac[6] = 0.0;
    jac[7] = p.k * inv;
    jac[8] = (u[2] > 0.0 ? -p.k * v * inv * inv : 0.0) - p.q;
  }
}

template <int M>
double assembled_residual(const BvpSpec& spec, const Profile& u, std::vector<double>* out = nullptr) {
  const int n = spec.grid.n;
  const double inv_dx2 = 1.0 / (spec.grid.dx() * spec.grid.dx());
  double r = 0.0;
  double local[M], f[M], jac[M * M];
  if (out) out->assign(std::size_t(n) * M, 0.0);
  for (int j = 1; j <= n; ++j) {
    for (int c = 0; c < M; ++c) local[c] = u(c, j);
    local_kinetics<M>(spec, j, local, f, jac);
    for (int c = 0; c < M; ++c) {
      const double lap = (u(c, j - 1) - 2.0 * u(c, j) + u(c, j + 1)) * inv_dx2;
      const double val = spec.diffusivity[c] * lap + f[c];
      r = std::max(r, std::abs(val));
      if (out) (*out)[std::size_t(j - 1) * M + c] = val;
    }
  }
  return r;
}

template <int M>
std::vector<double> newton_direction(const BvpSpec& spec, const Profile& u) {
  using System = linalg::BlockTridiagonal<M>;
  const int n = spec.grid.n;
  const double inv_dx2 = 1.0 / (spec.grid.dx() * spec.grid.dx());
  System sys{std::size_t(n)};
  double local[M], f[M], jac[M * M];
  for (int j = 1; j <= n; ++j) {
    const std::size_t row = std::size_t(j - 1);
    for (int c = 0; c < M; ++c) local[c] = u(c, j);
    local_kinetics<M>(spec, j, local, f, jac);
    for (int r = 0; r < M; ++r) {
      const double dd = spec.diffusivity[r] * inv_dx2;
      for (int c = 0; c < M; ++c) sys.diag[row](r, c) = jac[r * M + c];
      sys.diag[row](r, r) -= 2.0 * dd;
      if (j > 1) sys.lower[row](r, r) = dd;
      if (j < n) sys.upper[row](r, r) = dd;
      const double lap = (u(r, j - 1) - 2.0 * u(r, j) + u(r, j + 1)) * inv_dx2;
      sys.rhs[row](r) = -(spec.diffusivity[r] * lap + f[r]);
    }
  }
  const auto sol = sys.solve();
  std::vector<double> delta(std::size_t(n) * M);
  for (int j = 0; j < n; ++j)
    for (int c = 0; c < M; ++c) delta[std::size_t(j) * M + c] = sol[std::size_t(j)](c);
  return delta;
}

struct NewtonOutcome {
  Profile profile;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

template <int M>
NewtonOutcome newton_loop(const BvpSpec& spec, Profile u, const NewtonOptions& opt) {
  NewtonOutcome out;
  double res = assembled_residual<M>(spec, u);
  int it = 0;
  for (; it < opt.max_iter && res > opt.tol; ++it) {
    const auto delta = newton_direction<M>(spec, u);
    double lambda = 1.0;
    bool accepted = false;
    for (int h = 0; h <= opt.max_halvings; ++h, lambda *= 0.5) {
      Profile trial = u;
      for (int j = 1; j <= spec.grid.n; ++j)
        for (int c = 0; c < M; ++c) trial(c, j) += lambda * delta[std::size_t(j - 1) * M + c];
      const double r = assembled_residual<M>(spec, trial);
      if (r < res) {
        u = std::move(trial);
        res = r;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  out.converged = res <= opt.tol;
  out.residual = res;
  out.iterations = it;
  out.profile = std::move(u);
  return out;
}

void check_boundary_data(const BvpSpec& spec, const Profile& u) {
  const int last = spec.grid.nodes() - 1;
  for (int c = 0; c < spec.comps(); ++c) {
    if (std::abs(u(c, 0)) > 1e-12 || std::abs(u(c, last) - spec.right[c]) > 1e-12 * std::max(1.0, spec.right[c])) {
      throw PreconditionError("initial profile does not satisfy the boundary data", {{"comp", double(c)}});
    }
  }
}

// Solves (-d D2 + m) x = rhs on the interior with x(0) = 0, x(l) = right.
std::vector<double> shifted_dirichlet_solve(const Grid& g, double d, std::span<const double> m,
                                            std::span<const double> rhs, double right) {
  const int n = g.n;
  const double dd = d / (g.dx() * g.dx());
  std::vector<double> lo(n, -dd), di(n), up(n, -dd), r(n);
  for (int i = 0; i < n; ++i) {
    di[i] = 2.0 * dd + m[i + 1];
    r[i] = rhs[i + 1];
  }
  r[n - 1] += dd * right;
  auto sol = linalg::solve_tridiagonal(lo, di, up, r);
  std::vector<double> x(g.nodes(), 0.0);
  for (int i = 0; i < n; ++i) x[i + 1] = sol[i];
  x[n + 1] = right;
  return x;
}

}  // namespace

void BvpSpec::validate() const {
  params.validate();
  const int m = comps();
  if (int(diffusivity.size()) != m || int(right.size()) != m) {
    throw PreconditionError("boundary value problem: need one diffusivity and one boundary value per component");
  }
  for (int c = 0; c < m; ++c) {
    if (!(diffusivity[c] > 0.0)) throw PreconditionError("boundary value problem: diffusivity must be positive");
    if (!(right[c] >= 0.0)) throw PreconditionError("boundary value problem: boundary data must be nonnegative");
  }
  const auto nodes = std::size_t(grid.nodes());
  if (coupling == Coupling::Pair) {
    if (rho.size() != nodes) throw PreconditionError("boundary value problem: rho must be sampled on the grid");
    for (double v : rho)
      if (!(v >= 0.0)) throw PreconditionError("boundary value problem: rho must be nonnegative");
  }
  if (coupling == Coupling::Scalar && !virus.empty()) {
    if (virus.size() != nodes) throw PreconditionError("boundary value problem: virus coefficient must be sampled on the grid");
    for (double v : virus)
      if (!(v >= 0.0)) throw PreconditionError("boundary value problem: virus coefficient must be nonnegative");
  }
}

BvpSpec BvpSpec::scalar(const ModelParams& p, Grid g, double d, double right, std::vector<double> virus) {
  BvpSpec s;
  s.grid = g;
  s.coupling = Coupling::Scalar;
  s.params = p;
  s.diffusivity = {d};
  s.right = {right};
  s.virus = std::move(virus);
  s.validate();
  return s;
}

BvpSpec BvpSpec::pair(const ModelParams& p, Grid g, std::vector<double> rho, std::array<double, 2> right) {
  BvpSpec s;
  s.grid = g;
  s.coupling = Coupling::Pair;
  s.params = p;
  s.diffusivity = {p.d2, p.d3};
  s.right = {right[0], right[1]};
  s.rho = std::move(rho);
  s.validate();
  return s;
}

BvpSpec BvpSpec::triple(const ModelParams& p, Grid g, std::array<double, 3> right) {
  BvpSpec s;
  s.grid = g;
  s.coupling = Coupling::Triple;
  s.params = p;
  s.diffusivity = {p.d1, p.d2, p.d3};
  s.right = {right[0], right[1], right[2]};
  s.validate();
  return s;
}

std::vector<double> upper_caps(const BvpSpec& spec) {
  const ModelParams& p = spec.params;
  std::vector<double> caps;
  switch (spec.coupling) {
    case Coupling::Scalar:
      caps = {p.theta / p.a};
      break;
    case Coupling::Pair: {
      const double beta_m = *std::max_element(spec.rho.begin(), spec.rho.end());
      caps = {p.b * beta_m / p.c, p.b * p.k * beta_m / (p.c * p.q)};
      break;
    }
    case Coupling::Triple: {
      const double beta_m = p.theta / p.a;
      caps = {beta_m, p.b * beta_m / p.c, p.b * p.k * beta_m / (p.c * p.q)};
      break;
    }
  }
  for (std::size_t c = 0; c < caps.size(); ++c) caps[c] = std::max(caps[c], spec.right[c]);
  return caps;
}

Profile boundary_profile(const BvpSpec& spec, const std::vector<double>& interior) {
  Profile u(spec.grid, spec.comps());
  const int last = spec.grid.nodes() - 1;
  for (int c = 0; c < spec.comps(); ++c) {
    for (int j = 1; j < last; ++j) u(c, j) = interior[c];
    u(c, 0) = 0.0;
    u(c, last) = spec.right[c];
  }
  return u;
}

Profile default_initial_guess(const BvpSpec& spec) { return boundary_profile(spec, upper_caps(spec)); }

double pde_residual(const BvpSpec& spec, const Profile& u) {
  require_shape(spec, u, "pde_residual");
  const ModelParams& p = spec.params;
  const double inv_dx2 = 1.0 / (spec.grid.dx() * spec.grid.dx());
  double r = 0.0;
  for (int j = 1; j <= spec.grid.n; ++j) {
    double f[3] = {0, 0, 0};
    switch (spec.coupling) {
      case Coupling::Scalar: {
        const double w = spec.virus.empty() ? 0.0 : spec.virus[j];
        // f1 is linear in u1; evaluate at the clipped value and extend linearly.
        const double s = pos(u(0, j));
        const Rates rates = reaction(p, {s, 0.0, w});
        f[0] = rates.f1 - (p.a + p.b * w / (1.0 + w)) * (u(0, j) - s);
        break;
      }
      case Coupling::Pair: {
        const Rates rates = reaction(p, {0.0, pos(u(0, j)), pos(u(1, j))}, spec.rho[j]);
        f[0] = rates.f2 - p.c * (u(0, j) - pos(u(0, j)));
        f[1] = rates.f3 - p.q * (u(1, j) - pos(u(1, j))) + p.k * (u(0, j) - pos(u(0, j))) / (1.0 + pos(u(1, j)));
        break;
      }
      case Coupling::Triple: {
        const double s = pos(u(0, j)), v = pos(u(1, j)), w = pos(u(2, j));
        const Rates rates = reaction(p, {s, v, w});
        const double frac = w / (1.0 + w);
        const double ds = u(0, j) - s, dv = u(1, j) - v, dw = u(2, j) - w;
        f[0] = rates.f1 - (p.a + p.b * frac) * ds;
        f[1] = rates.f2 + p.b * frac * ds - p.c * dv;
        f[2] = rates.f3 + p.k * dv / (1.0 + w) - p.q * dw;
        break;
      }
    }
    for (int c = 0; c < spec.comps(); ++c) {
      const double lap = (u(c, j - 1) - 2.0 * u(c, j) + u(c, j + 1)) * inv_dx2;
      r = std::max(r, std::abs(spec.diffusivity[c] * lap + f[c]));
    }
  }
  return r;
}

BvpSolution solve_newton(const BvpSpec& spec, const NewtonOptions& options) {
  return solve_newton(spec, default_initial_guess(spec), options);
}

BvpSolution solve_newton(const BvpSpec& spec, const Profile& initial, const NewtonOptions& options) {
  spec.validate();
  require_shape(spec, initial, "solve_newton");
  check_boundary_data(spec, initial);
  if (!(options.tol > 0.0)) throw PreconditionError("solve_newton: tol must be positive");

  auto run = [&](const Profile& start) {
    switch (spec.coupling) {
      case Coupling::Scalar: return newton_loop<1>(spec, start, options);
      case Coupling::Pair: return newton_loop<2>(spec, start, options);
      default: return newton_loop<3>(spec, start, options);
    }
  };

  NewtonOutcome out = run(initial);
  int total = out.iterations;
  if (!out.converged && options.monotone_fallback) {
    Profile lower(spec.grid, spec.comps());
    const int last = spec.grid.nodes() - 1;
    for (int c = 0; c < spec.comps(); ++c) lower(c, last) = spec.right[c];
    const Bracket br = monotone_bracket(spec, lower, default_initial_guess(spec), options.fallback_sweeps);
    out = run(br.upper);
    total += out.iterations;
  }
  if (!out.converged) {
    throw IterationError("solve_newton: no convergence", out.residual, total);
  }
  const double lowest = out.profile.min();
  if (lowest < -kNegativeTolerance) {
    throw PositivityError("solve_newton: converged to a profile with negative values", lowest);
  }
  return BvpSolution{std::move(out.profile), out.residual, total};
}

double default_zeta(const BvpSpec& spec) {
  const ModelParams& p = spec.params;
  const double beta = spec.rho.empty() ? 0.0 : *std::max_element(spec.rho.begin(), spec.rho.end());
  return 2.0 * std::max({1.0, p.b * beta / p.c - 1.0, p.k / p.q - 1.0});
}

BvpSolution solve_alternating(const BvpSpec& spec_in, std::optional<double> zeta, const AlternatingOptions& options) {
  if (spec_in.coupling != Coupling::Pair) throw PreconditionError("solve_alternating: needs a pair spec");
  spec_in.validate();
  BvpSpec spec = spec_in;
  const ModelParams& p = spec.params;
  const Grid& g = spec.grid;
  const double beta = *std::max_element(spec.rho.begin(), spec.rho.end());

  if (zeta) {
    const double z = *zeta;
    if (!(p.b * beta / (p.c * (1.0 + z)) < 1.0) || !(p.k / (p.q * (1.0 + z)) < 1.0)) {
      throw PreconditionError("solve_alternating: zeta too small", {{"zeta", z}});
    }
    for (std::size_t j = 1; j < spec.rho.size(); ++j) {
      if (spec.rho[j] < spec.rho[j - 1] - 1e-14) {
        throw PreconditionError("solve_alternating: rho must be nondecreasing when zeta is given");
      }
    }
    spec.right = {z, z};
  }

  const int nodes = g.nodes();
  const int last = nodes - 1;
  const std::vector<double> caps = upper_caps(spec);
  std::vector<double> w(nodes, zeta ? *zeta : caps[1]);
  w[0] = 0.0;
  w[last] = spec.right[1];

  std::vector<double> cshift(nodes, p.c), src(nodes, 0.0);
  Profile pair(g, 2);
  double res = std::numeric_limits<double>::infinity();
  double best = res;
  int stalled = 0;
  for (int it = 1; it <= options.max_iter; ++it) {
    for (int j = 0; j < nodes; ++j) src[j] = infection(p.b, spec.rho[j], pos(w[j]));
    const auto v = shifted_dirichlet_solve(g, p.d2, cshift, src, spec.right[0]);

    // Scalar Newton for -d3 W'' + q W = k v / (1 + W), warm-started at w.
    std::vector<double> wn = w;
    wn[0] = 0.0;
    wn[last] = spec.right[1];
    const double dd = p.d3 / (g.dx() * g.dx());
    for (int inner = 0; inner < 100; ++inner) {
      std::vector<double> lo(g.n, -dd), di(g.n), up(g.n, -dd), rhs(g.n);
      double gmax = 0.0;
      for (int i = 0; i < g.n; ++i) {
        const int j = i + 1;
        const double ww = pos(wn[j]);
        const double inv = 1.0 / (1.0 + ww);
        const double gval = -dd * (wn[j - 1] - 2.0 * wn[j] + wn[j + 1]) + p.q * wn[j] - p.k * v[j] * inv;
        di[i] = 2.0 * dd + p.q + (wn[j] > 0.0 ? p.k * v[j] * inv * inv : 0.0);
        rhs[i] = -gval;
        gmax = std::max(gmax, std::abs(gval));
      }
      if (gmax <= 1e-3 * options.tol) break;
      const auto dw = linalg::solve_tridiagonal(lo, di, up, rhs);
      for (int i = 0; i < g.n; ++i) wn[i + 1] += dw[i];
    }
    w = std::move(wn);

    for (int j = 0; j < nodes; ++j) {
      pair(0, j) = v[j];
      pair(1, j) = w[j];
    }
    if (options.on_iterate) options.on_iterate(pair);
    res = pde_residual(spec, pair);
    if (res <= options.tol) {
      if (pair.min() < -kNegativeTolerance) throw PositivityError("solve_alternating: negative values", pair.min());
      return BvpSolution{pair, res, it};
    }
    if (res < 0.999 * best) {
      best = res;
      stalled = 0;
    } else if (++stalled >= 25) {
      throw IterationError("solve_alternating: stagnated", res, it);
    }
  }
  throw IterationError("solve_alternating: no convergence", res, options.max_iter);
}

Bracket monotone_bracket(const BvpSpec& spec, const Profile& lower_in, const Profile& upper_in, int sweeps) {
  spec.validate();
  require_shape(spec, lower_in, "monotone_bracket");
  require_shape(spec, upper_in, "monotone_bracket");
  const int m = spec.comps();
  const int nodes = spec.grid.nodes();

  auto width = [&](const Profile& lo, const Profile& up) {
    double wmax = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < m; ++c)
      for (int j = 0; j < nodes; ++j) wmax = std::max(wmax, up(c, j) - lo(c, j));
    return wmax;
  };
  auto min_gap = [&](const Profile& lo, const Profile& up) {
    double g = std::numeric_limits<double>::infinity();
    for (int c = 0; c < m; ++c)
      for (int j = 0; j < nodes; ++j) g = std::min(g, up(c, j) - lo(c, j));
    return g;
  };
  if (min_gap(lower_in, upper_in) < -kOrderSlack) {
    throw PreconditionError("monotone_bracket: lower exceeds upper on entry", {{"gap", min_gap(lower_in, upper_in)}});
  }

  const ModelParams& p = spec.params;
  Bracket br{lower_in, upper_in, {width(lower_in, upper_in)}};

  for (int s = 0; s < sweeps; ++s) {
    const Profile& lo = br.lower;
    const Profile& up = br.upper;
    Profile new_lo(spec.grid, m), new_up(spec.grid, m);

    // Shift constants making f_i + M_i U_i nondecreasing in U_i on the bracket.
    std::vector<double> shift(m);
    switch (spec.coupling) {
      case Coupling::Scalar: {
        double frac = 0.0;
        for (double w : spec.virus) frac = std::max(frac, pos(w) / (1.0 + pos(w)));
        shift[0] = p.a + p.b * frac;
        break;
      }
      case Coupling::Pair:
        shift = {p.c, p.q + p.k * std::max(0.0, up.max(0))};
        break;
      case Coupling::Triple:
        shift = {p.a + p.b, p.c, p.q + p.k * std::max(0.0, up.max(1))};
        break;
    }

    for (int c = 0; c < m; ++c) {
      std::vector<double> rhs_up(nodes, 0.0), rhs_lo(nodes, 0.0), mvec(nodes, shift[c]);
      for (int j = 1; j < nodes - 1; ++j) {
        double fu = 0.0, fl = 0.0;
        switch (spec.coupling) {
          case Coupling::Scalar: {
            const double w = spec.virus.empty() ? 0.0 : pos(spec.virus[j]);
            const double loss = p.a + p.b * w / (1.0 + w);
            fu = p.theta - loss * up(0, j);
            fl = p.theta - loss * lo(0, j);
            break;
          }
          case Coupling::Pair: {
            const double rho = spec.rho[j];
            if (c == 0) {
              fu = infection(p.b, rho, pos(up(1, j))) - p.c * up(0, j);
              fl = infection(p.b, rho, pos(lo(1, j))) - p.c * lo(0, j);
            } else {
              fu = virion_release(p.k, up(0, j), pos(up(1, j))) - p.q * up(1, j);
              fl = virion_release(p.k, lo(0, j), pos(lo(1, j))) - p.q * lo(1, j);
            }
            break;
          }
          case Coupling::Triple: {
            if (c == 0) {
              // f1 decreases in U3: the upper branch pairs with the lower U3.
              fu = p.theta - p.a * up(0, j) - infection(p.b, up(0, j), pos(lo(2, j)));
              fl = p.theta - p.a * lo(0, j) - infection(p.b, lo(0, j), pos(up(2, j)));
            } else if (c == 1) {
              fu = infection(p.b, pos(up(0, j)), pos(up(2, j))) - p.c * up(1, j);
              fl = infection(p.b, pos(lo(0, j)), pos(lo(2, j))) - p.c * lo(1, j);
            } else {
              fu = virion_release(p.k, up(1, j), pos(up(2, j))) - p.q * up(2, j);
              fl = virion_release(p.k, lo(1, j), pos(lo(2, j))) - p.q * lo(2, j);
            }
            break;
          }
        }
        rhs_up[j] = shift[c] * up(c, j) + fu;
        rhs_lo[j] = shift[c] * lo(c, j) + fl;
      }
      const auto xu = shifted_dirichlet_solve(spec.grid, spec.diffusivity[c], mvec, rhs_up, spec.right[c]);
      const auto xl = shifted_dirichlet_solve(spec.grid, spec.diffusivity[c], mvec, rhs_lo, spec.right[c]);
      for (int j = 0; j < nodes; ++j) {
        new_up(c, j) = xu[j];
        new_lo(c, j) = xl[j];
      }
    }
    const double gap = min_gap(new_lo, new_up);
    if (gap < -kOrderSlack) {
      throw ConsistencyError("monotone_bracket: iterates lost their order", {{"sweep", double(s)}, {"gap", gap}});
    }
    br.lower = std::move(new_lo);
    br.upper = std::move(new_up);
    br.widths.push_back(width(br.lower, br.upper));
  }
  return br;
}

double boundary_flux(const Profile& u, Side side, int comp) {
  const double dx = u.grid().dx();
  if (side == Side::Left) return (-3.0 * u(comp, 0) + 4.0 * u(comp, 1) - u(comp, 2)) / (2.0 * dx);
  const int N = u.nodes() - 1;
  return (3.0 * u(comp, N) - 4.0 * u(comp, N - 1) + u(comp, N - 2)) / (2.0 * dx);
}

}  // namespace viralfb
