#include "viralfb/equilibrium.hpp"

#include <algorithm>
#include <cmath>

#include "viralfb/error.hpp"

namespace viralfb {

namespace {

constexpr double kTrustedFraction = 0.8;

std::vector<double> plateau(const Profile& u) {
  const double l = u.grid().l;
  std::vector<double> out(std::size_t(u.comps()), 0.0);
  for (int c = 0; c < u.comps(); ++c) {
    double sum = 0.0;
    int count = 0;
    for (int j = 0; j < u.nodes(); ++j) {
      const double x = u.grid().x(j);
      if (x >= 0.8 * l && x <= 0.9 * l) {
        sum += u(c, j);
        ++count;
      }
    }
    out[std::size_t(c)] = sum / count;
  }
  return out;
}

std::vector<double> sampled(const std::function<double(double)>& f, const Grid& g) {
  std::vector<double> out(std::size_t(g.nodes()));
  for (int j = 0; j < g.nodes(); ++j) out[std::size_t(j)] = f(g.x(j));
  return out;
}

BvpSpec spec_at(const HalfLineProblem& pr, const Grid& g) {
  const std::size_t comps = pr.coupling == Coupling::Scalar ? 1 : pr.coupling == Coupling::Pair ? 2 : 3;
  std::vector<double> right(comps, 0.0);
  if (pr.right_data) {
    right = pr.right_data(g.l);
    if (right.size() != comps) throw InputError("right boundary data has wrong size");
  }
  switch (pr.coupling) {
    case Coupling::Scalar:
      return BvpSpec::scalar(pr.params, g, pr.scalar_diffusivity, right.at(0),
                             pr.virus ? sampled(pr.virus, g) : std::vector<double>{});
    case Coupling::Pair:
      return BvpSpec::pair(pr.params, g, sampled(pr.rho, g), {right.at(0), right.at(1)});
    case Coupling::Triple:
      return BvpSpec::triple(pr.params, g, {right.at(0), right.at(1), right.at(2)});
  }
  throw InputError("unknown coupling");
}

HalfLineProblem problem(std::string label, Coupling coupling, const ModelParams& p) {
  HalfLineProblem pr;
  pr.label = std::move(label);
  pr.coupling = coupling;
  pr.params = p;
  pr.scalar_diffusivity = p.d1;
  return pr;
}

double relative_change(double diff, double scale) { return scale > 0.0 ? diff / scale : diff; }

}  // namespace

double HalfLineSolution::value(int comp, double x) const {
  if (x <= kTrustedFraction * converged_l) return full.interpolate(comp, x);
  return farfield.at(std::size_t(comp));
}

std::vector<double> HalfLineSolution::sample(int comp, const Grid& grid) const {
  std::vector<double> out(std::size_t(grid.nodes()));
  for (int j = 0; j < grid.nodes(); ++j) out[std::size_t(j)] = value(comp, grid.x(j));
  return out;
}

double default_l0(const ModelParams& p, double window) {
  const double dmax = std::max({p.d1, p.d2, p.d3});
  const double rmin = std::min({p.a, p.c, p.q});
  const double raw = std::max(40.0 * std::sqrt(dmax / rmin), 4.0 * window);
  return std::ceil(raw / window - 1e-12) * window;
}

HalfLineSolution continue_to_halfline(const HalfLineProblem& pr, const ContinuationOptions& opt) {
  pr.params.validate();
  if (!(opt.window > 0.0) || opt.window_cells < 4) throw InputError("continuation window must be positive with at least 4 cells");
  if (!(opt.rtol > 0.0)) throw InputError("continuation rtol must be positive");
  if (pr.coupling == Coupling::Pair) {
    if (!pr.rho) throw InputError("pair problem needs a coefficient");
    const ModelParams& p = pr.params;
    if (!(p.b * p.k * pr.rho_limit > p.c * p.q)) {
      ThresholdError e("pair problem below threshold: b*k*beta <= c*q");
      e.add_field("beta", pr.rho_limit);
      e.add_field("ratio", p.b * p.k * pr.rho_limit / (p.c * p.q));
      throw e;
    }
  }
  const double dx = opt.window / opt.window_cells;
  const double l0 = opt.l0 > 0.0 ? std::ceil(opt.l0 / opt.window - 1e-12) * opt.window
                                 : default_l0(pr.params, opt.window);
  const double l_max = opt.l_max > 0.0 ? opt.l_max : 64.0 * l0;

  HalfLineSolution prev;
  bool have_prev = false;
  for (double l = l0; l <= l_max * (1 + 1e-12); l *= 2.0) {
    const int cells = int(std::lround(l / dx));
    const Grid g = Grid::make(l, cells - 1);
    const BvpSpec spec = spec_at(pr, g);
    Profile guess = default_initial_guess(spec);
    if (have_prev || pr.initial_guess) {
      for (int c = 0; c < spec.comps(); ++c)
        for (int j = 1; j + 1 < g.nodes(); ++j)
          guess(c, j) = have_prev ? prev.value(c, g.x(j)) : pr.initial_guess(c, g.x(j));
    }
    BvpSolution sol = solve_newton(spec, guess, opt.newton);

    HalfLineSolution cur;
    cur.label = pr.label;
    cur.window = opt.window;
    cur.profile = sol.profile.restrict_to(opt.window);
    cur.farfield = plateau(sol.profile);
    cur.converged_l = l;
    cur.full = std::move(sol.profile);

    if (have_prev) {
      double scale = 0.0;
      for (int c = 0; c < cur.comps(); ++c) scale = std::max(scale, cur.profile.max(c));
      const double window_change = relative_change(cur.profile.max_abs_diff(prev.profile), scale);
      double ff_diff = 0.0;
      for (std::size_t c = 0; c < cur.farfield.size(); ++c)
        ff_diff = std::max(ff_diff, std::abs(cur.farfield[c] - prev.farfield[c]));
      double ff_scale = 0.0;
      for (double v : cur.farfield) ff_scale = std::max(ff_scale, std::abs(v));
      const double ff_change = relative_change(ff_diff, ff_scale);
      if (window_change <= opt.rtol && ff_change <= opt.rtol) return cur;
    }
    prev = std::move(cur);
    have_prev = true;
  }
  ContinuationError e("continuation did not settle before l_max");
  e.add_field("l_max", l_max);
  throw e;
}

std::array<double, 3> EquilibriumChain::upper_at(double x) const {
  return {ol_u1.value(0, x), ol_u23.value(0, x), ol_u23.value(1, x)};
}

std::array<double, 3> EquilibriumChain::lower_at(double x) const {
  if (!ud_u23) return {ud_u1.value(0, x), 0.0, 0.0};
  return {ud_u1.value(0, x), ud_u23->value(0, x), ud_u23->value(1, x)};
}

EquilibriumChain build_chain(const ModelParams& p, const ContinuationOptions& opt) {
  p.validate();
  EquilibriumChain chain;
  chain.r0 = basic_reproduction_number(p);
  if (!(chain.r0 > 1.0)) {
    ThresholdError e("R0 <= 1: no positive equilibrium chain");
    e.add_field("R0", chain.r0);
    throw e;
  }
  chain.persistence_condition = persistence_condition(p);

  HalfLineProblem ol1 = problem("ol_u1", Coupling::Scalar, p);
  chain.ol_u1 = continue_to_halfline(ol1, opt);

  HalfLineProblem ol23 = problem("ol_u23", Coupling::Pair, p);
  ol23.rho = [&](double x) { return chain.ol_u1.value(0, x); };
  ol23.rho_limit = p.theta / p.a;
  chain.ol_u23 = continue_to_halfline(ol23, opt);

  HalfLineProblem ud1 = problem("ud_u1", Coupling::Scalar, p);
  ud1.virus = [&](double x) { return chain.ol_u23.value(1, x); };
  chain.ud_u1 = continue_to_halfline(ud1, opt);

  if (chain.persistence_condition) {
    HalfLineProblem ud23 = problem("ud_u23", Coupling::Pair, p);
    ud23.rho = [&](double x) { return chain.ud_u1.value(0, x); };
    ud23.rho_limit = udbar1_farfield(p);
    chain.ud_u23 = continue_to_halfline(ud23, opt);
  }
  return chain;
}

namespace {

HalfLineSolution full_variant(const ModelParams& p, const ContinuationOptions& opt, RightBoundary bc,
                              const EquilibriumChain* chain) {
  HalfLineProblem pr = problem(bc == RightBoundary::Zero ? "full(zero)" : "full(chain)", Coupling::Triple, p);
  if (chain) {
    pr.initial_guess = [chain](int c, double x) { return chain->upper_at(x)[std::size_t(c)]; };
    if (bc == RightBoundary::Chain) {
      pr.right_data = [chain](double l) {
        const auto v = chain->upper_at(l);
        return std::vector<double>(v.begin(), v.end());
      };
    }
  }
  return continue_to_halfline(pr, opt);
}

}  // namespace

HalfLineSolution solve_full_equilibrium(const ModelParams& p, const ContinuationOptions& opt, RightBoundary bc,
                                        const EquilibriumChain* chain) {
  p.validate();
  const bool positive = basic_reproduction_number(p) > 1.0;
  std::optional<EquilibriumChain> own;
  if (positive && !chain) {
    own = build_chain(p, opt);
    chain = &*own;
  }
  if (!positive && bc == RightBoundary::Chain) {
    ThresholdError e("R0 <= 1: chain boundary data unavailable");
    e.add_field("R0", basic_reproduction_number(p));
    throw e;
  }
  try {
    return full_variant(p, opt, bc, chain);
  } catch (const Error& first) {
    if (first.is_input_error() || !positive) throw;
    const RightBoundary other = bc == RightBoundary::Zero ? RightBoundary::Chain : RightBoundary::Zero;
    try {
      return full_variant(p, opt, other, chain);
    } catch (const Error& second) {
      if (second.is_input_error()) throw;
      IterationError e(std::string("full equilibrium failed for both right boundary variants: ") + first.what() +
                           "; " + second.what(),
                       0.0, 0);
      throw e;
    }
  }
}

}  // namespace viralfb
