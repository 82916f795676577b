#include "viralfb/behavior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "viralfb/error.hpp"

namespace viralfb {

std::string to_string(Regime r) {
  switch (r) {
    case Regime::Extinction:
      return "Extinction";
    case Regime::PersistenceVerified:
      return "PersistenceVerified";
    case Regime::PersistenceUnverified:
      return "PersistenceUnverified";
    case Regime::Inconclusive:
      return "Inconclusive";
  }
  return "Inconclusive";
}

namespace {

const char* kNames[3] = {"u1", "u2", "u3"};

void quiescence(const Trajectory& traj, const ClassifyOptions& opt, ClassificationResult& res) {
  const auto& obs = traj.observations;
  const Observation& last = obs.back();
  double worst = 0.0;
  for (int c = 0; c < 3; ++c) {
    const double ref = last.sup[std::size_t(c)];
    if (!(ref > opt.extinction_tol)) continue;
    double lo = ref, hi = ref;
    for (const auto& o : obs) {
      if (o.t < 0.9 * last.t) continue;
      lo = std::min(lo, o.sup[std::size_t(c)]);
      hi = std::max(hi, o.sup[std::size_t(c)]);
    }
    worst = std::max(worst, (hi - lo) / ref);
  }
  res.quiescence_change = worst;
  res.quiescent = worst < opt.quiescence_tol;
}

}  // namespace

ClassificationResult classify(const ModelParams& p, const Trajectory& traj, const EquilibriumChain* chain,
                              const ClassifyOptions& opt) {
  p.validate();
  if (traj.observations.empty()) throw InputError("trajectory has no observations");
  if (!(opt.window > 0.0)) throw InputError("classification window must be positive");

  ClassificationResult res;
  res.r0 = basic_reproduction_number(p);
  res.persistence_condition = persistence_condition(p);
  res.t_final = traj.observations.back().t;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  res.lower_margin = {nan, nan, nan};
  res.upper_margin = {nan, nan, nan};
  quiescence(traj, opt, res);

  const Profile u = traj.final_state.physical();
  const Grid& g = u.grid();
  const int last_node = [&] {
    int j = 0;
    while (j + 1 < g.nodes() && g.x(j + 1) <= opt.window + 1e-12) ++j;
    return j;
  }();

  if (!(res.r0 > 1.0)) {
    const auto& fin = traj.observations.back().sup;
    res.evidence.push_back({"sup_u2", fin[1] <= opt.extinction_tol, fin[1], opt.extinction_tol});
    res.evidence.push_back({"sup_u3", fin[2] <= opt.extinction_tol, fin[2], opt.extinction_tol});
    double err = 0.0;
    for (int j = 0; j <= last_node; ++j) err = std::max(err, std::abs(u(0, j) - ubar1_closed_form(p, p.d1, g.x(j))));
    res.evidence.push_back({"u1_vs_closed_form", err <= opt.u1_tol, err, opt.u1_tol});
    const bool ok = std::all_of(res.evidence.begin(), res.evidence.end(), [](const Criterion& c) { return c.pass; });
    res.regime = ok ? Regime::Extinction : Regime::Inconclusive;
    return res;
  }

  if (!chain) throw InputError("an equilibrium chain is required when R0 > 1");
  const bool lower = res.persistence_condition && chain->complete();
  std::array<double, 3> up_m, lo_m;
  up_m.fill(std::numeric_limits<double>::infinity());
  lo_m.fill(std::numeric_limits<double>::infinity());
  for (int j = 0; j <= last_node; ++j) {
    const double x = g.x(j);
    const auto ub = chain->upper_at(x);
    const auto lb = chain->lower_at(x);
    for (int c = 0; c < 3; ++c) {
      const auto k = std::size_t(c);
      up_m[k] = std::min(up_m[k], ub[k] + opt.slack_rel * std::abs(ub[k]) + opt.slack_abs - u(c, j));
      if (lower) lo_m[k] = std::min(lo_m[k], u(c, j) - (lb[k] - opt.slack_rel * std::abs(lb[k]) - opt.slack_abs));
    }
  }
  bool ok = true;
  for (int c = 0; c < 3; ++c) {
    const auto k = std::size_t(c);
    res.upper_margin[k] = up_m[k];
    res.evidence.push_back({std::string("upper_") + kNames[c], up_m[k] >= 0.0, up_m[k], 0.0});
    ok = ok && up_m[k] >= 0.0;
  }
  if (lower) {
    for (int c = 0; c < 3; ++c) {
      const auto k = std::size_t(c);
      res.lower_margin[k] = lo_m[k];
      res.evidence.push_back({std::string("lower_") + kNames[c], lo_m[k] >= 0.0, lo_m[k], 0.0});
      ok = ok && lo_m[k] >= 0.0;
    }
    res.regime = ok ? Regime::PersistenceVerified : Regime::Inconclusive;
  } else {
    res.regime = ok ? Regime::PersistenceUnverified : Regime::Inconclusive;
  }
  return res;
}

}  // namespace viralfb
