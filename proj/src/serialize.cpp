#include "viralfb/serialize.hpp"

#include <cmath>
#include <fstream>

#include <fmt/format.h>

namespace viralfb {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& file) {
  std::ofstream os(file, std::ios::binary);
  if (!os) throw InputError("cannot write " + file.string());
  return os;
}

json array3(const std::array<double, 3>& v) { return json::array({v[0], v[1], v[2]}); }

double rel_err(double v, double ref) { return std::abs(v - ref) / std::max(std::abs(ref), 1e-300); }

bool nondecreasing(const Profile& u, int c) {
  for (int j = 1; j < u.nodes(); ++j)
    if (u(c, j) < u(c, j - 1)) return false;
  return true;
}

}  // namespace

json to_json(const ModelParams& p) {
  return {{"theta", p.theta}, {"a", p.a},   {"b", p.b},   {"c", p.c},     {"k", p.k},
          {"q", p.q},         {"d1", p.d1}, {"d2", p.d2}, {"d3", p.d3},   {"mu1", p.mu1},
          {"mu2", p.mu2},     {"mu3", p.mu3}, {"h0", p.h0}};
}

json to_json(const ClassificationResult& r) {
  json ev = json::array();
  for (const auto& c : r.evidence)
    ev.push_back({{"name", c.name}, {"pass", c.pass}, {"measured", c.measured}, {"bound", c.bound}});
  return {{"R0", r.r0},
          {"persistence_condition", r.persistence_condition},
          {"regime", to_string(r.regime)},
          {"t_final", r.t_final},
          {"quiescent", r.quiescent},
          {"quiescence_change", r.quiescence_change},
          {"lower_margin", array3(r.lower_margin)},
          {"upper_margin", array3(r.upper_margin)},
          {"evidence", ev}};
}

json to_json(const RunStats& s) {
  return {{"steps", s.steps},
          {"min_h_prime", s.min_h_prime},
          {"nonpositive_h_prime", s.nonpositive_h_prime},
          {"min_before_clip", s.min_before_clip},
          {"clipped_mass", s.clipped_mass},
          {"max_step_clip", s.max_step_clip},
          {"caps", array3(s.caps)},
          {"max_sup", array3(s.max_sup)}};
}

json error_json(const std::string& category, const Error& e) {
  json fields = json::object();
  for (const auto& [name, value] : e.fields()) fields[name] = value;
  return {{"error", category}, {"kind", e.kind()}, {"message", e.what()}, {"fields", fields}};
}

json chain_summary(const ModelParams& p, const EquilibriumChain& chain, double rtol, const HalfLineSolution* full) {
  const double r0 = chain.r0;
  const auto ol23 = farfield_limits(p, p.theta / p.a);
  const double ud1 = udbar1_farfield(p);

  json farfields = {{"ol_u1", chain.ol_u1.farfield}, {"ol_u23", chain.ol_u23.farfield}, {"ud_u1", chain.ud_u1.farfield}};
  json closed = {{"ol_u1", {p.theta / p.a}}, {"ol_u23", {ol23[0], ol23[1]}}, {"ud_u1", {ud1}}};
  json errors = {{"ol_u1", rel_err(chain.ol_u1.farfield[0], p.theta / p.a)},
                 {"ol_u23", std::max(rel_err(chain.ol_u23.farfield[0], ol23[0]), rel_err(chain.ol_u23.farfield[1], ol23[1]))},
                 {"ud_u1", rel_err(chain.ud_u1.farfield[0], ud1)}};
  json lengths = {{"ol_u1", chain.ol_u1.converged_l}, {"ol_u23", chain.ol_u23.converged_l},
                  {"ud_u1", chain.ud_u1.converged_l}};
  if (chain.ud_u23) {
    const auto ud23 = farfield_limits(p, ud1);
    farfields["ud_u23"] = chain.ud_u23->farfield;
    closed["ud_u23"] = {ud23[0], ud23[1]};
    errors["ud_u23"] = std::max(rel_err(chain.ud_u23->farfield[0], ud23[0]), rel_err(chain.ud_u23->farfield[1], ud23[1]));
    lengths["ud_u23"] = chain.ud_u23->converged_l;
  }
  double worst = 0.0;
  for (const auto& [name, e] : errors.items()) worst = std::max(worst, e.get<double>());

  // Both nodewise orderings of the bracketing links on the window.
  bool ud_le_ol = true, ol_le_ud = true;
  const Profile& grid_src = chain.ol_u1.profile;
  for (int j = 0; j < grid_src.nodes(); ++j) {
    const double x = grid_src.grid().x(j);
    const auto up = chain.upper_at(x);
    const auto lo = chain.lower_at(x);
    for (int c = 0; c < 3; ++c) {
      if (c > 0 && !chain.ud_u23) continue;
      const auto k = std::size_t(c);
      if (lo[k] > up[k] + 1e-12) ud_le_ol = false;
      if (up[k] > lo[k] + 1e-12) ol_le_ud = false;
    }
  }

  json out = {{"R0", r0},
              {"persistence_condition", chain.persistence_condition},
              {"complete", chain.complete()},
              {"window", chain.ol_u1.window},
              {"rtol", rtol},
              {"farfields", farfields},
              {"closed_form_farfields", closed},
              {"farfield_rel_error", errors},
              {"farfields_match", worst <= std::max(rtol, 1e-3)},
              {"converged_l", lengths},
              {"ud_u1_monotone", nondecreasing(chain.ud_u1.profile, 0)},
              {"orderings", {{"ud_le_ol", ud_le_ol}, {"ol_le_ud", ol_le_ud}}}};
  if (full) {
    bool inside = true;
    for (int j = 0; j < full->profile.nodes(); ++j) {
      const double x = full->profile.grid().x(j);
      const auto up = chain.upper_at(x);
      const auto lo = chain.lower_at(x);
      for (int c = 0; c < 3; ++c) {
        const auto k = std::size_t(c);
        if (full->profile(c, j) > up[k] + 1e-6 || full->profile(c, j) < lo[k] - 1e-6) inside = false;
      }
    }
    out["full"] = {{"variant", full->label},
                   {"farfield", full->farfield},
                   {"converged_l", full->converged_l},
                   {"within_chain", inside}};
  }
  return out;
}

void write_chain_csv(const fs::path& dir, const EquilibriumChain& chain, const HalfLineSolution* full) {
  auto put = [&](const char* file, const HalfLineSolution& s, std::vector<std::string> names) {
    auto os = open_out(dir / file);
    write_csv(os, s.profile, names);
  };
  put("ol_u1.csv", chain.ol_u1, {"U1"});
  put("ol_u23.csv", chain.ol_u23, {"U2", "U3"});
  put("ud_u1.csv", chain.ud_u1, {"U1"});
  if (chain.ud_u23) put("ud_u23.csv", *chain.ud_u23, {"U2", "U3"});
  if (full) put("full.csv", *full, {"U1", "U2", "U3"});
}

void write_trajectory(const fs::path& dir, const Trajectory& traj, const json& extra) {
  {
    auto os = open_out(dir / "trajectory.csv");
    os << "t,h,hprime,sup_u1,sup_u2,sup_u3\n";
    for (const auto& o : traj.observations)
      os << format_double(o.t) << ',' << format_double(o.h) << ',' << format_double(o.h_prime) << ','
         << format_double(o.sup[0]) << ',' << format_double(o.sup[1]) << ',' << format_double(o.sup[2]) << '\n';
  }
  json snaps = json::array();
  int k = 0;
  for (const auto& o : traj.observations) {
    if (!o.snapshot) continue;
    const std::string name = fmt::format("snapshot_{:04d}.csv", k++);
    auto os = open_out(dir / name);
    write_csv(os, *o.snapshot, {"u1", "u2", "u3"});
    snaps.push_back({{"t", o.t}, {"h", o.h}, {"file", name}});
  }
  json manifest = {{"params", to_json(traj.params)},
                   {"trajectory", "trajectory.csv"},
                   {"snapshots", snaps},
                   {"stats", to_json(traj.stats)}};
  for (const auto& [key, value] : extra.items()) manifest[key] = value;
  write_json(dir / "manifest.json", manifest);
}

void write_json(const fs::path& file, const json& j) {
  auto os = open_out(file);
  os << j.dump(2) << '\n';
}

}  // namespace viralfb
