#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "viralfb/behavior.hpp"
#include "viralfb/equilibrium.hpp"
#include "viralfb/error.hpp"
#include "viralfb/fbsim.hpp"

namespace viralfb {

using nlohmann::json;

json to_json(const ModelParams& p);
json to_json(const ClassificationResult& r);
json to_json(const RunStats& s);

/// {"error": category, "kind": ..., "message": ..., "fields": {...}}
json error_json(const std::string& category, const Error& e);

/// Summary of a chain and (optionally) the full equilibrium: far fields and
/// their closed forms, relative errors, truncation lengths, both nodewise
/// orderings of the ol and ud links on the window.
json chain_summary(const ModelParams& p, const EquilibriumChain& chain, double rtol, const HalfLineSolution* full);

/// One CSV per chain link on the window: ol_u1.csv, ol_u23.csv, ud_u1.csv,
/// ud_u23.csv (when present), plus full.csv when given.
void write_chain_csv(const std::filesystem::path& dir, const EquilibriumChain& chain, const HalfLineSolution* full);

/// trajectory.csv (t,h,hprime,sup_u1,sup_u2,sup_u3), snapshot_NNNN.csv in
/// physical coordinates and manifest.json listing them.
void write_trajectory(const std::filesystem::path& dir, const Trajectory& traj, const json& extra_manifest = {});

void write_json(const std::filesystem::path& file, const json& j);

}  // namespace viralfb
