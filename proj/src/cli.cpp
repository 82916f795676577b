#include "viralfb/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>

namespace viralfb::cli {

namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kParamNames = {"theta", "a",   "b",   "c",   "k",   "q", "d1",
                                              "d2",    "d3",  "mu1", "mu2", "mu3", "h0"};

void check_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw InputError(where + " must be an object");
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key)) throw InputError(fmt::format("unknown key '{}' in {}", key, where));
}

double number(const json& v, const std::string& name) {
  if (!v.is_number()) throw InputError(name + " must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw InputError(name + " must be finite");
  return x;
}

double positive(const json& v, const std::string& name) {
  const double x = number(v, name);
  if (!(x > 0.0)) throw InputError(name + " must be positive");
  return x;
}

int count(const json& v, const std::string& name, int min) {
  if (!v.is_number_integer()) throw InputError(name + " must be an integer");
  const auto x = v.get<long long>();
  if (x < min || x > 10'000'000) throw InputError(fmt::format("{} must be an integer >= {}", name, min));
  return int(x);
}

void read_params(const json& obj, ModelParams& p) {
  for (const auto& name : kParamNames)
    if (obj.contains(name)) param_ref(p, name) = number(obj.at(name), name);
}

std::string fmt_row(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += format_double(v[i]);
  }
  return s;
}

void prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw InputError("cannot create output directory " + dir.string());
}

}  // namespace

double& param_ref(ModelParams& p, const std::string& name) {
  if (name == "theta") return p.theta;
  if (name == "a") return p.a;
  if (name == "b") return p.b;
  if (name == "c") return p.c;
  if (name == "k") return p.k;
  if (name == "q") return p.q;
  if (name == "d1") return p.d1;
  if (name == "d2") return p.d2;
  if (name == "d3") return p.d3;
  if (name == "mu1") return p.mu1;
  if (name == "mu2") return p.mu2;
  if (name == "mu3") return p.mu3;
  if (name == "h0") return p.h0;
  throw InputError("unknown parameter '" + name + "'");
}

double RunConfig::final_time() const {
  return simulation.T ? *simulation.T : 200.0 / std::min(params.c, params.q);
}

RunOptions RunConfig::run_options() const {
  RunOptions o;
  o.T = final_time();
  o.n = simulation.n;
  o.dt = simulation.dt;
  o.adaptive = simulation.adaptive;
  o.observer_dt = std::min(simulation.observer_dt, o.T);
  for (int k = 0; k <= simulation.snapshots; ++k) o.snapshot_times.push_back(o.T * k / std::max(simulation.snapshots, 1));
  return o;
}

ContinuationOptions RunConfig::continuation() const {
  ContinuationOptions o;
  o.window = equilibrium.window;
  o.window_cells = equilibrium.window_cells;
  o.rtol = equilibrium.rtol;
  return o;
}

RunConfig parse_config(const json& j) {
  std::set<std::string> top = {"params", "simulation", "equilibrium", "classify", "sweep", "eigen"};
  top.insert(kParamNames.begin(), kParamNames.end());
  check_keys(j, "config", top);

  RunConfig cfg;
  if (j.contains("params")) {
    check_keys(j.at("params"), "params", {kParamNames.begin(), kParamNames.end()});
    read_params(j.at("params"), cfg.params);
  }
  read_params(j, cfg.params);
  cfg.params.validate();

  if (j.contains("simulation")) {
    const json& s = j.at("simulation");
    check_keys(s, "simulation", {"T", "n", "dt", "adaptive_dt", "amplitudes", "observer_dt", "snapshots"});
    auto& sim = cfg.simulation;
    if (s.contains("T")) sim.T = positive(s.at("T"), "simulation.T");
    if (s.contains("n")) sim.n = count(s.at("n"), "simulation.n", 3);
    if (s.contains("dt")) sim.dt = positive(s.at("dt"), "simulation.dt");
    if (s.contains("adaptive_dt")) {
      if (!s.at("adaptive_dt").is_boolean()) throw InputError("simulation.adaptive_dt must be a boolean");
      sim.adaptive = s.at("adaptive_dt").get<bool>();
    }
    if (s.contains("amplitudes")) {
      const json& a = s.at("amplitudes");
      if (!a.is_array() || a.size() != 3) throw InputError("simulation.amplitudes must hold three numbers");
      for (std::size_t i = 0; i < 3; ++i) sim.amplitudes[i] = positive(a[i], "simulation.amplitudes");
    }
    if (s.contains("observer_dt")) sim.observer_dt = positive(s.at("observer_dt"), "simulation.observer_dt");
    if (s.contains("snapshots")) sim.snapshots = count(s.at("snapshots"), "simulation.snapshots", 0);
  }

  if (j.contains("equilibrium")) {
    const json& e = j.at("equilibrium");
    check_keys(e, "equilibrium", {"window", "n_window", "rtol", "right_bc"});
    auto& eq = cfg.equilibrium;
    if (e.contains("window")) eq.window = positive(e.at("window"), "equilibrium.window");
    if (e.contains("n_window")) eq.window_cells = count(e.at("n_window"), "equilibrium.n_window", 4);
    if (e.contains("rtol")) eq.rtol = positive(e.at("rtol"), "equilibrium.rtol");
    if (e.contains("right_bc")) {
      const json& bc = e.at("right_bc");
      if (bc == "zero") eq.right_bc = RightBoundary::Zero;
      else if (bc == "chain") eq.right_bc = RightBoundary::Chain;
      else throw InputError("equilibrium.right_bc must be \"zero\" or \"chain\"");
    }
  }

  if (j.contains("classify")) {
    const json& c = j.at("classify");
    check_keys(c, "classify", {"window", "slack_rel", "slack_abs", "extinction_tol", "u1_tol", "quiescence_tol"});
    auto& o = cfg.classify;
    if (c.contains("window")) o.window = positive(c.at("window"), "classify.window");
    if (c.contains("slack_rel")) o.slack_rel = number(c.at("slack_rel"), "classify.slack_rel");
    if (c.contains("slack_abs")) o.slack_abs = number(c.at("slack_abs"), "classify.slack_abs");
    if (c.contains("extinction_tol")) o.extinction_tol = positive(c.at("extinction_tol"), "classify.extinction_tol");
    if (c.contains("u1_tol")) o.u1_tol = positive(c.at("u1_tol"), "classify.u1_tol");
    if (c.contains("quiescence_tol")) o.quiescence_tol = positive(c.at("quiescence_tol"), "classify.quiescence_tol");
    if (o.slack_rel < 0.0 || o.slack_abs < 0.0) throw InputError("classification slack must be nonnegative");
  }

  if (j.contains("sweep")) {
    const json& s = j.at("sweep");
    check_keys(s, "sweep", {"axes"});
    if (!s.contains("axes") || !s.at("axes").is_array()) throw InputError("sweep.axes must be an array");
    for (const json& a : s.at("axes")) {
      check_keys(a, "sweep axis", {"param", "min", "max", "points"});
      if (!a.contains("param") || !a.at("param").is_string()) throw InputError("sweep axis needs a param name");
      SweepAxis axis;
      axis.param = a.at("param").get<std::string>();
      ModelParams probe;
      param_ref(probe, axis.param);
      if (!a.contains("min") || !a.contains("max") || !a.contains("points"))
        throw InputError("sweep axis needs min, max and points");
      axis.min = number(a.at("min"), "sweep min");
      axis.max = number(a.at("max"), "sweep max");
      axis.points = count(a.at("points"), "sweep points", 1);
      if (axis.max < axis.min) throw InputError("sweep max must not be below min");
      cfg.axes.push_back(axis);
    }
  }

  if (j.contains("eigen")) {
    const json& e = j.at("eigen");
    check_keys(e, "eigen", {"l", "eps", "beta"});
    if (e.contains("l")) cfg.eigen.l = positive(e.at("l"), "eigen.l");
    if (e.contains("eps")) cfg.eigen.eps = number(e.at("eps"), "eigen.eps");
    if (e.contains("beta")) cfg.eigen.beta = positive(e.at("beta"), "eigen.beta");
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot read config " + path);
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed config: ") + e.what());
  }
  return parse_config(j);
}

PointResult classify_point(const RunConfig& cfg) {
  const ModelParams& p = cfg.params;
  p.validate();
  const auto& s = cfg.simulation;
  PointResult out{run(InitialData::sine_bumps(p.h0, s.amplitudes), p, cfg.run_options()), std::nullopt, {}};
  if (basic_reproduction_number(p) > 1.0) out.chain = build_chain(p, cfg.continuation());
  out.result = classify(p, out.trajectory, out.chain ? &*out.chain : nullptr, cfg.classify);
  return out;
}

std::vector<ModelParams> sweep_points(const RunConfig& cfg) {
  if (cfg.axes.empty()) throw InputError("sweep needs at least one axis");
  std::vector<ModelParams> points{cfg.params};
  for (const auto& axis : cfg.axes) {
    std::vector<ModelParams> next;
    for (const auto& base : points) {
      for (int i = 0; i < axis.points; ++i) {
        ModelParams p = base;
        param_ref(p, axis.param) =
            axis.points == 1 ? axis.min : axis.min + (axis.max - axis.min) * double(i) / double(axis.points - 1);
        p.validate();
        next.push_back(p);
      }
    }
    points = std::move(next);
  }
  return points;
}

namespace {

struct Context {
  RunConfig cfg;
  fs::path out_dir;
  bool quiet = false;
  std::ostream& out;
};

int cmd_simulate(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  prepare_dir(ctx.out_dir);
  const auto traj = run(InitialData::sine_bumps(cfg.params.h0, cfg.simulation.amplitudes), cfg.params,
                        cfg.run_options());
  write_trajectory(ctx.out_dir, traj,
                   {{"T", cfg.final_time()}, {"n", cfg.simulation.n}, {"R0", basic_reproduction_number(cfg.params)}});
  if (!ctx.quiet) {
    const auto& last = traj.observations.back();
    ctx.out << fmt::format("t={} h={} sup=({}, {}, {})\n", format_double(last.t), format_double(last.h),
                           format_double(last.sup[0]), format_double(last.sup[1]), format_double(last.sup[2]));
  }
  return kOk;
}

int cmd_equilibrium(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  prepare_dir(ctx.out_dir);
  const double r0 = basic_reproduction_number(cfg.params);
  if (!(r0 > 1.0)) {
    const json summary = {{"R0", r0}, {"regime_hint", "no positive solution"}};
    write_json(ctx.out_dir / "summary.json", summary);
    if (!ctx.quiet) ctx.out << summary.dump() << '\n';
    return kOk;
  }
  const auto opts = cfg.continuation();
  const EquilibriumChain chain = build_chain(cfg.params, opts);
  const HalfLineSolution full = solve_full_equilibrium(cfg.params, opts, cfg.equilibrium.right_bc, &chain);
  write_chain_csv(ctx.out_dir, chain, &full);
  const json summary = chain_summary(cfg.params, chain, opts.rtol, &full);
  write_json(ctx.out_dir / "summary.json", summary);
  if (!ctx.quiet) ctx.out << summary.dump() << '\n';
  return kOk;
}

int cmd_classify(Context& ctx) {
  prepare_dir(ctx.out_dir);
  const PointResult res = classify_point(ctx.cfg);
  json j = to_json(res.result);
  j["params"] = to_json(ctx.cfg.params);
  write_json(ctx.out_dir / "classification.json", j);
  if (!ctx.quiet) ctx.out << "regime: " << to_string(res.result.regime) << '\n';
  return kOk;
}

double evidence_value(const ClassificationResult& r, const std::string& name) {
  for (const auto& c : r.evidence)
    if (c.name == name) return c.measured;
  return std::numeric_limits<double>::quiet_NaN();
}

int cmd_sweep(Context& ctx) {
  const auto points = sweep_points(ctx.cfg);
  prepare_dir(ctx.out_dir);
  std::vector<ClassificationResult> results(points.size());
  const std::size_t width = std::max(1u, std::thread::hardware_concurrency());
  for (std::size_t start = 0; start < points.size(); start += width) {
    std::vector<std::future<ClassificationResult>> batch;
    for (std::size_t i = start; i < std::min(points.size(), start + width); ++i) {
      RunConfig cfg = ctx.cfg;
      cfg.params = points[i];
      batch.push_back(std::async(std::launch::async, [cfg] { return classify_point(cfg).result; }));
    }
    for (std::size_t i = 0; i < batch.size(); ++i) results[start + i] = batch[i].get();
  }

  std::ofstream os(ctx.out_dir / "sweep.csv", std::ios::binary);
  if (!os) throw InputError("cannot write sweep.csv");
  for (const auto& name : kParamNames) os << name << ',';
  os << "R0,persistence_condition,regime,quiescent,final_sup_u2,final_sup_u3,u1_error,"
        "lower_margin_u1,lower_margin_u2,lower_margin_u3,upper_margin_u1,upper_margin_u2,upper_margin_u3\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    ModelParams p = points[i];
    std::vector<double> vals;
    for (const auto& name : kParamNames) vals.push_back(param_ref(p, name));
    const auto& r = results[i];
    os << fmt_row(vals) << ',' << format_double(r.r0) << ',' << (r.persistence_condition ? "true" : "false") << ','
       << to_string(r.regime) << ',' << (r.quiescent ? "true" : "false") << ','
       << fmt_row({evidence_value(r, "sup_u2"), evidence_value(r, "sup_u3"), evidence_value(r, "u1_vs_closed_form"),
                   r.lower_margin[0], r.lower_margin[1], r.lower_margin[2], r.upper_margin[0], r.upper_margin[1],
                   r.upper_margin[2]})
       << '\n';
  }
  if (!ctx.quiet) ctx.out << "points: " << points.size() << '\n';
  return kOk;
}

int cmd_eigen(Context& ctx) {
  const ModelParams& p = ctx.cfg.params;
  const EigenConfig& e = ctx.cfg.eigen;
  const double beta = e.beta.value_or(p.theta / p.a);
  const double excess = p.b * p.k * beta - p.c * p.q;
  const double eps = e.eps ? *e.eps : (excess > 0.0 ? default_eigen_margin(p, beta) : 0.0);
  const double lam = principal_eigenvalue(e.l);
  json j = {{"l", e.l},       {"lambda1", lam}, {"lambda1_l2", lam * e.l * e.l},
            {"beta", beta},   {"eps", eps},     {"predicate", eigen_condition(p, e.l, beta, eps)}};
  // Threshold length: (c + d2 L)(q + d3 L) = b k (beta - eps) solved for L = lambda1 > 0.
  const double rhs = p.b * p.k * (beta - eps);
  if (rhs > p.c * p.q) {
    const double A = p.d2 * p.d3, B = p.c * p.d3 + p.q * p.d2, C = p.c * p.q - rhs;
    const double L = (-B + std::sqrt(B * B - 4 * A * C)) / (2 * A);
    j["l_threshold"] = std::numbers::pi / std::sqrt(L);
  } else {
    j["l_threshold"] = nullptr;
  }
  if (!ctx.out_dir.empty()) {
    prepare_dir(ctx.out_dir);
    write_json(ctx.out_dir / "eigen.json", j);
  }
  ctx.out << j.dump() << '\n';
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Free-boundary viral infection model: simulation, equilibria and regime classification"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  bool quiet = false;
  auto add = [&](const char* name, const char* desc) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("--config", config_path, "JSON configuration file")->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_flag("--quiet", quiet, "suppress progress output");
    return sub;
  };
  CLI::App* sim = add("simulate", "integrate the free-boundary problem");
  CLI::App* equ = add("equilibrium", "build the equilibrium chain and the full equilibrium");
  CLI::App* cls = add("classify", "simulate and classify long-time behavior");
  CLI::App* swp = add("sweep", "classify every point of a parameter grid");
  CLI::App* eig = add("eigen", "principal eigenvalue and the finite-domain existence predicate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << json{{"error", "config"}, {"kind", "usage"}, {"message", e.what()}, {"fields", json::object()}}.dump()
        << '\n';
    return kConfigError;
  }

  try {
    const fs::path dir = out_dir.empty() && !*eig ? fs::path(".") : fs::path(out_dir);
    Context ctx{load_config(config_path), dir, quiet, out};
    if (*sim) return cmd_simulate(ctx);
    if (*equ) return cmd_equilibrium(ctx);
    if (*cls) return cmd_classify(ctx);
    if (*swp) return cmd_sweep(ctx);
    if (*eig) return cmd_eigen(ctx);
  } catch (const Error& e) {
    const bool config = e.is_input_error();
    err << error_json(config ? "config" : "solver", e).dump() << '\n';
    return config ? kConfigError : kSolverError;
  } catch (const std::exception& e) {
    err << json{{"error", "solver"}, {"kind", "internal"}, {"message", e.what()}, {"fields", json::object()}}.dump()
        << '\n';
    return kSolverError;
  }
  return kConfigError;
}

}  // namespace viralfb::cli
