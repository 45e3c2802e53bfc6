#include "cli/run.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "cli/artifacts.hpp"
#include "cli/report.hpp"
#include "dgpe/evolution.hpp"
#include "dgpe/experiments.hpp"
#include "dgpe/reference_state.hpp"
#include "dgpe/snapshot.hpp"
#include "dgpe/wp_oracle.hpp"

namespace dgpe::cli {

namespace {

constexpr const char* kVersion = "1.0.0";

struct CommandError : std::runtime_error {
  CommandError(int code, std::string kind, const std::string& what)
      : std::runtime_error(what), code(code), kind(std::move(kind)) {}
  int code;
  std::string kind;
};

nlohmann::json bound(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (std::isnan(x)) return nullptr;
  return x;
}

nlohmann::json claim_json(const ClaimCheck& c) {
  return {{"name", c.name},
          {"observed", bound(c.observed)},
          {"lower", bound(c.lower)},
          {"upper", bound(c.upper)},
          {"pass", c.pass}};
}

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

struct Context {
  Context(const RunConfig& c, ArtifactWriter w) : config(c), writer(std::move(w)) {}

  const RunConfig& config;
  ArtifactWriter writer;
  std::vector<ClaimCheck> claims;
  nlohmann::json extra = nlohmann::json::object();
  int failure_code = kOk;
  std::string failure_kind = "claims";
  std::string failure_message = "one or more claim checks failed";

  void fail(int code, std::string kind, std::string message) {
    failure_code = code;
    failure_kind = std::move(kind);
    failure_message = std::move(message);
  }

  void claim(std::string name, double observed, double lower, double upper, bool pass) {
    claims.push_back({std::move(name), observed, lower, upper, pass});
  }
};

WellGeometry checked_geometry(const ModelParams& params, bool allow_scalar) {
  WellGeometry g;
  try {
    g = derive_geometry(params);
  } catch (const std::invalid_argument& e) {
    throw CommandError(kValidation, "regime", e.what());
  }
  if (allow_scalar && is_scalar_reference(params)) return g;
  const RegimeReport r = validate_regime(params, g.C_p, g.C_4);
  if (!r.pass) {
    std::string why;
    for (const auto& s : r.reasons) why += (why.empty() ? "" : "; ") + s;
    throw CommandError(kValidation, "regime", "instance outside the regime: " + why);
  }
  return g;
}

void cmd_constants(Context& ctx) {
  const ModelParams& params = ctx.config.instance;
  WellGeometry g;
  try {
    g = derive_geometry(params);
  } catch (const std::invalid_argument& e) {
    throw CommandError(kValidation, "regime", e.what());
  }
  const RegimeReport regime = validate_regime(params, g.C_p, g.C_4);
  ctx.writer.write_json("geometry.json", g);
  ctx.extra["regime"] = regime;
  ctx.claim("regime", regime.pass ? 1.0 : 0.0, 1.0, 1.0, regime.pass);
  if (params.c <= g.c_star) {
    ctx.claim("ordering_chain", g.ordering_holds ? 1.0 : 0.0, 1.0, 1.0, g.ordering_holds);
    const AuxStructureReport aux = aux_structure_check(params, g);
    ctx.claim("h_c_critical_points", aux.critical_points, 2.0, 2.0, aux.critical_points == 2);
  }
  if (!regime.pass) {
    std::string why;
    for (const auto& r : regime.reasons) why += (why.empty() ? "" : "; ") + r;
    ctx.fail(kValidation, "regime", "instance outside the regime: " + why);
  }
}

void cmd_wp(Context& ctx) {
  const double p = ctx.config.instance.p;
  RadialProfile prof;
  try {
    prof = solve_wp(p);
  } catch (const std::invalid_argument& e) {
    throw CommandError(kValidation, "regime", e.what());
  }
  const double residual = ode_residual(prof);
  ctx.writer.write_json("wp.json", prof);
  std::ostringstream csv;
  csv << "r,w\n";
  for (std::size_t i = 0; i < prof.r.size(); ++i) csv << num(prof.r[i]) << "," << num(prof.w[i]) << "\n";
  ctx.writer.write("wp.csv", csv.str(), "csv");
  ctx.claim("ode_residual", residual, 0.0, 1e-6, residual < 1e-6);
  const RadialNorms w = radial_norms(prof, p);
  const double ratio = w.lp_pow / (0.5 * p * w.mass * w.mass);
  ctx.claim("lp_identity", ratio, 1.0 - 1e-6, 1.0 + 1e-6, std::abs(ratio - 1.0) < 1e-6);
}

Grid3 grid_for(const RunConfig& config, const ModelParams& params, const WellGeometry& g) {
  const double box = config.box > 0.0 ? config.box : suggested_box(params, g);
  Grid3 grid = Grid3::cube(config.n, box);
  try {
    grid.validate();
  } catch (const std::invalid_argument& e) {
    throw CommandError(kValidation, "grid", e.what());
  }
  return grid;
}

std::string log_csv(const std::vector<IterationRecord>& log) {
  std::ostringstream os;
  os << "iteration,energy,pohozaev,mu,grad_norm,residual,step\n";
  for (const auto& r : log) {
    os << r.iteration << "," << num(r.energy) << "," << num(r.pohozaev) << "," << num(r.mu) << ","
       << num(r.grad_norm) << "," << num(r.residual) << "," << num(r.step) << "\n";
  }
  return os.str();
}

template <class F>
auto guarded_solve(F&& f) {
  try {
    return f();
  } catch (const SolverError& e) {
    const int code = e.kind() == SolverErrorKind::Regime ? kValidation : kNonConvergence;
    throw CommandError(code, to_string(e.kind()), e.what());
  }
}

void cmd_groundstate(Context& ctx) {
  const RunConfig& config = ctx.config;
  const ModelParams& params = config.instance;
  const WellGeometry g = checked_geometry(params, true);
  const Grid3 grid = grid_for(config, params, g);

  std::optional<Field> init;
  if (config.init == "file") {
    try {
      init = read_snapshot(config.init_file);
    } catch (const std::exception& e) {
      throw CommandError(kIo, "io", e.what());
    }
  } else if (config.init == "random") {
    init = initial_random(grid, params.c, config.seed, grid.box[0] / 16.0);
    ctx.extra["warning"] = "random initial state: the flow may leave the well";
  } else if (config.init != "vc") {
    throw CommandError(kValidation, "config", "unknown init " + config.init);
  }

  const GroundStateResult result =
      guarded_solve([&] { return minimize(params, grid, config.solver, init ? &*init : nullptr); });
  ClaimTolerances tol;
  tol.pohozaev = std::max(config.solver.tol_p, 1e-12);
  const ClaimsReport claims = verify_claims(result, g, params, tol);
  for (const auto& c : claims.checks) ctx.claims.push_back(c);

  nlohmann::json rec = {{"instance", params}, {"geometry", g}, {"result", result}, {"claims", claims}};
  if (is_scalar_reference(params)) {
    const ReferenceState ref = v_c_profile(params, g);
    const Field vc = initial_vc(params, g, grid);
    Field diff = result.field;
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= vc[i];
    rec["reference"] = {{"m0", ref.m0}, {"beta_c", ref.beta}, {"l2_distance_rel", mass_norm(diff) / params.c}};
  }
  ctx.writer.write_json("result.json", rec);
  ctx.writer.write("log.csv", log_csv(result.log), "csv");
  ctx.writer.write("field.bin", encode_snapshot(result.field), "bin");
  if (!result.converged) {
    ctx.fail(kNonConvergence, "non_convergence",
             "no convergence after " + std::to_string(result.iterations) + " iterations");
  }
}

void cmd_sweep(Context& ctx) {
  const RunConfig& config = ctx.config;
  const ModelParams& params = config.instance;
  const WellGeometry g = checked_geometry(params, true);
  std::vector<double> masses = config.masses;
  if (masses.empty()) {
    const double top = std::isinf(g.c_star) ? params.c : g.c_star;
    for (int k = 1; k <= 4; ++k) masses.push_back(top / std::pow(2.0, k));
  }
  SweepConfig sc;
  sc.n = config.n;
  sc.box_v = config.box > 0.0 ? config.box : 24.0;
  sc.solver = config.solver;
  sc.jobs = config.repro ? 1 : config.jobs;
  const SweepResult res = asymptotic_sweep(params, masses, sc);

  std::ostringstream csv;
  csv << "c,energy_ratio,mu_ratio,b_ratio,grad_ratio,lp_ratio,h1_dist_to_Wp,converged\n";
  for (const auto& r : res.records) {
    csv << num(r.c) << "," << num(r.energy_ratio) << "," << num(r.mu_ratio) << "," << num(r.b_ratio)
        << "," << num(r.grad_ratio) << "," << num(r.lp_ratio) << "," << num(r.h1_dist_to_Wp) << ","
        << (r.converged ? 1 : 0) << "\n";
  }
  ctx.writer.write("sweep.csv", csv.str(), "csv");
  ctx.writer.write_json("sweep.json", res);
  ctx.extra["targets"] = res.targets;

  ctx.claim("all_converged", res.all_converged, 1.0, 1.0, res.all_converged);
  std::size_t smallest = 0;
  for (std::size_t i = 1; i < masses.size(); ++i) {
    if (masses[i] < masses[smallest]) smallest = i;
  }
  const SweepRecord& last = res.records[smallest];
  const double k = res.targets.energy;
  ctx.claim("energy_ratio_smallest_mass", last.energy_ratio, k * 1.05, k * 0.95,
            last.energy_ratio >= k * 1.05 && last.energy_ratio <= k * 0.95);
  if (!is_scalar_reference(params)) {
    const double e = res.b_ratio_slope_expected;
    ctx.claim("b_ratio_slope", res.b_ratio_slope, 0.8 * e, 1.2 * e,
              std::abs(res.b_ratio_slope - e) <= 0.2 * e);
  }
  ctx.claim("h1_rel_dist_smallest_mass", last.h1_rel_dist, 0.0, 0.05, last.h1_rel_dist < 0.05);
  for (const auto& r : res.records) {
    ctx.claim("mass_identity c=" + num(r.c).substr(0, 8), r.mass_identity, 1.0 - 1e-3, 1.0 + 1e-3,
              std::abs(r.mass_identity - 1.0) < 1e-3);
  }
  if (!res.all_converged) ctx.fail(kNonConvergence, "non_convergence", "some sweep masses failed");
}

struct VFrameState {
  RescaledSolve solve;
  WellGeometry scaled_geometry;
};

VFrameState vframe_ground_state(const RunConfig& config) {
  checked_geometry(config.instance, true);
  VFrameState s;
  s.solve = guarded_solve([&] {
    return solve_rescaled(config.instance, config.n, config.box > 0.0 ? config.box : 24.0, config.solver);
  });
  if (!s.solve.result.converged) {
    throw CommandError(kNonConvergence, "non_convergence", "ground state did not converge");
  }
  s.scaled_geometry = derive_geometry(s.solve.frame.scaled);
  return s;
}

void cmd_evolve(Context& ctx) {
  const RunConfig& config = ctx.config;
  const VFrameState s = vframe_ground_state(config);
  const double T = config.T > 0.0 ? config.T : 10.0;
  EvolutionOptions opt;
  opt.sample_every = config.sample_every;
  opt.reference = &s.solve.result.field;
  opt.blowup_cap = 10.0 * s.scaled_geometry.t_cstar;
  const EvolutionStats st = splitstep_evolve(s.solve.result.field, T, config.dt, s.solve.frame.scaled, opt);

  std::ostringstream csv;
  csv << "t,mass,energy,h1_dist,overlap\n";
  for (std::size_t i = 0; i < st.times.size(); ++i) {
    csv << num(st.times[i]) << "," << num(st.mass[i]) << "," << num(st.energy[i]) << ","
        << num(st.h1_dist_track[i]) << "," << num(st.overlap_track[i]) << "\n";
  }
  ctx.writer.write("evolution.csv", csv.str(), "csv");
  ctx.writer.write_json("evolution.json", {{"frame", {{"a", s.solve.frame.a}, {"b", s.solve.frame.b},
                                                      {"scaled_instance", s.solve.frame.scaled}}},
                                           {"stats", st}});
  ctx.writer.write("final.bin", encode_snapshot(st.final_state), "bin");
  ctx.claim("no_blowup", st.blew_up ? 0.0 : 1.0, 1.0, 1.0, !st.blew_up);
  ctx.claim("mass_drift", st.mass_drift, 0.0, 1e-12, st.mass_drift < 1e-12);
  const double overlap = st.overlap_track.empty() ? 0.0 : st.overlap_track.back();
  ctx.claim("standing_wave_overlap", overlap, 1.0 - 1e-4, 1.0 + 1e-12, overlap > 1.0 - 1e-4);
}

void cmd_stability(Context& ctx) {
  const RunConfig& config = ctx.config;
  const VFrameState s = vframe_ground_state(config);
  const double T = config.T > 0.0 ? config.T : 20.0;
  std::vector<double> eps = config.eps;
  if (eps.empty()) eps.push_back(0.04 * s.solve.frame.scaled.c);
  const StabilityReport rep =
      stability_probe(s.solve.result.field, eps, T, config.dt, s.solve.frame.scaled, config.trials,
                      config.seed, config.sample_every, 10.0 * s.scaled_geometry.t_cstar);
  ctx.writer.write_json("stability.json", rep);
  for (const auto& t : rep.trials) {
    ctx.claim("max_excursion eps=" + num(t.eps).substr(0, 8), t.max_excursion, 0.0, t.eps, t.pass);
  }
}

void write_manifest(Context& ctx, RunOutcome& outcome) {
  nlohmann::json m;
  m["version"] = kVersion;
  m["command"] = ctx.config.command;
  m["config"] = ctx.config;
  m["files"] = ctx.writer.files();
  nlohmann::json claims = nlohmann::json::array();
  for (const auto& c : ctx.claims) claims.push_back(claim_json(c));
  m["claims"] = claims;
  for (const auto& [k, v] : ctx.extra.items()) m[k] = v;
  m["exit_status"] = outcome.exit_code;
  outcome.manifest = m;
  atomic_write((std::filesystem::path(ctx.writer.dir()) / "manifest.json").string(), m.dump(2) + "\n");
}

void report_error(const std::string& kind, const std::string& message, int code) {
  std::cerr << nlohmann::json{{"error", kind}, {"message", message}, {"exit_code", code}}.dump() << "\n";
}

}  // namespace

RunOutcome run(const RunConfig& config) {
  RunOutcome outcome;
  std::optional<Context> ctx;
  try {
    ctx.emplace(config, ArtifactWriter(config.out, config.formats));
    if (config.command == "constants") {
      cmd_constants(*ctx);
    } else if (config.command == "wp") {
      cmd_wp(*ctx);
    } else if (config.command == "groundstate") {
      cmd_groundstate(*ctx);
    } else if (config.command == "sweep") {
      cmd_sweep(*ctx);
    } else if (config.command == "evolve") {
      cmd_evolve(*ctx);
    } else if (config.command == "stability") {
      cmd_stability(*ctx);
    } else {
      throw CommandError(kValidation, "config", "unknown command " + config.command);
    }
    bool all_pass = true;
    for (const auto& c : ctx->claims) all_pass = all_pass && c.pass;
    outcome.exit_code = ctx->failure_code != kOk ? ctx->failure_code : (all_pass ? kOk : kValidation);
    if (outcome.exit_code != kOk) {
      report_error(ctx->failure_kind, ctx->failure_message, outcome.exit_code);
    }
    write_manifest(*ctx, outcome);
  } catch (const CommandError& e) {
    outcome.exit_code = e.code;
    report_error(e.kind, e.what(), e.code);
    if (ctx) {
      try {
        ctx->extra["error"] = {{"kind", e.kind}, {"message", e.what()}};
        write_manifest(*ctx, outcome);
      } catch (const std::exception&) {
      }
    }
  } catch (const IoError& e) {
    outcome.exit_code = kIo;
    report_error("io", e.what(), kIo);
  } catch (const std::filesystem::filesystem_error& e) {
    outcome.exit_code = kIo;
    report_error("io", e.what(), kIo);
  }
  return outcome;
}

void to_json(nlohmann::json& j, const RunConfig& c) {
  j = nlohmann::json{{"command", c.command},
                     {"instance", c.instance},
                     {"n", c.n},
                     {"box", c.box},
                     {"solver", c.solver},
                     {"init", c.init},
                     {"init_file", c.init_file},
                     {"seed", c.seed},
                     {"out", c.out},
                     {"formats", c.formats},
                     {"repro", c.repro},
                     {"jobs", c.jobs},
                     {"masses", c.masses},
                     {"T", c.T},
                     {"dt", c.dt},
                     {"sample_every", c.sample_every},
                     {"eps", c.eps},
                     {"trials", c.trials}};
}

void from_json(const nlohmann::json& j, RunConfig& c) {
  c.command = j.value("command", c.command);
  if (j.contains("instance")) c.instance = j.at("instance").get<ModelParams>();
  c.n = j.value("n", c.n);
  c.box = j.value("box", c.box);
  if (j.contains("solver")) c.solver = j.at("solver").get<SolverConfig>();
  c.init = j.value("init", c.init);
  c.init_file = j.value("init_file", c.init_file);
  c.seed = j.value("seed", c.seed);
  c.out = j.value("out", c.out);
  c.formats = j.value("formats", c.formats);
  c.repro = j.value("repro", c.repro);
  c.jobs = j.value("jobs", c.jobs);
  c.masses = j.value("masses", c.masses);
  c.T = j.value("T", c.T);
  c.dt = j.value("dt", c.dt);
  c.sample_every = j.value("sample_every", c.sample_every);
  c.eps = j.value("eps", c.eps);
  c.trials = j.value("trials", c.trials);
}

int main_entry(int argc, char** argv) {
  CLI::App app{"Ground states of the dipolar Gross-Pitaevskii energy with an attractive p-power term"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  struct Flags {
    std::optional<double> p, l1, l2, l3, mass, box, tol, T, dt;
    std::optional<int> n, max_iter, jobs, trials, sample_every;
    std::optional<std::string> init, out, init_file;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> formats;
    std::vector<double> masses, eps;
    std::string config_file;
    bool repro = false;
  } f;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--p", f.p, "exponent of the attractive term");
    sub->add_option("--lambda1", f.l1, "contact coupling");
    sub->add_option("--lambda2", f.l2, "dipolar coupling");
    sub->add_option("--lambda3", f.l3, "attractive coupling (negative)");
    sub->add_option("--mass", f.mass, "mass c, the L2 norm");
    sub->add_option("--config", f.config_file, "JSON run configuration; flags override it");
    sub->add_option("--out", f.out, "output directory");
    sub->add_option("--format", f.formats, "artifact kinds to write")->check(CLI::IsMember({"json", "csv", "bin"}));
    sub->add_flag("--repro", f.repro, "deterministic single-worker execution");
    sub->add_option("--jobs", f.jobs, "concurrent jobs")->check(CLI::PositiveNumber);
  };
  auto add_solver = [&](CLI::App* sub) {
    sub->add_option("--n", f.n, "grid points per axis");
    sub->add_option("--box", f.box, "box side length");
    sub->add_option("--tol", f.tol, "residual and Pohozaev tolerance");
    sub->add_option("--max-iter", f.max_iter, "iteration limit");
    sub->add_option("--init", f.init, "initial state")->check(CLI::IsMember({"vc", "file", "random"}));
    sub->add_option("--init-file", f.init_file, "snapshot used with --init file");
    sub->add_option("--seed", f.seed, "random seed");
  };
  auto add_dynamics = [&](CLI::App* sub) {
    sub->add_option("--T", f.T, "time horizon (rescaled frame)");
    sub->add_option("--dt", f.dt, "time step");
    sub->add_option("--sample-every", f.sample_every, "steps between diagnostics");
  };

  auto* constants = app.add_subcommand("constants", "derived constants and well geometry");
  auto* wp = app.add_subcommand("wp", "radial profile W_p and the Gagliardo-Nirenberg constant");
  auto* gs = app.add_subcommand("groundstate", "local minimizer on the mass sphere");
  auto* sweep = app.add_subcommand("sweep", "small-mass asymptotics in rescaled coordinates");
  auto* evolve = app.add_subcommand("evolve", "split-step evolution of the ground state");
  auto* stability = app.add_subcommand("stability", "orbital stability probe");
  auto* report = app.add_subcommand("report", "summarize a run manifest");
  std::string manifest_path;
  report->add_option("manifest", manifest_path, "manifest.json of a run")->required();

  for (auto* sub : {constants, wp, gs, sweep, evolve, stability}) add_common(sub);
  for (auto* sub : {gs, sweep, evolve, stability}) add_solver(sub);
  for (auto* sub : {evolve, stability}) add_dynamics(sub);
  sweep->add_option("--masses", f.masses, "masses to solve (default c*/2 ... c*/16)");
  stability->add_option("--eps", f.eps, "distance thresholds eps (perturbation eps/4)");
  stability->add_option("--trials", f.trials, "trials per eps");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kValidation;
  }

  if (report->parsed()) {
    try {
      const ReportSummary s = render_report(nlohmann::json::parse(read_file(manifest_path)));
      std::cout << s.text;
      return s.fail_rows == 0 ? kOk : kValidation;
    } catch (const IoError& e) {
      report_error("io", e.what(), kIo);
      return kIo;
    } catch (const std::exception& e) {
      report_error("manifest", e.what(), kValidation);
      return kValidation;
    }
  }

  RunConfig config;
  if (!f.config_file.empty()) {
    try {
      const nlohmann::json j = nlohmann::json::parse(read_file(f.config_file));
      config = j.contains("config") ? j.at("config").get<RunConfig>() : j.get<RunConfig>();
    } catch (const IoError& e) {
      report_error("io", e.what(), kIo);
      return kIo;
    } catch (const std::exception& e) {
      report_error("config", e.what(), kValidation);
      return kValidation;
    }
  }
  for (auto* sub : app.get_subcommands()) config.command = sub->get_name();
  if (f.p) config.instance.p = *f.p;
  if (f.l1) config.instance.lambda1 = *f.l1;
  if (f.l2) config.instance.lambda2 = *f.l2;
  if (f.l3) config.instance.lambda3 = *f.l3;
  if (f.mass) config.instance.c = *f.mass;
  if (f.n) config.n = *f.n;
  if (f.box) config.box = *f.box;
  if (f.tol) config.solver.tol_grad = config.solver.tol_p = *f.tol;
  if (f.max_iter) config.solver.max_iter = *f.max_iter;
  if (f.init) config.init = *f.init;
  if (f.init_file) config.init_file = *f.init_file;
  if (f.seed) config.seed = *f.seed;
  if (f.out) config.out = *f.out;
  if (!f.formats.empty()) config.formats = f.formats;
  if (f.repro) config.repro = true;
  if (f.jobs) config.jobs = *f.jobs;
  if (!f.masses.empty()) config.masses = f.masses;
  if (f.T) config.T = *f.T;
  if (f.dt) config.dt = *f.dt;
  if (f.sample_every) config.sample_every = *f.sample_every;
  if (!f.eps.empty()) config.eps = f.eps;
  if (f.trials) config.trials = *f.trials;

  return run(config).exit_code;
}

}  // namespace dgpe::cli
