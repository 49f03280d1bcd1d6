// ow: command-line front end for the experiment harness.
//
//   ow <mode> --config PATH [--seed U64] [--runs N] [--out PATH] [--threads N]
//
// Exit codes: 0 pass, 1 verification failure, 2 usage/config error, 3 runtime error.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "ow/error.hpp"
#include "ow/harness.hpp"

namespace {

using nlohmann::json;

int report_error(const char* kind, const std::string& message, int code) {
  std::cerr << json{{"error", kind}, {"message", message}, {"exit_code", code}}.dump() << "\n";
  return code;
}

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> runs;
  std::optional<std::string> out;
  std::optional<unsigned> threads;
  std::optional<std::uint64_t> step_cap;
};

void add_common(CLI::App* cmd, Common& c, bool config_required) {
  auto* opt = cmd->add_option("--config", c.config, "experiment config (JSON)");
  if (config_required) opt->required();
  cmd->add_option("--seed", c.seed, "master seed");
  cmd->add_option("--runs", c.runs, "number of runs");
  cmd->add_option("--out", c.out, "output file");
  cmd->add_option("--threads", c.threads, "worker threads (default: OW_THREADS, then all cores)");
  cmd->add_option("--step-cap", c.step_cap, "maximum number of moves per run");
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ow::ConfigError("cannot read config '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ow::ConfigError("config '" + path + "': " + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Oil and water particle system: stabilization, ghost dynamics and Green's function checks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(ow::kVersion));

  Common common;
  std::string strategy, scheduler, verify_kind, family = "cycle";
  std::optional<std::uint64_t> phi, target;
  std::optional<std::uint32_t> D, L_min, L_max, dim;

  auto* stabilize = app.add_subcommand("stabilize", "stabilize K once per run");
  add_common(stabilize, common, true);
  stabilize->add_option("--strategy", strategy, "lowest_id | highest_pairs | random[:SEED] | fixed_order:IDS | adversarial_nearest_boundary");

  auto* driven = app.add_subcommand("driven", "stabilize, then inject pairs at the origin");
  add_common(driven, common, true);
  driven->add_option("--strategy", strategy, "firing strategy");
  driven->add_option("--phi", phi, "neighbor firings after which injection stops");

  auto* ghost = app.add_subcommand("ghost", "ghost-pair stabilization, one CSV row per run");
  add_common(ghost, common, true);
  ghost->add_option("--target", target, "target vertex id y");
  ghost->add_option("--scheduler", scheduler, "ghosts_first | pairs_first | random[:SEED]");

  auto* verify = app.add_subcommand("verify", "Abelian or monotonicity check over many instances");
  add_common(verify, common, true);
  verify->add_option("kind", verify_kind, "abelian | monotone")->required()->check(CLI::IsMember({"abelian", "monotone"}));

  auto* green = app.add_subcommand("green", "dense Green's function of K as CSV");
  add_common(green, common, true);

  auto* scan = app.add_subcommand("green-scan", "Green sum inequality over a range of radii");
  scan->alias("green_scan");
  add_common(scan, common, false);
  scan->add_option("--family", family, "cycle | lattice_box | regular_tree_ball");
  scan->add_option("--D", D, "annulus width D");
  scan->add_option("--Lmin", L_min, "smallest radius (default 1)");
  scan->add_option("--Lmax", L_max, "largest radius");
  scan->add_option("--dim", dim, "lattice dimension");

  auto* brw = app.add_subcommand("brw", "ghost odometer mean against the Green's function");
  add_common(brw, common, true);
  brw->add_option("--scheduler", scheduler, "ghosts_first | pairs_first | random[:SEED]");

  auto* section4 = app.add_subcommand("section4", "per-vertex ghost counters against Green's function predictions");
  add_common(section4, common, true);
  section4->add_option("--scheduler", scheduler, "ghosts_first | pairs_first | random[:SEED]");

  auto* sweep = app.add_subcommand("fixation-sweep", "odometer statistics over density and radius grids");
  sweep->alias("fixation_sweep");
  add_common(sweep, common, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return report_error("usage", e.what(), 2);
  }

  try {
    CLI::App* cmd = app.get_subcommands().front();
    json cfg = common.config.empty() ? json::object() : read_json(common.config);
    if (!cfg.is_object()) throw ow::ConfigError("config: expected a JSON object");
    json& params = cfg["params"];
    if (params.is_null()) params = json::object();

    std::string mode = cmd->get_name();
    if (cmd == verify) mode = verify_kind == "abelian" ? "verify_abelian" : "verify_monotone";
    cfg["mode"] = mode;

    if (cmd == scan) {
      if (!cfg.contains("graph")) cfg["graph"] = json{{"family", family}};
      if (scan->count("--family")) cfg["graph"]["family"] = family;
      if (dim) cfg["graph"]["dim"] = *dim;
      if (D) params["D"] = *D;
      if (L_min) params["L_min"] = *L_min;
      if (L_max) params["L_max"] = *L_max;
    }
    if (!strategy.empty()) params["strategy"] = strategy;
    if (!scheduler.empty()) params["scheduler"] = scheduler;
    if (phi) params["phi"] = *phi;
    if (target) params["target"] = *target;
    if (common.seed) cfg["seed"] = *common.seed;
    if (common.runs) cfg["runs"] = *common.runs;
    if (common.out) cfg["out"] = *common.out;
    if (common.threads) cfg["threads"] = *common.threads;
    if (common.step_cap) cfg["step_cap"] = *common.step_cap;

    const auto config = ow::ExperimentConfig::from_json(cfg);
    const auto outcome = ow::run_experiment(config);
    std::cout << outcome.summary.dump(2) << "\n";
    return outcome.exit_code;
  } catch (const ow::ConfigError& e) {
    return report_error("config", e.what(), 2);
  } catch (const ow::MappingError& e) {
    return report_error("config", e.what(), 2);
  } catch (const std::exception& e) {
    return report_error("runtime", e.what(), 3);
  }
}
