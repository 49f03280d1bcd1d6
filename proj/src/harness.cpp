#include "ow/harness.hpp"

#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "ow/error.hpp"
#include "ow/ghost_engine.hpp"
#include "ow/green.hpp"
#include "ow/parallel.hpp"
#include "ow/stabilizer.hpp"

namespace ow {

using nlohmann::json;

namespace {

struct ModeName {
  Mode mode;
  const char* name;
};

constexpr ModeName kModes[] = {
    {Mode::stabilize, "stabilize"},     {Mode::driven, "driven"},
    {Mode::ghost, "ghost"},             {Mode::verify_abelian, "verify_abelian"},
    {Mode::verify_monotone, "verify_monotone"}, {Mode::green, "green"},
    {Mode::green_scan, "green_scan"},   {Mode::brw, "brw"},
    {Mode::section4, "section4"},       {Mode::fixation_sweep, "fixation_sweep"},
};

template <class T>
T field(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return j.at(key).get<T>();
}

template <class T>
T required(const json& j, const char* key, const char* context) {
  if (!j.contains(key)) throw ConfigError(std::string(context) + ": missing \"" + key + "\"");
  return j.at(key).get<T>();
}

// Wraps json type errors so they surface as config errors.
template <class Fn>
auto schema(const char* context, Fn fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw ConfigError(std::string(context) + ": " + e.what());
  }
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

ParticleConfig initial_config(const ExperimentConfig& cfg, const Graph& g, std::uint32_t run) {
  if (cfg.params.contains("config")) {
    ParticleConfig c = config_from_json(cfg.params.at("config"));
    if (c.size() != g.vertex_count()) {
      throw ConfigError("params.config has " + std::to_string(c.size()) + " entries, graph has " +
                        std::to_string(g.vertex_count()));
    }
    return c;
  }
  return sample_initial(g, cfg.density, cfg.seed, run);
}

std::uint64_t step_cap_for(const ExperimentConfig& cfg, const Graph& g) {
  if (g.sinks().empty() && !cfg.step_cap) {
    throw ConfigError("graph has no sink vertices; an explicit step_cap is required");
  }
  return cfg.step_cap.value_or(kDefaultStepCap);
}

Vertex vertex_param(const Graph& g, const json& v, const char* what) {
  const auto x = v.get<std::int64_t>();
  if (x < 0 || static_cast<std::uint64_t>(x) >= g.vertex_count()) {
    throw ConfigError(std::string(what) + ": vertex " + std::to_string(x) + " is not in the graph");
  }
  return static_cast<Vertex>(x);
}

std::uint32_t run_index(std::uint64_t r) {
  if (r > UINT32_MAX) throw ConfigError("runs: at most 2^32 runs are supported");
  return static_cast<std::uint32_t>(r);
}

json r_stats_json(const RWalkStats& s) {
  return {{"r0", s.r0},       {"last", s.last}, {"up", s.up}, {"down", s.down}, {"lazy", s.lazy},
          {"up_crossings", s.up_crossings}, {"up_crossings_first_phi", s.up_crossings_first_phi}};
}

struct Output {
  std::string text;
  bool csv = false;
};

// ---------------------------------------------------------------- modes

RunOutcome mode_stabilize(const ExperimentConfig& cfg, unsigned threads, Output& out, bool driven) {
  const Graph g = Graph::build(cfg.graph);
  const std::uint64_t cap = step_cap_for(cfg, g);
  const auto strategy = StrategySpec::parse(schema("params", [&] { return field<std::string>(cfg.params, "strategy", "lowest_id"); }));
  const std::uint64_t phi = driven ? schema("params", [&] { return required<std::uint64_t>(cfg.params, "phi", "driven"); }) : 0;
  const bool keep_config = schema("params", [&] { return field<bool>(cfg.params, "keep_config", !driven); });

  const auto blocks = run_blocks<std::vector<json>>(cfg.runs, threads, [&](std::uint64_t begin, std::uint64_t end) {
    std::vector<json> rows;
    for (std::uint64_t r = begin; r < end; ++r) {
      const auto run = run_index(r);
      const ParticleConfig c0 = initial_config(cfg, g, run);
      const InstructionArray tau(cfg.seed, run);
      StabilizeOptions options{cap, driven};
      const auto res = driven ? driven_stabilize(g, c0, tau, strategy, phi, options)
                              : stabilize(g, c0, tau, strategy, options);
      json row = {{"run", r},
                  {"T", res.steps},
                  {"truncated", res.truncated},
                  {"n_k", res.n_k},
                  {"m_origin", res.odometer.fires[kOrigin]},
                  {"odometer", res.odometer.fires},
                  {"holes_filled", res.odometer.waters_into_hole}};
      if (driven) {
        row["injections"] = res.injections;
        row["H_origin"] = res.odometer.waters_into_hole[kOrigin];
        row["J_NK"] = res.r_stats.up_crossings;
        row["r_walk"] = r_stats_json(res.r_stats);
        row["identity_holds"] = res.odometer.waters_into_hole[kOrigin] == res.r_stats.up_crossings;
      }
      if (keep_config) row["final"] = to_json(res.final_config);
      rows.push_back(std::move(row));
    }
    return rows;
  });

  RunOutcome outcome;
  json runs = json::array();
  std::uint64_t truncated = 0, identity_failures = 0, up = 0, down = 0, lazy = 0;
  double total_T = 0.0;
  for (const auto& b : blocks) {
    for (const auto& row : b) {
      truncated += row.at("truncated").get<bool>() ? 1 : 0;
      total_T += row.at("T").get<double>();
      if (driven) {
        if (!row.at("truncated").get<bool>() && !row.at("identity_holds").get<bool>()) ++identity_failures;
        up += row.at("r_walk").at("up").get<std::uint64_t>();
        down += row.at("r_walk").at("down").get<std::uint64_t>();
        lazy += row.at("r_walk").at("lazy").get<std::uint64_t>();
      }
      runs.push_back(row);
    }
  }
  json summary = {{"mode", to_string(cfg.mode)},
                  {"runs", cfg.runs},
                  {"strategy", strategy.name()},
                  {"truncated", truncated},
                  {"mean_T", cfg.runs ? total_T / static_cast<double>(cfg.runs) : 0.0}};
  if (driven) {
    const std::uint64_t steps = up + down + lazy;
    const double n = steps ? static_cast<double>(steps) : 1.0;
    summary["phi"] = phi;
    summary["r_steps"] = steps;
    summary["p_up"] = static_cast<double>(up) / n;
    summary["p_down"] = static_cast<double>(down) / n;
    summary["p_lazy"] = static_cast<double>(lazy) / n;
    summary["identity_failures"] = identity_failures;
    outcome.exit_code = identity_failures ? 1 : 0;
  }
  out.text = json{{"summary", summary}, {"runs", runs}}.dump(2) + "\n";
  outcome.summary = summary;
  return outcome;
}

RunOutcome mode_ghost(const ExperimentConfig& cfg, unsigned threads, Output& out) {
  const Graph g = Graph::build(cfg.graph);
  const std::uint64_t cap = step_cap_for(cfg, g);
  const Vertex target = schema("params", [&] { return vertex_param(g, cfg.params.at("target"), "target"); });
  const auto scheduler = SchedulerSpec::parse(schema("params", [&] { return field<std::string>(cfg.params, "scheduler", "ghosts_first"); }));
  GhostOptions options;
  options.step_cap = cap;
  options.check_steps = schema("params", [&] { return field<bool>(cfg.params, "check_martingale", false); });

  struct Acc {
    std::string csv;
    std::uint64_t bookkeeping_failures = 0, truncated = 0, steps_checked = 0;
    double max_deviation = 0.0, max_drift = 0.0, sum_m = 0.0;
  };
  const auto blocks = run_blocks<Acc>(cfg.runs, threads, [&](std::uint64_t begin, std::uint64_t end) {
    Acc acc;
    for (std::uint64_t r = begin; r < end; ++r) {
      const auto run = run_index(r);
      const ParticleConfig sigma = initial_config(cfg, g, run);
      const InstructionArray tau(cfg.seed, run);
      SchedulerSpec s = scheduler;
      s.seed = scheduler.seed + r;
      const auto res = ghost_stabilize(g, sigma, tau, s, target, options);
      const auto m = res.odometer.pair_or_ghost_jumps[target];
      acc.csv += std::to_string(r) + "," + std::to_string(m) + "," + std::to_string(res.ghosts_created_total) + "," +
                 std::to_string(res.T) + "\n";
      acc.sum_m += static_cast<double>(m);
      if (!res.odometer.bookkeeping_holds()) ++acc.bookkeeping_failures;
      if (res.truncated) ++acc.truncated;
      acc.steps_checked += res.steps_checked;
      acc.max_deviation = std::max(acc.max_deviation, res.max_step_deviation);
      acc.max_drift = std::max(acc.max_drift, res.max_drift);
    }
    return acc;
  });

  Acc total;
  out.csv = true;
  out.text = "run_id,m_tilde_y,ghosts_created_total,T\n";
  for (const auto& b : blocks) {
    out.text += b.csv;
    total.bookkeeping_failures += b.bookkeeping_failures;
    total.truncated += b.truncated;
    total.steps_checked += b.steps_checked;
    total.max_deviation = std::max(total.max_deviation, b.max_deviation);
    total.max_drift = std::max(total.max_drift, b.max_drift);
    total.sum_m += b.sum_m;
  }
  RunOutcome outcome;
  outcome.summary = {{"mode", "ghost"},
                     {"runs", cfg.runs},
                     {"target", target},
                     {"scheduler", scheduler.name()},
                     {"mean_m_tilde_y", cfg.runs ? total.sum_m / static_cast<double>(cfg.runs) : 0.0},
                     {"bookkeeping_failures", total.bookkeeping_failures},
                     {"truncated", total.truncated},
                     {"steps_checked", total.steps_checked},
                     {"max_step_deviation", total.max_deviation},
                     {"max_drift", total.max_drift}};
  const bool ok = total.bookkeeping_failures == 0 && total.max_deviation <= 1e-9;
  outcome.exit_code = ok ? 0 : 1;
  return outcome;
}

RunOutcome mode_verify_abelian(const ExperimentConfig& cfg, unsigned threads, Output& out) {
  std::vector<GraphSpec> specs;
  schema("params", [&] {
    if (cfg.params.contains("graphs")) {
      for (const auto& gj : cfg.params.at("graphs")) specs.push_back(graph_spec_from_json(gj));
    }
    return 0;
  });
  if (specs.empty()) specs.push_back(cfg.graph);
  std::vector<Graph> graphs;
  for (const auto& s : specs) graphs.push_back(Graph::build(s));

  std::vector<StrategySpec> strategies;
  schema("params", [&] {
    const auto names = field<std::vector<std::string>>(cfg.params, "strategies",
                                                       {"lowest_id", "highest_pairs", "random:1"});
    for (const auto& n : names) strategies.push_back(StrategySpec::parse(n));
    return 0;
  });
  for (const auto& g : graphs) step_cap_for(cfg, g);
  const std::uint64_t cap = cfg.step_cap.value_or(kDefaultStepCap);

  struct Acc {
    std::uint64_t passed = 0, inconclusive = 0;
    std::vector<std::uint64_t> failures;
  };
  const auto blocks = run_blocks<Acc>(cfg.runs, threads, [&](std::uint64_t begin, std::uint64_t end) {
    Acc acc;
    for (std::uint64_t r = begin; r < end; ++r) {
      const auto run = run_index(r);
      const Graph& g = graphs[r % graphs.size()];
      const auto report = verify_abelian(g, initial_config(cfg, g, run), cfg.seed, strategies, cap, run);
      if (report.inconclusive) {
        ++acc.inconclusive;
      } else if (report.pass) {
        ++acc.passed;
      } else {
        acc.failures.push_back(r);
      }
    }
    return acc;
  });
  Acc total;
  for (const auto& b : blocks) {
    total.passed += b.passed;
    total.inconclusive += b.inconclusive;
    total.failures.insert(total.failures.end(), b.failures.begin(), b.failures.end());
  }
  json names = json::array();
  for (const auto& s : strategies) names.push_back(s.name());
  RunOutcome outcome;
  outcome.summary = {{"mode", "verify_abelian"},   {"instances", cfg.runs},   {"strategies", names},
                     {"passed", total.passed},      {"inconclusive", total.inconclusive},
                     {"failed", total.failures.size()}, {"failed_runs", total.failures},
                     {"all_pass", total.failures.empty() && total.inconclusive == 0}};
  out.text = outcome.summary.dump(2) + "\n";
  outcome.exit_code = total.failures.empty() && total.inconclusive == 0 ? 0 : 1;
  return outcome;
}

RunOutcome mode_verify_monotone(const ExperimentConfig& cfg, unsigned threads, Output& out) {
  GraphSpec large_spec = cfg.graph;
  DensitySpec large_density = cfg.density;
  schema("params", [&] {
    large_spec.L = required<std::uint32_t>(cfg.params, "L_large", "verify_monotone");
    if (cfg.params.contains("density_large")) large_density = density_from_json(cfg.params.at("density_large"));
    return 0;
  });
  if (large_spec.L < cfg.graph.L) throw ConfigError("verify_monotone: L_large must be >= graph.L");
  const Graph small = Graph::build(cfg.graph);
  const Graph large = Graph::build(large_spec);
  step_cap_for(cfg, small);
  step_cap_for(cfg, large);
  const std::uint64_t cap = cfg.step_cap.value_or(kDefaultStepCap);

  struct Acc {
    std::uint64_t passed = 0, inconclusive = 0;
    std::vector<std::uint64_t> failures;
  };
  const auto blocks = run_blocks<Acc>(cfg.runs, threads, [&](std::uint64_t begin, std::uint64_t end) {
    Acc acc;
    for (std::uint64_t r = begin; r < end; ++r) {
      const auto run = run_index(r);
      const auto c_small = sample_initial(small, cfg.density, cfg.seed, run);
      const auto c_large = sample_initial(large, large_density, cfg.seed, run);
      const auto report = verify_monotonicity(small, c_small, large, c_large, cfg.seed, cap, run);
      if (report.inconclusive) {
        ++acc.inconclusive;
      } else if (report.pass) {
        ++acc.passed;
      } else {
        acc.failures.push_back(r);
      }
    }
    return acc;
  });
  Acc total;
  for (const auto& b : blocks) {
    total.passed += b.passed;
    total.inconclusive += b.inconclusive;
    total.failures.insert(total.failures.end(), b.failures.begin(), b.failures.end());
  }
  RunOutcome outcome;
  outcome.summary = {{"mode", "verify_monotone"}, {"instances", cfg.runs},       {"L_small", cfg.graph.L},
                     {"L_large", large_spec.L},   {"passed", total.passed},      {"inconclusive", total.inconclusive},
                     {"failed", total.failures.size()}, {"failed_runs", total.failures},
                     {"all_pass", total.failures.empty() && total.inconclusive == 0}};
  out.text = outcome.summary.dump(2) + "\n";
  outcome.exit_code = total.failures.empty() && total.inconclusive == 0 ? 0 : 1;
  return outcome;
}

RunOutcome mode_green(const ExperimentConfig& cfg, Output& out) {
  const Graph g = Graph::build(cfg.graph);
  const auto method_name = schema("params", [&] { return field<std::string>(cfg.params, "method", "direct_solve"); });
  GreenMethod method;
  if (method_name == "direct_solve") {
    method = GreenMethod::direct_solve;
  } else if (method_name == "hitting_prob") {
    method = GreenMethod::hitting_prob;
  } else {
    throw ConfigError("green: method must be direct_solve or hitting_prob");
  }
  const auto table = green_table(g, g.active(), method);
  const auto n = static_cast<Eigen::Index>(table.K.size());

  out.csv = true;
  std::string& s = out.text;
  s = "x\\y";
  for (Vertex y : table.K) s += "," + std::to_string(y);
  s += "\n";
  for (Eigen::Index i = 0; i < n; ++i) {
    s += std::to_string(table.K[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < n; ++j) s += "," + format_double(table.G(i, j));
    s += "\n";
  }

  RunOutcome outcome;
  outcome.summary = {{"mode", "green"}, {"method", method_name}, {"size", table.K.size()}};
  if (schema("params", [&] { return field<bool>(cfg.params, "compare", false); })) {
    const auto other = green_table(
        g, g.active(), method == GreenMethod::direct_solve ? GreenMethod::hitting_prob : GreenMethod::direct_solve);
    const double diff = n ? (table.G - other.G).cwiseAbs().maxCoeff() : 0.0;
    outcome.summary["max_method_difference"] = diff;
    outcome.exit_code = diff <= 1e-10 ? 0 : 1;
  }
  return outcome;
}

RunOutcome mode_green_scan(const ExperimentConfig& cfg, Output& out) {
  std::uint32_t D = 0, L_min = 1, L_max = 0;
  schema("params", [&] {
    D = required<std::uint32_t>(cfg.params, "D", "green_scan");
    L_min = field<std::uint32_t>(cfg.params, "L_min", 1);
    L_max = required<std::uint32_t>(cfg.params, "L_max", "green_scan");
    return 0;
  });
  const auto report = properties_green_scan(cfg.graph, D, L_min, L_max);

  out.csv = true;
  out.text = "L,full,interior,ratio,holds,pair_bound\n";
  for (const auto& row : report.rows) {
    out.text += std::to_string(row.L) + "," + format_double(row.full) + "," + format_double(row.interior) + "," +
                format_double(row.ratio) + "," + (row.holds ? "1" : "0") + "," + format_double(row.pair_bound) +
                "\n";
  }
  RunOutcome outcome;
  outcome.summary = {{"mode", "green_scan"},
                     {"family", to_string(cfg.graph.family)},
                     {"degree", report.degree},
                     {"D", report.D},
                     {"bound_L0", report.bound_L0},
                     {"L_min", L_min},
                     {"L_max", L_max},
                     {"holds_from_bound", report.holds_from_bound},
                     {"pair_bound_negative_past_bound", report.pair_bound_negative_past_bound}};
  outcome.summary["smallest_holding"] = report.smallest_holding ? json(*report.smallest_holding) : json(nullptr);
  outcome.exit_code = report.holds_from_bound && report.pair_bound_negative_past_bound ? 0 : 1;
  return outcome;
}

RunOutcome mode_brw(const ExperimentConfig& cfg, unsigned threads, Output& out) {
  const Graph g = Graph::build(cfg.graph);
  std::vector<Vertex> targets;
  std::optional<double> max_rel_err;
  const auto scheduler = SchedulerSpec::parse(schema("params", [&] {
    for (const auto& t : cfg.params.at("targets")) targets.push_back(vertex_param(g, t, "targets"));
    if (cfg.params.contains("max_rel_err")) max_rel_err = cfg.params.at("max_rel_err").get<double>();
    return field<std::string>(cfg.params, "scheduler", "ghosts_first");
  }));
  if (targets.empty()) throw ConfigError("brw: targets must be nonempty");
  const ParticleConfig sigma = initial_config(cfg, g, 0);

  out.csv = true;
  out.text = "target,runs,mean,se,exact,z,rel_err,bookkeeping_failures,truncated\n";
  RunOutcome outcome;
  json rows = json::array();
  bool ok = true;
  for (Vertex y : targets) {
    if (cfg.runs == 0) continue;
    const auto r = verify_lemma_brw(g, sigma, y, cfg.runs, cfg.seed, scheduler, threads);
    out.text += std::to_string(y) + "," + std::to_string(r.runs) + "," + format_double(r.mean) + "," +
                format_double(r.se) + "," + format_double(r.exact) + "," + format_double(r.z) + "," +
                format_double(r.rel_err) + "," + std::to_string(r.bookkeeping_failures) + "," +
                std::to_string(r.truncated) + "\n";
    bool row_ok = std::abs(r.z) <= 3.0 && r.bookkeeping_failures == 0 && r.truncated == 0;
    if (max_rel_err) row_ok = row_ok && r.rel_err <= *max_rel_err;
    ok = ok && row_ok;
    rows.push_back({{"target", y}, {"mean", r.mean}, {"exact", r.exact}, {"z", r.z}, {"rel_err", r.rel_err},
                    {"pass", row_ok}});
  }
  outcome.summary = {{"mode", "brw"}, {"runs", cfg.runs}, {"scheduler", scheduler.name()}, {"targets", rows}};
  outcome.exit_code = ok ? 0 : 1;
  return outcome;
}

RunOutcome mode_section4(const ExperimentConfig& cfg, unsigned threads, Output& out) {
  const Graph g = Graph::build(cfg.graph);
  step_cap_for(cfg, g);
  const auto scheduler = SchedulerSpec::parse(schema("params", [&] { return field<std::string>(cfg.params, "scheduler", "ghosts_first"); }));
  out.csv = true;
  out.text =
      "x,mean_m_tilde,se_m_tilde,ewl_bound,brw_rhs,ewl_ok,mean_w,egl_rhs,egl_se,egl_z,egl_ok,mean_H,mean_m\n";
  RunOutcome outcome;
  if (cfg.runs == 0) {
    outcome.summary = {{"mode", "section4"}, {"runs", 0}, {"pass", true}};
    return outcome;
  }
  const auto report = collect_section4_counters(g, cfg.density, cfg.runs, cfg.seed, scheduler, threads);
  double max_abs_z = 0.0;
  for (const auto& r : report.rows) {
    out.text += std::to_string(r.x) + "," + format_double(r.mean_m_tilde) + "," + format_double(r.se_m_tilde) + "," +
                format_double(r.ewl_bound) + "," + format_double(r.brw_rhs) + "," + (r.ewl_ok ? "1" : "0") + "," +
                format_double(r.mean_w) + "," + format_double(r.egl_rhs) + "," + format_double(r.egl_se) + "," +
                format_double(r.egl_z) + "," + (r.egl_ok ? "1" : "0") + "," + format_double(r.mean_H) + "," +
                format_double(r.mean_m) + "\n";
    if (std::isfinite(r.egl_z)) max_abs_z = std::max(max_abs_z, std::abs(r.egl_z));
  }
  outcome.summary = {{"mode", "section4"},
                     {"runs", cfg.runs},
                     {"mu", report.mu},
                     {"bookkeeping_failures", report.bookkeeping_failures},
                     {"truncated", report.truncated},
                     {"max_abs_egl_z", max_abs_z},
                     {"pass", report.pass}};
  outcome.exit_code = report.pass ? 0 : 1;
  return outcome;
}

RunOutcome mode_fixation_sweep(const ExperimentConfig& cfg, unsigned threads, Output& out) {
  std::vector<double> mu_grid;
  std::vector<std::uint32_t> L_grid;
  schema("params", [&] {
    mu_grid = required<std::vector<double>>(cfg.params, "mu_grid", "fixation_sweep");
    L_grid = required<std::vector<std::uint32_t>>(cfg.params, "L_grid", "fixation_sweep");
    return 0;
  });
  if (mu_grid.empty() || L_grid.empty()) throw ConfigError("fixation_sweep: mu_grid and L_grid must be nonempty");
  {
    GraphSpec probe = cfg.graph;
    probe.L = L_grid.front();
    step_cap_for(cfg, Graph::build(probe));
  }
  const auto report = fixation_sweep(cfg.graph, mu_grid, L_grid, cfg.runs, cfg.seed,
                                     cfg.step_cap.value_or(kDefaultStepCap), threads);
  std::ostringstream csv;
  write_sweep_csv(report, csv);
  out.csv = true;
  out.text = csv.str();
  RunOutcome outcome;
  outcome.summary = {{"mode", "fixation_sweep"},
                     {"rows", report.rows.size()},
                     {"runs_per_row", cfg.runs},
                     {"truncated", report.truncated},
                     {"monotone_in_mu", report.monotone_in_mu}};
  outcome.exit_code = report.truncated == 0 && report.monotone_in_mu ? 0 : 1;
  return outcome;
}

}  // namespace

std::string to_string(Mode m) {
  for (const auto& e : kModes) {
    if (e.mode == m) return e.name;
  }
  return "?";
}

Mode mode_from_string(const std::string& name) {
  std::string key = name;
  for (char& ch : key) {
    if (ch == '-') ch = '_';
  }
  for (const auto& e : kModes) {
    if (key == e.name) return e.mode;
  }
  throw ConfigError("unknown mode '" + name + "'");
}

GraphSpec graph_spec_from_json(const json& j) {
  return schema("graph", [&] {
    if (!j.is_object()) throw ConfigError("graph: expected an object");
    json flat = j;
    if (j.contains("params")) {
      for (const auto& [k, v] : j.at("params").items()) flat[k] = v;
      flat.erase("params");
    }
    GraphSpec s;
    s.family = family_from_string(required<std::string>(flat, "family", "graph"));
    s.L = field<std::uint32_t>(flat, "L", 0);
    s.n = field<std::uint32_t>(flat, "n", 0);
    s.arc = field<std::uint32_t>(flat, "arc", 0);
    s.side = field<std::uint32_t>(flat, "side", 0);
    s.dim = field<std::uint32_t>(flat, "dim", 2);
    s.degree = field<std::uint32_t>(flat, "degree", 0);
    return s;
  });
}

json to_json(const GraphSpec& s) {
  json j = {{"family", to_string(s.family)}};
  switch (s.family) {
    case Family::cycle:
      j["n"] = s.n;
      j["L"] = s.L;
      if (s.arc) j["arc"] = s.arc;
      break;
    case Family::torus_2d: j["side"] = s.side; break;
    case Family::lattice_box:
      j["L"] = s.L;
      j["dim"] = s.dim;
      break;
    case Family::regular_tree_ball:
      j["L"] = s.L;
      j["degree"] = s.degree;
      break;
  }
  return j;
}

DensitySpec density_from_json(const json& j) {
  return schema("density", [&] {
    if (!j.is_object()) throw ConfigError("density: expected an object");
    const auto law = required<std::string>(j, "law", "density");
    DensitySpec d;
    if (law == "fixed") {
      d = DensitySpec::fixed(field<Count>(j, "oil", 0), field<Count>(j, "water", 0));
    } else if (law == "bernoulli") {
      d = DensitySpec::bernoulli(required<double>(j, "p", "density"));
    } else if (law == "poisson") {
      if (j.contains("mu")) {
        d = DensitySpec::poisson_mu(j.at("mu").get<double>());
      } else {
        d = DensitySpec::poisson(required<double>(j, "lambda", "density"));
      }
    } else {
      throw ConfigError("density: unknown law '" + law + "'");
    }
    d.validate();
    return d;
  });
}

json to_json(const DensitySpec& d) {
  switch (d.law) {
    case DensitySpec::Law::fixed: return {{"law", "fixed"}, {"oil", d.fixed_oil}, {"water", d.fixed_water}};
    case DensitySpec::Law::bernoulli: return {{"law", "bernoulli"}, {"p", d.p}};
    case DensitySpec::Law::poisson: return {{"law", "poisson"}, {"lambda", d.lambda}};
  }
  return {};
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  ExperimentConfig c;
  schema("config", [&] {
    c.mode = mode_from_string(required<std::string>(j, "mode", "config"));
    c.graph = graph_spec_from_json(required<json>(j, "graph", "config"));
    c.density = j.contains("density") ? density_from_json(j.at("density")) : DensitySpec::fixed(0, 0);
    c.seed = field<std::uint64_t>(j, "seed", 0);
    c.runs = field<std::uint64_t>(j, "runs", 1);
    if (j.contains("step_cap") && !j.at("step_cap").is_null()) c.step_cap = j.at("step_cap").get<std::uint64_t>();
    if (j.contains("threads") && !j.at("threads").is_null()) c.threads = j.at("threads").get<unsigned>();
    c.params = field<json>(j, "params", json::object());
    if (!c.params.is_object()) throw ConfigError("config: params must be an object");
    c.out = field<std::string>(j, "out", "");
    return 0;
  });
  if (c.step_cap && *c.step_cap == 0) throw ConfigError("config: step_cap must be >= 1");
  return c;
}

json ExperimentConfig::to_json() const {
  json j = {{"mode", to_string(mode)},
            {"graph", ow::to_json(graph)},
            {"density", ow::to_json(density)},
            {"seed", seed},
            {"runs", runs},
            {"params", params}};
  if (step_cap) j["step_cap"] = *step_cap;
  if (!out.empty()) j["out"] = out;
  return j;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
  return ExperimentConfig::from_json(j);
}

std::string config_hash(const json& j) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

unsigned resolve_threads(std::optional<unsigned> requested) {
  if (requested && *requested > 0) return *requested;
  if (const char* env = std::getenv("OW_THREADS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && v > 0 && v <= 4096) return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? hw : 1;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

SweepReport fixation_sweep(const GraphSpec& family, const std::vector<double>& mu_grid,
                           const std::vector<std::uint32_t>& L_grid, std::uint64_t runs, std::uint64_t seed,
                           std::uint64_t step_cap, unsigned threads) {
  struct Acc {
    double m_o = 0.0, T = 0.0, ghosts = 0.0, exited = 0.0, mass = 0.0;
    std::uint64_t truncated = 0;
  };
  SweepReport report;
  std::vector<std::vector<double>> means(L_grid.size());
  for (double mu : mu_grid) {
    const DensitySpec density = DensitySpec::poisson_mu(mu);
    density.validate();
    for (std::size_t li = 0; li < L_grid.size(); ++li) {
      GraphSpec spec = family;
      spec.L = L_grid[li];
      const Graph g = Graph::build(spec);
      const auto blocks = run_blocks<Acc>(runs, threads, [&](std::uint64_t begin, std::uint64_t end) {
        Acc acc;
        for (std::uint64_t r = begin; r < end; ++r) {
          const auto run = run_index(r);
          const auto c0 = sample_initial(g, density, seed, run);
          const InstructionArray tau(seed, run);
          const auto res = stabilize(g, c0, tau, StrategySpec{}, StabilizeOptions{step_cap, false});
          acc.m_o += static_cast<double>(res.odometer.fires[kOrigin]);
          acc.T += static_cast<double>(res.steps);
          for (Vertex x : g.active()) acc.ghosts += static_cast<double>(res.odometer.waters_into_hole[x]);
          for (Vertex s : g.sinks()) {
            acc.exited += static_cast<double>(res.final_config.oil[s]) + res.final_config.water[s];
          }
          acc.mass += static_cast<double>(c0.total_oil() + c0.total_water());
          if (res.truncated) ++acc.truncated;
        }
        return acc;
      });
      Acc total;
      for (const auto& b : blocks) {
        total.m_o += b.m_o;
        total.T += b.T;
        total.ghosts += b.ghosts;
        total.exited += b.exited;
        total.mass += b.mass;
        total.truncated += b.truncated;
      }
      const double n = runs ? static_cast<double>(runs) : 1.0;
      SweepRow row;
      row.mu = mu;
      row.L = spec.L;
      row.runs = runs;
      row.mean_m_o = total.m_o / n;
      row.mean_T = total.T / n;
      row.truncated = total.truncated;
      row.truncation_rate = static_cast<double>(total.truncated) / n;
      row.mean_ghosts_created = total.ghosts / n;
      row.frac_exited = total.mass > 0.0 ? total.exited / total.mass : 0.0;
      report.truncated += total.truncated;
      means[li].push_back(row.mean_m_o);
      report.rows.push_back(row);
    }
  }
  // Coupled sampling makes m(o) pointwise monotone, so only sorted mu grids are compared.
  for (std::size_t i = 1; i < mu_grid.size(); ++i) {
    if (mu_grid[i] < mu_grid[i - 1]) continue;
    for (const auto& m : means) {
      if (m[i] < m[i - 1]) report.monotone_in_mu = false;
    }
  }
  return report;
}

void write_sweep_csv(const SweepReport& report, std::ostream& out) {
  out << "mu,L,runs,mean_m_o,mean_T,truncation_rate,mean_ghosts_created,frac_exited\n";
  for (const auto& r : report.rows) {
    out << format_double(r.mu) << ',' << r.L << ',' << r.runs << ',' << format_double(r.mean_m_o) << ','
        << format_double(r.mean_T) << ',' << format_double(r.truncation_rate) << ','
        << format_double(r.mean_ghosts_created) << ',' << format_double(r.frac_exited) << '\n';
  }
}

RunOutcome run_experiment(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  const unsigned threads = resolve_threads(config.threads);
  Output out;
  RunOutcome outcome;
  switch (config.mode) {
    case Mode::stabilize: outcome = mode_stabilize(config, threads, out, false); break;
    case Mode::driven: outcome = mode_stabilize(config, threads, out, true); break;
    case Mode::ghost: outcome = mode_ghost(config, threads, out); break;
    case Mode::verify_abelian: outcome = mode_verify_abelian(config, threads, out); break;
    case Mode::verify_monotone: outcome = mode_verify_monotone(config, threads, out); break;
    case Mode::green: outcome = mode_green(config, out); break;
    case Mode::green_scan: outcome = mode_green_scan(config, out); break;
    case Mode::brw: outcome = mode_brw(config, threads, out); break;
    case Mode::section4: outcome = mode_section4(config, threads, out); break;
    case Mode::fixation_sweep: outcome = mode_fixation_sweep(config, threads, out); break;
  }
  if (!config.out.empty()) {
    write_file(config.out, out.text);
    outcome.artifacts.push_back(config.out);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const json cfg = config.to_json();
    const json manifest = {{"config", cfg},
                           {"config_hash", config_hash(cfg)},
                           {"seed", config.seed},
                           {"runs", config.runs},
                           {"version", kVersion},
                           {"threads", threads},
                           {"artifacts", outcome.artifacts},
                           {"exit_code", outcome.exit_code},
                           {"summary", outcome.summary},
                           {"wall_time_s", wall}};
    const std::string manifest_path = config.out + ".manifest.json";
    write_file(manifest_path, manifest.dump(2) + "\n");
    outcome.artifacts.push_back(manifest_path);
  }
  return outcome;
}

}  // namespace ow
