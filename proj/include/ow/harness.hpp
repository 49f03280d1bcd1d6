#pragma once
// Experiment configuration, mode dispatch and result files.
//
// A config is one JSON object:
//
//   {
//     "mode": "brw",
//     "graph": {"family": "cycle", "n": 8, "arc": 6},
//     "density": {"law": "fixed", "oil": 1, "water": 1},
//     "seed": 1, "runs": 100000, "threads": 4,
//     "step_cap": 100000000,
//     "params": {"targets": [0, 1, 2]},
//     "out": "brw.csv"
//   }
//
// Graph fields mirror GraphSpec; a nested "params" object inside "graph" is
// merged into it. Tabular results go to `out` as CSV (JSON for single-run
// modes) and a manifest is written next to it as `<out>.manifest.json`.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ow/graph.hpp"
#include "ow/particle_config.hpp"

namespace ow {

inline constexpr const char* kVersion = "1.0.0";

enum class Mode {
  stabilize,
  driven,
  ghost,
  verify_abelian,
  verify_monotone,
  green,
  green_scan,
  brw,
  section4,
  fixation_sweep
};

std::string to_string(Mode m);
Mode mode_from_string(const std::string& name);

struct ExperimentConfig {
  Mode mode = Mode::stabilize;
  GraphSpec graph;
  DensitySpec density;
  std::uint64_t seed = 0;
  std::uint64_t runs = 1;
  std::optional<std::uint64_t> step_cap;
  std::optional<unsigned> threads;
  nlohmann::json params = nlohmann::json::object();
  std::string out;

  // Throws ConfigError on schema violations.
  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

GraphSpec graph_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GraphSpec& spec);
DensitySpec density_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DensitySpec& spec);

ExperimentConfig load_config(const std::string& path);

// 64-bit FNV-1a of the canonical (sorted-key) JSON dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& j);

// Explicit value, else OW_THREADS, else the hardware concurrency.
unsigned resolve_threads(std::optional<unsigned> requested);

// %.17g, locale independent.
std::string format_double(double v);

struct SweepRow {
  double mu = 0.0;
  std::uint32_t L = 0;
  std::uint64_t runs = 0;
  double mean_m_o = 0.0;
  double mean_T = 0.0;
  double truncation_rate = 0.0;
  double mean_ghosts_created = 0.0;  // mean of sum over K of waters landing on a hole
  double frac_exited = 0.0;          // particles in the sink / all particles
  std::uint64_t truncated = 0;
};

struct SweepReport {
  std::vector<SweepRow> rows;  // mu-major, L-minor
  std::uint64_t truncated = 0;
  bool monotone_in_mu = true;  // mean m(o) non-decreasing in mu at each L
};

// Poisson(mu / 2) per species on the family of `family` truncated at each L.
SweepReport fixation_sweep(const GraphSpec& family, const std::vector<double>& mu_grid,
                           const std::vector<std::uint32_t>& L_grid, std::uint64_t runs, std::uint64_t seed,
                           std::uint64_t step_cap, unsigned threads);

void write_sweep_csv(const SweepReport& report, std::ostream& out);

struct RunOutcome {
  int exit_code = 0;  // 0 pass, 1 verification failure
  nlohmann::json summary;
  std::vector<std::string> artifacts;
};

// Executes the mode and writes artifacts when config.out is set.
RunOutcome run_experiment(const ExperimentConfig& config);

}  // namespace ow
