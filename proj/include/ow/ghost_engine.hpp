#pragma once
// Ghost-pair stabilization.
//
// Each step moves either one ghost or one oil-water pair out of an active
// vertex. When the water of a moving pair lands on a hole x in K (equal oil
// and water counts before the step) while the oil lands elsewhere, a ghost is
// created at x. The run ends once K holds no pair and no ghost. With a target
// y, the process
//
//   M_t = sum_{x in K} (pairs(x) + ghosts(x)) g_x - (Lap g)_y * #{i <= t : x_i = y}
//
// is tracked, g being the harmonic function of harmonic_solve(K, y).

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ow/graph.hpp"
#include "ow/instructions.hpp"
#include "ow/particle_config.hpp"
#include "ow/stabilizer.hpp"

namespace ow {

enum class SchedulerPolicy { ghosts_first, pairs_first, random };

struct SchedulerSpec {
  SchedulerPolicy policy = SchedulerPolicy::ghosts_first;
  std::uint64_t seed = 0;

  // "ghosts_first", "pairs_first", "random[:SEED]".
  static SchedulerSpec parse(const std::string& text);
  std::string name() const;
};

struct Mover {
  enum class Kind { ghost, pair };
  Kind kind = Kind::pair;
  Vertex at = kOrigin;
};

// Applies one move with explicit destinations (for a ghost only `oil_to` is
// used). Returns the vertex where a ghost was created, if any, and updates
// the odometer when one is given.
std::optional<Vertex> apply_move(const Graph& g, ExtendedConfig& c, Mover mover, Vertex oil_to, Vertex water_to,
                                 Odometer* odometer = nullptr);

class MartingaleTracker {
 public:
  MartingaleTracker(const Graph& g, Vertex target);

  Vertex target() const { return target_; }
  const std::vector<double>& harmonic() const { return g_; }
  double laplacian_at_target() const { return laplacian_at_target_; }

  // M from scratch for a configuration and a count of jumps made from the target.
  double evaluate(const Graph& graph, const ExtendedConfig& c, std::uint64_t target_jumps) const;
  // g_x * (pairs + ghosts) at x, zero off K.
  double contribution(const Graph& graph, const ExtendedConfig& c, Vertex x) const;

 private:
  Vertex target_;
  std::vector<double> g_;
  double laplacian_at_target_ = 0.0;
};

// |E[M_t | F_{t-1}] - M_{t-1}| by exact enumeration of the degree (ghost) or
// degree^2 (pair) equally likely outcomes.
double check_martingale_step(const Graph& g, const ExtendedConfig& before, Mover mover,
                             const MartingaleTracker& tracker, std::uint64_t target_jumps_before);

struct GhostOptions {
  std::uint64_t step_cap = kDefaultStepCap;
  bool check_steps = false;   // run check_martingale_step before every step
  bool record_trace = false;  // keep (M_t, E[M_t | F_{t-1}]) per step; needs check_steps
  std::uint64_t recompute_interval = std::uint64_t{1} << 16;
};

struct MartingaleSample {
  double value = 0.0;     // M_t
  double expected = 0.0;  // E[M_t | F_{t-1}]
};

struct GhostRunResult {
  ExtendedConfig final;
  Odometer odometer;
  std::uint64_t T = 0;
  bool truncated = false;
  std::uint64_t ghosts_created_total = 0;

  std::optional<double> martingale;  // final M_T when a target was given
  std::vector<MartingaleSample> trace;
  std::uint64_t steps_checked = 0;
  double max_step_deviation = 0.0;
  double max_drift = 0.0;  // incremental vs recomputed M
};

GhostRunResult ghost_stabilize(const Graph& g, const ParticleConfig& sigma, const InstructionArray& tau,
                               const SchedulerSpec& scheduler = {}, std::optional<Vertex> target = std::nullopt,
                               GhostOptions options = {});

struct BrwReport {
  Vertex target = kOrigin;
  std::uint64_t runs = 0;
  double mean = 0.0;   // sample mean of m~(y)
  double se = 0.0;
  double exact = 0.0;  // sum_x pairs(sigma, x) G_K(x, y)
  double z = 0.0;
  double rel_err = 0.0;
  std::uint64_t bookkeeping_failures = 0;
  std::uint64_t truncated = 0;
  double mean_ghosts_created = 0.0;
};

BrwReport verify_lemma_brw(const Graph& g, const ParticleConfig& sigma, Vertex y, std::uint64_t n_runs,
                           std::uint64_t seed, const SchedulerSpec& scheduler = {}, unsigned threads = 1);

struct Section4Row {
  Vertex x = 0;
  double mean_m_tilde = 0.0;
  double se_m_tilde = 0.0;
  double ewl_bound = 0.0;  // sum_y mu G(y, x)
  double brw_rhs = 0.0;    // sum_y mean pairs_0(y) G(y, x)
  bool ewl_ok = false;     // mean_m_tilde <= ewl_bound + 3 se
  double mean_w = 0.0;
  double egl_rhs = 0.0;    // sum_y mean H(y) G(y, x)
  double egl_se = 0.0;     // standard error of the per-run difference
  double egl_z = 0.0;
  bool egl_ok = false;     // |egl_z| <= 3
  double mean_H = 0.0;
  double mean_m = 0.0;
};

struct Section4Report {
  std::uint64_t runs = 0;
  double mu = 0.0;
  std::vector<Section4Row> rows;  // one per vertex of K
  std::uint64_t bookkeeping_failures = 0;
  std::uint64_t truncated = 0;
  bool pass = false;
};

// K = active set of g (built as B_L). Initial configurations drawn from nu per run.
Section4Report collect_section4_counters(const Graph& g, const DensitySpec& nu, std::uint64_t n_runs,
                                         std::uint64_t seed, const SchedulerSpec& scheduler = {},
                                         unsigned threads = 1);

}  // namespace ow
