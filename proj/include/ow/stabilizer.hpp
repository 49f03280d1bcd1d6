#pragma once
// Stabilization of the active set K under a strategy, the driven extension
// that re-injects pairs at the origin, and the Abelian / monotonicity harnesses.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ow/graph.hpp"
#include "ow/instructions.hpp"
#include "ow/particle_config.hpp"
#include "ow/strategy.hpp"

namespace ow {

inline constexpr std::uint64_t kDefaultStepCap = 100'000'000;

struct StabilizeOptions {
  std::uint64_t step_cap = kDefaultStepCap;
  bool record_r_walk = true;
};

// Transition counts of R_j = water(o) - oil(o), sampled after each firing at a
// neighbor of o.
struct RWalkStats {
  std::int64_t r0 = 0;
  std::int64_t last = 0;
  std::uint64_t up = 0;
  std::uint64_t down = 0;
  std::uint64_t lazy = 0;
  std::uint64_t up_crossings = 0;             // J(N_K): steps with R_k = 0, R_{k+1} = 1
  std::uint64_t up_crossings_first_phi = 0;   // J(phi), driven mode only

  std::uint64_t length() const { return up + down + lazy; }
};

// J(j): number of k in [0, j) with r[k] == 0 and r[k+1] == 1.
std::uint64_t count_up_crossings(std::span<const std::int64_t> r, std::size_t j);

struct StabilizationResult {
  ParticleConfig final_config;
  Odometer odometer;
  std::uint64_t steps = 0;           // T: number of firings
  std::vector<std::int64_t> r_walk;  // R_0, R_1, ... when recorded
  RWalkStats r_stats;
  std::uint64_t n_k = 0;             // firings at neighbors of o
  std::uint64_t injections = 0;      // driven mode pairs added at o
  bool truncated = false;

  // H_{K,F_K}(x): waters that fell into a hole at x.
  const std::vector<std::uint64_t>& holes_filled_at() const { return odometer.waters_into_hole; }
};

class Stabilizer {
 public:
  Stabilizer(const Graph& g, ParticleConfig c0, const InstructionArray& tau, const StrategySpec& strategy,
             StabilizeOptions options);

  // Fires until K is stable or the step cap is reached; false on cap.
  bool run_until_stable();
  void inject_pair_at_origin();

  std::uint64_t steps() const { return result_.steps; }
  std::uint64_t neighbor_firings() const { return result_.n_k; }
  const ParticleConfig& config() const { return result_.final_config; }

  StabilizationResult take() && { return std::move(result_); }

  // Only counted while neighbor_firings() < phi.
  void set_phi(std::uint64_t phi) { phi_ = phi; }

 private:
  void fire_one(Vertex x);

  const Graph& g_;
  const InstructionArray& tau_;
  Strategy strategy_;
  StabilizeOptions options_;
  std::vector<std::uint8_t> neighbor_of_origin_;
  FiringCounter h_;
  std::uint64_t phi_ = 0;
  StabilizationResult result_;
};

StabilizationResult stabilize(const Graph& g, const ParticleConfig& c0, const InstructionArray& tau,
                              const StrategySpec& strategy, StabilizeOptions options = {});

// Stabilizes, then keeps adding one pair at o whenever K is stable until the
// neighbors of o have fired phi times; the final stabilization is completed
// without further injections. phi == 0 is plain stabilization.
StabilizationResult driven_stabilize(const Graph& g, const ParticleConfig& c0, const InstructionArray& tau,
                                     const StrategySpec& strategy, std::uint64_t phi, StabilizeOptions options = {});

struct AbelianReport {
  bool pass = false;
  bool inconclusive = false;
  std::vector<std::string> strategies;
  std::vector<std::uint64_t> steps;
  std::vector<std::pair<std::size_t, std::size_t>> mismatches;
};

// Pairwise comparison of odometers and final configurations.
AbelianReport compare_stabilizations(const std::vector<StabilizationResult>& runs,
                                     std::vector<std::string> names = {});

AbelianReport verify_abelian(const Graph& g, const ParticleConfig& c0, std::uint64_t seed,
                             const std::vector<StrategySpec>& strategies, std::uint64_t step_cap,
                             std::uint32_t run = 0);

struct MonotonicityReport {
  bool pass = false;
  bool inconclusive = false;
  std::vector<Vertex> violations;  // vertex ids of the smaller graph
  std::uint64_t steps_small = 0;
  std::uint64_t steps_large = 0;
};

// m_K <= m_K' on K for c_small <= c_large and K subset of K'. Vertices are
// matched by label; throws MappingError when labels or neighbor order disagree
// and ConfigError when c_small is not dominated by c_large.
MonotonicityReport verify_monotonicity(const Graph& g_small, const ParticleConfig& c_small, const Graph& g_large,
                                       const ParticleConfig& c_large, std::uint64_t seed, std::uint64_t step_cap,
                                       std::uint32_t run = 0);

}  // namespace ow
