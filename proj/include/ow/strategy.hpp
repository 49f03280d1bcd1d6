#pragma once
// Stabilization strategies F_K: pick an unstable active vertex, or none.

#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ow/graph.hpp"
#include "ow/particle_config.hpp"

namespace ow {

enum class Policy { lowest_id, highest_pairs, random, fixed_order, adversarial_nearest_boundary };

struct StrategySpec {
  Policy policy = Policy::lowest_id;
  std::uint64_t seed = 0;     // random
  std::vector<Vertex> order;  // fixed_order: listed vertices first, in list order; the rest by id

  // "lowest_id", "highest_pairs", "random[:SEED]", "fixed_order:3,1,2",
  // "adversarial_nearest_boundary".
  static StrategySpec parse(const std::string& text);
  std::string name() const;
};

class Strategy {
 public:
  Strategy(const Graph& g, StrategySpec spec);

  void reset(const ParticleConfig& c);
  // Must be called whenever the counts at x changed.
  void update(Vertex x, const ParticleConfig& c);
  std::optional<Vertex> select();

  const StrategySpec& spec() const { return spec_; }

 private:
  static constexpr std::int64_t kAbsent = INT64_MIN;

  std::int64_t key_of(Vertex x, const ParticleConfig& c) const;

  const Graph* graph_;
  StrategySpec spec_;
  std::vector<std::int64_t> static_key_;
  std::set<std::pair<std::int64_t, Vertex>> ordered_;
  std::vector<std::int64_t> current_key_;
  std::vector<Vertex> pool_;
  std::vector<std::uint32_t> pool_pos_;
  std::mt19937_64 rng_;
};

}  // namespace ow
