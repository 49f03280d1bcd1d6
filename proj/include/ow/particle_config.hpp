#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "ow/graph.hpp"

namespace ow {

using Count = std::uint32_t;

class ParticleConfig {
 public:
  std::vector<Count> oil;
  std::vector<Count> water;

  ParticleConfig() = default;
  explicit ParticleConfig(std::size_t n) : oil(n, 0), water(n, 0) {}

  std::size_t size() const { return oil.size(); }

  Count pairs(Vertex x) const { return oil[x] < water[x] ? oil[x] : water[x]; }
  Count unpaired(Vertex x) const { return oil[x] < water[x] ? water[x] - oil[x] : oil[x] - water[x]; }
  bool is_hole(Vertex x) const { return oil[x] == water[x]; }
  bool is_stable(Vertex x) const { return pairs(x) == 0; }
  std::int64_t water_minus_oil(Vertex x) const {
    return static_cast<std::int64_t>(water[x]) - static_cast<std::int64_t>(oil[x]);
  }

  void add_pair(Vertex x) {
    ++oil[x];
    ++water[x];
  }

  std::uint64_t total_oil() const;
  std::uint64_t total_water() const;

  bool operator==(const ParticleConfig&) const = default;
};

bool is_stable_on(const ParticleConfig& c, const Graph& g);

struct ExtendedConfig {
  ParticleConfig base;
  std::vector<Count> ghost;

  ExtendedConfig() = default;
  explicit ExtendedConfig(ParticleConfig c) : base(std::move(c)), ghost(base.size(), 0) {}
};

// Per-species law applied i.i.d. at every active vertex.
struct DensitySpec {
  enum class Law { fixed, bernoulli, poisson };

  Law law = Law::fixed;
  Count fixed_oil = 0;
  Count fixed_water = 0;
  double p = 0.0;
  double lambda = 0.0;

  static DensitySpec fixed(Count oil, Count water) { return {Law::fixed, oil, water, 0.0, 0.0}; }
  static DensitySpec bernoulli(double p) { return {Law::bernoulli, 0, 0, p, 0.0}; }
  static DensitySpec poisson(double lambda) { return {Law::poisson, 0, 0, 0.0, lambda}; }
  // Poisson law with mu = expected total particles per vertex.
  static DensitySpec poisson_mu(double mu) { return poisson(mu / 2.0); }

  double mu() const;
  void validate() const;

  // Inverse CDF: the smallest k with P(X <= k) > u. Monotone in u and in the
  // law's parameter, which makes draws from shared uniforms coupled.
  Count quantile(bool water, double u) const;
};

// Independent uniform in [0, 1) for (label, species); stream 2 of the instruction PRF.
double sampling_uniform(std::uint64_t seed, std::uint32_t run, std::uint32_t label, bool water);

// Sinks start empty. Counts at a vertex depend only on (seed, run, label), so
// graphs sharing labels see identical draws and larger laws dominate smaller ones.
ParticleConfig sample_initial(const Graph& g, const DensitySpec& spec, std::uint64_t seed, std::uint32_t run = 0);

// True when a <= b in both species at every vertex.
bool dominated_by(const ParticleConfig& a, const ParticleConfig& b);

struct Odometer {
  std::vector<std::uint64_t> fires;                // m
  std::vector<std::uint64_t> pair_or_ghost_jumps;  // m~
  std::vector<std::uint64_t> ghost_jumps;          // w
  std::vector<std::uint64_t> ghosts_created;       // H
  std::vector<std::uint64_t> waters_into_hole;

  Odometer() = default;
  explicit Odometer(std::size_t n)
      : fires(n, 0), pair_or_ghost_jumps(n, 0), ghost_jumps(n, 0), ghosts_created(n, 0), waters_into_hole(n, 0) {}

  std::uint64_t total_fires() const;
  // m(x) == m~(x) - w(x) at every vertex.
  bool bookkeeping_holds() const;
};

nlohmann::json to_json(const ParticleConfig& c);
nlohmann::json to_json(const ExtendedConfig& c);
// Accepts {"oil": [...], "water": [...]} with an optional "ghost" array.
ExtendedConfig extended_config_from_json(const nlohmann::json& j);
ParticleConfig config_from_json(const nlohmann::json& j);

}  // namespace ow
