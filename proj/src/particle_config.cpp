#include "ow/particle_config.hpp"

#include <cmath>
#include <numeric>

#include "ow/error.hpp"
#include "ow/instructions.hpp"

namespace ow {

std::uint64_t ParticleConfig::total_oil() const {
  return std::accumulate(oil.begin(), oil.end(), std::uint64_t{0});
}

std::uint64_t ParticleConfig::total_water() const {
  return std::accumulate(water.begin(), water.end(), std::uint64_t{0});
}

bool is_stable_on(const ParticleConfig& c, const Graph& g) {
  for (Vertex x : g.active()) {
    if (!c.is_stable(x)) return false;
  }
  return true;
}

double DensitySpec::mu() const {
  switch (law) {
    case Law::fixed: return static_cast<double>(fixed_oil) + static_cast<double>(fixed_water);
    case Law::bernoulli: return 2.0 * p;
    case Law::poisson: return 2.0 * lambda;
  }
  return 0.0;
}

void DensitySpec::validate() const {
  if (law == Law::bernoulli && !(p >= 0.0 && p <= 1.0)) throw ConfigError("density: bernoulli p must lie in [0, 1]");
  if (law == Law::poisson && !(lambda >= 0.0 && std::isfinite(lambda))) {
    throw ConfigError("density: poisson lambda must be finite and >= 0");
  }
}

Count DensitySpec::quantile(bool water, double u) const {
  switch (law) {
    case Law::fixed: return water ? fixed_water : fixed_oil;
    case Law::bernoulli: return u < p ? 1 : 0;
    case Law::poisson: {
      if (lambda <= 0.0) return 0;
      double term = std::exp(-lambda);
      double cdf = term;
      Count k = 0;
      const auto k_max = static_cast<Count>(20.0 * lambda + 200.0);
      while (cdf <= u && k < k_max) {
        ++k;
        term *= lambda / static_cast<double>(k);
        cdf += term;
      }
      return k;
    }
  }
  return 0;
}

double sampling_uniform(std::uint64_t seed, std::uint32_t run, std::uint32_t label, bool water) {
  const InstructionArray prf(seed, run);
  const auto b = prf.block(Stream::sampling, label, water ? 1 : 0);
  const std::uint64_t bits = (std::uint64_t{b[0]} << 21) ^ (std::uint64_t{b[1]} >> 11);
  return static_cast<double>(bits & ((std::uint64_t{1} << 53) - 1)) * 0x1.0p-53;
}

ParticleConfig sample_initial(const Graph& g, const DensitySpec& spec, std::uint64_t seed, std::uint32_t run) {
  spec.validate();
  ParticleConfig c(g.vertex_count());
  for (Vertex x : g.active()) {
    c.oil[x] = spec.quantile(false, sampling_uniform(seed, run, g.label(x), false));
    c.water[x] = spec.quantile(true, sampling_uniform(seed, run, g.label(x), true));
  }
  return c;
}

bool dominated_by(const ParticleConfig& a, const ParticleConfig& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t x = 0; x < a.size(); ++x) {
    if (a.oil[x] > b.oil[x] || a.water[x] > b.water[x]) return false;
  }
  return true;
}

std::uint64_t Odometer::total_fires() const {
  return std::accumulate(fires.begin(), fires.end(), std::uint64_t{0});
}

bool Odometer::bookkeeping_holds() const {
  for (std::size_t x = 0; x < fires.size(); ++x) {
    if (fires[x] + ghost_jumps[x] != pair_or_ghost_jumps[x]) return false;
  }
  return true;
}

nlohmann::json to_json(const ParticleConfig& c) {
  return {{"oil", c.oil}, {"water", c.water}};
}

nlohmann::json to_json(const ExtendedConfig& c) {
  auto j = to_json(c.base);
  j["ghost"] = c.ghost;
  return j;
}

ExtendedConfig extended_config_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("oil") || !j.contains("water")) {
    throw ConfigError("config: expected an object with \"oil\" and \"water\" arrays");
  }
  ParticleConfig base;
  try {
    base.oil = j.at("oil").get<std::vector<Count>>();
    base.water = j.at("water").get<std::vector<Count>>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (base.oil.size() != base.water.size()) throw ConfigError("config: oil and water arrays differ in length");
  ExtendedConfig out(std::move(base));
  if (j.contains("ghost")) {
    try {
      out.ghost = j.at("ghost").get<std::vector<Count>>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
    if (out.ghost.size() != out.base.size()) throw ConfigError("config: ghost array has the wrong length");
  }
  return out;
}

ParticleConfig config_from_json(const nlohmann::json& j) {
  return extended_config_from_json(j).base;
}

}  // namespace ow
