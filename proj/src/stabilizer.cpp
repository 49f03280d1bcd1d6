#include "ow/stabilizer.hpp"

#include <string>

#include "ow/error.hpp"

namespace ow {

std::uint64_t count_up_crossings(std::span<const std::int64_t> r, std::size_t j) {
  std::uint64_t count = 0;
  for (std::size_t k = 0; k < j && k + 1 < r.size(); ++k) {
    if (r[k] == 0 && r[k + 1] == 1) ++count;
  }
  return count;
}

Stabilizer::Stabilizer(const Graph& g, ParticleConfig c0, const InstructionArray& tau, const StrategySpec& strategy,
                       StabilizeOptions options)
    : g_(g),
      tau_(tau),
      strategy_(g, strategy),
      options_(options),
      neighbor_of_origin_(g.vertex_count(), 0),
      h_(g.vertex_count()) {
  if (c0.size() != g.vertex_count()) throw ConfigError("stabilize: configuration size does not match the graph");
  if (options_.step_cap < 1) throw ConfigError("stabilize: step cap must be >= 1");
  for (Vertex y : g.neighbors(kOrigin)) neighbor_of_origin_[y] = 1;

  result_.final_config = std::move(c0);
  result_.odometer = Odometer(g.vertex_count());
  result_.r_stats.r0 = result_.r_stats.last = result_.final_config.water_minus_oil(kOrigin);
  if (options_.record_r_walk) result_.r_walk.push_back(result_.r_stats.r0);
  strategy_.reset(result_.final_config);
}

void Stabilizer::fire_one(Vertex x) {
  auto& c = result_.final_config;
  const FireOutcome out = fire(g_, c, h_, tau_, x);
  auto& odo = result_.odometer;
  ++odo.fires[x];
  ++odo.pair_or_ghost_jumps[x];
  ++result_.steps;

  if (out.oil_to != out.water_to && c.water[out.water_to] == c.oil[out.water_to] + 1) {
    ++odo.waters_into_hole[out.water_to];
  }

  if (neighbor_of_origin_[x]) {
    auto& rs = result_.r_stats;
    const std::int64_t next = c.water_minus_oil(kOrigin);
    if (next == rs.last + 1) {
      ++rs.up;
      if (rs.last == 0) {
        ++rs.up_crossings;
        if (result_.n_k < phi_) ++rs.up_crossings_first_phi;
      }
    } else if (next == rs.last - 1) {
      ++rs.down;
    } else {
      ++rs.lazy;
    }
    rs.last = next;
    ++result_.n_k;
    if (options_.record_r_walk) result_.r_walk.push_back(next);
  }

  strategy_.update(x, c);
  strategy_.update(out.oil_to, c);
  if (out.water_to != out.oil_to) strategy_.update(out.water_to, c);
}

bool Stabilizer::run_until_stable() {
  while (auto x = strategy_.select()) {
    if (result_.steps >= options_.step_cap) {
      result_.truncated = true;
      return false;
    }
    if (!g_.is_active(*x) || result_.final_config.is_stable(*x)) {
      throw IllegalOperation("strategy " + strategy_.spec().name() + " selected ineligible vertex " +
                             std::to_string(*x));
    }
    fire_one(*x);
  }
  return true;
}

void Stabilizer::inject_pair_at_origin() {
  result_.final_config.add_pair(kOrigin);
  ++result_.injections;
  strategy_.update(kOrigin, result_.final_config);
}

StabilizationResult stabilize(const Graph& g, const ParticleConfig& c0, const InstructionArray& tau,
                              const StrategySpec& strategy, StabilizeOptions options) {
  Stabilizer s(g, c0, tau, strategy, options);
  s.run_until_stable();
  return std::move(s).take();
}

StabilizationResult driven_stabilize(const Graph& g, const ParticleConfig& c0, const InstructionArray& tau,
                                     const StrategySpec& strategy, std::uint64_t phi, StabilizeOptions options) {
  bool reachable = false;
  for (Vertex y : g.neighbors(kOrigin)) reachable = reachable || g.is_active(y);
  if (phi > 0 && !reachable) throw ConfigError("driven: origin has no neighbor in K, so phi can never be reached");
  Stabilizer s(g, c0, tau, strategy, options);
  s.set_phi(phi);
  while (s.run_until_stable() && s.neighbor_firings() < phi) {
    s.inject_pair_at_origin();
  }
  return std::move(s).take();
}

AbelianReport compare_stabilizations(const std::vector<StabilizationResult>& runs, std::vector<std::string> names) {
  AbelianReport report;
  report.strategies = std::move(names);
  for (const auto& r : runs) {
    report.steps.push_back(r.steps);
    if (r.truncated) report.inconclusive = true;
  }
  for (std::size_t a = 0; a < runs.size(); ++a) {
    for (std::size_t b = a + 1; b < runs.size(); ++b) {
      if (runs[a].odometer.fires != runs[b].odometer.fires || runs[a].final_config != runs[b].final_config) {
        report.mismatches.emplace_back(a, b);
      }
    }
  }
  report.pass = !report.inconclusive && report.mismatches.empty();
  return report;
}

AbelianReport verify_abelian(const Graph& g, const ParticleConfig& c0, std::uint64_t seed,
                             const std::vector<StrategySpec>& strategies, std::uint64_t step_cap, std::uint32_t run) {
  if (strategies.empty()) throw ConfigError("verify_abelian: at least one strategy is required");
  const InstructionArray tau(seed, run);
  std::vector<StabilizationResult> runs;
  std::vector<std::string> names;
  StabilizeOptions options;
  options.step_cap = step_cap;
  options.record_r_walk = false;
  for (const auto& s : strategies) {
    runs.push_back(stabilize(g, c0, tau, s, options));
    names.push_back(s.name());
  }
  return compare_stabilizations(runs, std::move(names));
}

MonotonicityReport verify_monotonicity(const Graph& g_small, const ParticleConfig& c_small, const Graph& g_large,
                                       const ParticleConfig& c_large, std::uint64_t seed, std::uint64_t step_cap,
                                       std::uint32_t run) {
  if (c_small.size() != g_small.vertex_count() || c_large.size() != g_large.vertex_count()) {
    throw ConfigError("verify_monotonicity: configuration size does not match its graph");
  }
  std::vector<Vertex> to_large(g_small.vertex_count());
  for (Vertex v = 0; v < g_small.vertex_count(); ++v) {
    const auto mapped = g_large.find_label(g_small.label(v));
    if (!mapped) throw MappingError("verify_monotonicity: label " + std::to_string(g_small.label(v)) + " missing");
    to_large[v] = *mapped;
  }
  for (Vertex v : g_small.active()) {
    const Vertex w = to_large[v];
    if (!g_large.is_active(w)) throw MappingError("verify_monotonicity: K is not contained in K'");
    const auto a = g_small.neighbors(v);
    const auto b = g_large.neighbors(w);
    if (a.size() != b.size()) throw MappingError("verify_monotonicity: degree differs at a shared vertex");
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (g_small.label(a[i]) != g_large.label(b[i])) {
        throw MappingError("verify_monotonicity: neighbor order differs at a shared vertex");
      }
    }
  }
  for (Vertex v = 0; v < g_small.vertex_count(); ++v) {
    const Vertex w = to_large[v];
    if (c_small.oil[v] > c_large.oil[w] || c_small.water[v] > c_large.water[w]) {
      throw ConfigError("verify_monotonicity: initial configurations are not ordered");
    }
  }

  const InstructionArray tau(seed, run);
  StabilizeOptions options;
  options.step_cap = step_cap;
  options.record_r_walk = false;
  const StrategySpec lowest{};
  const auto small = stabilize(g_small, c_small, tau, lowest, options);
  const auto large = stabilize(g_large, c_large, tau, lowest, options);

  MonotonicityReport report;
  report.steps_small = small.steps;
  report.steps_large = large.steps;
  report.inconclusive = small.truncated || large.truncated;
  for (Vertex v : g_small.active()) {
    if (small.odometer.fires[v] > large.odometer.fires[to_large[v]]) report.violations.push_back(v);
  }
  report.pass = !report.inconclusive && report.violations.empty();
  return report;
}

}  // namespace ow
