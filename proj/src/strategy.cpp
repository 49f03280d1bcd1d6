#include "ow/strategy.hpp"

#include <sstream>

#include "ow/error.hpp"

namespace ow {

namespace {

constexpr std::uint32_t kNotPooled = UINT32_MAX;

std::uint64_t parse_u64(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(text, &used, 0);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("strategy: bad " + what + " '" + text + "'");
  }
}

}  // namespace

StrategySpec StrategySpec::parse(const std::string& text) {
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  const std::string tail = colon == std::string::npos ? std::string{} : text.substr(colon + 1);
  StrategySpec spec;
  if (head == "lowest_id") {
    spec.policy = Policy::lowest_id;
  } else if (head == "highest_pairs") {
    spec.policy = Policy::highest_pairs;
  } else if (head == "adversarial_nearest_boundary") {
    spec.policy = Policy::adversarial_nearest_boundary;
  } else if (head == "random") {
    spec.policy = Policy::random;
    if (!tail.empty()) spec.seed = parse_u64(tail, "seed");
  } else if (head == "fixed_order") {
    spec.policy = Policy::fixed_order;
    std::stringstream ss(tail);
    for (std::string item; std::getline(ss, item, ',');) {
      if (!item.empty()) spec.order.push_back(static_cast<Vertex>(parse_u64(item, "vertex")));
    }
  } else {
    throw ConfigError("unknown strategy '" + text + "'");
  }
  return spec;
}

std::string StrategySpec::name() const {
  switch (policy) {
    case Policy::lowest_id: return "lowest_id";
    case Policy::highest_pairs: return "highest_pairs";
    case Policy::random: return "random:" + std::to_string(seed);
    case Policy::adversarial_nearest_boundary: return "adversarial_nearest_boundary";
    case Policy::fixed_order: {
      std::string s = "fixed_order:";
      for (std::size_t i = 0; i < order.size(); ++i) s += (i ? "," : "") + std::to_string(order[i]);
      return s;
    }
  }
  return "?";
}

Strategy::Strategy(const Graph& g, StrategySpec spec)
    : graph_(&g), spec_(std::move(spec)), static_key_(g.vertex_count(), 0), rng_(spec_.seed) {
  if (spec_.policy == Policy::adversarial_nearest_boundary && !g.sinks().empty()) {
    const auto dist = g.distances_from(g.sinks());
    for (Vertex x = 0; x < g.vertex_count(); ++x) static_key_[x] = dist[x];
  }
  if (spec_.policy == Policy::fixed_order) {
    const auto unlisted = static_cast<std::int64_t>(spec_.order.size());
    for (Vertex x = 0; x < g.vertex_count(); ++x) static_key_[x] = unlisted;
    for (std::size_t i = 0; i < spec_.order.size(); ++i) {
      const Vertex x = spec_.order[i];
      if (!g.contains(x)) throw ConfigError("fixed_order: unknown vertex " + std::to_string(x));
      if (static_key_[x] == unlisted) static_key_[x] = static_cast<std::int64_t>(i);
    }
  }
}

std::int64_t Strategy::key_of(Vertex x, const ParticleConfig& c) const {
  if (spec_.policy == Policy::highest_pairs) return -static_cast<std::int64_t>(c.pairs(x));
  return static_key_[x];
}

void Strategy::reset(const ParticleConfig& c) {
  ordered_.clear();
  pool_.clear();
  current_key_.assign(graph_->vertex_count(), kAbsent);
  pool_pos_.assign(graph_->vertex_count(), kNotPooled);
  for (Vertex x : graph_->active()) update(x, c);
}

void Strategy::update(Vertex x, const ParticleConfig& c) {
  if (!graph_->is_active(x)) return;
  const bool unstable = !c.is_stable(x);
  if (spec_.policy == Policy::random) {
    if (unstable && pool_pos_[x] == kNotPooled) {
      pool_pos_[x] = static_cast<std::uint32_t>(pool_.size());
      pool_.push_back(x);
    } else if (!unstable && pool_pos_[x] != kNotPooled) {
      const Vertex last = pool_.back();
      pool_[pool_pos_[x]] = last;
      pool_pos_[last] = pool_pos_[x];
      pool_.pop_back();
      pool_pos_[x] = kNotPooled;
    }
    return;
  }
  const std::int64_t key = unstable ? key_of(x, c) : kAbsent;
  if (key == current_key_[x]) return;
  if (current_key_[x] != kAbsent) ordered_.erase({current_key_[x], x});
  if (key != kAbsent) ordered_.insert({key, x});
  current_key_[x] = key;
}

std::optional<Vertex> Strategy::select() {
  if (spec_.policy == Policy::random) {
    if (pool_.empty()) return std::nullopt;
    const std::uint64_t word = rng_() >> 32;
    return pool_[(word * pool_.size()) >> 32];
  }
  if (ordered_.empty()) return std::nullopt;
  return ordered_.begin()->second;
}

}  // namespace ow
