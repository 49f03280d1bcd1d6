#include "ow/graph.hpp"

#include <algorithm>
#include <cstdlib>
#include <deque>
#include <map>
#include <ostream>

#include "ow/error.hpp"

namespace ow {

namespace {

constexpr std::uint32_t kLatticeOffset = 512;
constexpr std::uint32_t kLatticeMaxRadius = 500;
constexpr std::size_t kMaxVertices = std::size_t{1} << 26;

struct RawGraph {
  std::vector<std::uint32_t> labels;
  std::vector<std::vector<Vertex>> adjacency;
  std::vector<std::uint8_t> active;
};

std::uint32_t encode_lattice(const std::vector<int>& c) {
  std::uint32_t label = 0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    label |= static_cast<std::uint32_t>(c[i] + static_cast<int>(kLatticeOffset)) << (10 * i);
  }
  return label;
}

int l1_norm(const std::vector<int>& c) {
  int s = 0;
  for (int v : c) s += std::abs(v);
  return s;
}

RawGraph build_cycle(const GraphSpec& spec) {
  const auto n = static_cast<std::int64_t>(spec.n);
  if (spec.n < 3) throw ConfigError("cycle: length n must be >= 3");

  std::int64_t lo = 0;
  std::int64_t hi = 0;
  if (spec.arc > 0) {
    if (spec.arc > spec.n) throw ConfigError("cycle: arc length must not exceed n");
    lo = -static_cast<std::int64_t>((spec.arc - 1) / 2);
    hi = static_cast<std::int64_t>(spec.arc / 2);
  } else {
    lo = -static_cast<std::int64_t>(spec.L);
    hi = static_cast<std::int64_t>(spec.L);
  }
  const bool everything = hi - lo + 1 >= n;

  // Positions in increasing distance from o, positive side first.
  std::vector<std::int64_t> positions;
  if (everything) {
    for (std::int64_t k = 0; static_cast<std::int64_t>(positions.size()) < n; ++k) {
      positions.push_back(k);
      if (k != 0 && static_cast<std::int64_t>(positions.size()) < n) positions.push_back(-k);
    }
  } else {
    for (std::int64_t k = 0; k <= std::max(hi, -lo); ++k) {
      if (k <= hi) positions.push_back(k);
      if (k != 0 && -k >= lo) positions.push_back(-k);
    }
  }
  const std::size_t active_count = positions.size();
  if (!everything) {
    positions.push_back(hi + 1);
    if (hi - lo + 2 < n) positions.push_back(lo - 1);
  }

  RawGraph raw;
  std::map<std::uint32_t, Vertex> by_label;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const auto label = static_cast<std::uint32_t>(((positions[i] % n) + n) % n);
    raw.labels.push_back(label);
    by_label[label] = static_cast<Vertex>(i);
  }
  raw.active.assign(positions.size(), 0);
  std::fill(raw.active.begin(), raw.active.begin() + static_cast<std::ptrdiff_t>(active_count), 1);
  raw.adjacency.resize(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    for (std::int64_t step : {std::int64_t{1}, std::int64_t{-1}}) {
      const auto nb = static_cast<std::uint32_t>((((positions[i] + step) % n) + n) % n);
      if (auto it = by_label.find(nb); it != by_label.end()) raw.adjacency[i].push_back(it->second);
    }
  }
  return raw;
}

RawGraph build_torus(const GraphSpec& spec) {
  if (spec.side < 3) throw ConfigError("torus_2d: side must be >= 3");
  const std::uint32_t s = spec.side;
  RawGraph raw;
  raw.labels.resize(std::size_t{s} * s);
  raw.adjacency.resize(raw.labels.size());
  raw.active.assign(raw.labels.size(), 1);
  for (std::uint32_t y = 0; y < s; ++y) {
    for (std::uint32_t x = 0; x < s; ++x) {
      const Vertex v = y * s + x;
      raw.labels[v] = v;
      raw.adjacency[v] = {y * s + (x + 1) % s, y * s + (x + s - 1) % s, ((y + 1) % s) * s + x,
                          ((y + s - 1) % s) * s + x};
    }
  }
  return raw;
}

RawGraph build_lattice(const GraphSpec& spec) {
  if (spec.dim < 1 || spec.dim > 3) throw ConfigError("lattice_box: dimension d must be in 1..3");
  if (spec.L < 1) throw ConfigError("lattice_box: truncation radius L must be >= 1");
  if (spec.L > kLatticeMaxRadius) throw ConfigError("lattice_box: truncation radius L must be <= 500");
  const int d = static_cast<int>(spec.dim);
  const int R = static_cast<int>(spec.L) + 1;

  std::vector<std::vector<int>> points;
  std::vector<int> c(static_cast<std::size_t>(d), -R);
  for (;;) {
    if (l1_norm(c) <= R) points.push_back(c);
    int i = 0;
    while (i < d && ++c[static_cast<std::size_t>(i)] > R) c[static_cast<std::size_t>(i++)] = -R;
    if (i == d) break;
  }
  std::stable_sort(points.begin(), points.end(), [](const auto& a, const auto& b) {
    const int na = l1_norm(a);
    const int nb = l1_norm(b);
    return na != nb ? na < nb : a < b;
  });
  if (points.size() > kMaxVertices) throw ConfigError("lattice_box: too many vertices");

  RawGraph raw;
  std::unordered_map<std::uint32_t, Vertex> by_label;
  for (std::size_t i = 0; i < points.size(); ++i) {
    raw.labels.push_back(encode_lattice(points[i]));
    by_label[raw.labels.back()] = static_cast<Vertex>(i);
    raw.active.push_back(l1_norm(points[i]) < R ? 1 : 0);
  }
  raw.adjacency.resize(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (int axis = 0; axis < d; ++axis) {
      for (int step : {1, -1}) {
        auto q = points[i];
        q[static_cast<std::size_t>(axis)] += step;
        if (l1_norm(q) > R) continue;
        raw.adjacency[i].push_back(by_label.at(encode_lattice(q)));
      }
    }
  }
  return raw;
}

RawGraph build_tree(const GraphSpec& spec) {
  if (spec.degree < 2) throw ConfigError("regular_tree_ball: degree must be >= 2");
  if (spec.L < 1) throw ConfigError("regular_tree_ball: depth L must be >= 1");
  const std::uint32_t delta = spec.degree;

  RawGraph raw;
  std::vector<std::uint32_t> depth{0};
  raw.adjacency.emplace_back();
  for (std::size_t v = 0; v < raw.adjacency.size(); ++v) {
    if (depth[v] > spec.L) continue;
    const std::uint32_t children = v == 0 ? delta : delta - 1;
    for (std::uint32_t k = 0; k < children; ++k) {
      if (raw.adjacency.size() >= kMaxVertices) throw ConfigError("regular_tree_ball: too many vertices");
      const auto child = static_cast<Vertex>(raw.adjacency.size());
      raw.adjacency.push_back({static_cast<Vertex>(v)});
      depth.push_back(depth[v] + 1);
      raw.adjacency[v].push_back(child);
    }
  }
  for (std::size_t v = 0; v < raw.adjacency.size(); ++v) {
    raw.labels.push_back(static_cast<std::uint32_t>(v));
    raw.active.push_back(depth[v] <= spec.L ? 1 : 0);
  }
  return raw;
}

}  // namespace

std::string to_string(Family f) {
  switch (f) {
    case Family::cycle: return "cycle";
    case Family::torus_2d: return "torus_2d";
    case Family::lattice_box: return "lattice_box";
    case Family::regular_tree_ball: return "regular_tree_ball";
  }
  return "unknown";
}

Family family_from_string(const std::string& name) {
  if (name == "cycle") return Family::cycle;
  if (name == "torus_2d") return Family::torus_2d;
  if (name == "lattice_box") return Family::lattice_box;
  if (name == "regular_tree_ball") return Family::regular_tree_ball;
  throw ConfigError("unknown graph family '" + name + "'");
}

Graph Graph::build(const GraphSpec& spec) {
  RawGraph raw;
  switch (spec.family) {
    case Family::cycle: raw = build_cycle(spec); break;
    case Family::torus_2d: raw = build_torus(spec); break;
    case Family::lattice_box: raw = build_lattice(spec); break;
    case Family::regular_tree_ball: raw = build_tree(spec); break;
  }
  Graph g;
  g.spec_ = spec;
  g.labels_ = std::move(raw.labels);
  g.finalize(std::move(raw.adjacency), std::move(raw.active));
  return g;
}

void Graph::finalize(std::vector<std::vector<Vertex>> adjacency, std::vector<std::uint8_t> active) {
  active_flag_ = std::move(active);
  offsets_.assign(1, 0);
  for (Vertex v = 0; v < adjacency.size(); ++v) {
    adjacency_.insert(adjacency_.end(), adjacency[v].begin(), adjacency[v].end());
    offsets_.push_back(static_cast<std::uint32_t>(adjacency_.size()));
    (active_flag_[v] ? active_ : sinks_).push_back(v);
    by_label_[labels_[v]] = v;
  }
  if (active_.empty() || !active_flag_[kOrigin]) throw ConfigError("graph: origin must be active");

  degree_ = static_cast<std::uint32_t>(adjacency[kOrigin].size());
  for (Vertex v : active_) {
    if (adjacency[v].size() != degree_) throw ConfigError("graph: active vertices must all have the same degree");
    for (Vertex u : adjacency[v]) {
      const auto& back = adjacency[u];
      if (std::find(back.begin(), back.end(), v) == back.end()) {
        throw ConfigError("graph: adjacency must be symmetric");
      }
    }
  }
}

std::optional<Vertex> Graph::find_label(std::uint32_t label) const {
  if (auto it = by_label_.find(label); it != by_label_.end()) return it->second;
  return std::nullopt;
}

std::vector<std::uint32_t> Graph::distances_from(std::span<const Vertex> sources) const {
  std::vector<std::uint32_t> dist(vertex_count(), kUnreached);
  std::deque<Vertex> queue;
  for (Vertex s : sources) {
    if (!contains(s)) throw ConfigError("graph: unknown vertex id " + std::to_string(s));
    if (dist[s] == 0) continue;
    dist[s] = 0;
    queue.push_back(s);
  }
  while (!queue.empty()) {
    const Vertex x = queue.front();
    queue.pop_front();
    for (Vertex y : neighbors(x)) {
      if (dist[y] == kUnreached) {
        dist[y] = dist[x] + 1;
        queue.push_back(y);
      }
    }
  }
  return dist;
}

void Graph::write_edge_list(std::ostream& out) const {
  for (Vertex u = 0; u < vertex_count(); ++u) {
    for (Vertex v : neighbors(u)) {
      if (u < v) out << u << ' ' << v << '\n';
    }
  }
}

std::vector<Vertex> ball(const Graph& g, const BallSpec& spec) {
  const Vertex sources[] = {spec.center};
  const auto dist = g.distances_from(sources);
  std::vector<Vertex> out;
  for (Vertex v = 0; v < g.vertex_count(); ++v) {
    if (dist[v] <= spec.radius) out.push_back(v);
  }
  return out;
}

std::vector<Vertex> annulus(const Graph& g, std::uint32_t L, std::uint32_t D) {
  const Vertex origin[] = {kOrigin};
  const auto from_origin = g.distances_from(origin);
  std::vector<Vertex> boundary;
  for (Vertex v = 0; v < g.vertex_count(); ++v) {
    if (from_origin[v] == L + 1) boundary.push_back(v);
  }
  if (boundary.empty()) {
    throw ConfigError("annulus: exterior boundary of B_" + std::to_string(L) + " is empty in this graph");
  }
  const auto from_boundary = g.distances_from(boundary);
  std::vector<Vertex> out;
  for (Vertex v = 0; v < g.vertex_count(); ++v) {
    if (from_boundary[v] <= D) out.push_back(v);
  }
  return out;
}

}  // namespace ow
