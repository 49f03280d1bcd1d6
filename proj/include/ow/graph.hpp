#pragma once
// Finite regular graphs with an absorbing exterior layer.
//
// Every graph carries an active set K (the vertices that may fire) and a sink
// set representing K^c. Vertex 0 is always the origin o. Each vertex also has
// a canonical 32-bit label that identifies the same physical vertex across
// builds with different truncation radii; instruction streams are keyed by
// label, so B_3 and B_5 of the same lattice consume identical randomness.

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace ow {

using Vertex = std::uint32_t;
inline constexpr Vertex kOrigin = 0;
inline constexpr std::uint32_t kUnreached = std::numeric_limits<std::uint32_t>::max();

enum class Family { cycle, torus_2d, lattice_box, regular_tree_ball };

std::string to_string(Family f);
Family family_from_string(const std::string& name);

struct GraphSpec {
  Family family = Family::cycle;
  std::uint32_t L = 0;       // truncation radius: active set = B_L(o)
  std::uint32_t n = 0;       // cycle length
  std::uint32_t arc = 0;     // cycle only: explicit active arc length, overrides L
  std::uint32_t side = 0;    // torus side
  std::uint32_t dim = 2;     // lattice dimension (1..3)
  std::uint32_t degree = 0;  // regular tree degree
};

struct BallSpec {
  Vertex center = kOrigin;
  std::uint32_t radius = 0;
};

class Graph {
 public:
  static Graph build(const GraphSpec& spec);

  std::size_t vertex_count() const { return labels_.size(); }
  std::uint32_t degree() const { return degree_; }
  Family family() const { return spec_.family; }
  const GraphSpec& spec() const { return spec_; }

  std::span<const Vertex> neighbors(Vertex x) const {
    return {adjacency_.data() + offsets_[x], adjacency_.data() + offsets_[x + 1]};
  }
  bool is_active(Vertex x) const { return active_flag_[x] != 0; }
  bool is_sink(Vertex x) const { return !is_active(x); }
  bool contains(Vertex x) const { return x < vertex_count(); }

  const std::vector<Vertex>& active() const { return active_; }
  const std::vector<Vertex>& sinks() const { return sinks_; }

  std::uint32_t label(Vertex x) const { return labels_[x]; }
  std::optional<Vertex> find_label(std::uint32_t label) const;

  // Breadth-first distances from a set of sources over all stored edges.
  std::vector<std::uint32_t> distances_from(std::span<const Vertex> sources) const;

  // One "u v" line per undirected edge, u < v.
  void write_edge_list(std::ostream& out) const;

 private:
  Graph() = default;
  void finalize(std::vector<std::vector<Vertex>> adjacency, std::vector<std::uint8_t> active);

  GraphSpec spec_;
  std::uint32_t degree_ = 0;
  std::vector<std::uint32_t> offsets_;
  std::vector<Vertex> adjacency_;
  std::vector<std::uint8_t> active_flag_;
  std::vector<Vertex> active_;
  std::vector<Vertex> sinks_;
  std::vector<std::uint32_t> labels_;
  std::unordered_map<std::uint32_t, Vertex> by_label_;
};

// B(center, radius), sorted by vertex id.
std::vector<Vertex> ball(const Graph& g, const BallSpec& spec);

// A_{L,D}: union of radius-D balls centered on the exterior boundary of B_L(o).
// The graph must contain B_{L+1+D}(o) for the result to be untruncated.
std::vector<Vertex> annulus(const Graph& g, std::uint32_t L, std::uint32_t D);

}  // namespace ow
