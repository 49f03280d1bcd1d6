#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "ow/error.hpp"
#include "ow/graph.hpp"

using namespace ow;

namespace {

GraphSpec cycle(std::uint32_t n, std::uint32_t L, std::uint32_t arc = 0) {
  GraphSpec s;
  s.family = Family::cycle;
  s.n = n;
  s.L = L;
  s.arc = arc;
  return s;
}

GraphSpec lattice(std::uint32_t L, std::uint32_t dim = 2) {
  GraphSpec s;
  s.family = Family::lattice_box;
  s.L = L;
  s.dim = dim;
  return s;
}

}  // namespace

TEST_CASE("cycle ball has 2L+1 active vertices and two sinks") {
  const Graph g = Graph::build(cycle(10, 3));
  CHECK(g.degree() == 2);
  CHECK(g.active().size() == 7);
  CHECK(g.sinks().size() == 2);
  CHECK(g.is_active(kOrigin));
  CHECK(g.label(kOrigin) == 0);
  const auto d = g.distances_from(std::vector<Vertex>{kOrigin});
  for (Vertex x : g.active()) CHECK(d[x] <= 3);
  for (Vertex s : g.sinks()) CHECK(d[s] == 4);
}

TEST_CASE("cycle arcs used as fixtures") {
  SUBCASE("2-arc of C_8") {
    const Graph g = Graph::build(cycle(8, 0, 2));
    CHECK(g.active().size() == 2);
    CHECK(g.sinks().size() == 2);
    CHECK(g.label(1) == 1);
  }
  SUBCASE("6-arc of C_8 leaves two sink vertices") {
    const Graph g = Graph::build(cycle(8, 0, 6));
    CHECK(g.active().size() == 6);
    CHECK(g.sinks().size() == 2);
    for (Vertex x : g.active()) CHECK(g.neighbors(x).size() == 2);
  }
  SUBCASE("7-arc of C_8 has a single sink adjacent to both ends") {
    const Graph g = Graph::build(cycle(8, 0, 7));
    REQUIRE(g.sinks().size() == 1);
    const Vertex s = g.sinks()[0];
    int hits = 0;
    for (Vertex x : g.active()) {
      for (Vertex z : g.neighbors(x)) hits += z == s;
    }
    CHECK(hits == 2);
  }
}

TEST_CASE("cycle covering every vertex has no sink") {
  const Graph g = Graph::build(cycle(7, 5));
  CHECK(g.active().size() == 7);
  CHECK(g.sinks().empty());
}

TEST_CASE("torus is vertex transitive with no sink") {
  GraphSpec s;
  s.family = Family::torus_2d;
  s.side = 4;
  const Graph g = Graph::build(s);
  CHECK(g.vertex_count() == 16);
  CHECK(g.sinks().empty());
  for (Vertex x = 0; x < 16; ++x) {
    std::set<Vertex> nb(g.neighbors(x).begin(), g.neighbors(x).end());
    CHECK(nb.size() == 4);
  }
}

TEST_CASE("lattice ball sizes match the l1 ball count") {
  // |B_L| in Z^2 is 2L^2 + 2L + 1.
  for (std::uint32_t L = 1; L <= 6; ++L) {
    const Graph g = Graph::build(lattice(L));
    CHECK(g.active().size() == 2 * L * L + 2 * L + 1);
    CHECK(g.sinks().size() == 4 * (L + 1));
  }
  const Graph line = Graph::build(lattice(4, 1));
  CHECK(line.active().size() == 9);
  const Graph cube = Graph::build(lattice(2, 3));
  CHECK(cube.active().size() == 25);
  CHECK(cube.degree() == 6);
}

TEST_CASE("lattice labels are shared between truncation radii") {
  const Graph small = Graph::build(lattice(3));
  const Graph large = Graph::build(lattice(5));
  for (Vertex x : small.active()) {
    const auto y = large.find_label(small.label(x));
    REQUIRE(y.has_value());
    CHECK(large.is_active(*y));
    const auto a = small.neighbors(x);
    const auto b = large.neighbors(*y);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(small.label(a[i]) == large.label(b[i]));
  }
}

TEST_CASE("regular tree ball") {
  GraphSpec s;
  s.family = Family::regular_tree_ball;
  s.degree = 3;
  s.L = 3;
  const Graph g = Graph::build(s);
  // 1 + 3 + 6 + 12 active, 24 leaves in the sink layer.
  CHECK(g.active().size() == 22);
  CHECK(g.sinks().size() == 24);
  for (Vertex x : g.active()) CHECK(g.neighbors(x).size() == 3);
}

TEST_CASE("adjacency is symmetric on every family") {
  std::vector<GraphSpec> specs = {cycle(9, 3), cycle(8, 0, 6), lattice(3), lattice(2, 3)};
  GraphSpec tree;
  tree.family = Family::regular_tree_ball;
  tree.degree = 4;
  tree.L = 2;
  specs.push_back(tree);
  for (const auto& s : specs) {
    const Graph g = Graph::build(s);
    for (Vertex x = 0; x < g.vertex_count(); ++x) {
      for (Vertex z : g.neighbors(x)) {
        const auto back = g.neighbors(z);
        CHECK(std::count(back.begin(), back.end(), x) == std::count(g.neighbors(x).begin(), g.neighbors(x).end(), z));
      }
    }
  }
}

TEST_CASE("balls and annuli") {
  const Graph g = Graph::build(lattice(6));
  const auto b2 = ball(g, {kOrigin, 2});
  CHECK(b2.size() == 13);
  CHECK(std::is_sorted(b2.begin(), b2.end()));
  // Boundary of B_2 is the l1 sphere of radius 3; D = 1 adds radii 2 and 4.
  const auto a = annulus(g, 2, 1);
  CHECK(a.size() == 8 + 12 + 16);
  CHECK_THROWS_AS(annulus(Graph::build(cycle(7, 5)), 3, 1), ConfigError);
}

TEST_CASE("invalid specs are rejected") {
  CHECK_THROWS_AS(Graph::build(cycle(2, 1)), ConfigError);
  CHECK_THROWS_AS(Graph::build(cycle(8, 0, 9)), ConfigError);
  CHECK_THROWS_AS(Graph::build(lattice(0)), ConfigError);
  CHECK_THROWS_AS(Graph::build(lattice(2, 4)), ConfigError);
  GraphSpec torus;
  torus.family = Family::torus_2d;
  torus.side = 2;
  CHECK_THROWS_AS(Graph::build(torus), ConfigError);
  CHECK_THROWS_AS(family_from_string("hypercube"), ConfigError);
}

TEST_CASE("edge list lists each edge once") {
  const Graph g = Graph::build(cycle(8, 0, 2));
  std::ostringstream out;
  g.write_edge_list(out);
  std::istringstream in(out.str());
  int lines = 0;
  for (std::string line; std::getline(in, line);) ++lines;
  CHECK(lines == 3);
}
