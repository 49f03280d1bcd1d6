#pragma once
// Oracles and generators shared by the test binaries. Nothing here calls the
// library's solvers: Green's functions are recomputed by Gauss-Jordan
// elimination in long double and by Monte Carlo walks driven by splitmix64.

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "ow/graph.hpp"
#include "ow/particle_config.hpp"

namespace ow::testing {

struct SplitMix {
  std::uint64_t state;

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  std::uint64_t below(std::uint64_t n) { return next() % n; }
  std::uint64_t between(std::uint64_t lo, std::uint64_t hi) { return lo + below(hi - lo + 1); }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

// Inverse of (I - Q) on K by Gauss-Jordan with partial pivoting, row-major.
inline std::vector<std::vector<long double>> green_oracle(const Graph& g, std::span<const Vertex> K) {
  const std::size_t n = K.size();
  std::vector<long double> pos(g.vertex_count(), -1);
  for (std::size_t i = 0; i < n; ++i) pos[K[i]] = static_cast<long double>(i);
  std::vector<std::vector<long double>> a(n, std::vector<long double>(2 * n, 0.0L));
  const long double step = 1.0L / g.degree();
  for (std::size_t i = 0; i < n; ++i) {
    a[i][i] = 1.0L;
    a[i][n + i] = 1.0L;
    for (Vertex z : g.neighbors(K[i])) {
      if (pos[z] >= 0) a[i][static_cast<std::size_t>(pos[z])] -= step;
    }
  }
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::fabs(a[r][c]) > std::fabs(a[p][c])) p = r;
    }
    std::swap(a[p], a[c]);
    const long double d = a[c][c];
    for (auto& v : a[c]) v /= d;
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c || a[r][c] == 0.0L) continue;
      const long double f = a[r][c];
      for (std::size_t k = c; k < 2 * n; ++k) a[r][k] -= f * a[c][k];
    }
  }
  std::vector<std::vector<long double>> inv(n, std::vector<long double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) inv[i][j] = a[i][n + j];
  }
  return inv;
}

// Visits to y (time 0 included) of a walk from x killed on leaving K.
inline std::uint64_t killed_walk_visits(const Graph& g, const std::vector<std::uint8_t>& in_k, Vertex x, Vertex y,
                                        SplitMix& rng) {
  std::uint64_t visits = 0;
  while (in_k[x]) {
    if (x == y) ++visits;
    x = g.neighbors(x)[rng.below(g.degree())];
  }
  return visits;
}

inline GraphSpec random_graph_spec(SplitMix& rng) {
  GraphSpec s;
  switch (rng.below(4)) {
    case 0:
      s.family = Family::cycle;
      s.n = static_cast<std::uint32_t>(rng.between(5, 14));
      s.L = static_cast<std::uint32_t>(rng.between(1, (s.n - 3) / 2));
      break;
    case 1:
      s.family = Family::lattice_box;
      s.dim = static_cast<std::uint32_t>(rng.between(1, 3));
      s.L = static_cast<std::uint32_t>(rng.between(1, s.dim == 3 ? 3 : 5));
      break;
    case 2:
      s.family = Family::regular_tree_ball;
      s.degree = static_cast<std::uint32_t>(rng.between(2, 4));
      s.L = static_cast<std::uint32_t>(rng.between(1, 4));
      break;
    default:
      s.family = Family::cycle;
      s.n = static_cast<std::uint32_t>(rng.between(6, 12));
      s.arc = static_cast<std::uint32_t>(rng.between(1, s.n - 2));
      break;
  }
  return s;
}

inline ParticleConfig random_config(const Graph& g, SplitMix& rng, std::uint32_t max_per_site) {
  ParticleConfig c(g.vertex_count());
  for (Vertex x : g.active()) {
    c.oil[x] = static_cast<Count>(rng.below(max_per_site + 1));
    c.water[x] = static_cast<Count>(rng.below(max_per_site + 1));
  }
  return c;
}

}  // namespace ow::testing
