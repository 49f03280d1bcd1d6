#pragma once
// Killed simple-random-walk Green's functions and harmonic Dirichlet solves.
//
// For K a set of active vertices, Q is the transition kernel of simple random
// walk restricted to K (rows sum to less than one next to the exit). Then
// G_K = (I - Q)^{-1}, counting the visit at time 0. Systems with |K| <= 4000
// are factorized densely (partial-pivot LU); larger systems use BiCGSTAB with
// an incomplete-LU preconditioner and a 1e-13 relative residual.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ow/graph.hpp"

namespace ow {

inline constexpr std::size_t kDenseSolveLimit = 4000;

enum class GreenMethod { direct_solve, hitting_prob };

struct GreenTable {
  std::vector<Vertex> K;
  Eigen::MatrixXd G;  // G(i, j) = G_K(K[i], K[j])
  GreenMethod method = GreenMethod::direct_solve;
  std::vector<std::int64_t> index;  // vertex id -> row, -1 outside K

  double at(Vertex x, Vertex y) const;
  bool contains(Vertex x) const { return x < index.size() && index[x] >= 0; }
};

GreenTable green_table(const Graph& g, std::span<const Vertex> K, GreenMethod method = GreenMethod::direct_solve);

// G_K(x, y) for every x in K, in the order of K.
std::vector<double> green_column(const Graph& g, std::span<const Vertex> K, Vertex y);

// (1/deg x) * sum over neighbors z of (f_z - f_x).
double laplacian(const Graph& g, std::span<const double> f, Vertex x);

struct HarmonicSolution {
  std::vector<Vertex> K;
  Vertex target = kOrigin;
  std::vector<double> g;  // indexed by vertex id, zero off K
  double laplacian_at_target = 0.0;
  double max_residual = 0.0;   // max |(Lap g)_x| over K minus the target
  double green_product = 0.0;  // G_K(y,y) * -(Lap g)_y from a direct solve; equals 1
};

// g_y = 1, g = 0 off K, harmonic on K \ {y}; g_w = P_w(tau_y < tau_{K^c}).
HarmonicSolution harmonic_solve(const Graph& g, std::span<const Vertex> K, Vertex y);

struct LemmaGreenReport {
  double lhs = 0.0;           // sum_{y in B} G_Q(y, o), from a solve on Q
  double rhs = 0.0;           // G_Q(o,o) [1{o in B} + range], from solves on Q \ {o}
  double green_oo = 0.0;      // G_Q(o,o) via the return probability
  double range = 0.0;         // E_o #{1 <= t < tau+_{Q^c u {o}} : X_t in B \ {o}}
  double difference = 0.0;
};

LemmaGreenReport verify_lemma_green(const Graph& g, std::span<const Vertex> Q, std::span<const Vertex> B, Vertex o);

struct GreenSums {
  double full = 0.0;      // sum_{x in B_L} G_{B_L}(x, o)
  double interior = 0.0;  // same sum over x with B(x, D) inside B_L
  std::size_t ball_size = 0;
  std::size_t interior_size = 0;
};

// Uses B_L(o) of g as the killing set; g must be truncated at radius >= L.
GreenSums green_sums(const Graph& g, std::uint32_t L, std::uint32_t D);

// mu * (sum_{y in B_L} G(y,o) - 10 * sum_{y : B(y,D) inside B_L} G(y,o)).
double pair_bound(const Graph& g, std::uint32_t L, std::uint32_t D, double mu);

// D (1 + degree^D), saturating.
std::uint64_t lemma_radius_bound(std::uint32_t degree, std::uint32_t D);

struct GreenScanRow {
  std::uint32_t L = 0;
  double full = 0.0;
  double interior = 0.0;
  double ratio = 0.0;  // full / interior
  bool holds = false;  // full < 10 * interior by more than 1e-10
  double pair_bound = 0.0;  // at mu = 1
};

struct GreenScanReport {
  std::uint32_t degree = 0;
  std::uint32_t D = 0;
  std::uint64_t bound_L0 = 0;
  std::vector<GreenScanRow> rows;
  std::optional<std::uint32_t> smallest_holding;  // smallest L after which every tested L holds
  bool holds_from_bound = false;                  // every tested L >= bound_L0 holds
  bool pair_bound_negative_past_bound = false;    // every tested L > bound_L0 has pair_bound < 0
};

// Builds B_L for each L in [L_min, L_max] from the family in `family`
// (cycles are sized 2L + 3 so B_L never wraps) and evaluates the sums.
GreenScanReport properties_green_scan(const GraphSpec& family, std::uint32_t D, std::uint32_t L_min,
                                      std::uint32_t L_max);

}  // namespace ow
