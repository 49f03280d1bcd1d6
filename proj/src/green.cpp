#include "ow/green.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>

#include "ow/error.hpp"

namespace ow {

namespace {

constexpr double kLemmaConstant = 10.0;
constexpr double kStrictMargin = 1e-10;

// (I - Q) restricted to a vertex set, with a solver chosen by size.
class KilledWalkSystem {
 public:
  KilledWalkSystem(const Graph& g, std::span<const Vertex> set) : set_(set.begin(), set.end()) {
    index_.assign(g.vertex_count(), -1);
    for (std::size_t i = 0; i < set_.size(); ++i) {
      const Vertex x = set_[i];
      if (!g.contains(x) || !g.is_active(x)) {
        throw ConfigError("green: vertex " + std::to_string(x) + " is not an active vertex");
      }
      if (index_[x] >= 0) throw ConfigError("green: duplicate vertex " + std::to_string(x));
      index_[x] = static_cast<std::int64_t>(i);
    }
    check_escape(g);

    const auto n = static_cast<Eigen::Index>(set_.size());
    if (set_.size() <= kDenseSolveLimit) {
      Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto nbrs = g.neighbors(set_[static_cast<std::size_t>(i)]);
        const double p = 1.0 / static_cast<double>(nbrs.size());
        for (Vertex z : nbrs) {
          if (index_[z] >= 0) a(i, index_[z]) -= p;
        }
      }
      dense_.compute(a);
    } else {
      std::vector<Eigen::Triplet<double>> entries;
      for (Eigen::Index i = 0; i < n; ++i) {
        entries.emplace_back(i, i, 1.0);
        const auto nbrs = g.neighbors(set_[static_cast<std::size_t>(i)]);
        const double p = 1.0 / static_cast<double>(nbrs.size());
        for (Vertex z : nbrs) {
          if (index_[z] >= 0) entries.emplace_back(i, index_[z], -p);
        }
      }
      sparse_matrix_.resize(n, n);
      sparse_matrix_.setFromTriplets(entries.begin(), entries.end());
      sparse_.setTolerance(1e-13);
      sparse_.setMaxIterations(100000);
      sparse_.compute(sparse_matrix_);
      use_sparse_ = true;
    }
  }

  std::size_t size() const { return set_.size(); }
  std::int64_t index(Vertex x) const { return index_[x]; }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
    if (!use_sparse_) return dense_.solve(rhs);
    Eigen::VectorXd x = sparse_.solve(rhs);
    if (sparse_.info() != Eigen::Success) throw SingularSystem("green: iterative solve did not converge");
    return x;
  }

  Eigen::MatrixXd inverse() const {
    if (!use_sparse_) return dense_.inverse();
    const auto n = static_cast<Eigen::Index>(set_.size());
    Eigen::MatrixXd out(n, n);
    for (Eigen::Index j = 0; j < n; ++j) out.col(j) = solve(Eigen::VectorXd::Unit(n, j));
    return out;
  }

 private:
  // Every vertex of the set must reach a vertex outside it, else I - Q is singular.
  void check_escape(const Graph& g) const {
    std::vector<std::uint8_t> reached(g.vertex_count(), 0);
    std::vector<Vertex> stack;
    for (Vertex x : set_) {
      for (Vertex z : g.neighbors(x)) {
        if (index_[z] < 0) {
          reached[x] = 1;
          stack.push_back(x);
          break;
        }
      }
    }
    while (!stack.empty()) {
      const Vertex x = stack.back();
      stack.pop_back();
      for (Vertex z : g.neighbors(x)) {
        if (index_[z] >= 0 && !reached[z]) {
          reached[z] = 1;
          stack.push_back(z);
        }
      }
    }
    for (Vertex x : set_) {
      if (!reached[x]) throw SingularSystem("K has no boundary exit");
    }
  }

  std::vector<Vertex> set_;
  std::vector<std::int64_t> index_;
  Eigen::PartialPivLU<Eigen::MatrixXd> dense_;
  Eigen::SparseMatrix<double, Eigen::RowMajor> sparse_matrix_;
  Eigen::BiCGSTAB<Eigen::SparseMatrix<double, Eigen::RowMajor>, Eigen::IncompleteLUT<double>> sparse_;
  bool use_sparse_ = false;
};

std::vector<Vertex> without(std::span<const Vertex> set, Vertex y) {
  std::vector<Vertex> out;
  for (Vertex x : set) {
    if (x != y) out.push_back(x);
  }
  return out;
}

// P_w(tau_y < tau_{K^c}) for every vertex id w (zero off K, one at y).
std::vector<double> hitting_probabilities(const Graph& g, std::span<const Vertex> K, Vertex y) {
  std::vector<double> h(g.vertex_count(), 0.0);
  h[y] = 1.0;
  const auto rest = without(K, y);
  if (rest.empty()) return h;
  const KilledWalkSystem system(g, rest);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(rest.size()));
  for (std::size_t i = 0; i < rest.size(); ++i) {
    const auto nbrs = g.neighbors(rest[i]);
    for (Vertex z : nbrs) {
      if (z == y) rhs(static_cast<Eigen::Index>(i)) += 1.0 / static_cast<double>(nbrs.size());
    }
  }
  const Eigen::VectorXd sol = system.solve(rhs);
  for (std::size_t i = 0; i < rest.size(); ++i) h[rest[i]] = sol(static_cast<Eigen::Index>(i));
  return h;
}

double neighbor_average(const Graph& g, std::span<const double> f, Vertex x) {
  const auto nbrs = g.neighbors(x);
  double s = 0.0;
  for (Vertex z : nbrs) s += f[z];
  return s / static_cast<double>(nbrs.size());
}

}  // namespace

double GreenTable::at(Vertex x, Vertex y) const {
  if (!contains(x) || !contains(y)) return 0.0;
  return G(index[x], index[y]);
}

GreenTable green_table(const Graph& g, std::span<const Vertex> K, GreenMethod method) {
  GreenTable table;
  table.K.assign(K.begin(), K.end());
  table.method = method;
  table.index.assign(g.vertex_count(), -1);
  for (std::size_t i = 0; i < table.K.size(); ++i) table.index[table.K[i]] = static_cast<std::int64_t>(i);

  if (method == GreenMethod::direct_solve) {
    const KilledWalkSystem system(g, K);
    table.G = system.inverse();
    return table;
  }

  // G(x,y) = P_x(tau_y < tau_{K^c}) * G(y,y), G(y,y) = 1 / (1 - P_y(tau+_y < tau_{K^c})).
  const KilledWalkSystem escape_check(g, K);
  (void)escape_check;
  const auto n = static_cast<Eigen::Index>(table.K.size());
  table.G.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Vertex y = table.K[static_cast<std::size_t>(j)];
    const auto h = hitting_probabilities(g, K, y);
    const double green_yy = 1.0 / (1.0 - neighbor_average(g, h, y));
    for (Eigen::Index i = 0; i < n; ++i) table.G(i, j) = h[table.K[static_cast<std::size_t>(i)]] * green_yy;
  }
  return table;
}

std::vector<double> green_column(const Graph& g, std::span<const Vertex> K, Vertex y) {
  const KilledWalkSystem system(g, K);
  if (!g.contains(y) || system.index(y) < 0) throw ConfigError("green: target is not in K");
  const auto n = static_cast<Eigen::Index>(K.size());
  const Eigen::VectorXd col = system.solve(Eigen::VectorXd::Unit(n, system.index(y)));
  return {col.data(), col.data() + col.size()};
}

double laplacian(const Graph& g, std::span<const double> f, Vertex x) {
  return neighbor_average(g, f, x) - f[x];
}

HarmonicSolution harmonic_solve(const Graph& g, std::span<const Vertex> K, Vertex y) {
  if (std::find(K.begin(), K.end(), y) == K.end()) throw ConfigError("harmonic_solve: target is not in K");
  HarmonicSolution sol;
  sol.K.assign(K.begin(), K.end());
  sol.target = y;
  sol.g = hitting_probabilities(g, K, y);
  sol.laplacian_at_target = laplacian(g, sol.g, y);
  for (Vertex x : K) {
    if (x != y) sol.max_residual = std::max(sol.max_residual, std::abs(laplacian(g, sol.g, x)));
  }
  const auto column = green_column(g, K, y);
  const auto pos = static_cast<std::size_t>(std::find(K.begin(), K.end(), y) - K.begin());
  sol.green_product = column[pos] * -sol.laplacian_at_target;
  return sol;
}

LemmaGreenReport verify_lemma_green(const Graph& g, std::span<const Vertex> Q, std::span<const Vertex> B, Vertex o) {
  if (std::find(Q.begin(), Q.end(), o) == Q.end()) throw ConfigError("verify_lemma_green: o must lie in Q");
  for (Vertex b : B) {
    if (std::find(Q.begin(), Q.end(), b) == Q.end()) throw ConfigError("verify_lemma_green: B must lie in Q");
  }

  LemmaGreenReport report;
  {
    const auto column = green_column(g, Q, o);
    for (Vertex b : B) {
      const auto pos = static_cast<std::size_t>(std::find(Q.begin(), Q.end(), b) - Q.begin());
      report.lhs += column[pos];
    }
  }

  // Taboo system on Q \ {o}: walks are killed on Q^c and on returning to o.
  const auto taboo = without(Q, o);
  const bool o_in_B = std::find(B.begin(), B.end(), o) != B.end();
  double return_probability = 0.0;
  if (!taboo.empty()) {
    const KilledWalkSystem system(g, taboo);
    const auto n = static_cast<Eigen::Index>(taboo.size());
    Eigen::VectorXd hit_o = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd in_B = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i < taboo.size(); ++i) {
      const auto nbrs = g.neighbors(taboo[i]);
      for (Vertex z : nbrs) {
        if (z == o) hit_o(static_cast<Eigen::Index>(i)) += 1.0 / static_cast<double>(nbrs.size());
      }
      if (std::find(B.begin(), B.end(), taboo[i]) != B.end()) in_B(static_cast<Eigen::Index>(i)) = 1.0;
    }
    const Eigen::VectorXd p_hit = system.solve(hit_o);
    const Eigen::VectorXd visits = system.solve(in_B);
    const auto from_o = g.neighbors(o);
    for (Vertex z : from_o) {
      const auto i = system.index(z);
      if (i < 0) continue;
      return_probability += p_hit(i) / static_cast<double>(from_o.size());
      report.range += visits(i) / static_cast<double>(from_o.size());
    }
  }
  report.green_oo = 1.0 / (1.0 - return_probability);
  report.rhs = report.green_oo * ((o_in_B ? 1.0 : 0.0) + report.range);
  report.difference = std::abs(report.lhs - report.rhs);
  return report;
}

GreenSums green_sums(const Graph& g, std::uint32_t L, std::uint32_t D) {
  const auto K = ball(g, {kOrigin, L});
  std::vector<std::uint8_t> in_ball(g.vertex_count(), 0);
  for (Vertex x : K) {
    if (!g.is_active(x)) {
      throw ConfigError("green_sums: B_" + std::to_string(L) + " is not inside the graph's active set");
    }
    in_ball[x] = 1;
  }
  std::vector<Vertex> outside;
  for (Vertex v = 0; v < g.vertex_count(); ++v) {
    if (!in_ball[v]) outside.push_back(v);
  }
  if (outside.empty()) throw SingularSystem("K has no boundary exit");

  const auto column = green_column(g, K, kOrigin);
  const auto to_exterior = g.distances_from(outside);
  GreenSums sums;
  sums.ball_size = K.size();
  for (std::size_t i = 0; i < K.size(); ++i) {
    sums.full += column[i];
    if (to_exterior[K[i]] > D) {
      sums.interior += column[i];
      ++sums.interior_size;
    }
  }
  return sums;
}

double pair_bound(const Graph& g, std::uint32_t L, std::uint32_t D, double mu) {
  const auto sums = green_sums(g, L, D);
  return mu * (sums.full - kLemmaConstant * sums.interior);
}

std::uint64_t lemma_radius_bound(std::uint32_t degree, std::uint32_t D) {
  constexpr std::uint64_t kMax = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t power = 1;
  for (std::uint32_t i = 0; i < D; ++i) {
    if (power > kMax / degree) return kMax;
    power *= degree;
  }
  if (power == kMax || (D != 0 && power + 1 > kMax / D)) return kMax;
  return std::uint64_t{D} * (1 + power);
}

GreenScanReport properties_green_scan(const GraphSpec& family, std::uint32_t D, std::uint32_t L_min,
                                      std::uint32_t L_max) {
  if (L_min > L_max) throw ConfigError("green_scan: empty L range");
  if (family.family == Family::torus_2d) throw ConfigError("green_scan: torus has no exterior to kill on");

  GreenScanReport report;
  report.D = D;
  for (std::uint32_t L = L_min; L <= L_max; ++L) {
    GraphSpec spec = family;
    spec.L = L;
    spec.arc = 0;
    if (spec.family == Family::cycle) spec.n = 2 * L + 3;
    const Graph g = Graph::build(spec);
    report.degree = g.degree();
    const auto sums = green_sums(g, L, D);
    GreenScanRow row;
    row.L = L;
    row.full = sums.full;
    row.interior = sums.interior;
    row.ratio = sums.interior > 0.0 ? sums.full / sums.interior : std::numeric_limits<double>::infinity();
    row.holds = kLemmaConstant * sums.interior - sums.full > kStrictMargin;
    row.pair_bound = sums.full - kLemmaConstant * sums.interior;
    report.rows.push_back(row);
  }
  report.bound_L0 = lemma_radius_bound(report.degree, D);

  for (auto it = report.rows.rbegin(); it != report.rows.rend() && it->holds; ++it) report.smallest_holding = it->L;
  report.holds_from_bound = true;
  report.pair_bound_negative_past_bound = true;
  for (const auto& row : report.rows) {
    if (row.L >= report.bound_L0 && !row.holds) report.holds_from_bound = false;
    if (row.L > report.bound_L0 && !(row.pair_bound < 0.0)) report.pair_bound_negative_past_bound = false;
  }
  return report;
}

}  // namespace ow
