// Acceptance gate: every criterion at its pinned tolerance, one line each.
// Exit status is nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "ow/ghost_engine.hpp"
#include "ow/green.hpp"
#include "ow/harness.hpp"
#include "ow/stabilizer.hpp"
#include "support.hpp"

using namespace ow;
using ow::testing::SplitMix;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::uint64_t g_bookkeeping_runs = 0;
std::uint64_t g_bookkeeping_failures = 0;

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

GraphSpec cycle_spec(std::uint32_t n, std::uint32_t L, std::uint32_t arc = 0) {
  GraphSpec s;
  s.family = Family::cycle;
  s.n = n;
  s.L = L;
  s.arc = arc;
  return s;
}

GraphSpec lattice_spec(std::uint32_t L) {
  GraphSpec s;
  s.family = Family::lattice_box;
  s.L = L;
  return s;
}

Verdict abelian() {
  SplitMix rng{101};
  const std::uint64_t cap = 10'000'000;
  int passed = 0;
  for (int i = 0; i < 100; ++i) {
    GraphSpec s;
    DensitySpec d = DensitySpec::poisson_mu(1.0 + 2.0 * rng.uniform());
    switch (i % 3) {
      case 0:
        s = cycle_spec(static_cast<std::uint32_t>(rng.between(5, 16)), 0);
        s.L = static_cast<std::uint32_t>(rng.between(1, (s.n - 3) / 2));
        break;
      case 1:
        s.family = Family::torus_2d;
        s.side = static_cast<std::uint32_t>(rng.between(4, 8));
        d = DensitySpec::bernoulli(0.2 + 0.3 * rng.uniform());
        break;
      default: s = lattice_spec(static_cast<std::uint32_t>(rng.between(1, 6))); break;
    }
    const Graph g = Graph::build(s);
    const std::uint64_t seed = rng.next();
    StrategySpec random;
    random.policy = Policy::random;
    random.seed = rng.next();
    const std::vector<StrategySpec> strategies = {StrategySpec{}, StrategySpec::parse("highest_pairs"), random};
    const auto rep = verify_abelian(g, sample_initial(g, d, seed, static_cast<std::uint32_t>(i)), seed, strategies, cap,
                                    static_cast<std::uint32_t>(i));
    if (rep.pass && !rep.inconclusive) ++passed;
  }
  return {passed == 100, std::to_string(passed) + "/100 instances bit-identical across 3 strategies"};
}

Verdict monotone() {
  const Graph small = Graph::build(lattice_spec(3));
  const Graph large = Graph::build(lattice_spec(5));
  SplitMix rng{202};
  int passed = 0;
  for (std::uint32_t i = 0; i < 100; ++i) {
    const double mu = 0.5 + 3.0 * rng.uniform();
    const double mu_large = mu + 2.0 * rng.uniform();
    const std::uint64_t seed = rng.next();
    const auto cs = sample_initial(small, DensitySpec::poisson_mu(mu), seed, i);
    const auto cl = sample_initial(large, DensitySpec::poisson_mu(mu_large), seed, i);
    const auto rep = verify_monotonicity(small, cs, large, cl, seed, kDefaultStepCap, i);
    if (rep.pass && !rep.inconclusive) ++passed;
  }
  return {passed == 100, std::to_string(passed) + "/100 coupled instances with m_B3 <= m_B5"};
}

Verdict r_walk_law() {
  const Graph g = Graph::build(lattice_spec(8));
  const auto res = driven_stabilize(g, ParticleConfig(g.vertex_count()), InstructionArray(303), StrategySpec{}, 100000);
  const double n = static_cast<double>(res.r_stats.length());
  const double up = res.r_stats.up / n, down = res.r_stats.down / n, lazy = res.r_stats.lazy / n;
  const bool ok = !res.truncated && res.r_stats.length() >= 100000 && std::abs(up - 0.1875) <= 0.01 &&
                  std::abs(down - 0.1875) <= 0.01 && std::abs(lazy - 0.625) <= 0.01;
  return {ok, "P(+1)=" + fmt("%.4f", up) + " P(-1)=" + fmt("%.4f", down) + " P(0)=" + fmt("%.4f", lazy) + " over " +
                  std::to_string(res.r_stats.length()) + " steps"};
}

Verdict hole_identity() {
  SplitMix rng{404};
  int trajectories = 0, exact = 0;
  for (int i = 0; i < 1200; ++i) {
    GraphSpec s = i % 2 ? lattice_spec(static_cast<std::uint32_t>(rng.between(2, 6))) : ow::testing::random_graph_spec(rng);
    if (s.arc == 1) s.arc = 2;
    const Graph g = Graph::build(s);
    const auto c0 = sample_initial(g, DensitySpec::poisson_mu(3.0 * rng.uniform()), rng.next());
    StrategySpec strategy;
    strategy.policy = i % 3 == 0 ? Policy::random : Policy::lowest_id;
    strategy.seed = rng.next();
    const auto res = driven_stabilize(g, c0, InstructionArray(rng.next()), strategy, rng.between(1, 2000));
    ++trajectories;
    if (!res.truncated && res.holes_filled_at()[kOrigin] == res.r_stats.up_crossings) ++exact;
  }
  return {exact == trajectories && trajectories >= 1000,
          std::to_string(exact) + "/" + std::to_string(trajectories) + " driven trajectories with H(o) = J(N_K)"};
}

Verdict martingale() {
  SplitMix rng{505};
  std::uint64_t steps = 0;
  double worst = 0.0, drift = 0.0;
  bool truncated = false;
  while (steps < 20000) {
    const Graph g = Graph::build(rng.below(2) ? lattice_spec(3) : cycle_spec(12, 0, 8));
    const auto sigma = sample_initial(g, DensitySpec::poisson_mu(2.0), rng.next());
    const Vertex y = g.active()[rng.below(g.active().size())];
    GhostOptions opt;
    opt.check_steps = true;
    SchedulerSpec sched;
    sched.policy = SchedulerPolicy::random;
    sched.seed = rng.next();
    const auto run = ghost_stabilize(g, sigma, InstructionArray(rng.next()), sched, y, opt);
    steps += run.steps_checked;
    worst = std::max(worst, run.max_step_deviation);
    drift = std::max(drift, run.max_drift);
    truncated = truncated || run.truncated;
    ++g_bookkeeping_runs;
    if (!run.odometer.bookkeeping_holds()) ++g_bookkeeping_failures;
  }
  return {worst <= 1e-9 && !truncated, std::to_string(steps) + " enumerated steps, max |E[M_t|F] - M_{t-1}| = " +
                                            fmt("%.3g", worst) + ", incremental drift " + fmt("%.3g", drift)};
}

Verdict brw(std::uint64_t runs, std::uint64_t seed, bool relative) {
  const Graph g = Graph::build(cycle_spec(8, 0, 6));
  ParticleConfig sigma(g.vertex_count());
  sigma.add_pair(0);
  sigma.add_pair(0);
  sigma.add_pair(1);
  sigma.add_pair(3);
  sigma.add_pair(4);
  const unsigned threads = resolve_threads(std::nullopt);
  bool ok = true;
  std::string detail;
  for (Vertex y : {Vertex{0}, Vertex{2}, Vertex{5}}) {
    const auto r = verify_lemma_brw(g, sigma, y, runs, seed, {}, threads);
    g_bookkeeping_runs += runs;
    g_bookkeeping_failures += r.bookkeeping_failures;
    ok = ok && r.truncated == 0 && (relative ? r.rel_err <= 0.01 : std::abs(r.z) <= 3.0);
    detail += "y=" + std::to_string(y) + (relative ? " rel " + fmt("%.2e", r.rel_err) : " z " + fmt("%+.2f", r.z)) +
              (y == 5 ? "" : "; ");
  }
  return {ok, std::to_string(runs) + " runs: " + detail};
}

Verdict bookkeeping() {
  return {g_bookkeeping_runs > 0 && g_bookkeeping_failures == 0,
          std::to_string(g_bookkeeping_failures) + " failures in " + std::to_string(g_bookkeeping_runs) +
              " ghost runs (criteria 5, 6, 12)"};
}

Verdict green_identities() {
  double method_diff = 0.0, lemma_diff = 0.0;
  for (const auto& s : {cycle_spec(10, 4), lattice_spec(4), cycle_spec(8, 0, 2)}) {
    const Graph g = Graph::build(s);
    const auto a = green_table(g, g.active(), GreenMethod::direct_solve);
    const auto b = green_table(g, g.active(), GreenMethod::hitting_prob);
    method_diff = std::max(method_diff, (a.G - b.G).cwiseAbs().maxCoeff());
    if (s.arc == 0) {
      for (std::uint32_t r = 0; r <= s.L; ++r) {
        const auto rep = verify_lemma_green(g, g.active(), ball(g, {kOrigin, r}), kOrigin);
        lemma_diff = std::max(lemma_diff, std::abs(rep.difference));
      }
    }
  }
  const Graph two = Graph::build(cycle_spec(8, 0, 2));
  const auto t = green_table(two, two.active());
  const double fixture = std::max({std::abs(t.at(0, 0) - 4.0 / 3.0), std::abs(t.at(0, 1) - 2.0 / 3.0),
                                   std::abs(t.at(1, 0) - 2.0 / 3.0), std::abs(t.at(1, 1) - 4.0 / 3.0)});
  return {method_diff <= 1e-10 && lemma_diff <= 1e-10 && fixture <= 1e-10,
          "solve vs hitting " + fmt("%.2e", method_diff) + ", decomposition " + fmt("%.2e", lemma_diff) +
              ", 2-arc fixture " + fmt("%.2e", fixture)};
}

struct Scans {
  GreenScanReport cycle, lattice;
};

Scans run_scans() {
  GraphSpec c;
  c.family = Family::cycle;
  GraphSpec l = lattice_spec(0);
  return {properties_green_scan(c, 1, 3, 64), properties_green_scan(l, 1, 5, 20)};
}

Verdict green_inequality(const Scans& s) {
  auto all = [](const GreenScanReport& r) {
    double worst = 0.0;
    bool ok = !r.rows.empty();
    for (const auto& row : r.rows) {
      ok = ok && row.holds;
      worst = std::max(worst, row.ratio);
    }
    return std::pair{ok, worst};
  };
  const auto [c_ok, c_ratio] = all(s.cycle);
  const auto [l_ok, l_ratio] = all(s.lattice);
  return {c_ok && l_ok && s.cycle.bound_L0 == 3 && s.lattice.bound_L0 == 5,
          "cycle L0=" + std::to_string(s.cycle.bound_L0) + " L in [3,64] max ratio " + fmt("%.4f", c_ratio) +
              "; lattice L0=" + std::to_string(s.lattice.bound_L0) + " L in [5,20] max ratio " + fmt("%.4f", l_ratio)};
}

Verdict pair_bound_sign(const Scans& s) {
  int rows = 0, negative = 0;
  for (const auto* r : {&s.cycle, &s.lattice}) {
    for (const auto& row : r->rows) {
      if (row.L <= r->bound_L0) continue;
      ++rows;
      if (row.pair_bound < 0.0) ++negative;
    }
  }
  return {rows > 0 && rows == negative, std::to_string(negative) + "/" + std::to_string(rows) + " radii past L0 with pair_bound < 0"};
}

Verdict sweep() {
  GraphSpec family = lattice_spec(0);
  const auto rep = fixation_sweep(family, {1, 2, 5, 10}, {4, 8, 16}, 200, 606, kDefaultStepCap,
                                  resolve_threads(std::nullopt));
  double largest = 0.0;
  for (const auto& r : rep.rows) largest = std::max(largest, r.mean_m_o);
  return {rep.truncated == 0 && rep.monotone_in_mu && rep.rows.size() == 12,
          std::to_string(rep.truncated) + "/2400 truncated, mean m(o) monotone in mu: " +
              (rep.monotone_in_mu ? "yes" : "no") + ", largest mean m(o) " + fmt("%.2f", largest)};
}

Verdict egl() {
  const Graph g = Graph::build(cycle_spec(12, 5));
  const auto rep =
      collect_section4_counters(g, DensitySpec::fixed(1, 1), 100000, 707, {}, resolve_threads(std::nullopt));
  g_bookkeeping_runs += rep.runs;
  g_bookkeeping_failures += rep.bookkeeping_failures;
  const auto& o = rep.rows.front();
  return {o.x == kOrigin && std::abs(o.egl_z) <= 3.0 && rep.truncated == 0,
          "E w(o)=" + fmt("%.4f", o.mean_w) + " vs sum H G=" + fmt("%.4f", o.egl_rhs) + ", z=" + fmt("%+.2f", o.egl_z)};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const char* name, const std::function<Verdict()>& fn) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!v.pass) ++failures;
    std::printf("[%s] %2d %-22s %s (%.1fs)\n", v.pass ? "PASS" : "FAIL", id, name, v.detail.c_str(), secs);
    std::fflush(stdout);
  };

  report(1, "abelian", abelian);
  report(2, "monotonicity", monotone);
  report(3, "r-walk law", r_walk_law);
  report(4, "hole identity", hole_identity);
  report(5, "martingale", martingale);
  report(6, "brw 1e5 (3 se)", [] { return brw(100000, 808, false); });
  report(6, "brw 1e6 (1% rel)", [] { return brw(1000000, 809, true); });
  report(12, "egl", egl);
  report(7, "bookkeeping", bookkeeping);
  report(8, "green identities", green_identities);
  Scans scans;
  report(9, "green inequality", [&] {
    scans = run_scans();
    return green_inequality(scans);
  });
  report(10, "pair bound sign", [&] { return pair_bound_sign(scans); });
  report(11, "fixation sweep", sweep);

  std::printf("%s: %d criterion line(s) failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
