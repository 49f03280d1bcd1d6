#include <doctest.h>

#include "ow/error.hpp"
#include "ow/ghost_engine.hpp"
#include "ow/green.hpp"
#include "ow/stabilizer.hpp"
#include "support.hpp"

using namespace ow;
using ow::testing::SplitMix;

namespace {

Graph arc(std::uint32_t n, std::uint32_t length) {
  GraphSpec s;
  s.family = Family::cycle;
  s.n = n;
  s.arc = length;
  return Graph::build(s);
}

Graph lattice(std::uint32_t L) {
  GraphSpec s;
  s.family = Family::lattice_box;
  s.L = L;
  return Graph::build(s);
}

}  // namespace

TEST_CASE("scheduler parsing") {
  CHECK(SchedulerSpec::parse("ghosts_first").policy == SchedulerPolicy::ghosts_first);
  CHECK(SchedulerSpec::parse("pairs_first").policy == SchedulerPolicy::pairs_first);
  const auto r = SchedulerSpec::parse("random:9");
  CHECK(r.policy == SchedulerPolicy::random);
  CHECK(r.seed == 9);
  CHECK(SchedulerSpec::parse(r.name()).seed == 9);
  CHECK_THROWS_AS(SchedulerSpec::parse("fifo"), ConfigError);
}

TEST_CASE("water landing on a hole creates a ghost") {
  const Graph g = lattice(2);
  const auto nb = g.neighbors(kOrigin);
  ExtendedConfig c(ParticleConfig(g.vertex_count()));
  c.base.add_pair(kOrigin);
  c.base.add_pair(kOrigin);
  Odometer odo(g.vertex_count());

  SUBCASE("split move onto an empty vertex") {
    const auto created = apply_move(g, c, {Mover::Kind::pair, kOrigin}, nb[0], nb[1], &odo);
    REQUIRE(created.has_value());
    CHECK(*created == nb[1]);
    CHECK(c.ghost[nb[1]] == 1);
    CHECK(odo.ghosts_created[nb[1]] == 1);
    CHECK(odo.waters_into_hole[nb[1]] == 1);
    CHECK(odo.fires[kOrigin] == 1);
    CHECK(odo.pair_or_ghost_jumps[kOrigin] == 1);
  }
  SUBCASE("both particles to the same vertex") {
    CHECK_FALSE(apply_move(g, c, {Mover::Kind::pair, kOrigin}, nb[2], nb[2], &odo).has_value());
    CHECK(c.base.pairs(nb[2]) == 1);
  }
  SUBCASE("water onto a vertex with surplus water") {
    c.base.water[nb[1]] = 1;
    CHECK_FALSE(apply_move(g, c, {Mover::Kind::pair, kOrigin}, nb[0], nb[1], &odo).has_value());
  }
  SUBCASE("water onto a vertex with surplus oil fills no hole") {
    c.base.oil[nb[1]] = 1;
    CHECK_FALSE(apply_move(g, c, {Mover::Kind::pair, kOrigin}, nb[0], nb[1], &odo).has_value());
    CHECK(c.base.is_hole(nb[1]));
  }
  SUBCASE("water onto a hole in the sink is not a ghost") {
    const Vertex edge = g.active().back();
    const auto enb = g.neighbors(edge);
    Vertex sink = enb[0], inside = enb[0];
    for (Vertex z : enb) {
      if (g.is_sink(z)) sink = z;
      if (g.is_active(z)) inside = z;
    }
    c.base.add_pair(edge);
    CHECK_FALSE(apply_move(g, c, {Mover::Kind::pair, edge}, inside, sink, &odo).has_value());
    CHECK(odo.waters_into_hole[sink] == 1);
    CHECK(odo.ghosts_created[sink] == 0);
  }
}

TEST_CASE("illegal moves are rejected") {
  const Graph g = lattice(2);
  ExtendedConfig c(ParticleConfig(g.vertex_count()));
  const auto nb = g.neighbors(kOrigin);
  CHECK_THROWS_AS(apply_move(g, c, {Mover::Kind::ghost, kOrigin}, nb[0], nb[0]), IllegalOperation);
  CHECK_THROWS_AS(apply_move(g, c, {Mover::Kind::pair, kOrigin}, nb[0], nb[1]), IllegalOperation);
  c.ghost[g.sinks()[0]] = 1;
  CHECK_THROWS_AS(apply_move(g, c, {Mover::Kind::ghost, g.sinks()[0]}, nb[0], nb[0]), IllegalOperation);
}

TEST_CASE("pair odometer equals plain stabilization and ghosts count holes in K") {
  SplitMix rng{41};
  for (int trial = 0; trial < 30; ++trial) {
    const Graph g = Graph::build(ow::testing::random_graph_spec(rng));
    const auto sigma = ow::testing::random_config(g, rng, 3);
    const InstructionArray tau(rng.next());
    const auto plain = stabilize(g, sigma, tau, StrategySpec{});
    for (const char* s : {"ghosts_first", "pairs_first", "random:4"}) {
      const auto run = ghost_stabilize(g, sigma, tau, SchedulerSpec::parse(s));
      REQUIRE_FALSE(run.truncated);
      CHECK(run.odometer.bookkeeping_holds());
      CHECK(run.odometer.fires == plain.odometer.fires);
      CHECK(run.final.base == plain.final_config);
      std::uint64_t created = 0;
      for (Vertex x : g.active()) {
        CHECK(run.odometer.ghosts_created[x] == run.odometer.waters_into_hole[x]);
        CHECK(run.final.ghost[x] == 0);
        created += run.odometer.ghosts_created[x];
      }
      CHECK(created == run.ghosts_created_total);
      std::uint64_t moves = 0;
      for (auto m : run.odometer.pair_or_ghost_jumps) moves += m;
      CHECK(moves == run.T);
    }
  }
}

TEST_CASE("martingale tracker uses the harmonic function of the target") {
  const Graph g = arc(8, 2);
  const MartingaleTracker tracker(g, 0);
  CHECK(tracker.harmonic()[1] == doctest::Approx(0.5));
  CHECK(tracker.laplacian_at_target() == doctest::Approx(-0.75));
  ExtendedConfig c(ParticleConfig(g.vertex_count()));
  c.base.add_pair(0);
  c.base.add_pair(1);
  c.ghost[1] = 2;
  CHECK(tracker.evaluate(g, c, 0) == doctest::Approx(1.0 + 3 * 0.5));
  CHECK(tracker.evaluate(g, c, 4) == doctest::Approx(2.5 + 3.0));
}

TEST_CASE("one-step expectation of M equals its current value") {
  SplitMix rng{3};
  for (int trial = 0; trial < 10; ++trial) {
    const Graph g = lattice(static_cast<std::uint32_t>(rng.between(2, 3)));
    const auto sigma = ow::testing::random_config(g, rng, 2);
    const Vertex y = g.active()[rng.below(g.active().size())];
    GhostOptions opt;
    opt.check_steps = true;
    opt.record_trace = true;
    opt.recompute_interval = 7;
    const auto run = ghost_stabilize(g, sigma, InstructionArray(rng.next()), SchedulerSpec::parse("random:1"), y, opt);
    CHECK(run.steps_checked == run.T);
    CHECK(run.max_step_deviation <= 1e-12);
    CHECK(run.max_drift <= 1e-9);
    REQUIRE(run.trace.size() == run.T);
    REQUIRE(run.martingale.has_value());
    // K is empty at the end, so only the jump term of the target remains.
    const MartingaleTracker tracker(g, y);
    const double jumps = static_cast<double>(run.odometer.pair_or_ghost_jumps[y]);
    CHECK(*run.martingale == doctest::Approx(-tracker.laplacian_at_target() * jumps));
  }
}

TEST_CASE("Green's function prediction for the mean odometer") {
  const Graph g = arc(8, 6);
  ParticleConfig sigma(g.vertex_count());
  sigma.add_pair(0);
  sigma.add_pair(0);
  sigma.add_pair(3);
  const auto rep = verify_lemma_brw(g, sigma, 2, 20000, 77);
  const auto col = green_column(g, g.active(), 2);
  CHECK(rep.exact == doctest::Approx(2 * col[0] + col[3]));
  CHECK(std::abs(rep.z) <= 3.5);
  CHECK(rep.bookkeeping_failures == 0);
  CHECK(rep.truncated == 0);
}

TEST_CASE("results do not depend on the thread count") {
  const Graph g = arc(12, 9);
  const auto a = collect_section4_counters(g, DensitySpec::fixed(1, 1), 3000, 5, {}, 1);
  const auto b = collect_section4_counters(g, DensitySpec::fixed(1, 1), 3000, 5, {}, 3);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].mean_m_tilde == b.rows[i].mean_m_tilde);
    CHECK(a.rows[i].egl_z == b.rows[i].egl_z);
    CHECK(a.rows[i].ewl_ok);
  }
  CHECK(a.pass);
}

TEST_CASE("ghost runs honor the step cap") {
  const Graph g = lattice(3);
  const auto sigma = sample_initial(g, DensitySpec::fixed(2, 2), 1);
  GhostOptions opt;
  opt.step_cap = 10;
  const auto run = ghost_stabilize(g, sigma, InstructionArray(1), {}, std::nullopt, opt);
  CHECK(run.truncated);
  CHECK(run.T == 10);
  CHECK_THROWS_AS(ghost_stabilize(g, sigma, InstructionArray(1), {}, g.sinks()[0]), ConfigError);
}
