#include "ow/ghost_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "ow/error.hpp"
#include "ow/green.hpp"
#include "ow/parallel.hpp"

namespace ow {

namespace {

constexpr std::uint32_t kNone = UINT32_MAX;

// Membership set supporting both lowest-id and uniform selection.
class VertexSet {
 public:
  explicit VertexSet(std::size_t n) : pos_(n, kNone) {}

  void assign(Vertex x, bool present) {
    if (present == (pos_[x] != kNone)) return;
    if (present) {
      pos_[x] = static_cast<std::uint32_t>(pool_.size());
      pool_.push_back(x);
      ordered_.insert(x);
    } else {
      const Vertex last = pool_.back();
      pool_[pos_[x]] = last;
      pos_[last] = pos_[x];
      pool_.pop_back();
      pos_[x] = kNone;
      ordered_.erase(x);
    }
  }

  bool empty() const { return pool_.empty(); }
  std::size_t size() const { return pool_.size(); }
  Vertex lowest() const { return *ordered_.begin(); }
  Vertex at(std::size_t i) const { return pool_[i]; }

 private:
  std::vector<std::uint32_t> pos_;
  std::vector<Vertex> pool_;
  std::set<Vertex> ordered_;
};

class GhostEngine {
 public:
  GhostEngine(const Graph& g, const ParticleConfig& sigma, const InstructionArray& tau, const SchedulerSpec& scheduler,
              std::optional<Vertex> target, GhostOptions options)
      : g_(g),
        tau_(tau),
        scheduler_(scheduler),
        options_(options),
        ghosts_(g.vertex_count()),
        unstable_(g.vertex_count()),
        rng_(scheduler.seed) {
    if (sigma.size() != g.vertex_count()) throw ConfigError("ghost_stabilize: configuration size does not match");
    result_.final = ExtendedConfig(sigma);
    result_.odometer = Odometer(g.vertex_count());
    for (Vertex x : g.active()) refresh(x);
    if (target) {
      if (!g.contains(*target) || !g.is_active(*target)) throw ConfigError("ghost_stabilize: target must be active");
      tracker_.emplace(g, *target);
      value_ = tracker_->evaluate(g_, result_.final, 0);
    }
  }

  GhostRunResult run() && {
    while (auto mover = select()) {
      if (result_.T >= options_.step_cap) {
        result_.truncated = true;
        break;
      }
      step(*mover);
    }
    if (tracker_) {
      guard_drift();
      result_.martingale = value_;
    }
    return std::move(result_);
  }

 private:
  void refresh(Vertex x) {
    if (!g_.is_active(x)) return;
    ghosts_.assign(x, result_.final.ghost[x] > 0);
    unstable_.assign(x, !result_.final.base.is_stable(x));
  }

  std::optional<Mover> select() {
    const bool have_ghost = !ghosts_.empty();
    const bool have_pair = !unstable_.empty();
    if (!have_ghost && !have_pair) return std::nullopt;
    switch (scheduler_.policy) {
      case SchedulerPolicy::ghosts_first:
        if (have_ghost) return Mover{Mover::Kind::ghost, ghosts_.lowest()};
        return Mover{Mover::Kind::pair, unstable_.lowest()};
      case SchedulerPolicy::pairs_first:
        if (have_pair) return Mover{Mover::Kind::pair, unstable_.lowest()};
        return Mover{Mover::Kind::ghost, ghosts_.lowest()};
      case SchedulerPolicy::random: {
        const std::uint64_t total = ghosts_.size() + unstable_.size();
        const std::uint64_t r = ((rng_() >> 32) * total) >> 32;
        if (r < ghosts_.size()) return Mover{Mover::Kind::ghost, ghosts_.at(r)};
        return Mover{Mover::Kind::pair, unstable_.at(r - ghosts_.size())};
      }
    }
    return std::nullopt;
  }

  void step(Mover mover) {
    auto& c = result_.final;
    auto& odo = result_.odometer;
    if (tracker_ && options_.check_steps) {
      const double deviation = check_martingale_step(g_, c, mover, *tracker_, target_jumps_);
      result_.max_step_deviation = std::max(result_.max_step_deviation, deviation);
      ++result_.steps_checked;
      if (options_.record_trace) pending_expected_ = value_ + expected_increment(c, mover);
    }

    const auto nbrs = g_.neighbors(mover.at);
    const std::uint32_t label = g_.label(mover.at);
    Vertex oil_to;
    Vertex water_to;
    if (mover.kind == Mover::Kind::ghost) {
      oil_to = water_to = nbrs[tau_.ghost_step(label, odo.ghost_jumps[mover.at], g_.degree())];
    } else {
      const auto instr = tau_.pair_at(label, odo.fires[mover.at], g_.degree());
      oil_to = nbrs[instr.oil];
      water_to = nbrs[instr.water];
    }
    const Vertex touched[] = {mover.at, oil_to, water_to};

    double before = 0.0;
    if (tracker_) {
      for (std::size_t i = 0; i < 3; ++i) {
        if (std::find(touched, touched + i, touched[i]) == touched + i) {
          before += tracker_->contribution(g_, c, touched[i]);
        }
      }
    }
    if (apply_move(g_, c, mover, oil_to, water_to, &odo)) ++result_.ghosts_created_total;
    ++result_.T;
    for (Vertex x : touched) refresh(x);

    if (tracker_) {
      double after = 0.0;
      for (std::size_t i = 0; i < 3; ++i) {
        if (std::find(touched, touched + i, touched[i]) == touched + i) {
          after += tracker_->contribution(g_, c, touched[i]);
        }
      }
      value_ += after - before;
      if (mover.at == tracker_->target()) {
        ++target_jumps_;
        value_ -= tracker_->laplacian_at_target();
      }
      if (options_.record_trace && options_.check_steps) result_.trace.push_back({value_, pending_expected_});
      if (result_.T % options_.recompute_interval == 0) guard_drift();
    }
  }

  // E[M_t | F_{t-1}] = M_{t-1} + signed deviation; recomputed here by enumeration.
  double expected_increment(const ExtendedConfig& c, Mover mover) const {
    const auto nbrs = g_.neighbors(mover.at);
    const std::uint64_t jumps_after = target_jumps_ + (mover.at == tracker_->target() ? 1 : 0);
    double sum = 0.0;
    std::size_t outcomes = 0;
    for (Vertex a : nbrs) {
      if (mover.kind == Mover::Kind::ghost) {
        ExtendedConfig next = c;
        apply_move(g_, next, mover, a, a);
        sum += tracker_->evaluate(g_, next, jumps_after);
        ++outcomes;
        continue;
      }
      for (Vertex b : nbrs) {
        ExtendedConfig next = c;
        apply_move(g_, next, mover, a, b);
        sum += tracker_->evaluate(g_, next, jumps_after);
        ++outcomes;
      }
    }
    return sum / static_cast<double>(outcomes) - tracker_->evaluate(g_, c, target_jumps_);
  }

  void guard_drift() {
    const double exact = tracker_->evaluate(g_, result_.final, target_jumps_);
    result_.max_drift = std::max(result_.max_drift, std::abs(exact - value_));
    value_ = exact;
  }

  const Graph& g_;
  const InstructionArray& tau_;
  SchedulerSpec scheduler_;
  GhostOptions options_;
  VertexSet ghosts_;
  VertexSet unstable_;
  std::mt19937_64 rng_;
  std::optional<MartingaleTracker> tracker_;
  double value_ = 0.0;
  double pending_expected_ = 0.0;
  std::uint64_t target_jumps_ = 0;
  GhostRunResult result_;
};

struct RunningMoments {
  double sum = 0.0;
  double sum_sq = 0.0;

  void add(double v) {
    sum += v;
    sum_sq += v * v;
  }
  void merge(const RunningMoments& o) {
    sum += o.sum;
    sum_sq += o.sum_sq;
  }
  double mean(std::uint64_t n) const { return n ? sum / static_cast<double>(n) : 0.0; }
  double standard_error(std::uint64_t n) const {
    if (n < 2) return 0.0;
    const double m = mean(n);
    const double var = std::max(0.0, (sum_sq - static_cast<double>(n) * m * m) / static_cast<double>(n - 1));
    return std::sqrt(var / static_cast<double>(n));
  }
};

double z_score(double diff, double se) {
  if (se > 0.0) return diff / se;
  return diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
}

}  // namespace

SchedulerSpec SchedulerSpec::parse(const std::string& text) {
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  SchedulerSpec spec;
  if (head == "ghosts_first") {
    spec.policy = SchedulerPolicy::ghosts_first;
  } else if (head == "pairs_first") {
    spec.policy = SchedulerPolicy::pairs_first;
  } else if (head == "random") {
    spec.policy = SchedulerPolicy::random;
    if (colon != std::string::npos) {
      try {
        spec.seed = std::stoull(text.substr(colon + 1), nullptr, 0);
      } catch (const std::exception&) {
        throw ConfigError("scheduler: bad seed in '" + text + "'");
      }
    }
  } else {
    throw ConfigError("unknown scheduler '" + text + "'");
  }
  return spec;
}

std::string SchedulerSpec::name() const {
  switch (policy) {
    case SchedulerPolicy::ghosts_first: return "ghosts_first";
    case SchedulerPolicy::pairs_first: return "pairs_first";
    case SchedulerPolicy::random: return "random:" + std::to_string(seed);
  }
  return "?";
}

std::optional<Vertex> apply_move(const Graph& g, ExtendedConfig& c, Mover mover, Vertex oil_to, Vertex water_to,
                                  Odometer* odometer) {
  const Vertex b = mover.at;
  if (!g.contains(b) || !g.is_active(b)) throw IllegalOperation("ghost-pair move from a non-active vertex");
  if (mover.kind == Mover::Kind::ghost) {
    if (c.ghost[b] == 0) throw IllegalOperation("ghost move from a vertex without ghosts");
    --c.ghost[b];
    ++c.ghost[oil_to];
    if (odometer) {
      ++odometer->ghost_jumps[b];
      ++odometer->pair_or_ghost_jumps[b];
    }
    return std::nullopt;
  }

  auto& base = c.base;
  if (base.is_stable(b)) throw IllegalOperation("pair move from a stable vertex");
  const bool hole_before = base.is_hole(water_to);
  --base.oil[b];
  --base.water[b];
  ++base.oil[oil_to];
  ++base.water[water_to];
  if (odometer) {
    ++odometer->fires[b];
    ++odometer->pair_or_ghost_jumps[b];
  }
  if (hole_before && base.water[water_to] == base.oil[water_to] + 1) {
    if (odometer) ++odometer->waters_into_hole[water_to];
    if (g.is_active(water_to)) {
      ++c.ghost[water_to];
      if (odometer) ++odometer->ghosts_created[water_to];
      return water_to;
    }
  }
  return std::nullopt;
}

MartingaleTracker::MartingaleTracker(const Graph& g, Vertex target) : target_(target) {
  const auto sol = harmonic_solve(g, g.active(), target);
  g_ = sol.g;
  laplacian_at_target_ = sol.laplacian_at_target;
}

double MartingaleTracker::contribution(const Graph& graph, const ExtendedConfig& c, Vertex x) const {
  if (!graph.is_active(x)) return 0.0;
  return static_cast<double>(c.base.pairs(x) + c.ghost[x]) * g_[x];
}

double MartingaleTracker::evaluate(const Graph& graph, const ExtendedConfig& c, std::uint64_t target_jumps) const {
  double m = 0.0;
  for (Vertex x : graph.active()) m += contribution(graph, c, x);
  return m - laplacian_at_target_ * static_cast<double>(target_jumps);
}

double check_martingale_step(const Graph& g, const ExtendedConfig& before, Mover mover,
                             const MartingaleTracker& tracker, std::uint64_t target_jumps_before) {
  const double previous = tracker.evaluate(g, before, target_jumps_before);
  const std::uint64_t jumps_after = target_jumps_before + (mover.at == tracker.target() ? 1 : 0);
  const auto nbrs = g.neighbors(mover.at);
  double sum = 0.0;
  std::size_t outcomes = 0;
  for (Vertex a : nbrs) {
    if (mover.kind == Mover::Kind::ghost) {
      ExtendedConfig next = before;
      apply_move(g, next, mover, a, a);
      sum += tracker.evaluate(g, next, jumps_after);
      ++outcomes;
      continue;
    }
    for (Vertex b : nbrs) {
      ExtendedConfig next = before;
      apply_move(g, next, mover, a, b);
      sum += tracker.evaluate(g, next, jumps_after);
      ++outcomes;
    }
  }
  return std::abs(sum / static_cast<double>(outcomes) - previous);
}

GhostRunResult ghost_stabilize(const Graph& g, const ParticleConfig& sigma, const InstructionArray& tau,
                               const SchedulerSpec& scheduler, std::optional<Vertex> target, GhostOptions options) {
  if (options.recompute_interval == 0) throw ConfigError("ghost_stabilize: recompute interval must be >= 1");
  return GhostEngine(g, sigma, tau, scheduler, target, options).run();
}

BrwReport verify_lemma_brw(const Graph& g, const ParticleConfig& sigma, Vertex y, std::uint64_t n_runs,
                           std::uint64_t seed, const SchedulerSpec& scheduler, unsigned threads) {
  if (!g.contains(y) || !g.is_active(y)) throw ConfigError("verify_lemma_brw: target must be active");
  BrwReport report;
  report.target = y;
  report.runs = n_runs;
  {
    const auto column = green_column(g, g.active(), y);
    for (std::size_t i = 0; i < g.active().size(); ++i) {
      report.exact += static_cast<double>(sigma.pairs(g.active()[i])) * column[i];
    }
  }

  struct Acc {
    RunningMoments m_tilde;
    double ghosts = 0.0;
    std::uint64_t bookkeeping_failures = 0;
    std::uint64_t truncated = 0;
  };
  const auto blocks = run_blocks<Acc>(n_runs, threads, [&](std::uint64_t begin, std::uint64_t end) {
    Acc acc;
    for (std::uint64_t r = begin; r < end; ++r) {
      const InstructionArray tau(seed, static_cast<std::uint32_t>(r));
      SchedulerSpec run_scheduler = scheduler;
      run_scheduler.seed = scheduler.seed + r;
      const auto run = ghost_stabilize(g, sigma, tau, run_scheduler);
      acc.m_tilde.add(static_cast<double>(run.odometer.pair_or_ghost_jumps[y]));
      acc.ghosts += static_cast<double>(run.ghosts_created_total);
      if (!run.odometer.bookkeeping_holds()) ++acc.bookkeeping_failures;
      if (run.truncated) ++acc.truncated;
    }
    return acc;
  });
  Acc total;
  for (const auto& b : blocks) {
    total.m_tilde.merge(b.m_tilde);
    total.ghosts += b.ghosts;
    total.bookkeeping_failures += b.bookkeeping_failures;
    total.truncated += b.truncated;
  }
  report.mean = total.m_tilde.mean(n_runs);
  report.se = total.m_tilde.standard_error(n_runs);
  report.z = z_score(report.mean - report.exact, report.se);
  report.rel_err = report.exact > 0.0 ? std::abs(report.mean - report.exact) / report.exact
                                      : std::abs(report.mean - report.exact);
  report.bookkeeping_failures = total.bookkeeping_failures;
  report.truncated = total.truncated;
  report.mean_ghosts_created = n_runs ? total.ghosts / static_cast<double>(n_runs) : 0.0;
  return report;
}

Section4Report collect_section4_counters(const Graph& g, const DensitySpec& nu, std::uint64_t n_runs,
                                         std::uint64_t seed, const SchedulerSpec& scheduler, unsigned threads) {
  nu.validate();
  const auto& K = g.active();
  const std::size_t n = K.size();
  const GreenTable table = green_table(g, K);

  struct Acc {
    std::vector<RunningMoments> m_tilde, w, H, m, pairs0, egl_diff;
    std::uint64_t bookkeeping_failures = 0;
    std::uint64_t truncated = 0;
  };
  const auto blocks = run_blocks<Acc>(n_runs, threads, [&](std::uint64_t begin, std::uint64_t end) {
    Acc acc;
    for (auto* v : {&acc.m_tilde, &acc.w, &acc.H, &acc.m, &acc.pairs0, &acc.egl_diff}) v->resize(n);
    std::vector<double> created(n);
    for (std::uint64_t r = begin; r < end; ++r) {
      const auto run_id = static_cast<std::uint32_t>(r);
      const auto sigma = sample_initial(g, nu, seed, run_id);
      const InstructionArray tau(seed, run_id);
      SchedulerSpec run_scheduler = scheduler;
      run_scheduler.seed = scheduler.seed + r;
      const auto run = ghost_stabilize(g, sigma, tau, run_scheduler);
      const auto& odo = run.odometer;
      if (!odo.bookkeeping_holds()) ++acc.bookkeeping_failures;
      if (run.truncated) ++acc.truncated;
      for (std::size_t i = 0; i < n; ++i) created[i] = static_cast<double>(odo.ghosts_created[K[i]]);
      for (std::size_t i = 0; i < n; ++i) {
        const Vertex x = K[i];
        acc.m_tilde[i].add(static_cast<double>(odo.pair_or_ghost_jumps[x]));
        acc.w[i].add(static_cast<double>(odo.ghost_jumps[x]));
        acc.H[i].add(created[i]);
        acc.m[i].add(static_cast<double>(odo.fires[x]));
        acc.pairs0[i].add(static_cast<double>(sigma.pairs(x)));
        double predicted = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          if (created[j] != 0.0) predicted += created[j] * table.G(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i));
        }
        acc.egl_diff[i].add(static_cast<double>(odo.ghost_jumps[x]) - predicted);
      }
    }
    return acc;
  });

  Acc total;
  for (auto* v : {&total.m_tilde, &total.w, &total.H, &total.m, &total.pairs0, &total.egl_diff}) v->resize(n);
  for (const auto& b : blocks) {
    for (std::size_t i = 0; i < n; ++i) {
      total.m_tilde[i].merge(b.m_tilde[i]);
      total.w[i].merge(b.w[i]);
      total.H[i].merge(b.H[i]);
      total.m[i].merge(b.m[i]);
      total.pairs0[i].merge(b.pairs0[i]);
      total.egl_diff[i].merge(b.egl_diff[i]);
    }
    total.bookkeeping_failures += b.bookkeeping_failures;
    total.truncated += b.truncated;
  }

  Section4Report report;
  report.runs = n_runs;
  report.mu = nu.mu();
  report.bookkeeping_failures = total.bookkeeping_failures;
  report.truncated = total.truncated;
  report.pass = total.bookkeeping_failures == 0 && total.truncated == 0;
  for (std::size_t i = 0; i < n; ++i) {
    Section4Row row;
    row.x = K[i];
    row.mean_m_tilde = total.m_tilde[i].mean(n_runs);
    row.se_m_tilde = total.m_tilde[i].standard_error(n_runs);
    row.mean_w = total.w[i].mean(n_runs);
    row.mean_H = total.H[i].mean(n_runs);
    row.mean_m = total.m[i].mean(n_runs);
    for (std::size_t j = 0; j < n; ++j) {
      const double green = table.G(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i));
      row.ewl_bound += report.mu * green;
      row.brw_rhs += total.pairs0[j].mean(n_runs) * green;
      row.egl_rhs += total.H[j].mean(n_runs) * green;
    }
    row.ewl_ok = row.mean_m_tilde <= row.ewl_bound + 3.0 * row.se_m_tilde;
    row.egl_se = total.egl_diff[i].standard_error(n_runs);
    row.egl_z = z_score(total.egl_diff[i].mean(n_runs), row.egl_se);
    row.egl_ok = std::abs(row.egl_z) <= 3.0;
    report.pass = report.pass && row.ewl_ok && row.egl_ok;
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace ow
