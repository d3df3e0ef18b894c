// Copyright 2026 The parrep authors
// SPDX-License-Identifier: Apache-2.0

#include "parrep/parrep.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <tuple>

#include "parrep/parallel.hpp"

namespace parrep {

namespace {

enum PhaseTag : std::uint64_t {
  kPlainTag = 1,
  kDecorrelationTag = 2,
  kDephasingTag = 3,
  kParallelTag = 4,
  kRelaxationTag = 5,
};

constexpr std::size_t kPlainChunkSteps = 4096;
constexpr std::size_t kLockstepChunk = 1024;

}  // namespace

// ---------------------------------------------------------------------------
// SpeedProfile

SpeedProfile::SpeedProfile(std::vector<double> breaks, std::vector<double> speeds)
    : breaks_(std::move(breaks)), speeds_(std::move(speeds)) {
  require(speeds_.size() == breaks_.size() + 1, "speed profile needs one more speed than breakpoints");
  for (double s : speeds_) require(s > 0.0 && std::isfinite(s), "processor speeds must be positive and finite");
  double previous = 0.0;
  for (double b : breaks_) {
    require(b > previous && std::isfinite(b), "speed breakpoints must be positive and increasing");
    previous = b;
  }
}

double SpeedProfile::cumulative(double wall) const {
  double start = 0.0;
  double total = 0.0;
  for (std::size_t j = 0; j < breaks_.size(); ++j) {
    if (wall <= breaks_[j]) return total + speeds_[j] * (wall - start);
    total += speeds_[j] * (breaks_[j] - start);
    start = breaks_[j];
  }
  return total + speeds_.back() * (wall - start);
}

double SpeedProfile::inverse(double physical) const {
  double start = 0.0;
  double total = 0.0;
  for (std::size_t j = 0; j < breaks_.size(); ++j) {
    const double segment = speeds_[j] * (breaks_[j] - start);
    if (physical <= total + segment) return start + (physical - total) / speeds_[j];
    total += segment;
    start = breaks_[j];
  }
  return start + (physical - total) / speeds_.back();
}

// ---------------------------------------------------------------------------
// Configuration

DephasingMethod parse_dephasing_method(const std::string& name) {
  if (name == "fv") return DephasingMethod::fv;
  if (name == "restart") return DephasingMethod::restart;
  if (name == "exact_qsd") return DephasingMethod::exact_qsd;
  fail(ErrorCode::config, "unknown dephasing method '" + name + "' (expected fv, restart or exact_qsd)");
}

const char* to_string(DephasingMethod method) noexcept {
  switch (method) {
    case DephasingMethod::fv: return "fv";
    case DephasingMethod::restart: return "restart";
    case DephasingMethod::exact_qsd: return "exact_qsd";
  }
  return "unknown";
}

void ParRepConfig::validate() const {
  require(n_replicas >= 1, "parrep.N must be at least 1");
  require(dt > 0.0 && std::isfinite(dt), "sde.dt must be positive");
  require(tau_corr >= 0.0, "parrep.tau_corr must be nonnegative");
  if (std::isfinite(tau_corr)) steps_for(tau_corr, dt);
  if (dephasing != DephasingMethod::exact_qsd) {
    require(tau_dephase > 0.0, "parrep.tau_dephase must be positive");
    steps_for(tau_dephase, dt);
  }
  if (dephasing == DephasingMethod::fv) require(n_replicas >= 2, "Fleming-Viot dephasing needs N >= 2");
  steps_for(effective_relaxation(), dt);
  require(speeds.empty() || speeds.size() == n_replicas, "parrep.speeds must list one speed per replica");
  require(parallel_guard > 0.0, "parallel guard must be positive");
}

// ---------------------------------------------------------------------------
// Trajectory

TrajectoryRecorder::TrajectoryRecorder(int label, double entry, std::size_t max_events)
    : label_(label), entry_(entry), max_events_(max_events) {
  trajectory_.total_t_simu = entry;
}

bool TrajectoryRecorder::transition(double time, int label, int exit_face) {
  if (done()) return true;
  if (label == label_) return false;
  trajectory_.events.push_back({label_, entry_, time - entry_, exit_face});
  trajectory_.total_t_simu = time;
  label_ = label;
  entry_ = time;
  return done();
}

StateTrajectory TrajectoryRecorder::finish() && { return std::move(trajectory_); }

// ---------------------------------------------------------------------------
// Steps

DecorrelationResult decorrelation_step(const WalkerState& walker, double tau_corr, double dt,
                                       const Potential& potential, const StateMap& statemap,
                                       RngStream& rng, ClockLedger& ledger, ExitDetection detection) {
  require(tau_corr >= 0.0 && std::isfinite(tau_corr), "tau_corr must be finite and nonnegative");
  DecorrelationResult result;
  result.walker = walker;
  if (tau_corr == 0.0) return result;

  HorizonResult h = run_fixed_horizon(walker, potential, statemap, dt, tau_corr, rng, detection);
  ledger.t_simu += tau_corr;
  ledger.decorrelation_time += tau_corr;
  result.walker = std::move(h.walker);
  result.changes = std::move(h.changes);
  result.first_change_time = h.first_change_time;
  if (result.first_change_time || !result.changes.empty()) {
    result.status = DecorrelationStatus::exited;
    ++ledger.decorrelation_exits;
  }
  return result;
}

namespace {

struct ReplicaExit {
  std::size_t step = 0;
  Crossing crossing;
};

ParallelStepResult finish_parallel(std::size_t winner, std::size_t step, Crossing crossing, double dt) {
  ParallelStepResult r;
  r.event.exit_time = static_cast<double>(step) * dt;
  r.event.exit_face = crossing.exit_face;
  r.event.next_label = crossing.next_label;
  r.event.replica_id = winner;
  r.event.hitting_point = crossing.hitting_point;
  r.walker.position = std::move(crossing.hitting_point);
  r.walker.label = crossing.next_label;
  return r;
}

ParallelStepResult lockstep_parallel(const ReplicaEnsemble& ensemble, const ParallelStepOptions& options,
                                     const Potential& potential, const StateMap& statemap,
                                     const RngStream& rng) {
  const std::size_t n = ensemble.positions.size();
  const WellMonitor monitor(statemap, ensemble.well_label, potential, options.dt, ExitDetection::grid);
  std::vector<WalkerState> walkers(n);
  std::vector<RngStream> streams;
  streams.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    walkers[i].position = ensemble.positions[i];
    walkers[i].label = ensemble.well_label;
    streams.push_back(rng.child(i));
  }
  std::vector<std::optional<ReplicaExit>> exits(n);
  const auto guard_steps = static_cast<std::size_t>(std::floor(options.guard / options.dt));
  WorkerPool pool(resolve_workers(options.workers));

  std::size_t done = 0;
  while (done < guard_steps) {
    const std::size_t chunk_end = std::min(done + kLockstepChunk, guard_steps);
    pool.for_each(n, [&](std::size_t i) {
      Position before(walkers[i].position.size());
      for (std::size_t k = done + 1; k <= chunk_end; ++k) {
        before = walkers[i].position;
        em_advance(walkers[i], potential, options.dt, streams[i]);
        if (auto c = monitor.check(before, walkers[i].position, streams[i])) {
          exits[i] = ReplicaExit{k, std::move(*c)};
          return;
        }
      }
    });
    std::optional<std::size_t> winner;
    for (std::size_t i = 0; i < n; ++i)
      if (exits[i] && (!winner || exits[i]->step < exits[*winner]->step)) winner = i;
    if (winner) {
      const std::size_t step = exits[*winner]->step;
      ParallelStepResult r = finish_parallel(*winner, step, std::move(exits[*winner]->crossing), options.dt);
      r.wall = static_cast<double>(step) * options.dt;
      r.advance = static_cast<double>(n) * r.wall;
      return r;
    }
    done = chunk_end;
  }
  fail(ErrorCode::numerical, "parallel step found no exit within the guard time");
}

ParallelStepResult event_driven_parallel(const ReplicaEnsemble& ensemble, const ParallelStepOptions& options,
                                         const Potential& potential, const StateMap& statemap,
                                         const RngStream& rng) {
  const std::size_t n = ensemble.positions.size();
  require(options.speeds.size() == n, "one speed profile per replica is required");
  const WellMonitor monitor(statemap, ensemble.well_label, potential, options.dt, ExitDetection::grid);
  std::vector<WalkerState> walkers(n);
  std::vector<RngStream> streams;
  std::vector<std::size_t> steps(n, 0);
  streams.reserve(n);
  using Entry = std::tuple<double, std::size_t>;  // (wall time of next step, replica)
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
  for (std::size_t i = 0; i < n; ++i) {
    walkers[i].position = ensemble.positions[i];
    walkers[i].label = ensemble.well_label;
    streams.push_back(rng.child(i));
    queue.emplace(options.speeds[i].inverse(options.dt), i);
  }
  Position before;
  while (true) {
    const auto [wall, i] = queue.top();
    queue.pop();
    const std::size_t k = ++steps[i];
    if (static_cast<double>(k) * options.dt > options.guard)
      fail(ErrorCode::numerical, "parallel step found no exit within the guard time");
    before = walkers[i].position;
    em_advance(walkers[i], potential, options.dt, streams[i]);
    if (auto c = monitor.check(before, walkers[i].position, streams[i])) {
      ParallelStepResult r = finish_parallel(i, k, std::move(*c), options.dt);
      r.wall = wall;
      for (const auto& speed : options.speeds) r.advance += speed.cumulative(wall);
      return r;
    }
    queue.emplace(options.speeds[i].inverse(static_cast<double>(k + 1) * options.dt), i);
  }
}

}  // namespace

ParallelStepResult parallel_step(const ReplicaEnsemble& ensemble, const ParallelStepOptions& options,
                                 const Potential& potential, const StateMap& statemap,
                                 const RngStream& rng, ClockLedger& ledger) {
  const std::size_t n = ensemble.positions.size();
  require(n >= 1, "parallel step needs at least one replica");
  for (const auto& p : ensemble.positions)
    require(statemap.label(p) == ensemble.well_label, "every replica must start inside the current well");
  const bool uniform = std::all_of(options.speeds.begin(), options.speeds.end(),
                                   [](const SpeedProfile& s) { return s.is_unit(); });
  ParallelStepResult r = uniform ? lockstep_parallel(ensemble, options, potential, statemap, rng)
                                 : event_driven_parallel(ensemble, options, potential, statemap, rng);
  if (ledger.processor_time.size() < n) ledger.processor_time.resize(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    ledger.processor_time[i] += uniform ? r.wall : options.speeds[i].cumulative(r.wall);
  ledger.t_simu += r.advance;
  ledger.parallel_simu += r.advance;
  ledger.parallel_wall += r.wall;
  ++ledger.parallel_steps;
  r.walker.time = ledger.t_simu;
  return r;
}

// ---------------------------------------------------------------------------
// Stub dynamics

StubDraw stub_single_exit(const StubModel& model, RngStream& rng) {
  StubDraw d;
  d.exit_time = -std::log(rng.uniform()) / model.lambda;
  if (model.couple_face_to_time) {
    d.face = d.exit_time < std::numbers::ln2 / model.lambda ? 0 : 1;
    return d;
  }
  double u = rng.uniform();
  for (std::size_t f = 0; f < model.face_weights.size(); ++f) {
    d.face = static_cast<int>(f);
    if (u < model.face_weights[f]) break;
    u -= model.face_weights[f];
  }
  return d;
}

StubStep stub_parallel_step(const StubModel& model, std::size_t n_replicas,
                            const std::vector<SpeedProfile>& speeds, RngStream& rng) {
  require(n_replicas >= 1, "stub step needs at least one replica");
  require(model.lambda > 0.0, "stub rate must be positive");
  require(speeds.empty() || speeds.size() == n_replicas, "one speed profile per replica");
  StubStep best;
  double best_wall = kInfiniteTau;
  for (std::size_t i = 0; i < n_replicas; ++i) {
    const StubDraw d = stub_single_exit(model, rng);
    const double wall = speeds.empty() ? d.exit_time : speeds[i].inverse(d.exit_time);
    if (wall < best_wall) {
      best_wall = wall;
      best.winner = i;
      best.winner_time = d.exit_time;
      best.face = d.face;
    }
  }
  best.wall = best_wall;
  if (speeds.empty()) {
    best.advance = static_cast<double>(n_replicas) * best.winner_time;
  } else {
    for (const auto& s : speeds) best.advance += s.cumulative(best_wall);
  }
  return best;
}

// ---------------------------------------------------------------------------
// Dephasing and full runs

ReplicaEnsemble dephase(const WalkerState& walker, const ParRepConfig& cfg, const Potential& potential,
                        const StateMap& statemap, const WellModels& models, const RngStream& rng,
                        ClockLedger& ledger) {
  SamplerOptions opts;
  opts.dt = cfg.dt;
  opts.detection = cfg.dephasing_detection;
  opts.workers = cfg.workers;
  opts.max_restarts = cfg.max_restarts;

  switch (cfg.dephasing) {
    case DephasingMethod::exact_qsd: {
      const auto it = models.find(walker.label);
      if (it == models.end() || !it->second)
        fail(ErrorCode::config, "exact_qsd dephasing has no spectral model for well " + std::to_string(walker.label));
      RngStream stream = rng;
      ReplicaEnsemble e;
      e.well_label = walker.label;
      for (double x : sample_qsd(*it->second, stream, cfg.n_replicas)) {
        Position p{x};
        if (statemap.label(p) != walker.label)
          fail(ErrorCode::config, "spectral model for well " + std::to_string(walker.label) +
                                      " does not match the state map");
        e.positions.push_back(std::move(p));
      }
      return e;
    }
    case DephasingMethod::fv: {
      auto r = fleming_viot(walker, cfg.n_replicas, cfg.tau_dephase, potential, statemap, rng, opts);
      if (std::holds_alternative<Extinction>(r))
        fail(ErrorCode::numerical, "Fleming-Viot dephasing went extinct");
      auto& e = std::get<ReplicaEnsemble>(r);
      ledger.dephasing_wall += cfg.tau_dephase;
      ledger.dephasing_physical += static_cast<double>(cfg.n_replicas) * cfg.tau_dephase;
      return std::move(e);
    }
    case DephasingMethod::restart: {
      auto r = restart_dephasing(walker, cfg.n_replicas, cfg.tau_dephase, potential, statemap, rng, opts);
      if (const auto* nt = std::get_if<NonTermination>(&r))
        fail(ErrorCode::numerical, "restart dephasing of replica " + std::to_string(nt->replica) +
                                       " did not finish after " + std::to_string(nt->attempts) + " attempts");
      auto& e = std::get<ReplicaEnsemble>(r);
      double longest = 0.0;
      for (double t : e.replica_time) {
        longest = std::max(longest, t);
        ledger.dephasing_physical += t;
      }
      ledger.dephasing_wall += longest;
      return std::move(e);
    }
  }
  fail(ErrorCode::invalid_argument, "unknown dephasing method");
}

namespace {

class Runner {
 public:
  Runner(const WalkerState& initial, double dt, const Potential& potential, const StateMap& statemap,
         const RngStream& rng, std::size_t max_events)
      : potential_(potential), statemap_(statemap), rng_(rng), dt_(dt),
        recorder_(statemap.label(initial.position), 0.0, max_events) {
    walker_ = initial;
    walker_.time = 0.0;
    walker_.label = statemap.label(initial.position);
  }

  /// Records grid-observed changes; on reaching max_events trims the window
  /// credited to `bucket` back to the stopping time.
  bool record(const std::vector<LabelChange>& changes, double& bucket) {
    for (const auto& c : changes) {
      if (recorder_.transition(c.time, c.label, c.exit_face)) {
        const double trimmed = ledger_.t_simu - c.time;
        ledger_.t_simu = c.time;
        bucket -= trimmed;
        return true;
      }
    }
    return false;
  }

  bool plain_chunk() {
    RngStream stream = rng_.child(kPlainTag, phase_++);
    const double horizon = static_cast<double>(kPlainChunkSteps) * dt_;
    HorizonResult h = run_fixed_horizon(walker_, potential_, statemap_, dt_, horizon, stream);
    ledger_.t_simu += horizon;
    ledger_.decorrelation_time += horizon;
    walker_ = std::move(h.walker);
    return record(h.changes, ledger_.decorrelation_time);
  }

  RunResult finish() && {
    RunResult r;
    r.trajectory = std::move(recorder_).finish();
    r.ledger = std::move(ledger_);
    if (recorder_done_) r.ledger.t_simu = r.trajectory.total_t_simu;
    return r;
  }

  const Potential& potential_;
  const StateMap& statemap_;
  const RngStream& rng_;
  double dt_;
  TrajectoryRecorder recorder_;
  WalkerState walker_;
  ClockLedger ledger_;
  std::uint64_t phase_ = 0;
  bool recorder_done_ = false;
};

}  // namespace

RunResult direct_run(const WalkerState& initial, double dt, const Potential& potential,
                     const StateMap& statemap, const RngStream& rng, std::size_t max_events) {
  Runner run(initial, dt, potential, statemap, rng, max_events);
  run.ledger_.processor_time.assign(1, 0.0);
  while (!run.recorder_.done()) {
    if (run.plain_chunk()) break;
  }
  run.ledger_.processor_time[0] = run.ledger_.t_simu;
  run.recorder_done_ = true;
  return std::move(run).finish();
}

RunResult parrep_run(const WalkerState& initial, const ParRepConfig& cfg, const Potential& potential,
                     const StateMap& statemap, const WellModels& models, const RngStream& rng) {
  cfg.validate();
  Runner run(initial, cfg.dt, potential, statemap, rng, cfg.max_events);
  run.ledger_.processor_time.assign(cfg.n_replicas, 0.0);
  run.recorder_done_ = true;
  if (cfg.max_events == 0) return std::move(run).finish();

  ParallelStepOptions popts;
  popts.dt = cfg.dt;
  popts.guard = cfg.parallel_guard;
  popts.workers = cfg.workers;
  popts.speeds = cfg.speeds;
  const double relaxation = cfg.effective_relaxation();
  auto& ledger = run.ledger_;

  while (!run.recorder_.done()) {
    if (!std::isfinite(cfg.tau_corr) || run.walker_.label == kUnknownLabel) {
      if (run.plain_chunk()) break;
      continue;
    }

    RngStream decor_stream = rng.child(kDecorrelationTag, run.phase_++);
    DecorrelationResult d =
        decorrelation_step(run.walker_, cfg.tau_corr, cfg.dt, potential, statemap, decor_stream, ledger);
    run.walker_ = std::move(d.walker);
    if (run.record(d.changes, ledger.decorrelation_time)) break;
    if (d.status == DecorrelationStatus::exited) continue;

    const ReplicaEnsemble ensemble =
        dephase(run.walker_, cfg, potential, statemap, models, rng.child(kDephasingTag, run.phase_++), ledger);
    const ParallelStepResult p =
        parallel_step(ensemble, popts, potential, statemap, rng.child(kParallelTag, run.phase_++), ledger);
    run.walker_ = p.walker;
    if (run.recorder_.transition(ledger.t_simu, p.event.next_label, p.event.exit_face)) break;

    if (relaxation > 0.0) {
      RngStream relax_stream = rng.child(kRelaxationTag, run.phase_++);
      HorizonResult h = run_fixed_horizon(run.walker_, potential, statemap, cfg.dt, relaxation, relax_stream);
      ledger.t_simu += relaxation;
      ledger.relaxation_time += relaxation;
      run.walker_ = std::move(h.walker);
      if (run.record(h.changes, ledger.relaxation_time)) break;
    }
  }
  return std::move(run).finish();
}

// ---------------------------------------------------------------------------
// Reporting

Calibration calibrate(int label, const SpectralModel& model, double tau_corr) {
  Calibration c;
  c.label = label;
  c.gap_reciprocal = 1.0 / model.gap();
  c.mean_exit = 1.0 / model.eigenvalue(0);
  c.below_gap = tau_corr < c.gap_reciprocal;
  c.above_mean_exit = tau_corr > c.mean_exit;
  return c;
}

SpeedupReport speedup_report(const StateTrajectory& trajectory, const ClockLedger& ledger,
                             const WellModels& models, double tau_corr) {
  SpeedupReport r;
  r.modeled_wall = ledger.modeled_wall();
  const double total = trajectory.total_t_simu;
  r.speedup = r.modeled_wall > 0.0 ? total / r.modeled_wall : 1.0;
  r.parallel_fraction = total > 0.0 ? ledger.parallel_simu / total : 0.0;
  r.dephasing_overhead = r.modeled_wall > 0.0 ? ledger.dephasing_wall / r.modeled_wall : 0.0;
  for (const auto& [label, model] : models)
    if (model) r.calibration.push_back(calibrate(label, *model, tau_corr));
  return r;
}

}  // namespace parrep
