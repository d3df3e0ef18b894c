// Copyright 2026 The parrep authors
// SPDX-License-Identifier: Apache-2.0

#include "parrep/qsd_sampling.hpp"

#include <cmath>

#include "parrep/parallel.hpp"
#include "parrep/stats.hpp"

namespace parrep {

namespace {

constexpr std::uint64_t kSelectTag = 0x5e1ec7;

int start_well(const WalkerState& start, const StateMap& statemap) {
  const int label = statemap.label(start.position);
  if (label == kUnknownLabel) fail(ErrorCode::invalid_argument, "sampler must start inside a labelled well");
  return label;
}

}  // namespace

FlemingViotResult fleming_viot(const WalkerState& start, std::size_t n_replicas, double t_end,
                               const Potential& potential, const StateMap& statemap,
                               const RngStream& rng, const SamplerOptions& options) {
  require(n_replicas >= 2, "Fleming-Viot needs at least two replicas");
  require(t_end >= 0.0, "t_end must be nonnegative");
  const int well = start_well(start, statemap);
  const std::size_t steps = t_end == 0.0 ? 0 : steps_for(t_end, options.dt);

  ReplicaEnsemble ensemble;
  ensemble.well_label = well;
  ensemble.elapsed = t_end;
  ensemble.replica_time.assign(n_replicas, t_end);

  std::vector<WalkerState> walkers(n_replicas, start);
  for (auto& w : walkers) w.label = well;
  std::vector<RngStream> streams;
  streams.reserve(n_replicas);
  for (std::size_t i = 0; i < n_replicas; ++i) streams.push_back(rng.child(i));
  RngStream select = rng.child(kSelectTag);

  const WellMonitor monitor(statemap, well, potential, options.dt, options.detection);
  std::vector<char> exited(n_replicas, 0);
  std::vector<Position> before(n_replicas);
  WorkerPool pool(resolve_workers(options.workers));
  std::vector<std::size_t> alive;
  alive.reserve(n_replicas);

  for (std::size_t k = 1; k <= steps; ++k) {
    pool.for_each(n_replicas, [&](std::size_t i) {
      before[i] = walkers[i].position;
      em_advance(walkers[i], potential, options.dt, streams[i]);
      exited[i] = monitor.check(before[i], walkers[i].position, streams[i]).has_value() ? 1 : 0;
    });
    alive.clear();
    for (std::size_t i = 0; i < n_replicas; ++i)
      if (!exited[i]) alive.push_back(i);
    if (alive.size() == n_replicas) continue;
    if (alive.empty()) return Extinction{static_cast<double>(k) * options.dt, n_replicas};
    for (std::size_t i = 0; i < n_replicas; ++i) {
      if (!exited[i]) continue;
      // Pool: every walker currently inside, which excludes i itself.
      const std::size_t donor = alive[select.index(alive.size())];
      walkers[i].position = walkers[donor].position;
      exited[i] = 0;
      alive.push_back(i);
      ++ensemble.branch_count;
    }
  }

  ensemble.positions.reserve(n_replicas);
  for (auto& w : walkers) ensemble.positions.push_back(std::move(w.position));
  return ensemble;
}

RestartResult restart_dephasing(const WalkerState& start, std::size_t n_replicas,
                                double tau_dephase, const Potential& potential,
                                const StateMap& statemap, const RngStream& rng,
                                const SamplerOptions& options) {
  require(n_replicas >= 1, "restart dephasing needs at least one replica");
  require(tau_dephase > 0.0, "tau_dephase must be positive");
  const int well = start_well(start, statemap);
  steps_for(tau_dephase, options.dt);

  ReplicaEnsemble ensemble;
  ensemble.well_label = well;
  ensemble.elapsed = tau_dephase;
  ensemble.positions.resize(n_replicas);
  ensemble.replica_time.assign(n_replicas, 0.0);
  ensemble.restarts.assign(n_replicas, 0);
  std::vector<char> gave_up(n_replicas, 0);

  WorkerPool pool(resolve_workers(options.workers));
  pool.for_each(n_replicas, [&](std::size_t i) {
    WalkerState origin = start;
    origin.label = well;
    for (std::size_t attempt = 0; attempt <= options.max_restarts; ++attempt) {
      RngStream stream = rng.child(i, attempt);
      const ExitOutcome outcome =
          run_until_exit(origin, potential, statemap, options.dt, stream, tau_dephase, options.detection, i);
      if (const auto* timeout = std::get_if<Timeout>(&outcome)) {
        ensemble.replica_time[i] += timeout->elapsed;
        ensemble.positions[i] = timeout->last.position;
        return;
      }
      ensemble.replica_time[i] += std::get<ExitEvent>(outcome).exit_time;
      ++ensemble.restarts[i];
    }
    gave_up[i] = 1;
  });

  for (std::size_t i = 0; i < n_replicas; ++i)
    if (gave_up[i]) return NonTermination{i, options.max_restarts + 1};
  return ensemble;
}

RedistributionResult single_walker_redistribution(const WalkerState& start, double t_end,
                                                  const Potential& potential,
                                                  const StateMap& statemap, RngStream& rng,
                                                  const SamplerOptions& options) {
  require(start.position.size() == 1, "single-walker redistribution is one-dimensional");
  require(t_end >= 0.0, "t_end must be nonnegative");
  const int well = start_well(start, statemap);
  const auto steps = static_cast<std::size_t>(std::floor(t_end / options.dt + 1e-9));

  const WellMonitor monitor(statemap, well, potential, options.dt, options.detection);
  RedistributionResult result;
  result.occupation.reserve(steps / kRedistributionStride + 1);
  result.occupation.push_back(start.position[0]);

  WalkerState walker = start;
  walker.label = well;
  Position before(1);
  for (std::size_t k = 1; k <= steps; ++k) {
    before = walker.position;
    em_advance(walker, potential, options.dt, rng);
    if (monitor.check(before, walker.position, rng)) {
      // The start point is always recorded, so history is never empty here.
      walker.position[0] = result.occupation[rng.index(result.occupation.size())];
      ++result.redistributions;
    }
    if (k % kRedistributionStride == 0) result.occupation.push_back(walker.position[0]);
  }
  result.final_position = walker.position;

  if (const auto interval = statemap.well_of(well)) {
    result.histogram = histogram(result.occupation, kHistogramBins, interval->lo, interval->hi);
  }
  return result;
}

}  // namespace parrep
