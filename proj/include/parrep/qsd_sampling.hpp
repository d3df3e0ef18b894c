// Copyright 2026 The parrep authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <variant>
#include <vector>

#include "parrep/potential.hpp"
#include "parrep/rng.hpp"
#include "parrep/sde.hpp"

namespace parrep {

/// N walkers inside one well, approximately distributed as its QSD.
struct ReplicaEnsemble {
  std::vector<Position> positions;
  int well_label = kUnknownLabel;
  std::size_t branch_count = 0;  // Fleming-Viot resurrections
  double elapsed = 0.0;          // sampler time horizon
  /// Physical time spent by each replica (for wall-clock accounting).
  std::vector<double> replica_time;
  /// Restart dephasing only: rejected attempts per replica.
  std::vector<std::size_t> restarts;
};

/// Every Fleming-Viot walker left the well during the same step.
struct Extinction {
  double elapsed = 0.0;
  std::size_t replicas = 0;
};

/// A restart-dephasing replica ran out of attempts.
struct NonTermination {
  std::size_t replica = 0;
  std::size_t attempts = 0;
};

using FlemingViotResult = std::variant<ReplicaEnsemble, Extinction>;
using RestartResult = std::variant<ReplicaEnsemble, NonTermination>;

struct SamplerOptions {
  double dt = 1e-4;
  ExitDetection detection = ExitDetection::grid;
  std::size_t workers = 1;
  std::size_t max_restarts = 10000;
};

/// Fleming-Viot branching: a walker that leaves the well is moved onto a
/// uniformly chosen other walker still inside. Simultaneous exits are
/// handled in replica-index order against the already updated pool.
///
/// Replica n draws from rng.child(n); resurrection choices use a separate
/// child stream, so results do not depend on `workers`.
FlemingViotResult fleming_viot(const WalkerState& start, std::size_t n_replicas, double t_end,
                               const Potential& potential, const StateMap& statemap,
                               const RngStream& rng, const SamplerOptions& options);

/// Each replica evolves for tau_dephase from `start`; any exit discards the
/// attempt and restarts from `start` on a fresh stream.
RestartResult restart_dephasing(const WalkerState& start, std::size_t n_replicas,
                                double tau_dephase, const Potential& potential,
                                const StateMap& statemap, const RngStream& rng,
                                const SamplerOptions& options);

struct RedistributionResult {
  Position final_position;
  /// Recorded in-well positions (start first, then every 10th step).
  std::vector<double> occupation;
  /// Normalized occupation histogram over the well interval (1D wells only).
  std::vector<double> histogram;
  std::size_t redistributions = 0;
};

constexpr std::size_t kRedistributionStride = 10;
constexpr std::size_t kHistogramBins = 50;

/// One walker that, on leaving the well, jumps to a uniformly chosen past
/// in-well position. Requires a 1D walker.
RedistributionResult single_walker_redistribution(const WalkerState& start, double t_end,
                                                  const Potential& potential,
                                                  const StateMap& statemap, RngStream& rng,
                                                  const SamplerOptions& options);

}  // namespace parrep
