// Copyright 2026 The parrep authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "parrep/potential.hpp"
#include "parrep/qsd_sampling.hpp"
#include "parrep/rng.hpp"
#include "parrep/sde.hpp"
#include "parrep/spectral.hpp"

namespace parrep {

/// Piecewise-constant processor speed rho(t) over wall time t >= 0.
///
/// speeds[j] applies on [breaks[j-1], breaks[j]), with breaks[-1] = 0 and the
/// last speed extending to infinity.
class SpeedProfile {
 public:
  SpeedProfile() : speeds_{1.0} {}
  SpeedProfile(std::vector<double> breaks, std::vector<double> speeds);
  static SpeedProfile constant(double speed) { return SpeedProfile({}, {speed}); }

  /// R(t): physical time simulated after wall time t.
  double cumulative(double wall) const;
  /// Wall time needed to simulate `physical` units of physical time.
  double inverse(double physical) const;
  bool is_unit() const noexcept { return breaks_.empty() && speeds_[0] == 1.0; }

  const std::vector<double>& breaks() const noexcept { return breaks_; }
  const std::vector<double>& speeds() const noexcept { return speeds_; }

 private:
  std::vector<double> breaks_;
  std::vector<double> speeds_;
};

enum class DephasingMethod { fv, restart, exact_qsd };

DephasingMethod parse_dephasing_method(const std::string& name);
const char* to_string(DephasingMethod method) noexcept;

inline constexpr double kInfiniteTau = std::numeric_limits<double>::infinity();

struct ParRepConfig {
  std::size_t n_replicas = 8;
  double tau_corr = 1.0;  // kInfiniteTau disables the parallel step
  double tau_dephase = 1.0;
  double dt = 1e-4;
  DephasingMethod dephasing = DephasingMethod::exact_qsd;
  /// Plain evolution after each parallel step; negative selects 10 dt.
  double relaxation_time = -1.0;
  std::size_t max_events = 1000;
  std::size_t workers = 1;
  /// One profile per replica, or empty for identical unit speeds.
  std::vector<SpeedProfile> speeds;
  /// Exit test used to kill walkers during fv and restart dephasing.
  ExitDetection dephasing_detection = ExitDetection::grid;
  /// Physical time per replica after which a parallel step gives up.
  double parallel_guard = 1e5;
  std::size_t max_restarts = 10000;

  double effective_relaxation() const noexcept { return relaxation_time < 0.0 ? 10.0 * dt : relaxation_time; }
  void validate() const;
};

/// Spectral models keyed by well label, for exact QSD dephasing and the
/// tau_corr calibration check.
using WellModels = std::map<int, std::shared_ptr<const SpectralModel>>;

struct ClockLedger {
  double t_simu = 0.0;
  double decorrelation_time = 0.0;  // serial, includes plain evolution off the wells
  double relaxation_time = 0.0;     // serial
  double dephasing_wall = 0.0;
  double dephasing_physical = 0.0;
  double parallel_wall = 0.0;
  double parallel_simu = 0.0;  // share of t_simu credited by parallel steps
  std::vector<double> processor_time;
  std::size_t decorrelation_exits = 0;
  std::size_t parallel_steps = 0;

  double modeled_wall() const noexcept {
    return decorrelation_time + relaxation_time + dephasing_wall + parallel_wall;
  }
};

struct TrajectoryEvent {
  int label = kUnknownLabel;
  double entry = 0.0;
  double hold = 0.0;
  int exit_face = -1;
};

struct StateTrajectory {
  std::vector<TrajectoryEvent> events;
  double total_t_simu = 0.0;
};

/// Accumulates holds; transitions into the current label are merged.
class TrajectoryRecorder {
 public:
  TrajectoryRecorder(int label, double entry, std::size_t max_events);

  /// Returns true once max_events transitions have been recorded.
  bool transition(double time, int label, int exit_face);
  bool done() const noexcept { return trajectory_.events.size() >= max_events_; }
  int label() const noexcept { return label_; }
  double last_time() const noexcept { return entry_; }
  StateTrajectory finish() &&;

 private:
  StateTrajectory trajectory_;
  int label_;
  double entry_;
  std::size_t max_events_;
};

enum class DecorrelationStatus { exited, decorrelated };

struct DecorrelationResult {
  DecorrelationStatus status = DecorrelationStatus::decorrelated;
  WalkerState walker;
  std::vector<LabelChange> changes;
  std::optional<double> first_change_time;
};

/// Evolves the reference walker for tau_corr and advances the clock by
/// tau_corr in both outcomes. walker.time is taken as the current t_simu.
DecorrelationResult decorrelation_step(const WalkerState& walker, double tau_corr, double dt,
                                       const Potential& potential, const StateMap& statemap,
                                       RngStream& rng, ClockLedger& ledger,
                                       ExitDetection detection = ExitDetection::grid);

struct ParallelStepOptions {
  double dt = 1e-4;
  double guard = 1e5;
  std::size_t workers = 1;
  std::vector<SpeedProfile> speeds;
};

struct ParallelStepResult {
  ExitEvent event;    // exit_time is the winner's own physical time
  WalkerState walker; // the winner just after leaving
  double advance = 0.0;  // credited to t_simu
  double wall = 0.0;
};

/// Runs the replicas until the first exit and credits the clock with the
/// summed physical time of every processor at that instant (N T when all
/// speeds are one). Ties go to the lowest replica index.
ParallelStepResult parallel_step(const ReplicaEnsemble& ensemble, const ParallelStepOptions& options,
                                 const Potential& potential, const StateMap& statemap,
                                 const RngStream& rng, ClockLedger& ledger);

/// Stub dynamics: each replica exits after an Exp(lambda) own-clock time
/// through face f with probability face_weights[f].
struct StubModel {
  double lambda = 1.0;
  std::vector<double> face_weights{0.5, 0.5};
  /// Deterministic face = (exit time < median) ? 0 : 1, breaking independence.
  bool couple_face_to_time = false;
};

struct StubDraw {
  double exit_time = 0.0;
  int face = 0;
};

StubDraw stub_single_exit(const StubModel& model, RngStream& rng);

struct StubStep {
  double advance = 0.0;
  double wall = 0.0;
  double winner_time = 0.0;
  std::size_t winner = 0;
  int face = 0;
};

/// Parallel step on stub dynamics; `speeds` empty means unit speeds.
StubStep stub_parallel_step(const StubModel& model, std::size_t n_replicas,
                            const std::vector<SpeedProfile>& speeds, RngStream& rng);

/// Draws N replicas for the walker's well by the configured method.
/// Does not advance the simulation clock.
ReplicaEnsemble dephase(const WalkerState& walker, const ParRepConfig& cfg, const Potential& potential,
                        const StateMap& statemap, const WellModels& models, const RngStream& rng,
                        ClockLedger& ledger);

struct RunResult {
  StateTrajectory trajectory;
  ClockLedger ledger;
};

RunResult parrep_run(const WalkerState& initial, const ParRepConfig& cfg, const Potential& potential,
                     const StateMap& statemap, const WellModels& models, const RngStream& rng);

RunResult direct_run(const WalkerState& initial, double dt, const Potential& potential,
                     const StateMap& statemap, const RngStream& rng, std::size_t max_events);

struct Calibration {
  int label = kUnknownLabel;
  double gap_reciprocal = 0.0;  // 1 / (lambda_2 - lambda_1)
  double mean_exit = 0.0;       // 1 / lambda_1
  bool below_gap = false;
  bool above_mean_exit = false;
  bool ok() const noexcept { return !below_gap && !above_mean_exit; }
};

struct SpeedupReport {
  double speedup = 0.0;
  double modeled_wall = 0.0;
  double parallel_fraction = 0.0;   // of t_simu
  double dephasing_overhead = 0.0;  // of the modeled wall clock
  std::vector<Calibration> calibration;
};

Calibration calibrate(int label, const SpectralModel& model, double tau_corr);
SpeedupReport speedup_report(const StateTrajectory& trajectory, const ClockLedger& ledger,
                             const WellModels& models, double tau_corr);

}  // namespace parrep
