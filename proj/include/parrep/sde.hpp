// Copyright 2026 The parrep authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "parrep/error.hpp"
#include "parrep/potential.hpp"
#include "parrep/rng.hpp"

namespace parrep {

struct WalkerState {
  Position position;
  double time = 0.0;
  int label = kUnknownLabel;
};

struct ExitEvent {
  double exit_time = 0.0;  // physical time since entry
  Position hitting_point;
  int exit_face = -1;  // 1D: 0 left, 1 right
  int next_label = kUnknownLabel;
  std::size_t replica_id = 0;
};

/// Censored observation: the walker was still inside after max_time.
struct Timeout {
  double elapsed = 0.0;
  WalkerState last;
};

using ExitOutcome = std::variant<ExitEvent, Timeout>;

/// How a departure from the well is detected between two grid times.
///
/// `grid` only compares labels at the grid times. `bridge` additionally
/// accepts an excursion when a Brownian bridge between the two grid positions
/// would have crossed an endpoint of a 1D interval well; the crossing is drawn
/// with probability exp(-beta (b - x0)(b - x1) / dt) per endpoint b. Wells
/// without an interval description fall back to `grid`.
enum class ExitDetection { grid, bridge };

class NumericalError : public Error {
 public:
  NumericalError(const std::string& message, WalkerState last_finite)
      : Error(ErrorCode::numerical, message), last_(std::move(last_finite)) {}
  const WalkerState& last_finite_state() const noexcept { return last_; }

 private:
  WalkerState last_;
};

/// Number of dt steps in `duration`; throws unless duration is a multiple of dt.
std::size_t steps_for(double duration, double dt);

/// x' = x - grad V(x) dt + sqrt(2 dt / beta) noise, t' = t + dt.
void em_step_with_noise(WalkerState& walker, const Potential& potential, double dt,
                        std::span<const double> noise);
void em_advance(WalkerState& walker, const Potential& potential, double dt, RngStream& rng);
WalkerState em_step(WalkerState walker, const Potential& potential, double dt, RngStream& rng);

struct Crossing {
  int exit_face = -1;
  int next_label = kUnknownLabel;
  Position hitting_point;
  bool bridged = false;  // detected by the bridge test, walker still inside
};

/// Per-step exit test for one well.
class WellMonitor {
 public:
  WellMonitor(const StateMap& statemap, int well_label, const Potential& potential, double dt,
              ExitDetection detection);

  int well() const noexcept { return well_; }
  const std::optional<Interval>& interval() const noexcept { return interval_; }
  bool uses_bridge() const noexcept { return bridge_; }

  std::optional<Crossing> check(std::span<const double> before, std::span<const double> after,
                                RngStream& rng) const;

 private:
  const StateMap& statemap_;
  int well_;
  std::optional<Interval> interval_;
  bool bridge_;
  double beta_over_dt_;
  double lo_ = 0.0;
  double hi_ = 0.0;
};

ExitOutcome run_until_exit(const WalkerState& start, const Potential& potential,
                           const StateMap& statemap, double dt, RngStream& rng, double max_time,
                           ExitDetection detection = ExitDetection::grid,
                           std::size_t replica_id = 0);

struct LabelChange {
  double time;  // absolute walker time of the grid step that showed the new label
  int label;
  int exit_face;
};

struct HorizonResult {
  WalkerState walker;
  /// First time the walker was seen (or, with bridge detection, inferred) to
  /// leave its starting well, relative to the start.
  std::optional<double> first_change_time;
  /// Every grid-observed label change, in order.
  std::vector<LabelChange> changes;
};

/// Evolves exactly horizon/dt steps, recording label changes.
HorizonResult run_fixed_horizon(const WalkerState& start, const Potential& potential,
                                const StateMap& statemap, double dt, double horizon,
                                RngStream& rng, ExitDetection detection = ExitDetection::grid);

/// Exit face of a grid-observed move out of `well` (-1 when not an interval).
int exit_face_of(const std::optional<Interval>& well, std::span<const double> after);

}  // namespace parrep
