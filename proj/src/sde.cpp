// Copyright 2026 The parrep authors
// SPDX-License-Identifier: Apache-2.0

#include "parrep/sde.hpp"

#include <array>
#include <cmath>

namespace parrep {

std::size_t steps_for(double duration, double dt) {
  require(dt > 0.0 && std::isfinite(dt), "dt must be positive and finite");
  require(duration >= 0.0 && std::isfinite(duration), "duration must be finite and nonnegative");
  const double ratio = duration / dt;
  const double rounded = std::round(ratio);
  require(std::abs(ratio - rounded) <= 1e-9 * std::max(1.0, ratio),
          "duration must be an integer multiple of dt");
  return static_cast<std::size_t>(rounded);
}

void em_step_with_noise(WalkerState& walker, const Potential& potential, double dt,
                        std::span<const double> noise) {
  const std::size_t d = potential.dimension();
  require(walker.position.size() == d && noise.size() == d, "dimension mismatch in em_step");
  const double scale = std::sqrt(2.0 * dt / potential.beta());
  WalkerState before = walker;
  if (d == 1) {
    walker.position[0] += -potential.gradient1d(walker.position[0]) * dt + scale * noise[0];
  } else {
    std::array<double, kMaxDimension> g{};
    potential.gradient(walker.position, {g.data(), d});
    for (std::size_t i = 0; i < d; ++i) walker.position[i] += -g[i] * dt + scale * noise[i];
  }
  walker.time += dt;
  for (double x : walker.position) {
    if (!std::isfinite(x)) throw NumericalError("non-finite position after Euler-Maruyama step", before);
  }
}

void em_advance(WalkerState& walker, const Potential& potential, double dt, RngStream& rng) {
  const std::size_t d = potential.dimension();
  require(walker.position.size() == d, "dimension mismatch in em_step");
  const double scale = std::sqrt(2.0 * dt / potential.beta());
  if (d == 1) {
    const double x = walker.position[0];
    const double next = x - potential.gradient1d(x) * dt + scale * rng.normal();
    if (!std::isfinite(next)) throw NumericalError("non-finite position after Euler-Maruyama step", walker);
    walker.position[0] = next;
    walker.time += dt;
    return;
  }
  std::array<double, kMaxDimension> noise{};
  for (std::size_t i = 0; i < d; ++i) noise[i] = rng.normal();
  em_step_with_noise(walker, potential, dt, {noise.data(), d});
}

WalkerState em_step(WalkerState walker, const Potential& potential, double dt, RngStream& rng) {
  em_advance(walker, potential, dt, rng);
  return walker;
}

namespace {

int face_beyond(double lo, double hi, double x) {
  if (x <= lo) return 0;
  if (x >= hi) return 1;
  return -1;
}

}  // namespace

int exit_face_of(const std::optional<Interval>& well, std::span<const double> after) {
  if (!well || after.size() != 1) return -1;
  return face_beyond(well->lo, well->hi, after[0]);
}

WellMonitor::WellMonitor(const StateMap& statemap, int well_label, const Potential& potential,
                         double dt, ExitDetection detection)
    : statemap_(statemap),
      well_(well_label),
      interval_(statemap.well_of(well_label)),
      bridge_(detection == ExitDetection::bridge && interval_.has_value() &&
              potential.dimension() == 1),
      beta_over_dt_(potential.beta() / dt) {
  if (interval_) {
    lo_ = interval_->lo;
    hi_ = interval_->hi;
  }
}

std::optional<Crossing> WellMonitor::check(std::span<const double> before,
                                           std::span<const double> after, RngStream& rng) const {
  const int now = statemap_.label(after);
  if (now != well_) {
    const int face = interval_ && after.size() == 1 ? face_beyond(lo_, hi_, after[0]) : -1;
    return Crossing{face, now, Position(after.begin(), after.end()), false};
  }
  if (!bridge_) return std::nullopt;
  const double x0 = before[0];
  const double x1 = after[0];
  const double p_lo = std::exp(-beta_over_dt_ * (x0 - lo_) * (x1 - lo_));
  const double p_hi = std::exp(-beta_over_dt_ * (hi_ - x0) * (hi_ - x1));
  // Excursions less likely than this are ignored, which also keeps the stream
  // untouched on the vast majority of steps.
  if (p_lo + p_hi < 1e-14) return std::nullopt;
  const double u = rng.uniform();
  int face = -1;
  double boundary = 0.0;
  if (u < p_lo) {
    face = 0;
    boundary = lo_;
  } else if (u < p_lo + (1.0 - p_lo) * p_hi) {
    face = 1;
    boundary = hi_;
  } else {
    return std::nullopt;
  }
  const double beyond = face == 0 ? std::nextafter(boundary, -INFINITY) : std::nextafter(boundary, INFINITY);
  const std::array<double, 1> probe{beyond};
  return Crossing{face, statemap_.label(probe), Position{boundary}, true};
}

namespace {

int resolve_start_label(const WalkerState& start, const StateMap& statemap) {
  for (double x : start.position) {
    if (!std::isfinite(x)) fail(ErrorCode::invalid_argument, "non-finite start position");
  }
  const int actual = statemap.label(start.position);
  if (start.label != kUnknownLabel && start.label != actual)
    fail(ErrorCode::invalid_argument, "walker label does not match its position");
  return actual;
}

}  // namespace

ExitOutcome run_until_exit(const WalkerState& start, const Potential& potential,
                           const StateMap& statemap, double dt, RngStream& rng, double max_time,
                           ExitDetection detection, std::size_t replica_id) {
  require(dt > 0.0, "dt must be positive");
  require(max_time > 0.0, "max_time must be positive");
  const int well = resolve_start_label(start, statemap);
  if (well == kUnknownLabel) fail(ErrorCode::invalid_argument, "run_until_exit must start inside a labelled well");

  const WellMonitor monitor(statemap, well, potential, dt, detection);
  WalkerState walker = start;
  walker.label = well;
  const double max_steps = std::floor(max_time / dt + 1e-9);
  Position before(walker.position.size());
  for (std::size_t k = 1; static_cast<double>(k) <= max_steps; ++k) {
    before = walker.position;
    em_advance(walker, potential, dt, rng);
    if (auto crossing = monitor.check(before, walker.position, rng)) {
      ExitEvent event;
      event.exit_time = static_cast<double>(k) * dt;
      event.hitting_point = std::move(crossing->hitting_point);
      event.exit_face = crossing->exit_face;
      event.next_label = crossing->next_label;
      event.replica_id = replica_id;
      return event;
    }
  }
  return Timeout{max_steps * dt, walker};
}

HorizonResult run_fixed_horizon(const WalkerState& start, const Potential& potential,
                                const StateMap& statemap, double dt, double horizon,
                                RngStream& rng, ExitDetection detection) {
  const std::size_t steps = steps_for(horizon, dt);
  HorizonResult result;
  result.walker = start;
  result.walker.label = resolve_start_label(start, statemap);
  const int start_label = result.walker.label;
  const double t0 = start.time;

  std::optional<WellMonitor> monitor;
  if (start_label != kUnknownLabel) monitor.emplace(statemap, start_label, potential, dt, detection);

  WalkerState& walker = result.walker;
  Position before(walker.position.size());
  for (std::size_t k = 1; k <= steps; ++k) {
    before = walker.position;
    em_advance(walker, potential, dt, rng);
    const double now = t0 + static_cast<double>(k) * dt;
    walker.time = now;
    if (monitor && !result.first_change_time) {
      if (auto crossing = monitor->check(before, walker.position, rng)) {
        result.first_change_time = static_cast<double>(k) * dt;
      }
    }
    const int label = statemap.label(walker.position);
    if (label != walker.label) {
      result.changes.push_back({now, label, exit_face_of(statemap.well_of(walker.label), walker.position)});
      walker.label = label;
    }
  }
  return result;
}

}  // namespace parrep
