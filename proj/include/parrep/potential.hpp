// Copyright 2026 The parrep authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace parrep {

using Position = std::vector<double>;

inline constexpr std::size_t kMaxDimension = 8;

enum class PotentialKind { flat, double_well_1d, tilted_double_well_1d, entropic_2d };

/// Potential energy V with analytic gradient and inverse temperature beta.
///
///   flat                  params [] or [d]     V = 0 in dimension d (default 1)
///   double_well_1d        params [h]           V = h (x^2 - 1)^2
///   tilted_double_well_1d params [h, c]        V = h (x^2 - 1)^2 + c x
///   entropic_2d           params [h, w]        V = x^6 + y^6 + h exp(-x^2/w^2) (1 - exp(-y^2/w^2))
///
/// The 2D landscape has a barrier along x = 0 pierced by a channel of width ~w
/// around y = 0, so crossings are limited by the channel's narrowness.
class Potential {
 public:
  Potential(PotentialKind kind, std::vector<double> params, double beta);

  PotentialKind kind() const noexcept { return kind_; }
  std::string_view name() const noexcept;
  const std::vector<double>& params() const noexcept { return params_; }
  std::size_t dimension() const noexcept { return dimension_; }
  double beta() const noexcept { return beta_; }

  double value(std::span<const double> x) const;
  void gradient(std::span<const double> x, std::span<double> out) const;

  // Scalar fast paths; only valid when dimension() == 1.
  double value1d(double x) const noexcept;
  double gradient1d(double x) const noexcept;

 private:
  PotentialKind kind_;
  std::vector<double> params_;
  double beta_;
  std::size_t dimension_;
};

Potential builtin_potential(std::string_view name, std::span<const double> params, double beta);

inline constexpr int kUnknownLabel = -1;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Position -> discrete state label. Wells are the label level sets.
class StateMap {
 public:
  virtual ~StateMap() = default;
  virtual int label(std::span<const double> x) const = 0;
  /// The well of a label as an interval, for 1D interval maps. Other maps are
  /// predicate-only and return nullopt.
  virtual std::optional<Interval> well_of(int label) const = 0;
};

class IntervalStateMap final : public StateMap {
 public:
  explicit IntervalStateMap(std::vector<double> boundaries);

  int label(std::span<const double> x) const override;
  int label1d(double x) const noexcept;
  std::optional<Interval> well_of(int label) const override;
  const std::vector<double>& boundaries() const noexcept { return boundaries_; }

 private:
  std::vector<double> boundaries_;
};

struct Minimum {
  Position position;
  int label;
};

/// Known local minima, numbered in discovery order.
class MinimaRegistry {
 public:
  explicit MinimaRegistry(double match_radius = 1e-3);

  double match_radius() const noexcept { return match_radius_; }
  std::vector<Minimum> minima() const;
  std::size_t size() const;

  /// Returns the label of the stored minimum near `point`, registering it as a
  /// new minimum when none matches.
  int match_or_add(std::span<const double> point);
  std::optional<int> find(std::span<const double> point) const;

 private:
  std::optional<int> find_locked(std::span<const double> point) const;

  double match_radius_;
  mutable std::mutex mutex_;
  std::vector<Minimum> minima_;
};

struct GradientDescentOptions {
  double step = 1e-2;
  std::size_t max_iters = 100000;
  double gradient_tolerance = 1e-8;
  /// Smallest Hessian eigenvalue accepted as a strict (isolated) minimum.
  double curvature_tolerance = 1e-6;
};

/// Labels a point by the minimum reached by fixed-step gradient descent.
/// Flat or degenerate limits are labelled kUnknownLabel.
class GradientDescentStateMap final : public StateMap {
 public:
  GradientDescentStateMap(Potential potential, std::shared_ptr<MinimaRegistry> registry,
                          GradientDescentOptions options = {});

  int label(std::span<const double> x) const override;
  std::optional<Interval> well_of(int) const override { return std::nullopt; }

  /// The descent limit from x, or nullopt when descent did not converge to a
  /// strict minimum.
  std::optional<Position> descend(std::span<const double> x) const;

  const MinimaRegistry& registry() const noexcept { return *registry_; }

 private:
  bool is_strict_minimum(std::span<const double> y) const;

  Potential potential_;
  std::shared_ptr<MinimaRegistry> registry_;
  GradientDescentOptions options_;
};

std::shared_ptr<const IntervalStateMap> interval_state_map(std::vector<double> boundaries);

std::shared_ptr<const GradientDescentStateMap> gradient_descent_state_map(
    const Potential& potential, std::shared_ptr<MinimaRegistry> registry,
    double step = 1e-2, std::size_t max_iters = 100000);

/// Integral of exp(-beta V) over an axis-aligned box by the midpoint rule.
double boltzmann_integral(const Potential& potential, std::span<const double> lo,
                          std::span<const double> hi, std::size_t points_per_axis = 200);

}  // namespace parrep
