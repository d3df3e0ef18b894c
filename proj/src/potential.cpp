// Copyright 2026 The parrep authors
// SPDX-License-Identifier: Apache-2.0

#include "parrep/potential.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "parrep/error.hpp"

namespace parrep {
namespace {

std::size_t expected_params(PotentialKind kind) {
  switch (kind) {
    case PotentialKind::flat: return 0;
    case PotentialKind::double_well_1d: return 1;
    case PotentialKind::tilted_double_well_1d: return 2;
    case PotentialKind::entropic_2d: return 2;
  }
  return 0;
}

}  // namespace

Potential::Potential(PotentialKind kind, std::vector<double> params, double beta)
    : kind_(kind), params_(std::move(params)), beta_(beta), dimension_(1) {
  if (!(beta_ > 0.0) || !std::isfinite(beta_)) fail(ErrorCode::invalid_argument, "beta must be a positive finite number");
  for (double p : params_) {
    if (!std::isfinite(p)) fail(ErrorCode::invalid_argument, "potential parameters must be finite");
  }
  if (kind_ == PotentialKind::flat) {
    if (params_.size() > 1) fail(ErrorCode::invalid_argument, "flat takes [] or [dimension]");
    if (params_.size() == 1) {
      const double d = params_[0];
      if (d < 1 || d > static_cast<double>(kMaxDimension) || d != std::floor(d))
        fail(ErrorCode::invalid_argument, "flat dimension must be an integer in [1, 8]");
      dimension_ = static_cast<std::size_t>(d);
    }
  } else if (params_.size() != expected_params(kind_)) {
    fail(ErrorCode::invalid_argument, std::string(name()) + " expects " +
                                          std::to_string(expected_params(kind_)) + " parameter(s)");
  }
  if (kind_ == PotentialKind::entropic_2d) {
    dimension_ = 2;
    if (!(params_[1] > 0.0)) fail(ErrorCode::invalid_argument, "entropic_2d width must be positive");
  }
}

std::string_view Potential::name() const noexcept {
  switch (kind_) {
    case PotentialKind::flat: return "flat";
    case PotentialKind::double_well_1d: return "double_well_1d";
    case PotentialKind::tilted_double_well_1d: return "tilted_double_well_1d";
    case PotentialKind::entropic_2d: return "entropic_2d";
  }
  return "unknown";
}

double Potential::value1d(double x) const noexcept {
  switch (kind_) {
    case PotentialKind::flat: return 0.0;
    case PotentialKind::double_well_1d: {
      const double s = x * x - 1.0;
      return params_[0] * s * s;
    }
    case PotentialKind::tilted_double_well_1d: {
      const double s = x * x - 1.0;
      return params_[0] * s * s + params_[1] * x;
    }
    case PotentialKind::entropic_2d: break;
  }
  return 0.0;
}

double Potential::gradient1d(double x) const noexcept {
  switch (kind_) {
    case PotentialKind::flat: return 0.0;
    case PotentialKind::double_well_1d: return 4.0 * params_[0] * x * (x * x - 1.0);
    case PotentialKind::tilted_double_well_1d:
      return 4.0 * params_[0] * x * (x * x - 1.0) + params_[1];
    case PotentialKind::entropic_2d: break;
  }
  return 0.0;
}

double Potential::value(std::span<const double> x) const {
  require(x.size() == dimension_, "position dimension does not match the potential");
  if (kind_ != PotentialKind::entropic_2d) return dimension_ == 1 ? value1d(x[0]) : 0.0;
  const double h = params_[0];
  const double w2 = params_[1] * params_[1];
  const double gx = std::exp(-x[0] * x[0] / w2);
  const double gy = std::exp(-x[1] * x[1] / w2);
  return std::pow(x[0], 6) + std::pow(x[1], 6) + h * gx * (1.0 - gy);
}

void Potential::gradient(std::span<const double> x, std::span<double> out) const {
  require(x.size() == dimension_ && out.size() == dimension_,
          "position dimension does not match the potential");
  if (kind_ == PotentialKind::entropic_2d) {
    const double h = params_[0];
    const double w2 = params_[1] * params_[1];
    const double gx = std::exp(-x[0] * x[0] / w2);
    const double gy = std::exp(-x[1] * x[1] / w2);
    out[0] = 6.0 * std::pow(x[0], 5) - 2.0 * x[0] / w2 * h * gx * (1.0 - gy);
    out[1] = 6.0 * std::pow(x[1], 5) + 2.0 * x[1] / w2 * h * gx * gy;
    return;
  }
  if (dimension_ == 1) {
    out[0] = gradient1d(x[0]);
    return;
  }
  std::fill(out.begin(), out.end(), 0.0);
}

Potential builtin_potential(std::string_view name, std::span<const double> params, double beta) {
  std::vector<double> p(params.begin(), params.end());
  if (name == "flat") return Potential(PotentialKind::flat, std::move(p), beta);
  if (name == "double_well_1d") return Potential(PotentialKind::double_well_1d, std::move(p), beta);
  if (name == "tilted_double_well_1d")
    return Potential(PotentialKind::tilted_double_well_1d, std::move(p), beta);
  if (name == "entropic_2d") return Potential(PotentialKind::entropic_2d, std::move(p), beta);
  fail(ErrorCode::invalid_argument, "unknown potential '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------

IntervalStateMap::IntervalStateMap(std::vector<double> boundaries)
    : boundaries_(std::move(boundaries)) {
  require(boundaries_.size() >= 2, "interval state map needs at least two boundaries");
  for (std::size_t i = 0; i < boundaries_.size(); ++i) {
    require(!std::isnan(boundaries_[i]), "interval boundaries must not be NaN");
    if (i > 0) require(boundaries_[i] > boundaries_[i - 1], "interval boundaries must be strictly increasing");
  }
}

int IntervalStateMap::label1d(double x) const noexcept {
  if (!(x > boundaries_.front()) || !(x < boundaries_.back())) return kUnknownLabel;
  const auto it = std::upper_bound(boundaries_.begin(), boundaries_.end(), x);
  // x sitting exactly on an inner boundary belongs to no open interval.
  if (*(it - 1) == x) return kUnknownLabel;
  return static_cast<int>(it - boundaries_.begin()) - 1;
}

int IntervalStateMap::label(std::span<const double> x) const {
  require(x.size() == 1, "interval state maps are one-dimensional");
  return label1d(x[0]);
}

std::optional<Interval> IntervalStateMap::well_of(int label) const {
  if (label < 0 || static_cast<std::size_t>(label) + 1 >= boundaries_.size()) return std::nullopt;
  return Interval{boundaries_[label], boundaries_[label + 1]};
}

std::shared_ptr<const IntervalStateMap> interval_state_map(std::vector<double> boundaries) {
  return std::make_shared<const IntervalStateMap>(std::move(boundaries));
}

// ---------------------------------------------------------------------------

MinimaRegistry::MinimaRegistry(double match_radius) : match_radius_(match_radius) {
  require(match_radius_ > 0.0, "match radius must be positive");
}

std::vector<Minimum> MinimaRegistry::minima() const {
  std::lock_guard lock(mutex_);
  return minima_;
}

std::size_t MinimaRegistry::size() const {
  std::lock_guard lock(mutex_);
  return minima_.size();
}

std::optional<int> MinimaRegistry::find_locked(std::span<const double> point) const {
  // Snap anything within twice the radius so stored minima stay > 2r apart.
  const double snap = 2.0 * match_radius_;
  std::optional<int> best;
  double best_dist = snap;
  for (const auto& m : minima_) {
    if (m.position.size() != point.size()) continue;
    double d2 = 0.0;
    for (std::size_t i = 0; i < point.size(); ++i) {
      const double d = m.position[i] - point[i];
      d2 += d * d;
    }
    const double d = std::sqrt(d2);
    if (d <= best_dist) {
      best_dist = d;
      best = m.label;
    }
  }
  return best;
}

std::optional<int> MinimaRegistry::find(std::span<const double> point) const {
  std::lock_guard lock(mutex_);
  return find_locked(point);
}

int MinimaRegistry::match_or_add(std::span<const double> point) {
  std::lock_guard lock(mutex_);
  if (auto hit = find_locked(point)) return *hit;
  const int label = static_cast<int>(minima_.size());
  minima_.push_back({Position(point.begin(), point.end()), label});
  return label;
}

GradientDescentStateMap::GradientDescentStateMap(Potential potential,
                                                 std::shared_ptr<MinimaRegistry> registry,
                                                 GradientDescentOptions options)
    : potential_(std::move(potential)), registry_(std::move(registry)), options_(options) {
  require(registry_ != nullptr, "gradient descent state map needs a registry");
  require(options_.step > 0.0, "descent step must be positive");
  require(options_.max_iters > 0, "max_iters must be positive");
}

bool GradientDescentStateMap::is_strict_minimum(std::span<const double> y) const {
  const std::size_t d = y.size();
  const double eps = 1e-5;
  std::array<double, kMaxDimension * kMaxDimension> hess{};
  std::array<double, kMaxDimension> plus{}, minus{}, gp{}, gm{};
  for (std::size_t j = 0; j < d; ++j) {
    std::copy(y.begin(), y.end(), plus.begin());
    std::copy(y.begin(), y.end(), minus.begin());
    plus[j] += eps;
    minus[j] -= eps;
    potential_.gradient({plus.data(), d}, {gp.data(), d});
    potential_.gradient({minus.data(), d}, {gm.data(), d});
    for (std::size_t i = 0; i < d; ++i) hess[i * d + j] = (gp[i] - gm[i]) / (2.0 * eps);
  }
  // Cholesky of H - tol*I succeeds iff the smallest eigenvalue exceeds tol.
  std::array<double, kMaxDimension * kMaxDimension> chol{};
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = 0.5 * (hess[i * d + j] + hess[j * d + i]);
      if (i == j) s -= options_.curvature_tolerance;
      for (std::size_t k = 0; k < j; ++k) s -= chol[i * d + k] * chol[j * d + k];
      if (i == j) {
        if (!(s > 0.0)) return false;
        chol[i * d + i] = std::sqrt(s);
      } else {
        chol[i * d + j] = s / chol[j * d + j];
      }
    }
  }
  return true;
}

std::optional<Position> GradientDescentStateMap::descend(std::span<const double> x) const {
  const std::size_t d = potential_.dimension();
  require(x.size() == d, "position dimension does not match the potential");
  for (double xi : x) {
    if (!std::isfinite(xi)) fail(ErrorCode::invalid_argument, "non-finite position passed to the state map");
  }
  Position y(x.begin(), x.end());
  std::array<double, kMaxDimension> g{};
  for (std::size_t it = 0; it <= options_.max_iters; ++it) {
    potential_.gradient(y, {g.data(), d});
    double norm2 = 0.0;
    for (std::size_t i = 0; i < d; ++i) norm2 += g[i] * g[i];
    if (!std::isfinite(norm2)) return std::nullopt;
    if (std::sqrt(norm2) < options_.gradient_tolerance) {
      if (!is_strict_minimum(y)) return std::nullopt;
      return y;
    }
    for (std::size_t i = 0; i < d; ++i) y[i] -= options_.step * g[i];
  }
  return std::nullopt;
}

int GradientDescentStateMap::label(std::span<const double> x) const {
  const auto limit = descend(x);
  if (!limit) return kUnknownLabel;
  return registry_->match_or_add(*limit);
}

std::shared_ptr<const GradientDescentStateMap> gradient_descent_state_map(
    const Potential& potential, std::shared_ptr<MinimaRegistry> registry, double step,
    std::size_t max_iters) {
  GradientDescentOptions options;
  options.step = step;
  options.max_iters = max_iters;
  return std::make_shared<const GradientDescentStateMap>(potential, std::move(registry), options);
}

double boltzmann_integral(const Potential& potential, std::span<const double> lo,
                          std::span<const double> hi, std::size_t points_per_axis) {
  const std::size_t d = potential.dimension();
  require(lo.size() == d && hi.size() == d, "box dimension does not match the potential");
  require(points_per_axis >= 1, "need at least one quadrature point per axis");
  std::size_t total = 1;
  for (std::size_t i = 0; i < d; ++i) total *= points_per_axis;
  double cell = 1.0;
  for (std::size_t i = 0; i < d; ++i) cell *= (hi[i] - lo[i]) / static_cast<double>(points_per_axis);
  Position x(d);
  double sum = 0.0;
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    for (std::size_t i = 0; i < d; ++i) {
      const std::size_t k = rem % points_per_axis;
      rem /= points_per_axis;
      x[i] = lo[i] + (static_cast<double>(k) + 0.5) * (hi[i] - lo[i]) / static_cast<double>(points_per_axis);
    }
    sum += std::exp(-potential.beta() * potential.value(x));
  }
  return sum * cell;
}

}  // namespace parrep
