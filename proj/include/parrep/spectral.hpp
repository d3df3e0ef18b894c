// Copyright 2026 The parrep authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "parrep/potential.hpp"
#include "parrep/rng.hpp"

namespace parrep {

/// Interior nodes x_i = a + i h, i = 1..n, with h = (b - a) / (n + 1).
struct WellGrid {
  double a = 0.0;
  double b = 1.0;
  std::size_t n = 0;
  double h = 0.0;

  WellGrid(double a, double b, std::size_t n);
  /// Node i for 0-based i in [0, n).
  double node(std::size_t i) const noexcept { return a + static_cast<double>(i + 1) * h; }
};

/// Symmetric tridiagonal matrix (diagonal + one off-diagonal).
struct Tridiagonal {
  std::vector<double> diag;
  std::vector<double> off;  // off[i] couples i and i + 1
};

struct EigenPairs {
  std::vector<double> values;                // ascending
  std::vector<std::vector<double>> vectors;  // unit Euclidean norm
};

/// The `count` smallest eigenpairs of a symmetric tridiagonal matrix, by
/// Sturm-sequence bisection followed by inverse iteration.
EigenPairs smallest_eigenpairs(const Tridiagonal& m, std::size_t count);

/// Dirichlet spectral data of the generator L f = beta^-1 e^{beta V} (e^{-beta V} f')'
/// on one 1D well. Eigenfunctions are orthonormal in L^2(mu_W), mu_W being the
/// Boltzmann measure restricted to the well and normalized.
class SpectralModel {
 public:
  static SpectralModel build(const Potential& potential, double a, double b, std::size_t n,
                             std::size_t k);

  const WellGrid& grid() const noexcept { return grid_; }
  double beta() const noexcept { return beta_; }
  std::size_t size() const noexcept { return eigenvalues_.size(); }

  std::span<const double> eigenvalues() const noexcept { return eigenvalues_; }
  double eigenvalue(std::size_t k) const { return eigenvalues_.at(k); }
  double gap() const { return eigenvalues_.at(1) - eigenvalues_.at(0); }

  /// u_k on the interior nodes (0-based k).
  std::span<const double> eigenfunction(std::size_t k) const { return eigenfunctions_.at(k); }
  /// u_k at any x in [a, b], linear between nodes and zero at the endpoints.
  double eigenfunction_at(std::size_t k, double x) const;

  /// QSD density with respect to Lebesgue measure on the interior nodes.
  std::span<const double> qsd_density() const noexcept { return qsd_; }
  /// mu_W(dx_i): e^{-beta V(x_i)} h / Z_W, sums to one.
  std::span<const double> mu_weights() const noexcept { return mu_weights_; }
  /// Integral of u_k against mu_W.
  double mu_projection(std::size_t k) const { return mu_projection_.at(k); }
  std::span<const double> potential_values() const noexcept { return potential_values_; }

  /// The symmetrized operator -D^{1/2} A D^{-1/2}, with its upper and lower
  /// off-diagonals assembled separately from their own formulas.
  const Tridiagonal& symmetric_operator() const noexcept { return operator_; }
  std::span<const double> lower_off_diagonal() const noexcept { return lower_; }
  bool is_self_adjoint() const noexcept;

  double mu_inner(std::span<const double> f, std::span<const double> g) const;

 private:
  SpectralModel(WellGrid grid) : grid_(grid) {}

  WellGrid grid_;
  double beta_ = 1.0;
  std::vector<double> potential_values_;
  Tridiagonal operator_;
  std::vector<double> lower_;
  std::vector<double> eigenvalues_;
  std::vector<std::vector<double>> eigenfunctions_;
  std::vector<double> qsd_;
  std::vector<double> mu_weights_;
  std::vector<double> mu_projection_;
};

/// Initial law mu_0 of the walker inside the well.
class InitialMeasure {
 public:
  enum class Kind { point_mass, grid_density, qsd };

  static InitialMeasure point_mass(double x0);
  /// Lebesgue density on the interior nodes of `grid`; normalized here.
  static InitialMeasure grid_density(const WellGrid& grid, std::vector<double> values);
  static InitialMeasure qsd();

  Kind kind() const noexcept { return kind_; }
  double point() const noexcept { return x0_; }
  std::span<const double> density() const noexcept { return density_; }

  /// a_k = integral of u_k against mu_0, for every eigenpair of the model.
  std::vector<double> coefficients(const SpectralModel& model) const;
  /// mu_0 as a density on the model grid (point masses become a hat of unit mass).
  std::vector<double> grid_values(const SpectralModel& model) const;

 private:
  Kind kind_ = Kind::qsd;
  double x0_ = 0.0;
  std::vector<double> density_;
};

struct SeriesValue {
  double value = 0.0;
  double raw = 0.0;             // before clamping
  double truncation_bound = 0.0;  // magnitude of the last retained term
};

/// P(T_W >= t) = sum_k e^{-lambda_k t} (int u_k dmu)(int u_k dmu_0), clamped to [0, 1].
SeriesValue survival_probability(const SpectralModel& model, const InitialMeasure& mu0, double t,
                                 std::size_t k_used);
SeriesValue survival_probability(const SpectralModel& model, const InitialMeasure& mu0, double t);

/// E(T_W) = sum_k (1 / lambda_k) (int u_k dmu)(int u_k dmu_0).
SeriesValue mean_exit_time(const SpectralModel& model, const InitialMeasure& mu0,
                           std::size_t k_used);
SeriesValue mean_exit_time(const SpectralModel& model, const InitialMeasure& mu0);

struct ConditionedDensity {
  std::vector<double> density;  // on interior nodes, integrates to one
  double clipped_mass = 0.0;    // negative mass removed before normalization
};

/// Density of Law(X_t | T_W >= t) for X_0 ~ mu_0.
ConditionedDensity conditioned_density(const SpectralModel& model, const InitialMeasure& mu0,
                                       double t);

/// Total variation between two densities on the model grid.
double grid_tv(const SpectralModel& model, std::span<const double> p, std::span<const double> q);

struct DecayFit {
  double rate = 0.0;
  double r_squared = 0.0;
  std::vector<double> distances;
};

/// Least-squares decay rate of TV(conditioned_density(t), nu) over t_grid.
DecayFit decay_rate_fit(const SpectralModel& model, const InitialMeasure& mu0,
                        std::span<const double> t_grid);

/// Picks fit times where the TV distance has settled on its slowest mode:
/// scans t from 1/gap in steps of 0.05/gap and keeps points with TV in
/// [floor, ceiling]. Throws if the distance is below floor from the start.
std::vector<double> late_decay_window(const SpectralModel& model, const InitialMeasure& mu0,
                                      double floor = 1e-11, double ceiling = 1e-4);

struct HittingMeasure {
  double left = 0.0;
  double right = 0.0;
  double raw_sum = 0.0;
};

/// Exit-point law under the QSD, from the boundary flux of nu.
HittingMeasure hitting_measure(const SpectralModel& model);

/// Exact draws from the piecewise-linear interpolant of nu (zero at a and b).
std::vector<double> sample_qsd(const SpectralModel& model, RngStream& rng, std::size_t count);

/// nu as (x, density) including the endpoints, for binned comparisons.
void qsd_curve(const SpectralModel& model, std::vector<double>& x, std::vector<double>& density);

}  // namespace parrep
