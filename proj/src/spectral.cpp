// Copyright 2026 The parrep authors
// SPDX-License-Identifier: Apache-2.0

#include "parrep/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "parrep/error.hpp"
#include "parrep/stats.hpp"

namespace parrep {

WellGrid::WellGrid(double a_, double b_, std::size_t n_) : a(a_), b(b_), n(n_) {
  require(std::isfinite(a) && std::isfinite(b) && a < b, "well endpoints must satisfy a < b");
  require(n >= 3, "a well grid needs at least 3 interior points");
  h = (b - a) / static_cast<double>(n + 1);
}

// ---------------------------------------------------------------------------
// Symmetric tridiagonal eigensolver

namespace {

// Number of eigenvalues strictly below sigma (negative LDL^T pivots).
std::size_t sturm_count(const Tridiagonal& m, double sigma, double pivot_floor) {
  std::size_t count = 0;
  double q = 1.0;
  for (std::size_t i = 0; i < m.diag.size(); ++i) {
    const double e2 = i == 0 ? 0.0 : m.off[i - 1] * m.off[i - 1];
    q = (m.diag[i] - sigma) - (i == 0 ? 0.0 : e2 / q);
    if (std::abs(q) < pivot_floor) q = -pivot_floor;
    if (q < 0.0) ++count;
  }
  return count;
}

// Solves (m - shift I) x = rhs by Gaussian elimination with partial pivoting.
void shifted_solve(const Tridiagonal& m, double shift, double pivot_floor, std::vector<double>& rhs) {
  const std::size_t n = m.diag.size();
  std::vector<double> dd(n), up(m.off), u0(n), u1(n, 0.0), u2(n, 0.0), mult(n, 0.0);
  std::vector<char> swapped(n, 0);
  for (std::size_t i = 0; i < n; ++i) dd[i] = m.diag[i] - shift;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double sub = m.off[i];
    if (std::abs(dd[i]) >= std::abs(sub)) {
      u0[i] = dd[i];
      u1[i] = up[i];
      mult[i] = dd[i] == 0.0 ? 0.0 : sub / dd[i];
      dd[i + 1] -= mult[i] * up[i];
    } else {
      swapped[i] = 1;
      u0[i] = sub;
      u1[i] = dd[i + 1];
      u2[i] = i + 2 < n ? up[i + 1] : 0.0;
      mult[i] = dd[i] / sub;
      dd[i + 1] = up[i] - mult[i] * u1[i];
      if (i + 2 < n) up[i + 1] = -mult[i] * u2[i];
    }
  }
  u0[n - 1] = dd[n - 1];
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (swapped[i]) std::swap(rhs[i], rhs[i + 1]);
    rhs[i + 1] -= mult[i] * rhs[i];
  }
  for (std::size_t k = n; k-- > 0;) {
    double s = rhs[k];
    if (k + 1 < n) s -= u1[k] * rhs[k + 1];
    if (k + 2 < n) s -= u2[k] * rhs[k + 2];
    double pivot = u0[k];
    if (std::abs(pivot) < pivot_floor) pivot = pivot < 0.0 ? -pivot_floor : pivot_floor;
    rhs[k] = s / pivot;
  }
}

double norm2(const std::vector<double>& v) {
  return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
}

}  // namespace

EigenPairs smallest_eigenpairs(const Tridiagonal& m, std::size_t count) {
  const std::size_t n = m.diag.size();
  require(n >= 1 && m.off.size() + 1 == n, "malformed tridiagonal matrix");
  require(count >= 1 && count <= n, "eigenpair count must lie in [1, n]");

  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = (i > 0 ? std::abs(m.off[i - 1]) : 0.0) + (i + 1 < n ? std::abs(m.off[i]) : 0.0);
    lo = std::min(lo, m.diag[i] - r);
    hi = std::max(hi, m.diag[i] + r);
  }
  const double scale = std::max(std::abs(lo), std::abs(hi));
  const double eps = std::numeric_limits<double>::epsilon();
  const double pivot_floor = eps * eps * std::max(scale, 1e-300);

  EigenPairs out;
  out.values.resize(count);
  for (std::size_t k = 0; k < count; ++k) {
    double left = lo;
    double right = hi;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (left + right);
      if (sturm_count(m, mid, pivot_floor) > k) right = mid;
      else left = mid;
      if (right - left <= 2.0 * eps * std::max(std::abs(left), std::abs(right)) + pivot_floor) break;
    }
    out.values[k] = 0.5 * (left + right);
  }

  out.vectors.reserve(count);
  const double perturb = 10.0 * eps * scale;
  for (std::size_t k = 0; k < count; ++k) {
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = 1.0 + 0.1 * std::sin(0.7 * static_cast<double>(i) + static_cast<double>(k));
    for (int it = 0; it < 4; ++it) {
      shifted_solve(m, out.values[k] + perturb, pivot_floor, y);
      for (const auto& prev : out.vectors) {
        const double c = std::inner_product(y.begin(), y.end(), prev.begin(), 0.0);
        for (std::size_t i = 0; i < n; ++i) y[i] -= c * prev[i];
      }
      const double nrm = norm2(y);
      if (!(nrm > 0.0) || !std::isfinite(nrm)) fail(ErrorCode::numerical, "inverse iteration broke down");
      for (double& v : y) v /= nrm;
    }
    out.vectors.push_back(std::move(y));
  }
  return out;
}

// ---------------------------------------------------------------------------

SpectralModel SpectralModel::build(const Potential& potential, double a, double b, std::size_t n,
                                   std::size_t k) {
  require(potential.dimension() == 1, "the spectral model is one-dimensional");
  SpectralModel model(WellGrid(a, b, n));
  require(k >= 2, "need at least two eigenpairs");
  require(k <= n, "K must not exceed the number of grid points");
  const WellGrid& g = model.grid_;
  const double beta = potential.beta();
  model.beta_ = beta;

  std::vector<double>& v = model.potential_values_;
  v.resize(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = potential.value1d(g.node(i));
  // Midpoint j sits between node j-1 and node j (node -1 = a, node n = b).
  std::vector<double> vmid(n + 1);
  for (std::size_t j = 0; j <= n; ++j) vmid[j] = potential.value1d(g.a + (static_cast<double>(j) + 0.5) * g.h);

  const double c = 1.0 / (beta * g.h * g.h);
  Tridiagonal& op = model.operator_;
  op.diag.resize(n);
  op.off.resize(n - 1);
  model.lower_.resize(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    op.diag[i] = c * (std::exp(-beta * (vmid[i + 1] - v[i])) + std::exp(-beta * (vmid[i] - v[i])));
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double m = vmid[i + 1];
    // Upper: d_i^{1/2} A_{i,i+1} d_{i+1}^{-1/2}; lower: d_{i+1}^{1/2} A_{i+1,i} d_i^{-1/2}.
    op.off[i] = -c * std::exp(0.5 * beta * (v[i] - m) + 0.5 * beta * (v[i + 1] - m));
    model.lower_[i] = -c * std::exp(0.5 * beta * (v[i + 1] - m) + 0.5 * beta * (v[i] - m));
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(op.diag[i]) || (i + 1 < n && !std::isfinite(op.off[i])))
      fail(ErrorCode::numerical, "generator discretization overflowed; lower beta or shrink the well");
  }

  EigenPairs pairs = smallest_eigenpairs(op, k);
  model.eigenvalues_ = pairs.values;
  if (!(model.eigenvalues_[0] > 0.0) || !(model.eigenvalues_[1] > model.eigenvalues_[0]))
    fail(ErrorCode::numerical, "eigensolve did not produce 0 < lambda_1 < lambda_2");

  const double vmin = *std::min_element(v.begin(), v.end());
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = std::exp(-beta * (v[i] - vmin));
  const double dsum = std::accumulate(d.begin(), d.end(), 0.0);
  model.mu_weights_.resize(n);
  for (std::size_t i = 0; i < n; ++i) model.mu_weights_[i] = d[i] / dsum;

  // <u_j, u_k>_mu = sum y_j y_k / dsum for u = y / sqrt(d).
  const double norm = std::sqrt(dsum);
  model.eigenfunctions_.resize(k);
  model.mu_projection_.resize(k);
  for (std::size_t j = 0; j < k; ++j) {
    std::vector<double>& y = pairs.vectors[j];
    double sign = 1.0;
    if (j == 0) {
      sign = std::accumulate(y.begin(), y.end(), 0.0) >= 0.0 ? 1.0 : -1.0;
    } else {
      const double peak = std::abs(*std::max_element(y.begin(), y.end(), [](double p, double q) {
        return std::abs(p) < std::abs(q);
      }));
      for (double yi : y) {
        if (std::abs(yi) > 1e-3 * peak) {
          sign = yi > 0.0 ? 1.0 : -1.0;
          break;
        }
      }
    }
    std::vector<double>& u = model.eigenfunctions_[j];
    u.resize(n);
    double proj = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      u[i] = sign * y[i] * norm / std::sqrt(d[i]);
      proj += u[i] * model.mu_weights_[i];
    }
    model.mu_projection_[j] = proj;
  }

  const auto& u1 = model.eigenfunctions_[0];
  for (double x : u1) {
    if (!(x > 0.0)) fail(ErrorCode::numerical, "ground state is not positive on the grid; refine the grid");
  }
  model.qsd_.resize(n);
  double mass = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    model.qsd_[i] = u1[i] * d[i];
    mass += model.qsd_[i] * g.h;
  }
  for (double& q : model.qsd_) q /= mass;
  return model;
}

bool SpectralModel::is_self_adjoint() const noexcept {
  return std::equal(operator_.off.begin(), operator_.off.end(), lower_.begin(), lower_.end());
}

double SpectralModel::mu_inner(std::span<const double> f, std::span<const double> g) const {
  require(f.size() == grid_.n && g.size() == grid_.n, "grid function size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < grid_.n; ++i) s += f[i] * g[i] * mu_weights_[i];
  return s;
}

double SpectralModel::eigenfunction_at(std::size_t k, double x) const {
  const auto& u = eigenfunctions_.at(k);
  if (!(x > grid_.a) || !(x < grid_.b)) return 0.0;
  const double s = (x - grid_.a) / grid_.h;
  const auto j = std::min(static_cast<std::size_t>(s), grid_.n);
  const double frac = s - static_cast<double>(j);
  const auto at = [&](std::size_t node) { return node == 0 || node == grid_.n + 1 ? 0.0 : u[node - 1]; };
  return (1.0 - frac) * at(j) + frac * at(j + 1);
}

// ---------------------------------------------------------------------------

InitialMeasure InitialMeasure::point_mass(double x0) {
  require(std::isfinite(x0), "point mass location must be finite");
  InitialMeasure m;
  m.kind_ = Kind::point_mass;
  m.x0_ = x0;
  return m;
}

InitialMeasure InitialMeasure::grid_density(const WellGrid& grid, std::vector<double> values) {
  require(values.size() == grid.n, "grid density must have one value per interior node");
  double mass = 0.0;
  for (double v : values) {
    require(std::isfinite(v) && v >= 0.0, "grid density must be finite and nonnegative");
    mass += v * grid.h;
  }
  require(mass > 0.0, "grid density has zero mass");
  for (double& v : values) v /= mass;
  InitialMeasure m;
  m.kind_ = Kind::grid_density;
  m.density_ = std::move(values);
  return m;
}

InitialMeasure InitialMeasure::qsd() { return InitialMeasure(); }

std::vector<double> InitialMeasure::coefficients(const SpectralModel& model) const {
  const std::size_t k = model.size();
  std::vector<double> a(k, 0.0);
  const double h = model.grid().h;
  for (std::size_t j = 0; j < k; ++j) {
    switch (kind_) {
      case Kind::point_mass:
        a[j] = model.eigenfunction_at(j, x0_);
        break;
      case Kind::grid_density: {
        require(density_.size() == model.grid().n, "grid density does not match the model grid");
        const auto u = model.eigenfunction(j);
        for (std::size_t i = 0; i < u.size(); ++i) a[j] += u[i] * density_[i] * h;
        break;
      }
      case Kind::qsd: {
        const auto u = model.eigenfunction(j);
        const auto nu = model.qsd_density();
        for (std::size_t i = 0; i < u.size(); ++i) a[j] += u[i] * nu[i] * h;
        break;
      }
    }
  }
  return a;
}

std::vector<double> InitialMeasure::grid_values(const SpectralModel& model) const {
  const WellGrid& g = model.grid();
  switch (kind_) {
    case Kind::qsd: return {model.qsd_density().begin(), model.qsd_density().end()};
    case Kind::grid_density:
      require(density_.size() == g.n, "grid density does not match the model grid");
      return density_;
    case Kind::point_mass: break;
  }
  require(x0_ > g.a && x0_ < g.b, "point mass lies outside the well");
  std::vector<double> out(g.n, 0.0);
  const double s = (x0_ - g.a) / g.h;
  const auto j = std::min(static_cast<std::size_t>(s), g.n);
  const double frac = s - static_cast<double>(j);
  // Nodes j and j+1 in 1-based numbering; boundary nodes hand their share inward.
  if (j == 0) {
    out[0] = 1.0 / g.h;
  } else if (j >= g.n) {
    out[g.n - 1] = 1.0 / g.h;
  } else {
    out[j - 1] = (1.0 - frac) / g.h;
    out[j] = frac / g.h;
  }
  return out;
}

// ---------------------------------------------------------------------------

SeriesValue survival_probability(const SpectralModel& model, const InitialMeasure& mu0, double t,
                                 std::size_t k_used) {
  require(t >= 0.0, "survival time must be nonnegative");
  require(k_used >= 1 && k_used <= model.size(), "K_used must lie in [1, K]");
  const auto a = mu0.coefficients(model);
  SeriesValue out;
  for (std::size_t k = 0; k < k_used; ++k) {
    const double term = std::exp(-model.eigenvalue(k) * t) * model.mu_projection(k) * a[k];
    out.raw += term;
    out.truncation_bound = std::abs(term);
  }
  out.value = std::clamp(out.raw, 0.0, 1.0);
  return out;
}

SeriesValue survival_probability(const SpectralModel& model, const InitialMeasure& mu0, double t) {
  return survival_probability(model, mu0, t, model.size());
}

SeriesValue mean_exit_time(const SpectralModel& model, const InitialMeasure& mu0, std::size_t k_used) {
  require(k_used >= 1 && k_used <= model.size(), "K_used must lie in [1, K]");
  const auto a = mu0.coefficients(model);
  SeriesValue out;
  for (std::size_t k = 0; k < k_used; ++k) {
    const double term = model.mu_projection(k) * a[k] / model.eigenvalue(k);
    out.raw += term;
    out.truncation_bound = std::abs(term);
  }
  out.value = out.raw;
  return out;
}

SeriesValue mean_exit_time(const SpectralModel& model, const InitialMeasure& mu0) {
  return mean_exit_time(model, mu0, model.size());
}

ConditionedDensity conditioned_density(const SpectralModel& model, const InitialMeasure& mu0, double t) {
  require(t >= 0.0, "conditioning time must be nonnegative");
  const WellGrid& g = model.grid();
  ConditionedDensity out;
  if (t == 0.0) {
    out.density = mu0.grid_values(model);
    return out;
  }
  const auto a = mu0.coefficients(model);
  if (!(a[0] > 0.0)) fail(ErrorCode::numerical, "initial measure has no mass on the ground state");
  // Factor out e^{-lambda_1 t} so that late times do not underflow.
  std::vector<double> weight(model.size());
  for (std::size_t k = 0; k < model.size(); ++k)
    weight[k] = a[k] * std::exp(-(model.eigenvalue(k) - model.eigenvalue(0)) * t);
  const auto w = model.mu_weights();
  out.density.assign(g.n, 0.0);
  for (std::size_t k = 0; k < model.size(); ++k) {
    const auto u = model.eigenfunction(k);
    for (std::size_t i = 0; i < g.n; ++i) out.density[i] += weight[k] * u[i] * w[i];
  }
  double positive = 0.0;
  double negative = 0.0;
  for (double& p : out.density) {
    if (p < 0.0) {
      negative -= p;
      p = 0.0;
    } else {
      positive += p;
    }
  }
  if (!(positive > 0.0)) fail(ErrorCode::numerical, "conditioned density vanished");
  out.clipped_mass = negative / positive;
  for (double& p : out.density) p /= positive * g.h;
  return out;
}

double grid_tv(const SpectralModel& model, std::span<const double> p, std::span<const double> q) {
  require(p.size() == q.size(), "density size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s * model.grid().h;
}

DecayFit decay_rate_fit(const SpectralModel& model, const InitialMeasure& mu0,
                        std::span<const double> t_grid) {
  require(t_grid.size() >= 3, "decay fit needs at least three times");
  for (std::size_t i = 1; i < t_grid.size(); ++i) require(t_grid[i] > t_grid[i - 1], "fit times must increase");
  DecayFit fit;
  std::vector<double> ts;
  std::vector<double> ds;
  for (double t : t_grid) {
    const auto cond = conditioned_density(model, mu0, t);
    const double d = grid_tv(model, cond.density, model.qsd_density());
    fit.distances.push_back(d);
    if (d > 1e-14) {
      ts.push_back(t);
      ds.push_back(d);
    }
  }
  if (ds.size() < 3)
    fail(ErrorCode::numerical, "conditioned law already equals the QSD; decay rate undefined");
  const auto lf = fit_log_decay(ts, ds);
  fit.rate = lf.rate;
  fit.r_squared = lf.r_squared;
  return fit;
}

std::vector<double> late_decay_window(const SpectralModel& model, const InitialMeasure& mu0,
                                      double floor, double ceiling) {
  const double step = 0.05 / model.gap();
  std::vector<double> window;
  for (std::size_t m = 20; m < 20000; ++m) {
    const double t = static_cast<double>(m) * step;
    const auto cond = conditioned_density(model, mu0, t);
    const double d = grid_tv(model, cond.density, model.qsd_density());
    if (d < floor) break;
    if (d <= ceiling) window.push_back(t);
  }
  if (window.size() < 3)
    fail(ErrorCode::numerical, "conditioned law already equals the QSD; decay rate undefined");
  return window;
}

HittingMeasure hitting_measure(const SpectralModel& model) {
  const auto nu = model.qsd_density();
  const WellGrid& g = model.grid();
  const double inv_beta = 1.0 / model.beta();
  const double lambda1 = model.eigenvalue(0);
  // One-sided second-order differences with nu = 0 at both endpoints.
  const double slope_left = (4.0 * nu[0] - nu[1]) / (2.0 * g.h);
  const double slope_right = (nu[g.n - 2] - 4.0 * nu[g.n - 1]) / (2.0 * g.h);
  HittingMeasure out;
  const double left = inv_beta * slope_left / lambda1;
  const double right = -inv_beta * slope_right / lambda1;
  if (left < 0.0 || right < 0.0)
    fail(ErrorCode::numerical, "boundary flux has the wrong sign; refine the grid");
  out.raw_sum = left + right;
  out.left = left / out.raw_sum;
  out.right = right / out.raw_sum;
  return out;
}

void qsd_curve(const SpectralModel& model, std::vector<double>& x, std::vector<double>& density) {
  const WellGrid& g = model.grid();
  x.resize(g.n + 2);
  density.resize(g.n + 2);
  x[0] = g.a;
  density[0] = 0.0;
  for (std::size_t i = 0; i < g.n; ++i) {
    x[i + 1] = g.node(i);
    density[i + 1] = model.qsd_density()[i];
  }
  x[g.n + 1] = g.b;
  density[g.n + 1] = 0.0;
}

std::vector<double> sample_qsd(const SpectralModel& model, RngStream& rng, std::size_t count) {
  require(count >= 1, "sample count must be positive");
  std::vector<double> x, p;
  qsd_curve(model, x, p);
  const double h = model.grid().h;
  std::vector<double> cumulative(x.size(), 0.0);
  for (std::size_t j = 1; j < x.size(); ++j) cumulative[j] = cumulative[j - 1] + 0.5 * h * (p[j - 1] + p[j]);
  const double total = cumulative.back();
  const double a = model.grid().a;
  const double b = model.grid().b;

  std::vector<double> out(count);
  for (auto& sample : out) {
    const double r = rng.uniform() * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), r);
    std::size_t j = static_cast<std::size_t>(it - cumulative.begin());
    j = std::clamp<std::size_t>(j, 1, x.size() - 1) - 1;
    const double rem = r - cumulative[j];
    const double slope = (p[j + 1] - p[j]) / (2.0 * h);
    // Root of p_j s + slope s^2 = rem in the stable form.
    const double disc = std::max(0.0, p[j] * p[j] + 4.0 * slope * rem);
    const double denom = p[j] + std::sqrt(disc);
    double s = denom > 0.0 ? 2.0 * rem / denom : 0.0;
    s = std::clamp(s, 0.0, h);
    double xs = x[j] + s;
    if (!(xs > a)) xs = std::nextafter(a, b);
    if (!(xs < b)) xs = std::nextafter(b, a);
    sample = xs;
  }
  return out;
}

}  // namespace parrep
