// Copyright 2026 The parrep authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace parrep {

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
  std::string null_description;

  bool passes(double alpha = 0.01) const noexcept { return p_value > alpha; }
};

/// Q(x) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 x^2), the Kolmogorov tail.
double kolmogorov_tail(double x);

/// Upper tail of the chi-square distribution.
double chi2_survival(double statistic, double dof);

/// Sup distance between the empirical CDF of `samples` and `cdf`.
template <typename Cdf>
double ks_statistic(std::vector<double> samples, Cdf cdf);

/// One-sample KS against Exp(lambda), asymptotic p-value with the
/// (sqrt(n) + 0.12 + 0.11 / sqrt(n)) small-sample correction.
TestResult ks_exponential(std::span<const double> samples, double lambda);

TestResult two_sample_ks(std::span<const double> a, std::span<const double> b);

/// Pearson chi-square independence test of two paired categorical samples.
TestResult chi2_independence(std::span<const int> rows, std::span<const int> cols);
/// Same test on an explicit contingency table of counts.
TestResult chi2_table(const std::vector<std::vector<double>>& table);

/// Piecewise-linear density given at increasing abscissae.
struct DensityCurve {
  std::vector<double> x;
  std::vector<double> density;

  /// Integral of the interpolant over [lo, hi] (zero outside [x.front(), x.back()]).
  double integrate(double lo, double hi) const;
};

/// Bin probabilities (count / total) over `bins` equal cells of [lo, hi).
/// Samples outside the range count toward the total only.
std::vector<double> histogram(std::span<const double> samples, std::size_t bins, double lo, double hi);

/// Bin masses of a density over equal cells of [lo, hi], normalized by its total mass.
std::vector<double> bin_density(const DensityCurve& density, std::size_t bins, double lo, double hi);

/// 1/2 sum |p_i - q_i| plus half the mismatch of mass outside the bins.
double tv_distance(std::span<const double> p, std::span<const double> q);

double binned_tv(std::span<const double> samples, const DensityCurve& density, std::size_t bins,
                 double lo, double hi);
double binned_tv(const DensityCurve& a, const DensityCurve& b, std::size_t bins, double lo, double hi);

struct LogDecayFit {
  double rate = 0.0;
  double r_squared = 0.0;
};

/// OLS of log(values) on t; rate is minus the slope.
LogDecayFit fit_log_decay(std::span<const double> t, std::span<const double> values);

double mean(std::span<const double> v);
/// Unbiased sample variance.
double variance(std::span<const double> v);
double correlation(std::span<const double> a, std::span<const double> b);

/// Sample quantile by linear interpolation of order statistics.
double quantile(std::vector<double> v, double q);

// ---------------------------------------------------------------------------

template <typename Cdf>
double ks_statistic(std::vector<double> samples, Cdf cdf) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

}  // namespace parrep
