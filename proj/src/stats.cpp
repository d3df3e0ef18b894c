// Copyright 2026 The parrep authors
// SPDX-License-Identifier: Apache-2.0

#include "parrep/stats.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>

#include "parrep/error.hpp"

namespace parrep {

double kolmogorov_tail(double x) {
  if (!(x > 0.0)) return 1.0;
  constexpr double pi = std::numbers::pi;
  if (x < 1.0) {
    // Jacobi-theta form of the CDF converges fast for small x.
    double cdf = 0.0;
    for (int k = 1; k <= 20; ++k) {
      const double m = 2.0 * k - 1.0;
      cdf += std::exp(-m * m * pi * pi / (8.0 * x * x));
    }
    cdf *= std::sqrt(2.0 * pi) / x;
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    sum += sign * term;
    if (term < 1e-300) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

double chi2_survival(double statistic, double dof) {
  require(dof > 0.0, "chi-square degrees of freedom must be positive");
  if (!(statistic > 0.0)) return 1.0;
  return boost::math::gamma_q(0.5 * dof, 0.5 * statistic);
}

namespace {

double ks_p_value(double d, double n_eff) {
  const double sn = std::sqrt(n_eff);
  return kolmogorov_tail((sn + 0.12 + 0.11 / sn) * d);
}

}  // namespace

TestResult ks_exponential(std::span<const double> samples, double lambda) {
  require(samples.size() >= 10, "KS test needs at least 10 samples");
  require(lambda > 0.0, "exponential rate must be positive");
  for (double s : samples) require(s > 0.0, "exponential samples must be positive");
  TestResult r;
  r.n = samples.size();
  r.statistic = ks_statistic(std::vector<double>(samples.begin(), samples.end()),
                             [lambda](double t) { return -std::expm1(-lambda * t); });
  r.p_value = ks_p_value(r.statistic, static_cast<double>(r.n));
  r.null_description = "samples ~ Exp(" + std::to_string(lambda) + ")";
  return r;
}

TestResult two_sample_ks(std::span<const double> a, std::span<const double> b) {
  require(a.size() >= 10 && b.size() >= 10, "two-sample KS needs at least 10 samples per side");
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double na = static_cast<double>(x.size());
  const double nb = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  TestResult r;
  r.n = x.size() + y.size();
  r.statistic = d;
  r.p_value = ks_p_value(d, na * nb / (na + nb));
  r.null_description = "both samples share one distribution";
  return r;
}

TestResult chi2_table(const std::vector<std::vector<double>>& table) {
  const std::size_t rows = table.size();
  require(rows >= 2, "chi-square test needs at least two row categories");
  const std::size_t cols = table[0].size();
  require(cols >= 2, "chi-square test needs at least two column categories");
  std::vector<double> row_sum(rows, 0.0), col_sum(cols, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    require(table[i].size() == cols, "ragged contingency table");
    for (std::size_t j = 0; j < cols; ++j) {
      require(table[i][j] >= 0.0, "negative count in contingency table");
      row_sum[i] += table[i][j];
      col_sum[j] += table[i][j];
      total += table[i][j];
    }
  }
  double stat = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const double expected = row_sum[i] * col_sum[j] / total;
      if (!(expected >= 5.0)) fail(ErrorCode::invalid_argument, "sparse contingency cell (expected count < 5)");
      const double diff = table[i][j] - expected;
      stat += diff * diff / expected;
    }
  }
  TestResult r;
  r.n = static_cast<std::size_t>(total);
  r.statistic = stat;
  r.p_value = chi2_survival(stat, static_cast<double>((rows - 1) * (cols - 1)));
  r.null_description = "row and column categories are independent";
  return r;
}

TestResult chi2_independence(std::span<const int> rows, std::span<const int> cols) {
  require(rows.size() == cols.size(), "paired categorical samples must have equal length");
  std::map<int, std::size_t> row_index, col_index;
  for (int r : rows) row_index.emplace(r, 0);
  for (int c : cols) col_index.emplace(c, 0);
  std::size_t k = 0;
  for (auto& [key, idx] : row_index) idx = k++;
  k = 0;
  for (auto& [key, idx] : col_index) idx = k++;
  std::vector<std::vector<double>> table(row_index.size(), std::vector<double>(col_index.size(), 0.0));
  for (std::size_t i = 0; i < rows.size(); ++i) table[row_index[rows[i]]][col_index[cols[i]]] += 1.0;
  return chi2_table(table);
}

// ---------------------------------------------------------------------------

double DensityCurve::integrate(double lo, double hi) const {
  require(x.size() == density.size() && x.size() >= 2, "density curve needs matching abscissae");
  lo = std::max(lo, x.front());
  hi = std::min(hi, x.back());
  if (!(hi > lo)) return 0.0;
  const auto value_at = [&](std::size_t j, double s) {
    const double w = (s - x[j]) / (x[j + 1] - x[j]);
    return (1.0 - w) * density[j] + w * density[j + 1];
  };
  std::size_t j = static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), lo) - x.begin());
  j = j == 0 ? 0 : j - 1;
  double total = 0.0;
  for (; j + 1 < x.size() && x[j] < hi; ++j) {
    const double s0 = std::max(lo, x[j]);
    const double s1 = std::min(hi, x[j + 1]);
    if (s1 > s0) total += 0.5 * (s1 - s0) * (value_at(j, s0) + value_at(j, s1));
  }
  return total;
}

std::vector<double> histogram(std::span<const double> samples, std::size_t bins, double lo, double hi) {
  require(bins >= 2, "histogram needs at least two bins");
  require(hi > lo, "histogram range must be nonempty");
  require(!samples.empty(), "histogram of an empty sample");
  std::vector<double> p(bins, 0.0);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (double s : samples) {
    if (!(s >= lo) || !(s <= hi)) continue;
    auto k = static_cast<std::size_t>((s - lo) / width);
    p[std::min(k, bins - 1)] += 1.0;
  }
  for (double& v : p) v /= static_cast<double>(samples.size());
  return p;
}

std::vector<double> bin_density(const DensityCurve& density, std::size_t bins, double lo, double hi) {
  require(bins >= 2, "need at least two bins");
  require(hi > lo, "bin range must be nonempty");
  const double total = density.integrate(density.x.front(), density.x.back());
  require(total > 0.0, "density has zero mass");
  std::vector<double> q(bins);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t k = 0; k < bins; ++k)
    q[k] = density.integrate(lo + static_cast<double>(k) * width, lo + static_cast<double>(k + 1) * width) / total;
  return q;
}

double tv_distance(std::span<const double> p, std::span<const double> q) {
  require(p.size() == q.size(), "distributions must have the same number of bins");
  double s = 0.0, mp = 0.0, mq = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    s += std::abs(p[i] - q[i]);
    mp += p[i];
    mq += q[i];
  }
  return std::clamp(0.5 * (s + std::abs((1.0 - mp) - (1.0 - mq))), 0.0, 1.0);
}

double binned_tv(std::span<const double> samples, const DensityCurve& density, std::size_t bins,
                 double lo, double hi) {
  require(!samples.empty(), "binned TV of an empty sample");
  return tv_distance(histogram(samples, bins, lo, hi), bin_density(density, bins, lo, hi));
}

double binned_tv(const DensityCurve& a, const DensityCurve& b, std::size_t bins, double lo, double hi) {
  return tv_distance(bin_density(a, bins, lo, hi), bin_density(b, bins, lo, hi));
}

LogDecayFit fit_log_decay(std::span<const double> t, std::span<const double> values) {
  require(t.size() == values.size(), "times and values must have equal length");
  require(t.size() >= 3, "log-decay fit needs at least three points");
  const double n = static_cast<double>(t.size());
  std::vector<double> y(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    require(values[i] > 0.0, "log-decay fit needs positive values");
    y[i] = std::log(values[i]);
  }
  const double tm = std::accumulate(t.begin(), t.end(), 0.0) / n;
  const double ym = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double stt = 0.0, sty = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    stt += (t[i] - tm) * (t[i] - tm);
    sty += (t[i] - tm) * (y[i] - ym);
    syy += (y[i] - ym) * (y[i] - ym);
  }
  require(stt > 0.0, "log-decay fit needs distinct times");
  const double slope = sty / stt;
  LogDecayFit fit;
  fit.rate = -slope;
  fit.r_squared = syy > 0.0 ? std::min(1.0, (sty * sty) / (stt * syy)) : 1.0;
  return fit;
}

double mean(std::span<const double> v) {
  require(!v.empty(), "mean of an empty sample");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double variance(std::span<const double> v) {
  require(v.size() >= 2, "variance needs at least two samples");
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

double correlation(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size() && a.size() >= 2, "correlation needs paired samples");
  const double ma = mean(a);
  const double mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

double quantile(std::vector<double> v, double q) {
  require(!v.empty(), "quantile of an empty sample");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return (1.0 - w) * v[lo] + w * v[hi];
}

}  // namespace parrep
