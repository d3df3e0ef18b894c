// Copyright 2026 The parrep authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <vector>

#include "doctest.h"
#include "parrep/sde.hpp"
#include "parrep/spectral.hpp"
#include "parrep/stats.hpp"

using namespace parrep;

namespace {

const Potential kFlat = builtin_potential("flat", {}, 1.0);

}  // namespace

TEST_CASE("equal seeds and stream ids give equal sequences") {
  RngStream a(11, 5), b(11, 5), c(11, 6), d(12, 5);
  bool differs_c = false, differs_d = false;
  for (int i = 0; i < 100; ++i) {
    const double x = a.normal();
    CHECK(x == b.normal());
    differs_c |= x != c.normal();
    differs_d |= x != d.normal();
  }
  CHECK(differs_c);
  CHECK(differs_d);
  CHECK(derive_stream_id(1, 2, 3) == derive_stream_id(1, 2, 3));
  CHECK(derive_stream_id(1, 2, 3) != derive_stream_id(1, 3, 2));
}

TEST_CASE("distinct streams are uncorrelated") {
  RngStream a(99, derive_stream_id(0, 1)), b(99, derive_stream_id(0, 2));
  std::vector<double> x(100000), y(100000);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = a.normal();
    y[i] = b.normal();
  }
  CHECK(std::abs(correlation(x, y)) < 0.02);
}

TEST_CASE("uniform draws stay in the open unit interval") {
  RngStream r(1, 1);
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
  }
  RngStream s = RngStream::silent();
  CHECK(s.normal() == 0.0);
  CHECK(s.uniform() == 0.5);
  CHECK(s.child(3).is_silent());
}

TEST_CASE("em_step examples") {
  RngStream silent = RngStream::silent();
  WalkerState w{{0.3}, 0.0, kUnknownLabel};
  const WalkerState w1 = em_step(w, kFlat, 1.0, silent);
  CHECK(w1.position[0] == 0.3);
  CHECK(w1.time == 1.0);

  const Potential dw = builtin_potential("double_well_1d", std::vector<double>{1.0}, 1.0);
  const WalkerState w2 = em_step({{0.5}, 0.0, kUnknownLabel}, dw, 0.01, silent);
  CHECK(w2.position[0] == doctest::Approx(0.515).epsilon(1e-14));
}

TEST_CASE("em_step increment variance on a flat potential") {
  const Potential flat2 = builtin_potential("flat", {}, 2.0);
  RngStream rng(5, 0);
  std::vector<double> inc(100000);
  for (auto& d : inc) d = em_step({{0.0}, 0.0, kUnknownLabel}, flat2, 0.01, rng).position[0];
  const double v = variance(inc);
  // Var of the sample variance for Gaussians is 2 sigma^4 / (n - 1).
  const double se = 0.01 * std::sqrt(2.0 / static_cast<double>(inc.size() - 1));
  CHECK(std::abs(v - 0.01) < 3.0 * se);
}

TEST_CASE("n-step increments have mean 0 and variance 2 n dt / beta") {
  const double beta = 2.0, dt = 0.01;
  const std::size_t n = 10;
  const Potential flat2 = builtin_potential("flat", {}, beta);
  RngStream rng(6, 0);
  std::vector<double> inc(100000);
  for (auto& d : inc) {
    WalkerState w{{0.0}, 0.0, kUnknownLabel};
    for (std::size_t k = 0; k < n; ++k) em_advance(w, flat2, dt, rng);
    d = w.position[0];
  }
  const double var = 2.0 * static_cast<double>(n) * dt / beta;
  CHECK(std::abs(mean(inc)) < 4.0 * std::sqrt(var / static_cast<double>(inc.size())));
  CHECK(std::abs(variance(inc) - var) < 4.0 * var * std::sqrt(2.0 / static_cast<double>(inc.size() - 1)));
}

TEST_CASE("em_step reports blow-up with the last finite state") {
  const Potential steep = builtin_potential("double_well_1d", std::vector<double>{1e6}, 1.0);
  RngStream rng(1, 1);
  WalkerState w{{50.0}, 0.0, kUnknownLabel};
  bool thrown = false;
  try {
    for (int i = 0; i < 100; ++i) em_advance(w, steep, 1.0, rng);
  } catch (const NumericalError& e) {
    thrown = true;
    CHECK(std::isfinite(e.last_finite_state().position[0]));
    CHECK(e.code() == ErrorCode::numerical);
  }
  CHECK(thrown);
}

TEST_CASE("run_until_exit preconditions and grid timing") {
  const auto map = interval_state_map({0.0, 1.0});
  RngStream rng(3, 3);
  CHECK_THROWS_AS(run_until_exit({{1.5}, 0.0, kUnknownLabel}, kFlat, *map, 1e-3, rng, 10.0), Error);
  for (int i = 0; i < 50; ++i) {
    const auto out = run_until_exit({{0.5}, 0.0, 0}, kFlat, *map, 1e-3, rng, 10.0);
    const auto& e = std::get<ExitEvent>(out);
    const double k = e.exit_time / 1e-3;
    CHECK(std::abs(k - std::round(k)) < 1e-9);
    CHECK(e.exit_time > 0.0);
    CHECK(e.next_label == kUnknownLabel);
    CHECK((e.exit_face == 0 ? e.hitting_point[0] <= 0.0 : e.hitting_point[0] >= 1.0));
  }
}

TEST_CASE("run_until_exit returns a timeout value") {
  const auto map = interval_state_map({-100.0, 100.0});
  RngStream rng(3, 4);
  const auto out = run_until_exit({{0.0}, 0.0, 0}, kFlat, *map, 1e-2, rng, 0.5);
  REQUIRE(std::holds_alternative<Timeout>(out));
  CHECK(std::get<Timeout>(out).elapsed == doctest::Approx(0.5));
}

TEST_CASE("mean exit time from 0.5 on the flat unit well matches the spectral series") {
  const auto map = interval_state_map({0.0, 1.0});
  const SpectralModel model = SpectralModel::build(kFlat, 0.0, 1.0, 2000, 16);
  const double oracle = mean_exit_time(model, InitialMeasure::point_mass(0.5)).value;
  const RngStream root(2024, 0);
  std::vector<double> t(10000);
  for (std::size_t i = 0; i < t.size(); ++i) {
    RngStream rng = root.child(i);
    t[i] = std::get<ExitEvent>(run_until_exit({{0.5}, 0.0, 0}, kFlat, *map, 1e-4, rng, 100.0, ExitDetection::bridge)).exit_time;
  }
  const double se = std::sqrt(variance(t) / static_cast<double>(t.size()));
  CHECK(std::abs(mean(t) - oracle) < 3.0 * se);
}

TEST_CASE("run_fixed_horizon without a change") {
  const auto map = interval_state_map({0.0, 1.0});
  RngStream silent = RngStream::silent();
  const HorizonResult r = run_fixed_horizon({{0.5}, 2.0, 0}, kFlat, *map, 0.1, 0.5, silent);
  CHECK(r.walker.time == doctest::Approx(2.5));
  CHECK_FALSE(r.first_change_time.has_value());
  CHECK(r.changes.empty());
  CHECK_THROWS_AS(run_fixed_horizon({{0.5}, 0.0, 0}, kFlat, *map, 0.1, 0.55, silent), Error);
}

TEST_CASE("forced crossing is reported at the first step with the new label") {
  // V = c x with c = -10 drifts right at speed 10 under a silent stream.
  const Potential tilt = builtin_potential("tilted_double_well_1d", std::vector<double>{0.0, -10.0}, 1.0);
  const auto map = interval_state_map({-1.0, 0.0, 1.0});
  RngStream silent = RngStream::silent();
  const HorizonResult r = run_fixed_horizon({{-0.35}, 0.0, 0}, tilt, *map, 0.01, 0.1, silent);
  REQUIRE(r.first_change_time.has_value());
  // x_k = -0.35 + 0.1 k is first positive at k = 4.
  CHECK(*r.first_change_time == doctest::Approx(0.04));
  REQUIRE(r.changes.size() == 1);
  CHECK(r.changes[0].label == 1);
  CHECK(r.changes[0].exit_face == 1);
  CHECK(r.changes[0].time == doctest::Approx(0.04));
}

TEST_CASE("survival over a fixed horizon matches the series") {
  const auto map = interval_state_map({0.0, 1.0});
  const SpectralModel model = SpectralModel::build(kFlat, 0.0, 1.0, 2000, 16);
  const double horizon = 0.1;
  const double p = survival_probability(model, InitialMeasure::point_mass(0.5), horizon).value;
  const RngStream root(77, 0);
  const int n = 10000;
  int survived = 0;
  for (int i = 0; i < n; ++i) {
    RngStream rng = root.child(static_cast<std::uint64_t>(i));
    if (!run_fixed_horizon({{0.5}, 0.0, 0}, kFlat, *map, 1e-4, horizon, rng, ExitDetection::bridge).first_change_time)
      ++survived;
  }
  const double se = std::sqrt(p * (1.0 - p) / n);
  CHECK(std::abs(static_cast<double>(survived) / n - p) < 3.0 * se);
}

TEST_CASE("nested wells exit no later under coupled noise") {
  const auto outer = interval_state_map({0.0, 1.0});
  const auto inner = interval_state_map({0.2, 0.8});
  const RngStream root(8, 0);
  for (std::uint64_t i = 0; i < 200; ++i) {
    RngStream a = root.child(i), b = root.child(i);
    const double t_in = std::get<ExitEvent>(run_until_exit({{0.5}, 0.0, 0}, kFlat, *inner, 1e-3, a, 100.0)).exit_time;
    const double t_out = std::get<ExitEvent>(run_until_exit({{0.5}, 0.0, 0}, kFlat, *outer, 1e-3, b, 100.0)).exit_time;
    CHECK(t_in <= t_out);
  }
}

TEST_CASE("exit sequences are reproducible") {
  const auto map = interval_state_map({0.0, 1.0});
  const RngStream root(31, 0);
  for (std::uint64_t i = 0; i < 20; ++i) {
    RngStream a = root.child(i), b = root.child(i);
    const auto ea = std::get<ExitEvent>(run_until_exit({{0.4}, 0.0, 0}, kFlat, *map, 1e-3, a, 100.0, ExitDetection::bridge));
    const auto eb = std::get<ExitEvent>(run_until_exit({{0.4}, 0.0, 0}, kFlat, *map, 1e-3, b, 100.0, ExitDetection::bridge));
    CHECK(ea.exit_time == eb.exit_time);
    CHECK(ea.hitting_point == eb.hitting_point);
    CHECK(ea.exit_face == eb.exit_face);
  }
}
