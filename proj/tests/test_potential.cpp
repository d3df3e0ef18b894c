// Copyright 2026 The parrep authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>

#include "doctest.h"
#include "parrep/error.hpp"
#include "parrep/potential.hpp"

using namespace parrep;

namespace {

Potential make(std::string_view name, std::vector<double> params, double beta = 1.0) {
  return builtin_potential(name, params, beta);
}

}  // namespace

TEST_CASE("flat potential is zero with zero gradient") {
  const Potential v = make("flat", {});
  for (double x : {-3.0, 0.0, 0.25, 7.0}) {
    const Position p{x};
    double g = 1.0;
    v.gradient(p, std::span<double>(&g, 1));
    CHECK(v.value(p) == 0.0);
    CHECK(g == 0.0);
  }
  CHECK(make("flat", {3}).dimension() == 3);
}

TEST_CASE("double well values and gradient") {
  const Potential v = make("double_well_1d", {1.0});
  CHECK(v.value1d(0.0) == doctest::Approx(1.0));
  CHECK(v.value1d(1.0) == doctest::Approx(0.0));
  CHECK(v.value1d(-1.0) == doctest::Approx(0.0));
  CHECK(v.gradient1d(1.0) == doctest::Approx(0.0));
  CHECK(v.gradient1d(0.5) == doctest::Approx(-1.5));

  const Potential t = make("tilted_double_well_1d", {1.0, 0.3});
  CHECK(t.value1d(1.0) == doctest::Approx(0.3));
  CHECK(t.gradient1d(0.0) == doctest::Approx(0.3));
}

TEST_CASE("gradients match centered differences") {
  std::mt19937_64 gen(42);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  const std::vector<Potential> family = {make("double_well_1d", {2.0}), make("tilted_double_well_1d", {1.0, 0.4}),
                                         make("entropic_2d", {3.0, 0.3}), make("flat", {2})};
  for (const auto& v : family) {
    const std::size_t d = v.dimension();
    for (int trial = 0; trial < 200; ++trial) {
      Position x(d);
      for (auto& c : x) c = u(gen);
      Position g(d);
      v.gradient(x, g);
      for (std::size_t k = 0; k < d; ++k) {
        const double step = 1e-6 * std::max(1.0, std::abs(x[k]));
        Position xp = x, xm = x;
        xp[k] += step;
        xm[k] -= step;
        const double fd = (v.value(xp) - v.value(xm)) / (2.0 * step);
        CHECK(std::abs(fd - g[k]) <= 1e-5 * std::max(1.0, std::abs(g[k])));
      }
    }
  }
}

TEST_CASE("builtin_potential rejects bad input") {
  CHECK_THROWS_AS(make("harmonic", {}), Error);
  CHECK_THROWS_AS(make("double_well_1d", {}), Error);
  CHECK_THROWS_AS(make("double_well_1d", {1.0, 2.0}), Error);
  CHECK_THROWS_AS(make("double_well_1d", {NAN}), Error);
  CHECK_THROWS_AS(make("double_well_1d", {1.0}, 0.0), Error);
  CHECK_THROWS_AS(make("double_well_1d", {1.0}, -1.0), Error);
}

TEST_CASE("interval state map") {
  const auto unit = interval_state_map({0.0, 1.0});
  CHECK(unit->label1d(0.5) == 0);
  CHECK(unit->label1d(1.5) == kUnknownLabel);
  CHECK(unit->label1d(-0.1) == kUnknownLabel);

  const auto two = interval_state_map({-2.0, 0.0, 2.0});
  CHECK(two->label1d(-1.0) == 0);
  CHECK(two->label1d(1.0) == 1);
  REQUIRE(two->well_of(1).has_value());
  CHECK(two->well_of(1)->lo == 0.0);
  CHECK(two->well_of(1)->hi == 2.0);
  CHECK_FALSE(two->well_of(2).has_value());

  CHECK_THROWS_AS(interval_state_map({1.0, 0.0}), Error);
  CHECK_THROWS_AS(interval_state_map({0.0}), Error);
}

TEST_CASE("gradient descent state map numbers minima on discovery") {
  const Potential v = make("double_well_1d", {1.0});
  auto registry = std::make_shared<MinimaRegistry>();
  const auto map = gradient_descent_state_map(v, registry, 1e-2, 100000);
  const Position right{0.7}, left{-0.7};
  const int r = map->label(right);
  const int l = map->label(left);
  CHECK(r == 0);
  CHECK(l == 1);
  CHECK(registry->size() == 2);
  CHECK(map->label(Position{1.3}) == r);

  // Labels of the minima themselves are the minima's labels.
  for (const auto& m : registry->minima()) CHECK(map->label(m.position) == m.label);

  CHECK_THROWS_AS(map->label(Position{NAN}), Error);
}

TEST_CASE("gradient descent on a flat potential gives the unknown label") {
  const Potential v = make("flat", {});
  const auto map = gradient_descent_state_map(v, std::make_shared<MinimaRegistry>(), 1e-2, 1000);
  CHECK(map->label(Position{0.3}) == kUnknownLabel);
}

TEST_CASE("interval and gradient descent maps agree on the double well") {
  const Potential v = make("double_well_1d", {1.0});
  auto registry = std::make_shared<MinimaRegistry>();
  const auto gd = gradient_descent_state_map(v, registry, 1e-2, 100000);
  const auto iv = interval_state_map({-3.0, 0.0, 3.0});
  // Seed the registry so left is label 0 like the interval map.
  REQUIRE(gd->label(Position{-1.0}) == 0);
  REQUIRE(gd->label(Position{1.0}) == 1);
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-2.9, 2.9);
  int mismatches = 0;
  for (int i = 0; i < 1000; ++i) {
    double x = u(gen);
    if (std::abs(x) < 1e-9) x = 0.5;
    if (gd->label(Position{x}) != iv->label1d(x)) ++mismatches;
  }
  CHECK(mismatches == 0);
}

TEST_CASE("registry keeps minima separated") {
  MinimaRegistry reg(1e-3);
  const int a = reg.match_or_add(Position{1.0});
  CHECK(reg.match_or_add(Position{1.0005}) == a);
  const int b = reg.match_or_add(Position{1.01});
  CHECK(b != a);
  const auto mins = reg.minima();
  for (std::size_t i = 0; i < mins.size(); ++i)
    for (std::size_t j = i + 1; j < mins.size(); ++j)
      CHECK(std::abs(mins[i].position[0] - mins[j].position[0]) > 2e-3);
}

TEST_CASE("Boltzmann integrals are finite") {
  const std::vector<std::pair<Potential, std::vector<double>>> cases = {
      {make("flat", {}, 1.0), {0.0, 1.0}},
      {make("double_well_1d", {1.0}, 4.0), {-2.5, 2.5}},
      {make("tilted_double_well_1d", {1.0, 0.3}, 2.0), {-2.5, 2.5}},
  };
  for (const auto& [v, box] : cases) {
    const double lo[1] = {box[0]};
    const double hi[1] = {box[1]};
    const double z = boltzmann_integral(v, lo, hi, 4000);
    CHECK(std::isfinite(z));
    CHECK(z > 0.0);
  }
  const Potential e = make("entropic_2d", {3.0, 0.3}, 2.0);
  const double lo[2] = {-1.5, -1.5};
  const double hi[2] = {1.5, 1.5};
  CHECK(std::isfinite(boltzmann_integral(e, lo, hi, 200)));
}
