// Copyright 2026 The parrep authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <memory>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "parrep/parrep.hpp"
#include "parrep/stats.hpp"

using namespace parrep;

namespace {

const Potential kFlat = builtin_potential("flat", std::vector<double>{}, 1.0);
const Potential kDoubleWell = builtin_potential("double_well_1d", std::vector<double>{1.0}, 4.0);

std::vector<double> stub_advances(const StubModel& model, std::size_t n, const std::vector<SpeedProfile>& speeds,
                                  std::uint64_t seed, std::size_t trials, std::vector<int>* faces = nullptr) {
  RngStream rng(seed, n);
  std::vector<double> out;
  out.reserve(trials);
  for (std::size_t i = 0; i < trials; ++i) {
    const StubStep s = stub_parallel_step(model, n, speeds, rng);
    out.push_back(s.advance);
    if (faces) faces->push_back(s.face);
  }
  return out;
}

std::vector<int> single_faces(const StubModel& model, std::uint64_t seed, std::size_t trials) {
  RngStream rng(seed, 0);
  std::vector<int> faces;
  for (std::size_t i = 0; i < trials; ++i) faces.push_back(stub_single_exit(model, rng).face);
  return faces;
}

/// Chi-square homogeneity of two face samples.
TestResult face_homogeneity(const std::vector<int>& a, const std::vector<int>& b, std::size_t faces) {
  std::vector<std::vector<double>> table(2, std::vector<double>(faces, 0.0));
  for (int f : a) table[0][static_cast<std::size_t>(f)] += 1.0;
  for (int f : b) table[1][static_cast<std::size_t>(f)] += 1.0;
  return chi2_table(table);
}

double hold_sum(const StateTrajectory& t) {
  double s = 0.0;
  for (const auto& e : t.events) s += e.hold;
  return s;
}

WellModels double_well_models(std::size_t n = 1000) {
  WellModels m;
  m[0] = std::make_shared<const SpectralModel>(SpectralModel::build(kDoubleWell, -2.5, 0.0, n, 4));
  m[1] = std::make_shared<const SpectralModel>(SpectralModel::build(kDoubleWell, 0.0, 2.5, n, 4));
  return m;
}

}  // namespace

TEST_CASE("speed profiles") {
  const SpeedProfile p({0.5}, {0.5, 3.0});
  CHECK(p.cumulative(0.0) == 0.0);
  CHECK(p.cumulative(0.25) == doctest::Approx(0.125));
  CHECK(p.cumulative(2.0) == doctest::Approx(0.25 + 4.5));
  for (double t : {0.1, 0.5, 0.7, 10.0}) CHECK(p.inverse(p.cumulative(t)) == doctest::Approx(t));
  CHECK(SpeedProfile().is_unit());
  CHECK_FALSE(SpeedProfile::constant(2.0).is_unit());
  CHECK_THROWS_AS(SpeedProfile({1.0}, {1.0}), Error);
  CHECK_THROWS_AS(SpeedProfile({}, {0.0}), Error);
  CHECK_THROWS_AS(SpeedProfile({2.0, 1.0}, {1.0, 1.0, 1.0}), Error);
}

TEST_CASE("dephasing method names") {
  for (auto m : {DephasingMethod::fv, DephasingMethod::restart, DephasingMethod::exact_qsd})
    CHECK(parse_dephasing_method(to_string(m)) == m);
  CHECK_THROWS_AS(parse_dephasing_method("gibbs"), Error);
}

TEST_CASE("stub parallel step: N T is exponential") {
  const StubModel model;
  for (std::size_t n : {1, 2, 8, 32}) {
    const auto adv = stub_advances(model, n, {}, 100, 100000);
    CHECK(ks_exponential(adv, 1.0).p_value > 0.01);
  }
  // The raw winner time is not: its rate is N lambda.
  RngStream rng(101, 0);
  std::vector<double> raw;
  for (int i = 0; i < 10000; ++i) raw.push_back(stub_parallel_step(model, 8, {}, rng).winner_time);
  CHECK(ks_exponential(raw, 1.0).p_value < 1e-6);
}

TEST_CASE("stub parallel step: winner faces follow the single-replica law") {
  StubModel model;
  model.face_weights = {0.2, 0.3, 0.5};
  const auto single = single_faces(model, 200, 100000);
  for (std::size_t n : {2, 8, 32}) {
    std::vector<int> faces;
    stub_advances(model, n, {}, 201, 100000, &faces);
    CHECK(face_homogeneity(faces, single, 3).p_value > 0.01);
  }
}

TEST_CASE("stub parallel step: coupled faces are detected") {
  StubModel model;
  model.couple_face_to_time = true;
  const auto single = single_faces(model, 300, 20000);
  std::vector<int> faces;
  stub_advances(model, 8, {}, 301, 20000, &faces);
  CHECK(face_homogeneity(faces, single, 2).p_value < 1e-6);
}

TEST_CASE("stub parallel step: heterogeneous clocks") {
  StubModel model;
  model.lambda = 2.0;
  const std::vector<SpeedProfile> two = {SpeedProfile::constant(1.0), SpeedProfile::constant(2.0)};
  CHECK(ks_exponential(stub_advances(model, 2, two, 400, 100000), 2.0).p_value > 0.01);
  const std::vector<SpeedProfile> switching = {SpeedProfile::constant(1.0), SpeedProfile({0.2}, {0.5, 3.0})};
  CHECK(ks_exponential(stub_advances(model, 2, switching, 401, 100000), 2.0).p_value > 0.01);
  // Crediting only the wall time would be wrong.
  RngStream rng(402, 0);
  std::vector<double> wall;
  for (int i = 0; i < 10000; ++i) wall.push_back(stub_parallel_step(model, 2, two, rng).wall);
  CHECK(ks_exponential(wall, 2.0).p_value < 1e-6);
}

TEST_CASE("decorrelation step with zero tau") {
  const auto map = interval_state_map({0.0, 1.0});
  ClockLedger ledger;
  RngStream rng(1, 1);
  const auto r = decorrelation_step({{0.5}, 0.0, 0}, 0.0, 1e-3, kFlat, *map, rng, ledger);
  CHECK(r.status == DecorrelationStatus::decorrelated);
  CHECK(ledger.t_simu == 0.0);
  CHECK(r.walker.position[0] == 0.5);
}

TEST_CASE("decorrelation step with a forced crossing") {
  // Drift +10 with no noise: 0.505 + 0.01 k passes 1 at k = 50.
  const Potential slope = builtin_potential("tilted_double_well_1d", std::vector<double>{0.0, -10.0}, 1.0);
  const auto map = interval_state_map({0.0, 1.0, 2.0});
  ClockLedger ledger;
  RngStream rng = RngStream::silent();
  const auto r = decorrelation_step({{0.505}, 3.0, 0}, 0.1, 1e-3, slope, *map, rng, ledger);
  CHECK(r.status == DecorrelationStatus::exited);
  REQUIRE(r.first_change_time.has_value());
  CHECK(*r.first_change_time == doctest::Approx(0.05));
  REQUIRE(r.changes.size() == 1);
  CHECK(r.changes[0].time == doctest::Approx(3.05));
  CHECK(r.changes[0].label == 1);
  CHECK(ledger.t_simu == doctest::Approx(0.1));
  CHECK(ledger.decorrelation_exits == 1);
}

TEST_CASE("decorrelation probability matches the survival series") {
  const auto map = interval_state_map({0.0, 1.0});
  const SpectralModel m = SpectralModel::build(kFlat, 0.0, 1.0, 2000, 16);
  const double tau = 0.05;
  const int trials = 10000;
  int kept = 0;
  const RngStream root(7, 7);
  for (int i = 0; i < trials; ++i) {
    ClockLedger ledger;
    RngStream rng = root.child(static_cast<std::uint64_t>(i));
    if (decorrelation_step({{0.5}, 0.0, 0}, tau, 1e-4, kFlat, *map, rng, ledger, ExitDetection::bridge).status ==
        DecorrelationStatus::decorrelated)
      ++kept;
  }
  const double p = survival_probability(m, InitialMeasure::point_mass(0.5), tau).value;
  const double se = std::sqrt(p * (1.0 - p) / trials);
  CHECK(std::abs(kept / static_cast<double>(trials) - p) < 3.0 * se);
}

TEST_CASE("parallel step with one replica") {
  const auto map = interval_state_map({0.0, 1.0});
  ReplicaEnsemble ens;
  ens.positions = {{0.5}};
  ens.well_label = 0;
  ParallelStepOptions opts;
  opts.dt = 1e-3;
  ClockLedger ledger;
  const auto r = parallel_step(ens, opts, kFlat, *map, RngStream(3, 3), ledger);
  CHECK(r.advance == doctest::Approx(r.event.exit_time));
  CHECK(ledger.t_simu == doctest::Approx(r.advance));
  CHECK(r.event.exit_face >= 0);
  CHECK(r.walker.label == kUnknownLabel);
}

TEST_CASE("parallel step credits N T and is worker independent") {
  const auto map = interval_state_map({0.0, 1.0});
  ReplicaEnsemble ens;
  for (int i = 0; i < 8; ++i) ens.positions.push_back({0.5});
  ens.well_label = 0;
  ParallelStepOptions one;
  one.dt = 1e-3;
  ParallelStepOptions many = one;
  many.workers = 3;
  ClockLedger la;
  ClockLedger lb;
  const auto a = parallel_step(ens, one, kFlat, *map, RngStream(4, 4), la);
  const auto b = parallel_step(ens, many, kFlat, *map, RngStream(4, 4), lb);
  CHECK(a.event.replica_id == b.event.replica_id);
  CHECK(a.event.exit_time == b.event.exit_time);
  CHECK(a.walker.position == b.walker.position);
  CHECK(a.advance == doctest::Approx(8.0 * a.event.exit_time));
  CHECK(la.parallel_steps == 1);
}

TEST_CASE("parallel step ties go to the lowest index") {
  const Potential slope = builtin_potential("tilted_double_well_1d", std::vector<double>{0.0, -10.0}, 1.0);
  const auto map = interval_state_map({0.0, 1.0});
  ReplicaEnsemble ens;
  ens.positions = {{0.5}, {0.5}, {0.5}};
  ens.well_label = 0;
  ParallelStepOptions opts;
  opts.dt = 1e-3;
  ClockLedger ledger;
  const auto r = parallel_step(ens, opts, slope, *map, RngStream::silent(), ledger);
  CHECK(r.event.replica_id == 0);
  CHECK(r.event.exit_face == 1);
}

TEST_CASE("parallel step guard") {
  const auto map = interval_state_map({-1e9, 1e9});
  ReplicaEnsemble ens;
  ens.positions = {{0.0}, {0.0}};
  ens.well_label = 0;
  ParallelStepOptions opts;
  opts.dt = 1e-2;
  opts.guard = 1.0;
  ClockLedger ledger;
  CHECK_THROWS_AS(parallel_step(ens, opts, kFlat, *map, RngStream(5, 5), ledger), Error);
}

TEST_CASE("infinite tau_corr reproduces direct simulation") {
  const auto map = interval_state_map({-2.5, 0.0, 2.5});
  ParRepConfig cfg;
  cfg.tau_corr = kInfiniteTau;
  cfg.dt = 1e-3;
  cfg.max_events = 50;
  const RngStream rng(12, 0);
  const WalkerState start{{-1.0}, 0.0, kUnknownLabel};
  const auto a = parrep_run(start, cfg, kDoubleWell, *map, {}, rng);
  const auto b = direct_run(start, cfg.dt, kDoubleWell, *map, rng, cfg.max_events);
  REQUIRE(a.trajectory.events.size() == b.trajectory.events.size());
  for (std::size_t i = 0; i < a.trajectory.events.size(); ++i) {
    CHECK(a.trajectory.events[i].label == b.trajectory.events[i].label);
    CHECK(a.trajectory.events[i].entry == b.trajectory.events[i].entry);
    CHECK(a.trajectory.events[i].hold == b.trajectory.events[i].hold);
  }
  const auto report = speedup_report(a.trajectory, a.ledger, {}, cfg.tau_corr);
  CHECK(report.speedup == doctest::Approx(1.0));
  CHECK(report.parallel_fraction == 0.0);
}

TEST_CASE("zero max_events") {
  const auto map = interval_state_map({-2.5, 0.0, 2.5});
  ParRepConfig cfg;
  cfg.max_events = 0;
  cfg.dt = 1e-3;
  const auto r = parrep_run({{-1.0}, 0.0, kUnknownLabel}, cfg, kDoubleWell, *map, double_well_models(), RngStream(1, 2));
  CHECK(r.trajectory.events.empty());
  CHECK(r.trajectory.total_t_simu == 0.0);
  CHECK(r.ledger.t_simu == 0.0);
}

TEST_CASE("parrep run bookkeeping") {
  const auto map = interval_state_map({-2.5, 0.0, 2.5});
  const WellModels models = double_well_models();
  ParRepConfig cfg;
  cfg.dt = 1e-3;
  cfg.tau_corr = 0.5;
  cfg.n_replicas = 8;
  cfg.max_events = 200;
  const auto r = parrep_run({{-1.0}, 0.0, kUnknownLabel}, cfg, kDoubleWell, *map, models, RngStream(9, 0));
  const auto& ev = r.trajectory.events;
  REQUIRE(ev.size() == 200);
  CHECK(hold_sum(r.trajectory) == doctest::Approx(r.trajectory.total_t_simu).epsilon(1e-9));
  CHECK(r.ledger.t_simu == doctest::Approx(r.trajectory.total_t_simu).epsilon(1e-9));
  for (std::size_t i = 1; i < ev.size(); ++i) {
    CHECK(ev[i].label != ev[i - 1].label);
    CHECK(ev[i].entry > ev[i - 1].entry);
    CHECK(ev[i].entry == doctest::Approx(ev[i - 1].entry + ev[i - 1].hold));
  }
  CHECK(r.ledger.parallel_steps > 0);
  const auto report = speedup_report(r.trajectory, r.ledger, models, cfg.tau_corr);
  CHECK(report.speedup > 1.0);
  CHECK(report.speedup <= 8.0);
  CHECK(report.parallel_fraction > 0.5);
}

TEST_CASE("single replica never speeds things up") {
  const auto map = interval_state_map({-2.5, 0.0, 2.5});
  ParRepConfig cfg;
  cfg.dt = 1e-3;
  cfg.tau_corr = 0.5;
  cfg.n_replicas = 1;
  cfg.max_events = 50;
  const WellModels models = double_well_models();
  const auto r = parrep_run({{-1.0}, 0.0, kUnknownLabel}, cfg, kDoubleWell, *map, models, RngStream(10, 0));
  CHECK(speedup_report(r.trajectory, r.ledger, models, cfg.tau_corr).speedup <= 1.0 + 1e-12);
}

TEST_CASE("direct run alternates between the two wells") {
  const auto map = interval_state_map({-2.5, 0.0, 2.5});
  const auto r = direct_run({{-1.0}, 0.0, kUnknownLabel}, 1e-3, kDoubleWell, *map, RngStream(13, 0), 1000);
  const auto& ev = r.trajectory.events;
  REQUIRE(ev.size() == 1000);
  int left_to_right = 0;
  int right_to_left = 0;
  for (std::size_t i = 1; i < ev.size(); ++i) {
    CHECK(ev[i].label != ev[i - 1].label);
    (ev[i - 1].label == 0 ? left_to_right : right_to_left) += 1;
  }
  CHECK(std::abs(left_to_right - right_to_left) <= 1);
  CHECK(hold_sum(r.trajectory) == doctest::Approx(r.trajectory.total_t_simu).epsilon(1e-9));
}

TEST_CASE("exact_qsd dephasing requires a model") {
  const auto map = interval_state_map({-2.5, 0.0, 2.5});
  ParRepConfig cfg;
  cfg.dt = 1e-3;
  cfg.tau_corr = 1e-3;
  cfg.max_events = 5;
  CHECK_THROWS_AS(parrep_run({{-1.0}, 0.0, kUnknownLabel}, cfg, kDoubleWell, *map, {}, RngStream(1, 1)), Error);
  // A model for the wrong interval is refused as well.
  WellModels wrong;
  wrong[0] = std::make_shared<const SpectralModel>(SpectralModel::build(kDoubleWell, 0.0, 2.5, 200, 4));
  CHECK_THROWS_AS(parrep_run({{-1.0}, 0.0, kUnknownLabel}, cfg, kDoubleWell, *map, wrong, RngStream(1, 1)), Error);
}

TEST_CASE("config validation") {
  ParRepConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.n_replicas = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.dt = -1.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.tau_corr = 0.00015;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.speeds = {SpeedProfile(), SpeedProfile()};
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("calibration window") {
  const WellModels models = double_well_models();
  const double inv_gap = 1.0 / models.at(1)->gap();
  const double mean_exit = 1.0 / models.at(1)->eigenvalue(0);
  CHECK(calibrate(1, *models.at(1), 0.5 * inv_gap).below_gap);
  CHECK(calibrate(1, *models.at(1), 2.0 * inv_gap).ok());
  CHECK(calibrate(1, *models.at(1), 2.0 * mean_exit).above_mean_exit);
  CHECK(calibrate(1, *models.at(1), 0.5 * mean_exit).ok());
}

TEST_CASE("hold time of a single replica run matches the composed oracle") {
  // First hold from x0 = 0.5: an in-window exit keeps its own time; otherwise
  // the hold is tau plus an exponential exit from the QSD.
  const std::vector<double> bounds{0.0, 1.0};
  const auto map = interval_state_map(bounds);
  auto model = std::make_shared<const SpectralModel>(SpectralModel::build(kFlat, 0.0, 1.0, 2000, 16));
  WellModels models{{0, model}};
  ParRepConfig cfg;
  cfg.n_replicas = 1;
  cfg.dt = 1e-5;
  cfg.tau_corr = 0.1;
  cfg.max_events = 1;
  const InitialMeasure x0 = InitialMeasure::point_mass(0.5);
  const double s_tau = survival_probability(*model, x0, cfg.tau_corr).value;
  const double l1 = model->eigenvalue(0);
  const auto cdf = [&](double t) {
    if (t < cfg.tau_corr) return 1.0 - survival_probability(*model, x0, std::max(t, 1e-3)).value;
    return 1.0 - s_tau * std::exp(-l1 * (t - cfg.tau_corr));
  };
  std::vector<double> holds;
  const RngStream root(55, 0);
  for (std::uint64_t i = 0; i < 2000; ++i) {
    const auto r = parrep_run({{0.5}, 0.0, kUnknownLabel}, cfg, kFlat, *map, models, root.child(i));
    REQUIRE(r.trajectory.events.size() == 1);
    holds.push_back(r.trajectory.events[0].hold);
  }
  const double d = ks_statistic(holds, cdf);
  CHECK(kolmogorov_tail((std::sqrt(2000.0) + 0.12 + 0.11 / std::sqrt(2000.0)) * d) > 0.01);
}
