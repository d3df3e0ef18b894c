// Copyright 2026 The parrep authors
// SPDX-License-Identifier: Apache-2.0

#include "parrep/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

#include "parrep/parallel.hpp"
#include "parrep/qsd_sampling.hpp"
#include "parrep/stats.hpp"

#ifndef PARREP_BUILD_ID
#define PARREP_BUILD_ID "unknown"
#endif

namespace parrep {

using Json = nlohmann::ordered_json;

const char* build_id() noexcept { return PARREP_BUILD_ID; }

ExitSource parse_exit_source(const std::string& name) {
  if (name == "qsd_exact") return ExitSource::qsd_exact;
  if (name == "fv") return ExitSource::fv;
  if (name == "restart") return ExitSource::restart;
  if (name == "point") return ExitSource::point;
  fail(ErrorCode::config, "unknown exit source '" + name + "' (expected qsd_exact, fv, restart or point)");
}

SampleMethod parse_sample_method(const std::string& name) {
  if (name == "fv") return SampleMethod::fv;
  if (name == "restart") return SampleMethod::restart;
  if (name == "redistribution") return SampleMethod::redistribution;
  fail(ErrorCode::config, "unknown sampling method '" + name + "' (expected fv, restart or redistribution)");
}

namespace {

// Stream tags per command so no two artifacts share randomness.
enum CommandTag : std::uint64_t {
  kExitStarts = 11,
  kExitRuns = 12,
  kSampler = 13,
  kParRep = 14,
  kDirect = 15,
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : out_(path, std::ios::binary) {
    if (!out_) fail(ErrorCode::io, "cannot write '" + path.string() + "'");
    row(header);
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

std::filesystem::path output_dir(const ExperimentConfig& cfg) {
  std::filesystem::path dir(cfg.output_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::io, "cannot create output directory '" + dir.string() + "': " + ec.message());
  return dir;
}

Json header(const ExperimentConfig& cfg, const std::string& command) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = command;
  j["config_hash"] = cfg.hash();
  j["master_seed"] = cfg.seed;
  j["build_id"] = build_id();
  return j;
}

std::string write_json(const std::filesystem::path& path, const Json& j) {
  std::string text = j.dump(2) + "\n";
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io, "cannot write '" + path.string() + "'");
  out << text;
  return text;
}

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json test_json(const TestResult& r) {
  Json j;
  j["statistic"] = r.statistic;
  j["p_value"] = r.p_value;
  j["n"] = r.n;
  j["null"] = r.null_description;
  j["verdict@0.01"] = r.passes(0.01) ? "pass" : "fail";
  return j;
}

Potential make_potential(const ExperimentConfig& cfg) {
  return builtin_potential(cfg.potential_name, cfg.potential_params, cfg.beta);
}

const WellBlock& require_well(const ExperimentConfig& cfg, const std::string& command) {
  if (!cfg.well || !cfg.well->a)
    fail(ErrorCode::config, cfg.file.source() + ": " + command + " needs a well block (well.a, well.b)");
  return *cfg.well;
}

SpectralModel well_model(const ExperimentConfig& cfg, const Potential& pot, const std::string& command) {
  const WellBlock& w = require_well(cfg, command);
  if (pot.dimension() != 1) fail(ErrorCode::config, command + " needs a one-dimensional potential");
  return SpectralModel::build(pot, *w.a, *w.b, w.n, w.k);
}

Position start_position(const ExperimentConfig& cfg, const std::string& command) {
  if (!cfg.x0) fail(ErrorCode::config, cfg.file.source() + ": " + command + " needs sde.x0");
  return *cfg.x0;
}

DensityCurve oracle_curve(const SpectralModel& model) {
  DensityCurve c;
  qsd_curve(model, c.x, c.density);
  return c;
}

}  // namespace

std::shared_ptr<const StateMap> make_statemap(const ExperimentConfig& cfg, const Potential& potential) {
  if (cfg.statemap_kind == "intervals") return interval_state_map(cfg.boundaries);
  return gradient_descent_state_map(potential, std::make_shared<MinimaRegistry>());
}

WellModels build_well_models(const ExperimentConfig& cfg, const Potential& potential) {
  WellModels models;
  if (cfg.statemap_kind != "intervals" || potential.dimension() != 1) return models;
  const std::size_t n = cfg.well ? cfg.well->n : 2000;
  const std::size_t k = cfg.well ? cfg.well->k : 16;
  for (std::size_t i = 0; i + 1 < cfg.boundaries.size(); ++i) {
    models[static_cast<int>(i)] =
        std::make_shared<const SpectralModel>(SpectralModel::build(potential, cfg.boundaries[i], cfg.boundaries[i + 1], n, k));
  }
  return models;
}

double resolve_tau_corr(const ExperimentConfig& cfg, const WellModels& models) {
  if (!cfg.tau_corr.gap_multiple) return cfg.tau_corr.value;
  if (models.empty())
    cfg.file.error_at("parrep.tau_corr", "gap multiples need an interval state map with spectral models");
  double widest = 0.0;
  for (const auto& [label, model] : models) widest = std::max(widest, 1.0 / model->gap());
  const double raw = *cfg.tau_corr.gap_multiple * widest;
  return std::ceil(raw / cfg.dt - 1e-9) * cfg.dt;
}

// ---------------------------------------------------------------------------

std::string cmd_spectrum(const ExperimentConfig& cfg) {
  const Potential pot = make_potential(cfg);
  const SpectralModel model = well_model(cfg, pot, "spectrum");
  const auto dir = output_dir(cfg);
  const HittingMeasure rho = hitting_measure(model);

  Json j = header(cfg, "spectrum");
  j["a"] = model.grid().a;
  j["b"] = model.grid().b;
  j["n"] = model.grid().n;
  j["beta"] = model.beta();
  j["eigenvalues"] = std::vector<double>(model.eigenvalues().begin(), model.eigenvalues().end());
  j["gap"] = model.gap();
  j["mean_exit_qsd"] = 1.0 / model.eigenvalue(0);
  j["hitting"] = {{"left", rho.left}, {"right", rho.right}, {"raw_sum", rho.raw_sum}};

  CsvWriter csv(dir / "spectrum.csv", {"x", "V", "nu", "u1", "u2"});
  for (std::size_t i = 0; i < model.grid().n; ++i) {
    csv.row({fmt(model.grid().node(i)), fmt(model.potential_values()[i]), fmt(model.qsd_density()[i]),
             fmt(model.eigenfunction(0)[i]), fmt(model.eigenfunction(1)[i])});
  }
  return write_json(dir / "spectrum.json", j);
}

std::string cmd_exit_stats(const ExperimentConfig& cfg, ExitSource source) {
  const Potential pot = make_potential(cfg);
  const SpectralModel model = well_model(cfg, pot, "exit-stats");
  const double a = model.grid().a;
  const double b = model.grid().b;
  const auto map = interval_state_map({a, b});
  const RngStream root(cfg.seed, 0);
  const std::size_t count = cfg.sampling.count;
  const double lambda1 = model.eigenvalue(0);

  SamplerOptions sopts;
  sopts.dt = cfg.dt;
  sopts.detection = cfg.detection;
  sopts.workers = cfg.parrep.workers;
  sopts.max_restarts = cfg.parrep.max_restarts;

  std::vector<double> starts;
  Json source_info;
  RngStream start_rng = root.child(kExitStarts);
  switch (source) {
    case ExitSource::qsd_exact:
      starts = sample_qsd(model, start_rng, count);
      source_info = {{"name", "qsd_exact"}};
      break;
    case ExitSource::point:
      starts.assign(count, start_position(cfg, "exit-stats --source point").at(0));
      source_info = {{"name", "point"}, {"x0", starts.empty() ? 0.0 : starts[0]}};
      break;
    case ExitSource::fv: {
      const WalkerState w{cfg.x0 ? *cfg.x0 : Position{0.5 * (a + b)}, 0.0, 0};
      auto r = fleming_viot(w, cfg.sampling.n_replicas, cfg.sampling.t_end, pot, *map, start_rng, sopts);
      if (std::holds_alternative<Extinction>(r)) fail(ErrorCode::numerical, "Fleming-Viot ensemble went extinct");
      const auto& e = std::get<ReplicaEnsemble>(r);
      for (std::size_t i = 0; i < count; ++i) starts.push_back(e.positions[i % e.positions.size()][0]);
      source_info = {{"name", "fv"}, {"N", cfg.sampling.n_replicas}, {"t_end", cfg.sampling.t_end},
                     {"branch_count", e.branch_count}};
      break;
    }
    case ExitSource::restart: {
      const WalkerState w{cfg.x0 ? *cfg.x0 : Position{0.5 * (a + b)}, 0.0, 0};
      auto r = restart_dephasing(w, cfg.sampling.n_replicas, cfg.sampling.tau_dephase, pot, *map, start_rng, sopts);
      if (std::holds_alternative<NonTermination>(r)) fail(ErrorCode::numerical, "restart dephasing did not terminate");
      const auto& e = std::get<ReplicaEnsemble>(r);
      std::size_t restarts = 0;
      for (auto k : e.restarts) restarts += k;
      for (std::size_t i = 0; i < count; ++i) starts.push_back(e.positions[i % e.positions.size()][0]);
      source_info = {{"name", "restart"}, {"N", cfg.sampling.n_replicas},
                     {"tau_dephase", cfg.sampling.tau_dephase}, {"restarts", restarts}};
      break;
    }
  }

  const double censor = std::isfinite(cfg.sampling.censor) ? cfg.sampling.censor : cfg.max_time;
  std::vector<ExitOutcome> outcomes(count);
  const RngStream run_rng = root.child(kExitRuns);
  WorkerPool pool(resolve_workers(cfg.parrep.workers));
  pool.for_each(count, [&](std::size_t i) {
    RngStream stream = run_rng.child(i);
    const WalkerState w{Position{starts[i]}, 0.0, 0};
    outcomes[i] = run_until_exit(w, pot, *map, cfg.dt, stream, censor, cfg.detection, i);
  });

  const auto dir = output_dir(cfg);
  CsvWriter csv(dir / "exits.csv", {"index", "start", "exit_time", "hitting_point", "exit_face", "next_label", "censored"});
  std::vector<double> times;
  std::vector<int> faces;
  std::size_t censored = 0;
  for (std::size_t i = 0; i < count; ++i) {
    if (const auto* e = std::get_if<ExitEvent>(&outcomes[i])) {
      times.push_back(e->exit_time);
      faces.push_back(e->exit_face);
      csv.row({std::to_string(i), fmt(starts[i]), fmt(e->exit_time), fmt(e->hitting_point[0]),
               std::to_string(e->exit_face), std::to_string(e->next_label), "0"});
    } else {
      const auto& t = std::get<Timeout>(outcomes[i]);
      ++censored;
      csv.row({std::to_string(i), fmt(starts[i]), fmt(t.elapsed), fmt(t.last.position[0]), "-1", "-1", "1"});
    }
  }

  Json j = header(cfg, "exit-stats");
  j["source"] = source_info;
  j["dt"] = cfg.dt;
  j["exit_detection"] = cfg.detection == ExitDetection::bridge ? "bridge" : "grid";
  j["lambda1"] = lambda1;
  j["n"] = count;
  j["n_censored"] = censored;
  j["censor"] = censor;

  if (times.size() >= 10) {
    TestResult ks;
    if (censored == 0) {
      ks = ks_exponential(times, lambda1);
    } else {
      // Uncensored exits follow Exp(lambda1) truncated at the censoring time.
      const double mass = -std::expm1(-lambda1 * censor);
      ks.n = times.size();
      ks.statistic = ks_statistic(times, [&](double t) { return -std::expm1(-lambda1 * t) / mass; });
      const double sn = std::sqrt(static_cast<double>(ks.n));
      ks.p_value = kolmogorov_tail((sn + 0.12 + 0.11 / sn) * ks.statistic);
      ks.null_description = "exit times ~ Exp(lambda1) truncated at the censoring time";
    }
    j["ks_exponential"] = test_json(ks);

    const double q1 = quantile(times, 0.25), q2 = quantile(times, 0.5), q3 = quantile(times, 0.75);
    std::vector<int> quartile(times.size());
    for (std::size_t i = 0; i < times.size(); ++i)
      quartile[i] = times[i] <= q1 ? 0 : times[i] <= q2 ? 1 : times[i] <= q3 ? 2 : 3;
    try {
      j["chi2_independence"] = test_json(chi2_independence(faces, quartile));
    } catch (const Error& e) {
      j["chi2_independence"] = {{"skipped", e.what()}};
    }

    const double m = mean(times);
    const double se = std::sqrt(variance(times) / static_cast<double>(times.size()));
    j["mean_exit"] = {{"sample_mean", m},
                      {"standard_error", se},
                      {"oracle_qsd", 1.0 / lambda1},
                      {"relative_error", m * lambda1 - 1.0}};
    if (source == ExitSource::point) {
      const double series = mean_exit_time(model, InitialMeasure::point_mass(starts[0])).value;
      j["mean_exit"]["oracle_point"] = series;
    }
  }
  return write_json(dir / "exit_stats.json", j);
}

std::string cmd_qsd_sample(const ExperimentConfig& cfg, SampleMethod method) {
  const Potential pot = make_potential(cfg);
  const SpectralModel model = well_model(cfg, pot, "qsd-sample");
  const double a = model.grid().a;
  const double b = model.grid().b;
  const auto map = interval_state_map({a, b});
  const RngStream root(cfg.seed, 0);
  RngStream rng = root.child(kSampler);
  const WalkerState start{cfg.x0 ? *cfg.x0 : Position{0.5 * (a + b)}, 0.0, 0};

  SamplerOptions sopts;
  sopts.dt = cfg.dt;
  sopts.detection = cfg.detection;
  sopts.workers = cfg.parrep.workers;
  sopts.max_restarts = cfg.parrep.max_restarts;

  Json j = header(cfg, "qsd-sample");
  std::vector<double> positions;
  Json params = {{"dt", cfg.dt}, {"x0", start.position[0]},
                 {"exit_detection", cfg.detection == ExitDetection::bridge ? "bridge" : "grid"}};
  switch (method) {
    case SampleMethod::fv: {
      auto r = fleming_viot(start, cfg.sampling.n_replicas, cfg.sampling.t_end, pot, *map, rng, sopts);
      if (std::holds_alternative<Extinction>(r)) fail(ErrorCode::numerical, "Fleming-Viot ensemble went extinct");
      const auto& e = std::get<ReplicaEnsemble>(r);
      for (const auto& p : e.positions) positions.push_back(p[0]);
      j["method"] = "fv";
      j["branch_count"] = e.branch_count;
      params["N"] = cfg.sampling.n_replicas;
      params["t_end"] = cfg.sampling.t_end;
      break;
    }
    case SampleMethod::restart: {
      auto r = restart_dephasing(start, cfg.sampling.n_replicas, cfg.sampling.tau_dephase, pot, *map, rng, sopts);
      if (std::holds_alternative<NonTermination>(r)) fail(ErrorCode::numerical, "restart dephasing did not terminate");
      const auto& e = std::get<ReplicaEnsemble>(r);
      std::size_t restarts = 0;
      for (const auto& p : e.positions) positions.push_back(p[0]);
      for (auto k : e.restarts) restarts += k;
      j["method"] = "restart";
      j["restarts"] = restarts;
      j["acceptance_rate"] = static_cast<double>(e.positions.size()) / static_cast<double>(e.positions.size() + restarts);
      params["N"] = cfg.sampling.n_replicas;
      params["tau_dephase"] = cfg.sampling.tau_dephase;
      break;
    }
    case SampleMethod::redistribution: {
      const auto r = single_walker_redistribution(start, cfg.sampling.t_end, pot, *map, rng, sopts);
      positions = r.occupation;
      j["method"] = "redistribution";
      j["redistributions"] = r.redistributions;
      j["final_position"] = r.final_position[0];
      params["t_end"] = cfg.sampling.t_end;
      params["history_stride"] = kRedistributionStride;
      break;
    }
  }
  j["params"] = params;
  j["bins"] = kHistogramBins;
  j["tv_to_oracle"] = binned_tv(positions, oracle_curve(model), kHistogramBins, a, b);
  j["n_positions"] = positions.size();

  const auto dir = output_dir(cfg);
  CsvWriter csv(dir / "qsd_positions.csv", {"x"});
  for (double x : positions) csv.row({fmt(x)});
  return write_json(dir / "qsd_sample.json", j);
}

std::string cmd_decay(const ExperimentConfig& cfg) {
  const Potential pot = make_potential(cfg);
  const SpectralModel model = well_model(cfg, pot, "decay");
  if (!cfg.decay_start) fail(ErrorCode::config, cfg.file.source() + ": decay needs decay.x0 (a position or qsd)");
  InitialMeasure mu0 = InitialMeasure::qsd();
  Json start;
  if (*cfg.decay_start == "qsd") {
    start = "qsd";
  } else {
    const double x0 = cfg.file.get_double("decay.x0");
    if (!(x0 > model.grid().a && x0 < model.grid().b)) cfg.file.error_at("decay.x0", "must lie inside the well");
    mu0 = InitialMeasure::point_mass(x0);
    start = x0;
  }

  Json j = header(cfg, "decay");
  j["start"] = start;
  j["gap"] = model.gap();
  j["lambda3_minus_lambda1"] = model.size() >= 3 ? model.eigenvalue(2) - model.eigenvalue(0) : 0.0;

  const std::vector<double> nu(model.qsd_density().begin(), model.qsd_density().end());
  const auto tv_at = [&](double t) { return grid_tv(model, conditioned_density(model, mu0, t).density, nu); };

  std::vector<double> window;
  double t_max = 10.0 / model.gap();
  if (tv_at(0.0) <= 1e-14) {
    j["status"] = "already_converged";
    j["rate"] = nullptr;
    j["r_squared"] = nullptr;
  } else {
    window = late_decay_window(model, mu0);
    const DecayFit fit = decay_rate_fit(model, mu0, window);
    j["status"] = "ok";
    j["rate"] = fit.rate;
    j["r_squared"] = fit.r_squared;
    j["fit_window"] = {window.front(), window.back()};
    j["fit_points"] = window.size();
    t_max = window.back();
  }

  const auto dir = output_dir(cfg);
  CsvWriter csv(dir / "decay.csv", {"t", "tv", "survival"});
  constexpr int kPoints = 200;
  for (int i = 0; i <= kPoints; ++i) {
    const double t = t_max * i / kPoints;
    const SeriesValue s = survival_probability(model, mu0, t);
    if (!(s.value > 1e-300)) break;
    csv.row({fmt(t), fmt(tv_at(t)), fmt(s.value)});
  }
  return write_json(dir / "decay.json", j);
}

void write_events_csv(const std::string& path, const StateTrajectory& trajectory) {
  CsvWriter csv(path, {"state", "entry_t", "hold", "exit_face"});
  for (const auto& e : trajectory.events)
    csv.row({std::to_string(e.label), fmt(e.entry), fmt(e.hold), std::to_string(e.exit_face)});
}

namespace {

Json trajectory_json(const StateTrajectory& t) {
  double holds = 0.0;
  std::map<int, std::size_t> visits;
  for (const auto& e : t.events) {
    holds += e.hold;
    ++visits[e.label];
  }
  Json v = Json::object();
  for (const auto& [label, n] : visits) v[std::to_string(label)] = n;
  return {{"n_events", t.events.size()}, {"t_simu", t.total_t_simu}, {"sum_of_holds", holds}, {"visits", v}};
}

Json ledger_json(const ClockLedger& l) {
  return {{"t_simu", l.t_simu},
          {"decorrelation_time", l.decorrelation_time},
          {"relaxation_time", l.relaxation_time},
          {"dephasing_wall", l.dephasing_wall},
          {"dephasing_physical", l.dephasing_physical},
          {"parallel_wall", l.parallel_wall},
          {"parallel_simu", l.parallel_simu},
          {"processor_time", l.processor_time},
          {"decorrelation_exits", l.decorrelation_exits},
          {"parallel_steps", l.parallel_steps}};
}

WalkerState initial_walker(const ExperimentConfig& cfg, const StateMap& map, const std::string& command) {
  WalkerState w{start_position(cfg, command), 0.0, kUnknownLabel};
  w.label = map.label(w.position);
  return w;
}

}  // namespace

std::string cmd_parrep(const ExperimentConfig& cfg) {
  const Potential pot = make_potential(cfg);
  const auto map = make_statemap(cfg, pot);
  const WellModels models = build_well_models(cfg, pot);
  ParRepConfig p = cfg.parrep;
  p.tau_corr = resolve_tau_corr(cfg, models);
  const WalkerState initial = initial_walker(cfg, *map, "parrep-run");
  if (initial.label == kUnknownLabel) cfg.file.error_at("sde.x0", "must lie inside a labelled well");

  const RngStream root(cfg.seed, 0);
  const RunResult run = parrep_run(initial, p, pot, *map, models, root.child(kParRep));
  const SpeedupReport report = speedup_report(run.trajectory, run.ledger, models, p.tau_corr);

  const auto dir = output_dir(cfg);
  write_events_csv((dir / "parrep_events.csv").string(), run.trajectory);

  Json j = header(cfg, "parrep-run");
  j["config"] = {{"N", p.n_replicas},
                 {"tau_corr", number_or_null(p.tau_corr)},
                 {"tau_dephase", p.tau_dephase},
                 {"method", to_string(p.dephasing)},
                 {"relaxation_time", p.effective_relaxation()},
                 {"dt", p.dt},
                 {"max_events", p.max_events},
                 {"heterogeneous_speeds", !p.speeds.empty()}};
  j["trajectory"] = trajectory_json(run.trajectory);
  j["clock"] = ledger_json(run.ledger);
  j["speedup"] = {{"speedup", report.speedup},
                  {"modeled_wall", report.modeled_wall},
                  {"parallel_fraction", report.parallel_fraction},
                  {"dephasing_overhead", report.dephasing_overhead}};
  Json cal = Json::array();
  bool all_ok = true;
  for (const auto& c : report.calibration) {
    all_ok = all_ok && c.ok();
    cal.push_back({{"well", c.label},
                   {"gap_reciprocal", c.gap_reciprocal},
                   {"mean_exit_qsd", c.mean_exit},
                   {"tau_corr", number_or_null(p.tau_corr)},
                   {"below_gap_reciprocal", c.below_gap},
                   {"above_mean_exit", c.above_mean_exit},
                   {"ok", c.ok()}});
  }
  j["calibration"] = {{"checked", !report.calibration.empty()}, {"ok", all_ok}, {"wells", cal}};
  return write_json(dir / "parrep_summary.json", j);
}

std::string cmd_direct(const ExperimentConfig& cfg) {
  const Potential pot = make_potential(cfg);
  const auto map = make_statemap(cfg, pot);
  const WalkerState initial = initial_walker(cfg, *map, "direct-run");
  const RngStream root(cfg.seed, 0);
  const RunResult run = direct_run(initial, cfg.dt, pot, *map, root.child(kDirect), cfg.parrep.max_events);

  const auto dir = output_dir(cfg);
  write_events_csv((dir / "direct_events.csv").string(), run.trajectory);
  Json j = header(cfg, "direct-run");
  j["config"] = {{"dt", cfg.dt}, {"max_events", cfg.parrep.max_events}};
  j["trajectory"] = trajectory_json(run.trajectory);
  j["clock"] = ledger_json(run.ledger);
  return write_json(dir / "direct_summary.json", j);
}

// ---------------------------------------------------------------------------

std::vector<TrajectoryEvent> read_events_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot read '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != "state,entry_t,hold,exit_face")
    fail(ErrorCode::config, path + ":1: expected header 'state,entry_t,hold,exit_face'");
  std::vector<TrajectoryEvent> events;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    std::istringstream row(line);
    std::string cells[4];
    int k = 0;
    for (std::string cell; std::getline(row, cell, ',');) {
      if (k == 4) fail(ErrorCode::config, where + ": too many columns");
      cells[k++] = cell;
    }
    if (k != 4) fail(ErrorCode::config, where + ": expected 4 columns");
    TrajectoryEvent e;
    try {
      std::size_t used = 0;
      e.label = std::stoi(cells[0], &used);
      if (used != cells[0].size()) throw std::invalid_argument("state");
      e.entry = std::stod(cells[1], &used);
      if (used != cells[1].size()) throw std::invalid_argument("entry_t");
      e.hold = std::stod(cells[2], &used);
      if (used != cells[2].size()) throw std::invalid_argument("hold");
      e.exit_face = std::stoi(cells[3], &used);
      if (used != cells[3].size()) throw std::invalid_argument("exit_face");
    } catch (const std::exception&) {
      fail(ErrorCode::config, where + ": malformed row '" + line + "'");
    }
    if (!(e.hold >= 0.0)) fail(ErrorCode::config, where + ": negative hold time");
    events.push_back(e);
  }
  return events;
}

CompareOutcome cmd_compare(const std::string& path_a, const std::string& path_b, const std::string& out_path) {
  const auto a = read_events_csv(path_a);
  const auto b = read_events_csv(path_b);

  Json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = "compare";
  j["inputs"] = {path_a, path_b};
  j["build_id"] = build_id();
  Json tests = Json::array();
  bool passed = true;

  std::map<int, std::vector<double>> holds_a, holds_b;
  for (const auto& e : a) holds_a[e.label].push_back(e.hold);
  for (const auto& e : b) holds_b[e.label].push_back(e.hold);
  for (const auto& [label, ha] : holds_a) {
    const auto it = holds_b.find(label);
    if (it == holds_b.end() || ha.size() < 10 || it->second.size() < 10) continue;
    const TestResult r = two_sample_ks(ha, it->second);
    Json t = {{"test", "two_sample_ks_hold_time"}, {"state", label}};
    t.update(test_json(r));
    passed = passed && r.passes(0.01);
    tests.push_back(t);
  }

  // Transition categories "from->to", pooled into "other" when rare.
  std::map<std::string, std::array<double, 2>> counts;
  const auto tally = [&counts](const std::vector<TrajectoryEvent>& ev, std::size_t side) {
    for (std::size_t i = 0; i + 1 < ev.size(); ++i)
      counts[std::to_string(ev[i].label) + "->" + std::to_string(ev[i + 1].label)][side] += 1.0;
  };
  tally(a, 0);
  tally(b, 1);
  std::vector<std::vector<double>> table(2);
  std::array<double, 2> other{0.0, 0.0};
  for (const auto& [key, c] : counts) {
    if (c[0] + c[1] < 10.0) {
      other[0] += c[0];
      other[1] += c[1];
      continue;
    }
    table[0].push_back(c[0]);
    table[1].push_back(c[1]);
  }
  if (other[0] + other[1] > 0.0) {
    table[0].push_back(other[0]);
    table[1].push_back(other[1]);
  }
  Json t = {{"test", "chi2_transitions"}};
  if (table[0].size() >= 2) {
    try {
      const TestResult r = chi2_table(table);
      t.update(test_json(r));
      passed = passed && r.passes(0.01);
    } catch (const Error& e) {
      t["skipped"] = e.what();
    }
  } else {
    t["skipped"] = "fewer than two transition categories";
  }
  tests.push_back(t);

  j["tests"] = tests;
  j["n_events"] = {a.size(), b.size()};
  j["verdict@0.01"] = passed ? "pass" : "fail";

  CompareOutcome out;
  out.passed = passed;
  if (out_path.empty()) {
    out.summary = j.dump(2) + "\n";
  } else {
    const std::filesystem::path p(out_path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    out.summary = write_json(p, j);
  }
  return out;
}

}  // namespace parrep
