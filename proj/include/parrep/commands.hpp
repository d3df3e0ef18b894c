// Copyright 2026 The parrep authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "parrep/config.hpp"
#include "parrep/parrep.hpp"
#include "parrep/spectral.hpp"

namespace parrep {

inline constexpr int kSchemaVersion = 1;

const char* build_id() noexcept;

enum class ExitSource { qsd_exact, fv, restart, point };
enum class SampleMethod { fv, restart, redistribution };

ExitSource parse_exit_source(const std::string& name);
SampleMethod parse_sample_method(const std::string& name);

/// Each command writes its artifacts under cfg.output_dir and returns the
/// summary JSON it wrote.
std::string cmd_spectrum(const ExperimentConfig& cfg);
std::string cmd_exit_stats(const ExperimentConfig& cfg, ExitSource source);
std::string cmd_qsd_sample(const ExperimentConfig& cfg, SampleMethod method);
std::string cmd_decay(const ExperimentConfig& cfg);
std::string cmd_parrep(const ExperimentConfig& cfg);
std::string cmd_direct(const ExperimentConfig& cfg);

struct CompareOutcome {
  std::string summary;
  bool passed = false;
};

/// Two-sample KS on per-state hold times and a chi-square test on
/// transition frequencies between two events CSV files.
CompareOutcome cmd_compare(const std::string& path_a, const std::string& path_b, const std::string& out_path);

std::vector<TrajectoryEvent> read_events_csv(const std::string& path);
void write_events_csv(const std::string& path, const StateTrajectory& trajectory);

std::shared_ptr<const StateMap> make_statemap(const ExperimentConfig& cfg, const Potential& potential);
/// One spectral model per bounded interval well (empty for other maps).
WellModels build_well_models(const ExperimentConfig& cfg, const Potential& potential);
/// tau_corr with any gap multiple resolved and rounded up to the dt grid.
double resolve_tau_corr(const ExperimentConfig& cfg, const WellModels& models);

}  // namespace parrep
