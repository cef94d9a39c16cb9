#pragma once

#include "riccilab/experiments.hpp"

namespace riccilab {

/// Runs the scenario(s) named in cfg, writes results.csv / summary.json /
/// resolved.config into cfg.out_dir, and returns 0 iff every acceptance
/// check passed.
int run_scenario(const RunConfig& cfg);

/// Same, but also hands back the reports (used by tests).
int run_scenario_collect(const RunConfig& cfg, std::vector<ExperimentReport>& reports);

}  // namespace riccilab
