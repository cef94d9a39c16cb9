#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "riccilab/flow_config.hpp"

namespace riccilab {

enum class Scenario {
    RicciValidate,
    CurvatureCheck,
    OperatorCheck,
    ScalarConvergence,
    FrameConvergence,
    CylinderConvergence,
    GradientEstimate,
    All
};

std::string to_string(Scenario s);
Scenario scenario_from_string(const std::string& name);

enum class BackgroundSelect { Both, Torus, Sphere };

/// Fully resolved run settings. Strict parsing: unknown keys are errors.
struct RunConfig {
    Scenario scenario = Scenario::All;
    BackgroundSelect background = BackgroundSelect::Both;
    std::vector<double> N_list = {100.0, 1000.0, 10000.0};
    double step = 1e-3;
    int paths = 10000;
    std::uint64_t seed = 20240601;
    int workers = 0;
    std::string out_dir = "out";

    FlowConfig torus = FlowConfig::torus_default();
    FlowConfig sphere = FlowConfig::sphere_default();

    /// Serializes back to the flat key=value format (the resolved config).
    std::string resolved_text() const;
};

struct ConfigError : std::runtime_error {
    ConfigError(const std::string& key, int line, const std::string& what_msg);
    std::string key;
    int line;
};

/// Parses the documented flat key=value format with [section] headers.
/// Unknown keys, type mismatches, and constraint violations throw
/// ConfigError naming the key and line.
RunConfig parse_config(const std::string& text);

/// Command-line overrides applied after the file (file first, flags second).
struct CliOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<int> paths;
    std::optional<double> step;
    std::optional<std::vector<double>> N_list;
    std::optional<int> workers;
};
void apply_overrides(RunConfig& cfg, const CliOverrides& o);

std::vector<double> parse_N_list(const std::string& text);

}  // namespace riccilab
