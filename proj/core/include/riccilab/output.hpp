#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace riccilab {

/// One results.csv row. Optional fields print empty.
struct ResultRow {
    std::string scenario;
    std::string background;
    double N = std::numeric_limits<double>::quiet_NaN();
    double s = std::numeric_limits<double>::quiet_NaN();
    long n_paths = 0;
    double step = std::numeric_limits<double>::quiet_NaN();
    std::string observable;
    double estimate = 0.0;
    double stderr_ = 0.0;
    std::optional<double> oracle;
    std::optional<double> abs_err;
    std::optional<bool> pass;
};

struct CheckResult {
    std::string name;
    bool pass = false;
    double value = 0.0;
    double threshold = 0.0;
    std::string note;
};

struct ExperimentReport {
    std::string scenario;
    std::string background;
    std::vector<ResultRow> rows;
    std::vector<CheckResult> checks;
    std::map<std::string, double> slopes;
    double runtime_s = 0.0;
    bool pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
};

std::string results_csv(const std::vector<ExperimentReport>& reports);
std::string summary_json(const std::vector<ExperimentReport>& reports, std::uint64_t seed);

/// Atomic write (temp file in the same directory, then rename).
void atomic_write(const std::string& path, const std::string& content);

/// Writes results.csv, summary.json, and resolved.config into dir.
void write_outputs(const std::vector<ExperimentReport>& reports, const std::string& dir,
                   std::uint64_t seed, const std::string& resolved_config);

/// Ordinary least squares of log|y| on log(x); returns (slope, stderr of slope).
std::pair<double, double> loglog_slope(const std::vector<double>& x,
                                       const std::vector<double>& y);

}  // namespace riccilab
