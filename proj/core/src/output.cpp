#include "riccilab/output.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace riccilab {

namespace {

std::string fmt(double v) {
    if (std::isnan(v)) return "";
    char buf[40];
    snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::string results_csv(const std::vector<ExperimentReport>& reports) {
    std::ostringstream os;
    os << "scenario,background,N,s,n_paths,step,observable,estimate,stderr,oracle,abs_err,pass\n";
    for (const auto& rep : reports)
        for (const auto& r : rep.rows) {
            os << r.scenario << ',' << r.background << ',' << fmt(r.N) << ',' << fmt(r.s) << ','
               << (r.n_paths > 0 ? std::to_string(r.n_paths) : std::string()) << ','
               << fmt(r.step) << ',' << r.observable << ',' << fmt(r.estimate) << ','
               << fmt(r.stderr_) << ',' << (r.oracle ? fmt(*r.oracle) : std::string()) << ','
               << (r.abs_err ? fmt(*r.abs_err) : std::string()) << ','
               << (r.pass ? (*r.pass ? "1" : "0") : std::string()) << '\n';
        }
    return os.str();
}

std::string summary_json(const std::vector<ExperimentReport>& reports, std::uint64_t seed) {
    nlohmann::ordered_json j;
    j["master_seed"] = seed;
    bool all = true;
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& rep : reports) {
        nlohmann::ordered_json r;
        r["scenario"] = rep.scenario;
        r["background"] = rep.background;
        r["pass"] = rep.pass();
        all = all && rep.pass();
        nlohmann::ordered_json checks = nlohmann::ordered_json::array();
        for (const auto& c : rep.checks) {
            checks.push_back({{"name", c.name},
                              {"pass", c.pass},
                              {"value", c.value},
                              {"threshold", c.threshold},
                              {"note", c.note}});
        }
        r["checks"] = checks;
        if (!rep.slopes.empty()) {
            nlohmann::ordered_json sl;
            for (const auto& [k, v] : rep.slopes) sl[k] = v;
            r["slopes"] = sl;
        }
        r["runtime_s"] = rep.runtime_s;
        arr.push_back(r);
    }
    j["scenarios"] = arr;
    j["all_pass"] = all;
    return j.dump(2) + "\n";
}

void atomic_write(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.parent_path() / (target.filename().string() + ".tmp");
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("cannot write " + tmp.string());
        os << content;
        if (!os.good()) throw std::runtime_error("write failed for " + tmp.string());
    }
    fs::rename(tmp, target);
}

void write_outputs(const std::vector<ExperimentReport>& reports, const std::string& dir,
                   std::uint64_t seed, const std::string& resolved_config) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    atomic_write((fs::path(dir) / "results.csv").string(), results_csv(reports));
    atomic_write((fs::path(dir) / "summary.json").string(), summary_json(reports, seed));
    atomic_write((fs::path(dir) / "resolved.config").string(), resolved_config);
}

std::pair<double, double> loglog_slope(const std::vector<double>& x,
                                       const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 3)
        throw std::invalid_argument("loglog_slope: need at least 3 points");
    const size_t m = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < m; ++i) {
        const double lx = std::log(x[i]);
        const double ly = std::log(std::abs(y[i]));
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double denom = m * sxx - sx * sx;
    const double slope = (m * sxy - sx * sy) / denom;
    const double intercept = (sy - slope * sx) / m;
    double ss = 0.0;
    for (size_t i = 0; i < m; ++i) {
        const double r = std::log(std::abs(y[i])) - (intercept + slope * std::log(x[i]));
        ss += r * r;
    }
    const double se = m > 2 ? std::sqrt(ss / (m - 2) / (sxx - sx * sx / m)) : 0.0;
    return {slope, se};
}

}  // namespace riccilab
