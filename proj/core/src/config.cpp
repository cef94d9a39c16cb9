#include "riccilab/config.hpp"

#include <charconv>
#include <cmath>
#include <optional>
#include <sstream>

namespace riccilab {

std::string to_string(Scenario s) {
    switch (s) {
        case Scenario::RicciValidate: return "ricci-validate";
        case Scenario::CurvatureCheck: return "curvature-check";
        case Scenario::OperatorCheck: return "operator-check";
        case Scenario::ScalarConvergence: return "scalar-convergence";
        case Scenario::FrameConvergence: return "frame-convergence";
        case Scenario::CylinderConvergence: return "cylinder-convergence";
        case Scenario::GradientEstimate: return "gradient-estimate";
        case Scenario::All: return "all";
    }
    return "?";
}

Scenario scenario_from_string(const std::string& name) {
    for (Scenario s : {Scenario::RicciValidate, Scenario::CurvatureCheck, Scenario::OperatorCheck,
                       Scenario::ScalarConvergence, Scenario::FrameConvergence,
                       Scenario::CylinderConvergence, Scenario::GradientEstimate, Scenario::All})
        if (to_string(s) == name) return s;
    throw std::runtime_error("unknown scenario '" + name + "'");
}

ConfigError::ConfigError(const std::string& k, int l, const std::string& msg)
    : std::runtime_error("config error at line " + std::to_string(l) + ", key '" + k +
                         "': " + msg),
      key(k),
      line(l) {}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, int line, const std::string& v) {
    try {
        size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument("trailing text");
        return x;
    } catch (const std::exception&) {
        throw ConfigError(key, line, "expected a number, got '" + v + "'");
    }
}

long parse_int(const std::string& key, int line, const std::string& v) {
    try {
        size_t used = 0;
        const long x = std::stol(v, &used);
        if (used != v.size()) throw std::invalid_argument("trailing text");
        return x;
    } catch (const std::exception&) {
        throw ConfigError(key, line, "expected an integer, got '" + v + "'");
    }
}

std::uint64_t parse_u64(const std::string& key, int line, const std::string& v) {
    try {
        size_t used = 0;
        const unsigned long long x = std::stoull(v, &used);
        if (used != v.size()) throw std::invalid_argument("trailing text");
        return x;
    } catch (const std::exception&) {
        throw ConfigError(key, line, "expected an unsigned integer, got '" + v + "'");
    }
}

}  // namespace

std::vector<double> parse_N_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) throw std::runtime_error("empty entry in N list");
        size_t used = 0;
        const double v = std::stod(item, &used);
        if (used != item.size() || !(v >= 1.0))
            throw std::runtime_error("bad N value '" + item + "'");
        out.push_back(v);
    }
    if (out.empty()) throw std::runtime_error("empty N list");
    return out;
}

RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    std::string section = "run";
    std::istringstream is(text);
    std::string raw;
    int lineno = 0;

    // collected flow fields, validated at the end so ordering never matters
    double torus_T = cfg.torus.T, torus_delta = cfg.torus.delta, torus_L = cfg.torus.L;
    long torus_n = cfg.torus.n;
    double sphere_T = cfg.sphere.T, sphere_delta = cfg.sphere.delta, sphere_c0 = cfg.sphere.c0;

    while (std::getline(is, raw)) {
        ++lineno;
        std::string line = trim(raw);
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = trim(line.substr(0, hash));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(line, lineno, "malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section != "run" && section != "torus" && section != "sphere")
                throw ConfigError(section, lineno, "unknown section");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(line, lineno, "expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (value.empty()) throw ConfigError(key, lineno, "empty value");

        if (section == "run") {
            if (key == "scenario") {
                try {
                    cfg.scenario = scenario_from_string(value);
                } catch (const std::exception& e) {
                    throw ConfigError(key, lineno, e.what());
                }
            } else if (key == "background") {
                if (value == "both") cfg.background = BackgroundSelect::Both;
                else if (value == "torus") cfg.background = BackgroundSelect::Torus;
                else if (value == "sphere") cfg.background = BackgroundSelect::Sphere;
                else throw ConfigError(key, lineno, "expected both|torus|sphere");
            } else if (key == "N_list") {
                try {
                    cfg.N_list = parse_N_list(value);
                } catch (const std::exception& e) {
                    throw ConfigError(key, lineno, e.what());
                }
            } else if (key == "step") {
                cfg.step = parse_double(key, lineno, value);
                if (!(cfg.step > 0.0)) throw ConfigError(key, lineno, "step must be positive");
            } else if (key == "paths") {
                cfg.paths = static_cast<int>(parse_int(key, lineno, value));
                if (cfg.paths < 1) throw ConfigError(key, lineno, "paths must be positive");
            } else if (key == "seed") {
                cfg.seed = parse_u64(key, lineno, value);
            } else if (key == "workers") {
                cfg.workers = static_cast<int>(parse_int(key, lineno, value));
                if (cfg.workers < 0) throw ConfigError(key, lineno, "workers must be >= 0");
            } else if (key == "out_dir") {
                cfg.out_dir = value;
            } else {
                throw ConfigError(key, lineno, "unknown key");
            }
        } else if (section == "torus") {
            if (key == "T") torus_T = parse_double(key, lineno, value);
            else if (key == "delta") torus_delta = parse_double(key, lineno, value);
            else if (key == "L") torus_L = parse_double(key, lineno, value);
            else if (key == "n") torus_n = parse_int(key, lineno, value);
            else throw ConfigError(key, lineno, "unknown key");
        } else {
            if (key == "T") sphere_T = parse_double(key, lineno, value);
            else if (key == "delta") sphere_delta = parse_double(key, lineno, value);
            else if (key == "c0") sphere_c0 = parse_double(key, lineno, value);
            else throw ConfigError(key, lineno, "unknown key");
        }
    }

    try {
        cfg.torus = FlowConfig::torus(static_cast<int>(torus_n), torus_L, torus_T, torus_delta);
    } catch (const std::exception& e) {
        throw ConfigError("torus", 0, e.what());
    }
    try {
        cfg.sphere = FlowConfig::sphere(sphere_c0, sphere_T, sphere_delta);
    } catch (const std::exception& e) {
        throw ConfigError("sphere", 0, e.what());
    }
    return cfg;
}

void apply_overrides(RunConfig& cfg, const CliOverrides& o) {
    if (o.seed) cfg.seed = *o.seed;
    if (o.out_dir) cfg.out_dir = *o.out_dir;
    if (o.paths) cfg.paths = *o.paths;
    if (o.step) cfg.step = *o.step;
    if (o.N_list) cfg.N_list = *o.N_list;
    if (o.workers) cfg.workers = *o.workers;
}

std::string RunConfig::resolved_text() const {
    std::ostringstream os;
    char buf[40];
    auto num = [&buf](double v) {
        snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    os << "[run]\n";
    os << "scenario = " << to_string(scenario) << "\n";
    os << "background = "
       << (background == BackgroundSelect::Both
               ? "both"
               : background == BackgroundSelect::Torus ? "torus" : "sphere")
       << "\n";
    os << "N_list = ";
    for (size_t i = 0; i < N_list.size(); ++i) os << (i ? "," : "") << num(N_list[i]);
    os << "\n";
    os << "step = " << num(step) << "\n";
    os << "paths = " << paths << "\n";
    os << "seed = " << seed << "\n";
    os << "workers = " << workers << "\n";
    os << "out_dir = " << out_dir << "\n";
    os << "[torus]\n";
    os << "n = " << torus.n << "\n";
    os << "L = " << num(torus.L) << "\n";
    os << "T = " << num(torus.T) << "\n";
    os << "delta = " << num(torus.delta) << "\n";
    os << "[sphere]\n";
    os << "c0 = " << num(sphere.c0) << "\n";
    os << "T = " << num(sphere.T) << "\n";
    os << "delta = " << num(sphere.delta) << "\n";
    return os.str();
}

}  // namespace riccilab
