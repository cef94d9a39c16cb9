// Acceptance suite: runs every verification scenario at the pinned default
// parameters and prints one PASS/FAIL line per criterion. Exit status 0 iff
// all criteria pass.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "riccilab/runner.hpp"

using namespace riccilab;

namespace {

struct Suite {
    std::vector<ExperimentReport> reports;
    int failures = 0;

    const CheckResult* find(const std::string& scenario, const std::string& background,
                            const std::string& check_prefix) const {
        for (const auto& rep : reports) {
            if (rep.scenario != scenario || rep.background != background) continue;
            for (const auto& c : rep.checks)
                if (c.name.rfind(check_prefix, 0) == 0) return &c;
        }
        return nullptr;
    }

    bool all(const std::string& scenario, const std::string& background,
             const std::vector<std::string>& prefixes, std::string& detail) const {
        bool ok = true;
        std::ostringstream os;
        for (const auto& p : prefixes) {
            const CheckResult* c = find(scenario, background, p);
            if (!c) {
                ok = false;
                os << p << "=missing ";
                continue;
            }
            ok = ok && c->pass;
            char buf[64];
            snprintf(buf, sizeof buf, "%.4g", c->value);
            os << p << "=" << buf << (c->pass ? " " : "(FAIL) ");
        }
        detail = os.str();
        return ok;
    }

    void criterion(int idx, const std::string& title, bool pass, const std::string& detail) {
        if (!pass) ++failures;
        std::printf("criterion %02d  %-28s %s  %s\n", idx, title.c_str(),
                    pass ? "PASS" : "FAIL", detail.c_str());
        std::fflush(stdout);
    }
};

std::string read_file(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

}  // namespace

int main() {
    const auto t0 = std::chrono::steady_clock::now();
    RunConfig cfg;  // documented defaults
    cfg.scenario = Scenario::All;
    cfg.out_dir = "acceptance_out";

    Suite suite;
    run_scenario_collect(cfg, suite.reports);

    std::string d;
    bool ok;

    // 1. flow validation on both backgrounds + sign-flip negative control
    ok = suite.all("ricci-validate", "torus", {"flow_residual<=1e-6", "runtime<10s"}, d);
    {
        std::string d2;
        ok = suite.all("ricci-validate", "sphere",
                       {"flow_residual<=1e-6", "negative_control>1e-2", "runtime<10s"}, d2) &&
             ok;
        d += d2;
    }
    suite.criterion(1, "flow validation", ok, d);

    // 2. Christoffel table by finite differences
    ok = suite.all("curvature-check", "torus", {"christoffel_table<=1e-5", "runtime<60s"}, d);
    {
        std::string d2;
        ok = suite.all("curvature-check", "sphere", {"christoffel_table<=1e-5", "runtime<60s"},
                       d2) &&
             ok;
        d += d2;
    }
    suite.criterion(2, "christoffel table", ok, d);

    // 3. almost-Ricci-flat scaling
    ok = suite.all("curvature-check", "sphere", {"ricci_scaling_ratio<2"}, d);
    {
        std::string d2;
        ok = suite.all("curvature-check", "torus", {"flat_product_ricci_flat<=1e-4"}, d2) && ok;
        d += d2;
    }
    suite.criterion(3, "ricci bound scaling", ok, d);

    // 4. scalar generator defect: identity and 1/N decay
    ok = suite.all("operator-check", "torus",
                   {"step2_defect_identity<=1e-12", "step2_defect_halving"}, d);
    {
        std::string d2;
        ok = suite.all("operator-check", "sphere",
                       {"step2_defect_identity<=1e-12", "step2_defect_halving"}, d2) &&
             ok;
        d += d2;
    }
    suite.criterion(4, "scalar defect (step 2)", ok, d);

    // 5. frame operator decomposition
    ok = suite.all("operator-check", "torus",
                   {"decomposition_slope", "convention_selected", "D=Dtau+DeltaH", "N=0_on_iO"},
                   d);
    {
        std::string d2;
        ok = suite.all("operator-check", "sphere",
                       {"decomposition_slope", "convention_selected", "D=Dtau+DeltaH",
                        "N=0_on_iO"},
                       d2) &&
             ok;
        d += d2;
    }
    suite.criterion(5, "frame decomposition", ok, d);

    // 6. torus time-marginal closed forms (with its runtime bound)
    ok = suite.all("scalar-convergence", "torus", {"torus_mean_3sigma", "torus_var_3sigma"}, d);
    {
        double rt = 1e9;
        for (const auto& rep : suite.reports)
            if (rep.scenario == "scalar-convergence" && rep.background == "torus")
                for (const auto& c : rep.checks)
                    if (c.name == "torus_mean_3sigma") rt = rep.runtime_s;
        ok = ok && rt < 120.0;
        char buf[48];
        snprintf(buf, sizeof buf, "runtime=%.1fs ", rt);
        d += buf;
    }
    suite.criterion(6, "torus tau moments", ok, d);

    // 7. sphere unit-speed concentration
    ok = suite.all("scalar-convergence", "sphere",
                   {"sphere_mean_unit_speed", "var_slope_in_[-1.3,-0.7]"}, d);
    suite.criterion(7, "sphere time marginal", ok, d);

    // 8. frame concentration
    ok = suite.all("frame-convergence", "sphere",
                   {"defect_small_at_maxN", "defect_halving_1e3_to_4e3",
                    "negative_control_no_decay"},
                   d);
    {
        std::string d2;
        ok = suite.all("frame-convergence", "torus",
                       {"defect_halving_1e3_to_4e3", "e00_sqrt_tau_law",
                        "negative_control_no_decay"},
                       d2) &&
             ok;
        d += d2;
    }
    suite.criterion(8, "frame concentration", ok, d);

    // 9. cylinder convergence
    ok = true;
    d.clear();
    for (const char* bg : {"torus", "sphere"}) {
        std::string d2;
        ok = suite.all("cylinder-convergence", bg,
                       {"cyl_defect_at_maxN_k1", "cyl_monotone_trend_k1",
                        "cyl_defect_at_maxN_k2", "cyl_monotone_trend_k2"},
                       d2) &&
             ok;
        d += d2;
    }
    suite.criterion(9, "cylinder convergence", ok, d);

    // 10. parallel-gradient estimate
    ok = suite.all("gradient-estimate", "torus",
                   {"grad_estimate_k1", "grad_estimate_k2", "torus_k1_lhs_fourier_1e-3",
                    "torus_k1_rhs_fourier_1e-3", "heat_gradient_bound_points"},
                   d);
    {
        std::string d2;
        ok = suite.all("gradient-estimate", "sphere",
                       {"grad_estimate_k1", "grad_estimate_k2", "heat_gradient_bound_points"},
                       d2) &&
             ok;
        d += d2;
    }
    suite.criterion(10, "gradient estimate", ok, d);

    // 11. martingale residuals + omitted-defect control
    ok = suite.all("scalar-convergence", "torus",
                   {"martingale_95pct_within_3sigma", "omitted_defect_detected"}, d);
    suite.criterion(11, "martingale residuals", ok, d);

    // 12. determinism: identical seeds byte-identical, worker count irrelevant
    {
        namespace fs = std::filesystem;
        RunConfig small;
        small.scenario = Scenario::CylinderConvergence;
        small.background = BackgroundSelect::Torus;
        small.paths = 1500;
        small.N_list = {100.0};
        small.seed = 424242;

        small.out_dir = (fs::temp_directory_path() / "riccilab_det_a").string();
        small.workers = 1;
        run_scenario(small);
        const std::string a = read_file(fs::path(small.out_dir) / "results.csv");

        small.out_dir = (fs::temp_directory_path() / "riccilab_det_b").string();
        run_scenario(small);
        const std::string b = read_file(fs::path(small.out_dir) / "results.csv");

        small.out_dir = (fs::temp_directory_path() / "riccilab_det_c").string();
        small.workers = 4;
        run_scenario(small);
        const std::string c = read_file(fs::path(small.out_dir) / "results.csv");

        ok = !a.empty() && a == b && a == c;
        suite.criterion(12, "determinism", ok,
                        ok ? "byte-identical across reruns and worker counts"
                           : "results.csv differs");
    }

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%d/12 criteria passed in %.1f s (reports in %s)\n", 12 - suite.failures, wall,
                cfg.out_dir.c_str());
    return suite.failures == 0 ? 0 : 1;
}
