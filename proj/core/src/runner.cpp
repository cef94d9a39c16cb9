#include "riccilab/runner.hpp"

#include <algorithm>
#include <stdexcept>

#include "riccilab/output.hpp"

namespace riccilab {

namespace {

bool wants(const RunConfig& cfg, BackgroundKind k) {
    if (cfg.background == BackgroundSelect::Both) return true;
    return (k == BackgroundKind::FlatTorus) == (cfg.background == BackgroundSelect::Torus);
}

McParams mc_from(const RunConfig& cfg) {
    McParams mc;
    mc.n_paths = cfg.paths;
    mc.h = cfg.step;
    mc.rng.master_seed = cfg.seed;
    mc.workers = cfg.workers;
    return mc;
}

void run_one(Scenario sc, const RunConfig& cfg, std::vector<ExperimentReport>& reports) {
    const McParams mc = mc_from(cfg);
    const bool torus_on = wants(cfg, BackgroundKind::FlatTorus);
    const bool sphere_on = wants(cfg, BackgroundKind::ShrinkingSphere);

    switch (sc) {
        case Scenario::RicciValidate:
            if (torus_on) reports.push_back(ricci_validate_report(cfg.torus));
            if (sphere_on) reports.push_back(ricci_validate_report(cfg.sphere));
            break;
        case Scenario::CurvatureCheck:
            if (torus_on) reports.push_back(curvature_check_report(cfg.torus));
            if (sphere_on) reports.push_back(curvature_check_report(cfg.sphere));
            break;
        case Scenario::OperatorCheck:
            if (torus_on) reports.push_back(operator_check_report(cfg.torus));
            if (sphere_on) reports.push_back(operator_check_report(cfg.sphere));
            break;
        case Scenario::ScalarConvergence: {
            if (torus_on) {
                std::vector<double> Ns;
                for (double N : cfg.N_list)
                    if (N <= 1000.0) Ns.push_back(N);
                if (Ns.empty()) Ns = {100.0, 1000.0};
                // interior start: the closed-form moment oracles are
                // tau0-parametric and free of edge effects here
                ChartPoint torus_start = default_start(cfg.torus);
                torus_start.tau = 0.1;
                reports.push_back(time_marginal_experiment(cfg.torus, torus_start,
                                                           {0.25, 0.5}, Ns, mc));
                reports.push_back(martingale_residual_experiment(
                    cfg.torus, default_start(cfg.torus), cfg.N_list, mc, true));
            }
            if (sphere_on)
                reports.push_back(time_marginal_experiment(
                    cfg.sphere, default_start(cfg.sphere), {0.1, 0.2, 0.3}, cfg.N_list, mc));
            break;
        }
        case Scenario::FrameConvergence: {
            // the halving check needs the {1e3, 4e3} pair; the largest N from
            // the config drives the defect bound and the e00 diagnostic
            std::vector<double> Ns = {1000.0, 4000.0};
            const double n_max = *std::max_element(cfg.N_list.begin(), cfg.N_list.end());
            if (n_max > 4000.0) Ns.push_back(n_max);
            McParams fmc = mc;
            fmc.n_paths = std::min(mc.n_paths, 4000);
            if (torus_on)
                reports.push_back(frame_concentration_experiment(
                    cfg.torus, default_start(cfg.torus), Ns, fmc));
            if (sphere_on)
                reports.push_back(frame_concentration_experiment(
                    cfg.sphere, default_start(cfg.sphere), Ns, fmc));
            break;
        }
        case Scenario::CylinderConvergence:
            if (torus_on)
                reports.push_back(cylinder_convergence_experiment(
                    cfg.torus, default_start(cfg.torus), cfg.N_list, mc));
            if (sphere_on)
                reports.push_back(cylinder_convergence_experiment(
                    cfg.sphere, default_start(cfg.sphere), cfg.N_list, mc));
            break;
        case Scenario::GradientEstimate:
            if (torus_on)
                reports.push_back(
                    gradient_estimate_experiment(cfg.torus, default_start(cfg.torus), mc));
            if (sphere_on)
                reports.push_back(
                    gradient_estimate_experiment(cfg.sphere, default_start(cfg.sphere), mc));
            break;
        case Scenario::All:
            for (Scenario s :
                 {Scenario::RicciValidate, Scenario::CurvatureCheck, Scenario::OperatorCheck,
                  Scenario::ScalarConvergence, Scenario::FrameConvergence,
                  Scenario::CylinderConvergence, Scenario::GradientEstimate})
                run_one(s, cfg, reports);
            break;
    }
}

}  // namespace

int run_scenario_collect(const RunConfig& cfg, std::vector<ExperimentReport>& reports) {
    int status = 0;
    try {
        run_one(cfg.scenario, cfg, reports);
    } catch (const std::exception& e) {
        ExperimentReport err;
        err.scenario = to_string(cfg.scenario);
        err.background = "-";
        err.checks.push_back(CheckResult{"error", false, 0.0, 0.0, e.what()});
        reports.push_back(err);
        status = 2;
    }
    write_outputs(reports, cfg.out_dir, cfg.seed, cfg.resolved_text());
    for (const auto& rep : reports)
        if (!rep.pass()) status = std::max(status, 1);
    return status;
}

int run_scenario(const RunConfig& cfg) {
    std::vector<ExperimentReport> reports;
    return run_scenario_collect(cfg, reports);
}

}  // namespace riccilab
