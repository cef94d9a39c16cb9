#pragma once

#include "riccilab/config.hpp"
#include "riccilab/output.hpp"
#include "riccilab/reference.hpp"

namespace riccilab {

/// Shared Monte Carlo settings handed to each experiment.
struct McParams {
    int n_paths = 10000;
    double h = 1e-3;
    RngSpec rng;
    int workers = 0;
};

/// Time-marginal law of the clock: E[t_s], Var[t_s] against the torus
/// closed forms and the unit-speed limit (backwards in time).
ExperimentReport time_marginal_experiment(const FlowConfig& config, const ChartPoint& start_x,
                                          const std::vector<double>& s_list,
                                          const std::vector<double>& N_grid, const McParams& mc);

/// Drift-compensated martingale residuals E[(Z_b - Z_a) chi_L] over a battery
/// of test functions, windows, and conditioning events (torus).
ExperimentReport martingale_residual_experiment(const FlowConfig& config,
                                                const ChartPoint& start_x,
                                                const std::vector<double>& N_grid,
                                                const McParams& mc,
                                                bool omit_defect_control);

/// k-point cylinder expectations of the projected process against the
/// parabolic reference at matched precision.
ExperimentReport cylinder_convergence_experiment(const FlowConfig& config,
                                                 const ChartPoint& start_x,
                                                 const std::vector<double>& N_grid,
                                                 const McParams& mc);

/// Orthogonality-defect concentration of the projected block frame plus the
/// sqrt(tau_s/tau_0) diagnostic and the non-orthonormal negative control.
ExperimentReport frame_concentration_experiment(const FlowConfig& config,
                                                const ChartPoint& start_x,
                                                const std::vector<double>& N_grid,
                                                const McParams& mc);

/// Parallel-gradient estimate: |grad_x E F| <= E |parallel gradient F| for the
/// k in {1, 2} cylinder battery, plus the finite-dimensional heat-flow
/// gradient bound on sample points.
ExperimentReport gradient_estimate_experiment(const FlowConfig& config, const ChartPoint& start_x,
                                              const McParams& mc);

/// Deterministic operator/geometry scenario reports.
ExperimentReport ricci_validate_report(const FlowConfig& config);
ExperimentReport curvature_check_report(const FlowConfig& config);
ExperimentReport operator_check_report(const FlowConfig& config);

/// Start points used by the scenario runner and the acceptance suite.
ChartPoint default_start(const FlowConfig& config);

}  // namespace riccilab
