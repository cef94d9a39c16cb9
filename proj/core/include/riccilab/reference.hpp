#pragma once

#include "riccilab/sde.hpp"

namespace riccilab {

/// One realized parabolic path: deterministic unit-speed clock t_s = T - s,
/// base positions, and g_t-orthonormal-up-to-O(h) frames.
struct ReferencePath {
    std::vector<double> times;
    std::vector<ChartPoint> base;   // chart points at saved times
    std::vector<double> t_clock;    // T - s, exact
    std::vector<MatrixXd> frames;   // n x n, empty when transport off
};

/// Parabolic Brownian ensemble started at (x, T): spatial generator
/// Laplace_{g_{T-s}}, clock deterministic. Thin wrapper around the engine.
PathEnsemble parabolic_base_paths(const FlowConfig& config, const ChartPoint& start_x,
                                  double S, double h, int n_paths, const RngSpec& rng,
                                  const std::vector<double>& marks, bool with_frames = false,
                                  const MatrixXd& u0 = MatrixXd());

/// Heun transport of an n-frame along an explicit full-resolution base path
/// via the space-time connection (spatial Christoffels plus the Ric drift).
ReferencePath parabolic_transport(const FlowConfig& config, const std::vector<ChartPoint>& path,
                                  const MatrixXd& u0);

enum class HeatMethod { MonteCarlo, ClosedForm };

/// Heat-flow expectation H_{s,T} f (x): solution at time T of dw/dt = Lap w
/// with data f at time s, evaluated by Feynman-Kac Monte Carlo along
/// parabolic paths or by the background's closed form.
/// Supported closed forms: torus Fourier modes cos/sin(k.x), sphere ambient
/// linear harmonics v.X.
struct HeatFunctional {
    // torus mode: f = cos(k . x + phase); sphere mode: f = v . X
    VectorXd k_or_v;
    double phase = 0.0;
};
struct HeatResult {
    double value = 0.0;
    double stderr_ = 0.0;  // zero for closed form
};
HeatResult heat_expectation(const FlowConfig& config, const HeatFunctional& f, double from_time_s,
                            const ChartPoint& x_start, HeatMethod method, double h = 1e-3,
                            int n_paths = 0, const RngSpec& rng = RngSpec{});

/// E[|sin(x + W)|] with W centered Gaussian of variance 2s (torus closed form).
double torus_mean_abs_sin(double x, double s);

/// Orthonormality defect ||u^T g u - I||_F.
double orthogonality_defect(const MatrixXd& u, const MatrixXd& g);

/// g_t-orthonormal start frame at a point (diagonal scaling in the chart).
MatrixXd orthonormal_frame(const FlowConfig& config, const ChartPoint& p_charted);

}  // namespace riccilab
