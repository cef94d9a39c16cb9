#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "riccilab/generators.hpp"
#include "riccilab/rng.hpp"

namespace riccilab {

enum class ProcessKind {
    Projected,  // exact N-dependent base (and optional block-frame) process
    Parabolic   // unit-speed clock, spatial Brownian motion, n x n frames
};

/// State snapshot delivered at requested mark times.
struct MarkState {
    double s = 0.0;
    double tau = 0.0;
    VectorXd x;             // torus chart coords, or sphere ambient unit vector
    VectorXd chart_coords;  // stereographic coords of x (sphere only)
    ChartId chart = ChartId::TorusPeriodic;
    MatrixXd frame;         // empty when frames are off
    bool stopped = false;
    double stopped_at = std::numeric_limits<double>::quiet_NaN();  // exact exit time
    bool singular = false;  // |det frame| dropped below 1e-8 somewhere before s
    std::vector<double> f_values;     // integrand values f(X_s)
    std::vector<double> f_integrals;  // trapezoid of (compensator f)(X_r) dr
};

enum class CompensatorMode { ExactGenerator, HeatOnly };

struct SimJob {
    FlowConfig config;
    ProcessKind kind = ProcessKind::Projected;
    double N = 100.0;
    ChartPoint start;
    std::optional<MatrixXd> frame0;  // (n+1)^2 block (Projected) or n^2 (Parabolic)
    double S = 0.0;
    double h = 1e-3;
    std::vector<double> marks;
    int n_paths = 0;
    RngSpec rng;
    int workers = 0;  // 0 = hardware concurrency
    bool reorthonormalize = false;
    std::vector<const TestFunction*> integrands;
    CompensatorMode comp_mode = CompensatorMode::ExactGenerator;
};

/// Per-path payload extractor; out has fixed length payload_len.
using PathPayloadFn =
    std::function<void(int path, const std::vector<MarkState>& marks, double* out)>;

/// Runs all paths and fills payloads (n_paths x payload_len, row-major).
/// Identical output for any worker count.
void run_paths(const SimJob& job, int payload_len, const PathPayloadFn& fn,
               std::vector<double>& payloads);

/// Saved ensemble per the dump contract (one row per path and saved time).
struct PathEnsemble {
    int n_paths = 0;
    double h = 0.0;
    double horizon = 0.0;
    std::vector<double> mark_times;
    std::vector<MarkState> states;  // [path * marks + mark]
    std::vector<double> stopped_at; // NaN when never stopped
    std::vector<uint8_t> singular_flag;
    const MarkState& at(int path, int mark) const {
        return states[static_cast<size_t>(path) * mark_times.size() + mark];
    }
};

PathEnsemble simulate_paths(const SimJob& job);

/// Generic chart-coordinate Euler-Maruyama driven by pointwise coefficients
/// (sigma sigma^T = 2a). Used for custom dynamics in tests; the production
/// backgrounds go through simulate_paths.
using CoeffsProvider = std::function<GeneratorCoeffs(const ChartPoint&)>;
PathEnsemble simulate_base_paths(const FlowConfig& config, const CoeffsProvider& provider,
                                 const ChartPoint& start, double S, double h, int n_paths,
                                 const RngSpec& rng, const std::vector<double>& marks);

/// Transports a block frame along an explicitly recorded base path
/// (full-resolution states), Heun/midpoint rule. Returns frames at each
/// input state. gamma_of(at, dz) supplies the contracted transport matrix
/// M with dz = (dtau, dx); the update is e <- e - M e (midpoint-corrected).
using TransportCoeffs = std::function<MatrixXd(const ChartPoint& at, const VectorXd& dz)>;
std::vector<MatrixXd> transport_frame_along_path(const std::vector<ChartPoint>& path,
                                                 const TransportCoeffs& gamma_of,
                                                 const MatrixXd& e0,
                                                 bool* singular_flag = nullptr);

struct McEstimate {
    double mean = 0.0;
    double stderr_ = 0.0;
    long n_effective = 0;
};

/// Deterministic pairwise-summation statistics of one payload column.
McEstimate mc_estimate(const std::vector<double>& payloads, int payload_len, int column);

/// Mean/stderr of the per-path difference a - b (common-random-number pairing
/// by path index).
McEstimate mc_paired_diff(const std::vector<double>& a, const std::vector<double>& b,
                          int payload_len, int column);

/// Pairwise (fixed binary tree) sum, independent of traversal order.
double pairwise_sum(const double* data, size_t count, size_t stride = 1);

/// Sample variance with stderr of the variance estimator (via fourth moment).
struct VarianceEstimate {
    double var = 0.0;
    double stderr_ = 0.0;
};
VarianceEstimate mc_variance(const std::vector<double>& payloads, int payload_len, int column);

/// CSV dump per the ensemble interchange format.
std::string ensemble_to_csv(const PathEnsemble& ens, int n_spatial);

}  // namespace riccilab
