#include "riccilab/reference.hpp"

#include <cmath>
#include <stdexcept>

namespace riccilab {

PathEnsemble parabolic_base_paths(const FlowConfig& config, const ChartPoint& start_x,
                                  double S, double h, int n_paths, const RngSpec& rng,
                                  const std::vector<double>& marks, bool with_frames,
                                  const MatrixXd& u0) {
    SimJob job;
    job.config = config;
    job.kind = ProcessKind::Parabolic;
    job.start = start_x;
    job.S = S;
    job.h = h;
    job.marks = marks;
    job.n_paths = n_paths;
    job.rng = rng;
    if (with_frames) job.frame0 = u0;
    return simulate_paths(job);
}

ReferencePath parabolic_transport(const FlowConfig& config, const std::vector<ChartPoint>& path,
                                  const MatrixXd& u0) {
    const int n = config.n;
    auto gamma_of = [&config, n](const ChartPoint& at, const VectorXd& dz) {
        const MetricJet jet = metric_jet(config, at);
        MatrixXd M(n, n);
        for (int k = 0; k < n; ++k)
            for (int j = 0; j < n; ++j) {
                double s = jet.ric_mixed(k, j) * dz[0];
                for (int i = 0; i < n; ++i) s += jet.gamma(k, i, j) * dz[1 + i];
                M(k, j) = s;
            }
        return M;
    };
    ReferencePath rp;
    rp.base = path;
    rp.frames = transport_frame_along_path(path, gamma_of, u0);
    rp.times.reserve(path.size());
    rp.t_clock.reserve(path.size());
    const double tau0 = path.front().tau;
    for (const ChartPoint& p : path) {
        const double s = p.tau - tau0;
        rp.times.push_back(s);
        rp.t_clock.push_back(config.T - s);
    }
    return rp;
}

HeatResult heat_expectation(const FlowConfig& config, const HeatFunctional& f, double from_time_s,
                            const ChartPoint& x_start, HeatMethod method, double h, int n_paths,
                            const RngSpec& rng) {
    const double duration = config.T - from_time_s;
    if (duration < -1e-12)
        throw std::invalid_argument("heat_expectation: from_time must be <= T");

    if (method == HeatMethod::ClosedForm) {
        HeatResult r;
        if (config.background == BackgroundKind::FlatTorus) {
            // mode cos(k.x + phase): eigenvalue -|k|^2 under the full Laplacian
            const double lambda = f.k_or_v.squaredNorm();
            const VectorXd x = x_start.chart == ChartId::TorusPeriodic
                                   ? x_start.coords
                                   : throw std::invalid_argument("heat: torus point expected");
            r.value = std::exp(-lambda * duration) * std::cos(f.k_or_v.dot(x) + f.phase);
        } else {
            // ambient harmonic v.X: d w/dt = -(2/c(t)) w integrates to c(T)/c(s)
            const ChartPoint amb = chart_map(config, x_start, ChartId::SphereAmbient);
            const double cT = config.c0 - 2.0 * config.T;
            const double cs = config.c0 - 2.0 * from_time_s;
            r.value = (cT / cs) * f.k_or_v.dot(amb.coords);
        }
        return r;
    }

    if (duration < 1e-15) {
        HeatResult r;
        if (config.background == BackgroundKind::FlatTorus)
            r.value = std::cos(f.k_or_v.dot(x_start.coords) + f.phase);
        else
            r.value = f.k_or_v.dot(chart_map(config, x_start, ChartId::SphereAmbient).coords);
        return r;
    }

    SimJob job;
    job.config = config;
    job.kind = ProcessKind::Parabolic;
    job.start = x_start;
    job.S = duration;
    job.h = h;
    job.marks = {duration};
    job.n_paths = n_paths;
    job.rng = rng;
    const HeatFunctional fn = f;
    const bool torus = config.background == BackgroundKind::FlatTorus;
    std::vector<double> payload;
    run_paths(job, 1, [&fn, torus](int, const std::vector<MarkState>& marks, double* out) {
        const MarkState& m = marks.back();
        out[0] = torus ? std::cos(fn.k_or_v.dot(m.x) + fn.phase) : fn.k_or_v.dot(m.x);
    }, payload);
    const McEstimate est = mc_estimate(payload, 1, 0);
    return HeatResult{est.mean, est.stderr_};
}

double torus_mean_abs_sin(double x, double s) {
    // |sin t| = 2/pi - (4/pi) sum cos(2mt) / (4m^2 - 1); E cos(k W) = e^{-k^2 s}
    double v = 2.0 / M_PI;
    for (int m = 1; m <= 40; ++m) {
        v -= (4.0 / M_PI) * std::cos(2.0 * m * x) * std::exp(-4.0 * m * m * s) /
             (4.0 * m * m - 1.0);
    }
    return v;
}

double orthogonality_defect(const MatrixXd& u, const MatrixXd& g) {
    const MatrixXd q = u.transpose() * g * u;
    return (q - MatrixXd::Identity(q.rows(), q.cols())).norm();
}

MatrixXd orthonormal_frame(const FlowConfig& config, const ChartPoint& p_charted) {
    const MetricJet jet = metric_jet(config, p_charted);
    Eigen::LLT<MatrixXd> llt(jet.g);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("orthonormal_frame: metric not positive definite");
    const MatrixXd L = llt.matrixL();
    return MatrixXd(L.transpose().inverse());
}

}  // namespace riccilab
