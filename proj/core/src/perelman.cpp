#include "riccilab/perelman.hpp"

#include <cmath>
#include <stdexcept>

namespace riccilab {

PerelmanCoefficients perelman_coefficients(const MetricJet& jet, double tau, double N) {
    const int n = jet.n;
    const double lapse = N / (2.0 * tau) + jet.scal;
    if (!(lapse > 0.0))
        throw std::invalid_argument("perelman_coefficients: N/(2 tau) + R must be positive");

    PerelmanCoefficients pc;
    pc.n = n;
    pc.tau = tau;
    pc.N = N;
    pc.g00_inv = 1.0 / lapse;
    pc.sphere_trace_time = -pc.g00_inv * N / (2.0 * tau);
    pc.h_trace = N / tau;

    const double G00 = pc.g00_inv;
    Tensor3 bg(n + 1, n + 1, n + 1);
    for (int k = 1; k <= n; ++k)
        for (int i = 1; i <= n; ++i)
            for (int j = 1; j <= n; ++j) bg(k, i, j) = jet.gamma(k - 1, i - 1, j - 1);
    for (int k = 1; k <= n; ++k)
        for (int i = 1; i <= n; ++i) {
            bg(k, i, 0) = jet.ric_mixed(k - 1, i - 1);  // Gamma^k_{i0} = R^k_i
            bg(k, 0, i) = jet.ric_mixed(k - 1, i - 1);
        }
    for (int k = 1; k <= n; ++k) bg(k, 0, 0) = -0.5 * jet.grad_scal[k - 1];
    for (int i = 1; i <= n; ++i)
        for (int j = 1; j <= n; ++j) bg(0, i, j) = -G00 * jet.ric(i - 1, j - 1);
    for (int i = 1; i <= n; ++i) {
        const double v = 0.5 * G00 * jet.dscal_dx[i - 1];
        bg(0, i, 0) = v;
        bg(0, 0, i) = v;
    }
    bg(0, 0, 0) = 0.5 * G00 * (jet.dscal_dtau + jet.scal / tau) - 1.0 / (2.0 * tau);
    pc.block_gamma = std::move(bg);
    return pc;
}

Tensor4 perelman_block_gamma_derivs(const MetricJet& jet, double tau, double N) {
    const int n = jet.n;
    const double G00 = 1.0 / (N / (2.0 * tau) + jet.scal);

    // dg_{ab}/dx^l recovered from metric compatibility.
    Tensor3 dg_dx(n, n, n);
    for (int l = 0; l < n; ++l)
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
                double s = 0.0;
                for (int m = 0; m < n; ++m)
                    s += jet.gamma(m, l, a) * jet.g(m, b) + jet.gamma(m, l, b) * jet.g(a, m);
                dg_dx(l, a, b) = s;
            }
    // d g^{km} in x^l and tau
    Tensor3 dginv_dx(n, n, n);
    MatrixXd dginv_dtau = -jet.g_inv * jet.dg_dtau * jet.g_inv;
    for (int l = 0; l < n; ++l) {
        MatrixXd dg(n, n);
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) dg(a, b) = dg_dx(l, a, b);
        const MatrixXd d = -jet.g_inv * dg * jet.g_inv;
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) dginv_dx(l, a, b) = d(a, b);
    }

    VectorXd dG00_dx(n);
    for (int l = 0; l < n; ++l) dG00_dx[l] = -G00 * G00 * jet.dscal_dx[l];
    const double dG00_dtau = -G00 * G00 * (-N / (2.0 * tau * tau) + jet.dscal_dtau);

    Tensor4 d(n + 1, n + 1, n + 1, n + 1);

    // spatial block Gamma^k_{ij}
    for (int k = 1; k <= n; ++k)
        for (int i = 1; i <= n; ++i)
            for (int j = 1; j <= n; ++j) {
                for (int l = 1; l <= n; ++l)
                    d(l, k, i, j) = jet.dgamma(l - 1, k - 1, i - 1, j - 1);
                d(0, k, i, j) = jet.dgamma_dtau(k - 1, i - 1, j - 1);
            }
    // Gamma^k_{i0} = R^k_i
    for (int k = 1; k <= n; ++k)
        for (int i = 1; i <= n; ++i) {
            for (int l = 1; l <= n; ++l) {
                const double v = jet.dric_mixed_dx(l - 1, k - 1, i - 1);
                d(l, k, i, 0) = v;
                d(l, k, 0, i) = v;
            }
            const double v = jet.dric_mixed_dtau(k - 1, i - 1);
            d(0, k, i, 0) = v;
            d(0, k, 0, i) = v;
        }
    // Gamma^k_{00} = -1/2 nabla^k R = -1/2 g^{km} dR/dx^m
    for (int k = 1; k <= n; ++k) {
        for (int l = 1; l <= n; ++l) {
            double v = 0.0;
            for (int m = 0; m < n; ++m)
                v += dginv_dx(l - 1, k - 1, m) * jet.dscal_dx[m] +
                     jet.g_inv(k - 1, m) * jet.d2scal_dx2(l - 1, m);
            d(l, k, 0, 0) = -0.5 * v;
        }
        double v = 0.0;
        for (int m = 0; m < n; ++m)
            v += dginv_dtau(k - 1, m) * jet.dscal_dx[m] +
                 jet.g_inv(k - 1, m) * jet.d2scal_dtaudx[m];
        d(0, k, 0, 0) = -0.5 * v;
    }
    // Gamma^0_{ij} = -G00 R_{ij}
    for (int i = 1; i <= n; ++i)
        for (int j = 1; j <= n; ++j) {
            for (int l = 1; l <= n; ++l)
                d(l, 0, i, j) = -dG00_dx[l - 1] * jet.ric(i - 1, j - 1) -
                                G00 * jet.dric_dx(l - 1, i - 1, j - 1);
            d(0, 0, i, j) =
                -dG00_dtau * jet.ric(i - 1, j - 1) - G00 * jet.dric_dtau(i - 1, j - 1);
        }
    // Gamma^0_{i0} = (G00/2) dR/dx^i
    for (int i = 1; i <= n; ++i) {
        for (int l = 1; l <= n; ++l) {
            const double v = 0.5 * (dG00_dx[l - 1] * jet.dscal_dx[i - 1] +
                                    G00 * jet.d2scal_dx2(l - 1, i - 1));
            d(l, 0, i, 0) = v;
            d(l, 0, 0, i) = v;
        }
        const double v =
            0.5 * (dG00_dtau * jet.dscal_dx[i - 1] + G00 * jet.d2scal_dtaudx[i - 1]);
        d(0, 0, i, 0) = v;
        d(0, 0, 0, i) = v;
    }
    // Gamma^0_{00} = (G00/2)(dR/dtau + R/tau) - 1/(2 tau)
    {
        const double paren = jet.dscal_dtau + jet.scal / tau;
        for (int l = 1; l <= n; ++l)
            d(l, 0, 0, 0) = 0.5 * dG00_dx[l - 1] * paren +
                            0.5 * G00 * (jet.d2scal_dtaudx[l - 1] + jet.dscal_dx[l - 1] / tau);
        d(0, 0, 0, 0) = 0.5 * dG00_dtau * paren +
                        0.5 * G00 * (jet.d2scal_dtau2 + jet.dscal_dtau / tau -
                                     jet.scal / (tau * tau)) +
                        1.0 / (2.0 * tau * tau);
    }
    return d;
}

namespace {

ChartPoint base_point(const FlowConfig& config, const VectorXd& q) {
    ChartPoint p;
    p.tau = q[0];
    p.coords = q.segment(1, config.n);
    p.chart = config.background == BackgroundKind::FlatTorus ? ChartId::TorusPeriodic
                                                             : ChartId::SphereNorth;
    return p;
}

// Round-sphere factor of sectional curvature 1/(2N) in a stereographic chart:
// h_ab = 4 / (1 + |y|^2 / (2N))^2 delta_ab.
double sphere_factor(const VectorXd& y, int N) {
    const double s = 1.0 + y.squaredNorm() / (2.0 * N);
    return 4.0 / (s * s);
}

}  // namespace

MatrixXd FullChartMetric::eval(const VectorXd& q) const {
    const int n = config.n;
    const int D = dim();
    if (q.size() != D) throw std::invalid_argument("full chart: bad coordinate size");
    const double tau = q[0];
    const ChartPoint p = base_point(config, q);
    const MetricJet jet = metric_jet(config, p);

    MatrixXd G = MatrixXd::Zero(D, D);
    G(0, 0) = N_small / (2.0 * tau) + jet.scal;
    G.block(1, 1, n, n) = jet.g;
    const VectorXd y = q.segment(1 + n, N_small);
    const double hf = sphere_factor(y, N_small);
    for (int a = 0; a < N_small; ++a) G(1 + n + a, 1 + n + a) = tau * hf;
    return G;
}

FullChartMetric full_chart_metric(const FlowConfig& config, int N_small) {
    if (N_small < 2 || N_small > 8)
        throw std::invalid_argument("full_chart_metric: N_small must be in [2, 8]");
    return FullChartMetric{config, N_small};
}

CurvatureFd curvature_fd(const FullChartMetric& fcm, const VectorXd& q, double h_fd) {
    auto metric = [&fcm](const VectorXd& qq) { return fcm.eval(qq); };
    CurvatureFd out;
    out.christoffels = fd_christoffels(metric, q, h_fd);
    // the lapse N/(2 tau) has tau-derivatives of order N/tau^4, so the Ricci
    // step must stay well below tau
    const double h_ric = std::min(std::max(1e-4, 10.0 * h_fd), q[0] / 50.0);
    out.ricci = fd_ricci(metric, q, h_ric);

    const MatrixXd G = fcm.eval(q);
    Eigen::LLT<MatrixXd> llt(G);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("curvature_fd: metric not positive definite");
    // Columns of L^{-T} form a G-orthonormal frame.
    const MatrixXd L = llt.matrixL();
    const MatrixXd B = L.transpose().inverse();
    const MatrixXd ric_frame = B.transpose() * out.ricci * B;
    out.sup_ric_frame = ric_frame.cwiseAbs().maxCoeff();
    return out;
}

Tensor3 full_chart_christoffels_reference(const FullChartMetric& fcm, const VectorXd& q) {
    const FlowConfig& config = fcm.config;
    const int n = config.n;
    const int N = fcm.N_small;
    const int D = fcm.dim();
    const double tau = q[0];

    const ChartPoint p = base_point(config, q);
    const MetricJet jet = metric_jet(config, p);
    const PerelmanCoefficients pc = perelman_coefficients(jet, tau, N);

    Tensor3 out(D, D, D);
    // block part (tau and x), identical index placement
    for (int k = 0; k <= n; ++k)
        for (int i = 0; i <= n; ++i)
            for (int j = 0; j <= n; ++j) out(k, i, j) = pc.block_gamma(k, i, j);

    // sphere factor: conformal chart of the curvature-1/(2N) sphere
    const VectorXd y = q.segment(1 + n, N);
    const double rho2 = 2.0 * N;
    const double denom = rho2 + y.squaredNorm();
    VectorXd du(N);
    for (int a = 0; a < N; ++a) du[a] = -2.0 * y[a] / denom;
    for (int g = 0; g < N; ++g)
        for (int a = 0; a < N; ++a)
            for (int b = 0; b < N; ++b) {
                double v = 0.0;
                if (g == a) v += du[b];
                if (g == b) v += du[a];
                if (a == b) v -= du[g];
                out(1 + n + g, 1 + n + a, 1 + n + b) = v;
            }
    // Gamma^gamma_{alpha 0} = (1/2tau) delta, Gamma^0_{alpha beta} = -(G00/2) h_ab
    const double hf = sphere_factor(y, N);
    for (int a = 0; a < N; ++a) {
        out(1 + n + a, 1 + n + a, 0) = 1.0 / (2.0 * tau);
        out(1 + n + a, 0, 1 + n + a) = 1.0 / (2.0 * tau);
        out(0, 1 + n + a, 1 + n + a) = -0.5 * pc.g00_inv * hf;
    }
    return out;
}

}  // namespace riccilab
