#include "riccilab/backgrounds.hpp"

#include <cmath>
#include <stdexcept>

namespace riccilab {

namespace {

MetricJet zero_jet(int n, double tau) {
    MetricJet j;
    j.n = n;
    j.tau = tau;
    j.g = MatrixXd::Identity(n, n);
    j.g_inv = MatrixXd::Identity(n, n);
    j.gamma = Tensor3(n, n, n);
    j.dgamma = Tensor4(n, n, n, n);
    j.ric = MatrixXd::Zero(n, n);
    j.ric_mixed = MatrixXd::Zero(n, n);
    j.grad_scal = VectorXd::Zero(n);
    j.dg_dtau = MatrixXd::Zero(n, n);
    j.dscal_dx = VectorXd::Zero(n);
    j.d2scal_dx2 = MatrixXd::Zero(n, n);
    j.d2scal_dtaudx = VectorXd::Zero(n);
    j.dric_dx = Tensor3(n, n, n);
    j.dric_mixed_dx = Tensor3(n, n, n);
    j.dric_mixed_dtau = MatrixXd::Zero(n, n);
    j.dric_dtau = MatrixXd::Zero(n, n);
    j.dgamma_dtau = Tensor3(n, n, n);
    return j;
}

// Shrinking round sphere, n = 2: g_tau = c(tau) * gbar with gbar the unit
// round metric. In a stereographic chart gbar_ij = phibar * delta_ij with
// phibar = 4 / sigma^2, sigma = 1 + |xi|^2. Christoffels are those of a
// conformal factor and do not depend on tau.
MetricJet sphere_jet(const FlowConfig& config, const VectorXd& xi, double tau) {
    const int n = config.n;
    const double c = config.conformal_factor(tau);
    if (!(c > 0.0)) throw std::domain_error("metric_jet: sphere flow has collapsed");

    const double sigma = 1.0 + xi.squaredNorm();
    const double phibar = 4.0 / (sigma * sigma);

    MetricJet j = zero_jet(n, tau);
    j.g = (c * phibar) * MatrixXd::Identity(n, n);
    j.g_inv = (1.0 / (c * phibar)) * MatrixXd::Identity(n, n);

    // u = (1/2) log(c * phibar); u_i = -2 xi_i / sigma.
    VectorXd du(n);
    for (int i = 0; i < n; ++i) du[i] = -2.0 * xi[i] / sigma;
    // Gamma^k_{ij} = delta^k_i u_j + delta^k_j u_i - delta_{ij} u_k
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int jj = 0; jj < n; ++jj) {
                double v = 0.0;
                if (k == i) v += du[jj];
                if (k == jj) v += du[i];
                if (i == jj) v -= du[k];
                j.gamma(k, i, jj) = v;
            }
    // d u_i / d x^l = -2 delta_{li}/sigma + 4 xi_i xi_l / sigma^2
    MatrixXd ddu(n, n);  // (l, i)
    for (int l = 0; l < n; ++l)
        for (int i = 0; i < n; ++i)
            ddu(l, i) = -2.0 * (l == i ? 1.0 : 0.0) / sigma + 4.0 * xi[i] * xi[l] / (sigma * sigma);
    for (int l = 0; l < n; ++l)
        for (int k = 0; k < n; ++k)
            for (int i = 0; i < n; ++i)
                for (int jj = 0; jj < n; ++jj) {
                    double v = 0.0;
                    if (k == i) v += ddu(l, jj);
                    if (k == jj) v += ddu(l, i);
                    if (i == jj) v -= ddu(l, k);
                    j.dgamma(l, k, i, jj) = v;
                }

    // Ric = (n-1) gbar; scalar R = n(n-1)/c.
    const double nm1 = static_cast<double>(n - 1);
    j.ric = (nm1 * phibar) * MatrixXd::Identity(n, n);
    j.ric_mixed = (nm1 / c) * MatrixXd::Identity(n, n);
    j.scal = n * nm1 / c;

    // c(tau) = c0 - 2(n-1) t has dc/dtau = 2(n-1).
    const double dc_dtau = 2.0 * nm1;
    j.dscal_dtau = -n * nm1 * dc_dtau / (c * c);
    j.d2scal_dtau2 = 2.0 * n * nm1 * dc_dtau * dc_dtau / (c * c * c);
    j.dg_dtau = (dc_dtau * phibar) * MatrixXd::Identity(n, n);

    for (int l = 0; l < n; ++l) {
        const double dphibar_dl = -16.0 * xi[l] / (sigma * sigma * sigma);
        for (int i = 0; i < n; ++i) j.dric_dx(l, i, i) = nm1 * dphibar_dl;
    }
    j.dric_mixed_dtau = (-nm1 * dc_dtau / (c * c)) * MatrixXd::Identity(n, n);
    return j;
}

}  // namespace

MetricJet metric_jet_charted(const FlowConfig& config, const ChartPoint& p, ChartPoint& used) {
    if (!config.tau_in_range(p.tau))
        throw std::domain_error("metric_jet: tau outside [delta, T]");
    if (config.background == BackgroundKind::FlatTorus) {
        if (p.chart != ChartId::TorusPeriodic)
            throw std::domain_error("metric_jet: torus background expects the periodic chart");
        used = p;
        return zero_jet(config.n, p.tau);
    }
    ChartPoint q = p;
    if (p.chart == ChartId::SphereAmbient) {
        const ChartId pref = sphere_preferred_chart(p.coords / p.coords.norm());
        q = chart_map(config, p, pref);
    }
    used = q;
    return sphere_jet(config, q.coords, q.tau);
}

MetricJet metric_jet(const FlowConfig& config, const ChartPoint& p) {
    ChartPoint used;
    return metric_jet_charted(config, p, used);
}

double ricci_flow_residual(const FlowConfig& config, const std::vector<ChartPoint>& samples,
                           double h_fd, double ricci_sign) {
    double worst = 0.0;
    for (const ChartPoint& p : samples) {
        if (p.tau - h_fd < config.delta || p.tau + h_fd > config.T)
            throw std::domain_error("ricci_flow_residual: tau +- h leaves [delta, T]");
        ChartPoint used;
        const MetricJet jc = metric_jet_charted(config, p, used);
        ChartPoint plus = used, minus = used;
        plus.tau += h_fd;
        minus.tau -= h_fd;
        const MetricJet jp = metric_jet(config, plus);
        const MetricJet jm = metric_jet(config, minus);
        const MatrixXd fd = (jp.g - jm.g) / (2.0 * h_fd);
        worst = std::max(worst, (fd - ricci_sign * 2.0 * jc.ric).norm());
    }
    return worst;
}

Tensor3 fd_christoffels(const std::function<MatrixXd(const VectorXd&)>& metric,
                        const VectorXd& q, double h) {
    const int d = static_cast<int>(q.size());
    const MatrixXd g0 = metric(q);
    const MatrixXd ginv = g0.inverse();
    // dg(l, i, j) = d g_{ij} / d q^l by central differences
    Tensor3 dg(d, d, d);
    VectorXd qe = q;
    for (int l = 0; l < d; ++l) {
        qe[l] = q[l] + h;
        const MatrixXd gp = metric(qe);
        qe[l] = q[l] - h;
        const MatrixXd gm = metric(qe);
        qe[l] = q[l];
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) dg(l, i, j) = (gp(i, j) - gm(i, j)) / (2.0 * h);
    }
    Tensor3 gam(d, d, d);
    for (int k = 0; k < d; ++k)
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                double s = 0.0;
                for (int l = 0; l < d; ++l)
                    s += ginv(k, l) * (dg(i, l, j) + dg(j, l, i) - dg(l, i, j));
                gam(k, i, j) = 0.5 * s;
            }
    return gam;
}

MatrixXd fd_ricci(const std::function<MatrixXd(const VectorXd&)>& metric,
                  const VectorXd& q, double h) {
    const int d = static_cast<int>(q.size());
    // R_{ij} = d_k Gamma^k_{ij} - d_j Gamma^k_{ki} + Gamma^k_{kl} Gamma^l_{ij}
    //          - Gamma^k_{jl} Gamma^l_{ki}
    const Tensor3 gam = fd_christoffels(metric, q, h);
    std::vector<Tensor3> dgam(d);  // derivative direction -> Christoffels
    VectorXd qe = q;
    for (int m = 0; m < d; ++m) {
        qe[m] = q[m] + h;
        const Tensor3 gp = fd_christoffels(metric, qe, h);
        qe[m] = q[m] - h;
        const Tensor3 gm = fd_christoffels(metric, qe, h);
        qe[m] = q[m];
        Tensor3 der(d, d, d);
        for (int k = 0; k < d; ++k)
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j)
                    der(k, i, j) = (gp(k, i, j) - gm(k, i, j)) / (2.0 * h);
        dgam[m] = der;
    }
    MatrixXd ric(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            double v = 0.0;
            for (int k = 0; k < d; ++k) v += dgam[k](k, i, j) - dgam[j](k, k, i);
            for (int k = 0; k < d; ++k)
                for (int l = 0; l < d; ++l)
                    v += gam(k, k, l) * gam(l, i, j) - gam(k, j, l) * gam(l, k, i);
            ric(i, j) = v;
        }
    return ric;
}

std::vector<ChartPoint> sample_grid(const FlowConfig& config, int count, double tau_margin) {
    std::vector<ChartPoint> pts;
    pts.reserve(count);
    const double lo = config.delta + tau_margin;
    const double hi = config.T - tau_margin;
    for (int k = 0; k < count; ++k) {
        const double frac = (k + 0.5) / count;
        const double tau = lo + frac * (hi - lo);
        ChartPoint p;
        p.tau = tau;
        if (config.background == BackgroundKind::FlatTorus) {
            p.chart = ChartId::TorusPeriodic;
            p.coords = VectorXd(config.n);
            for (int i = 0; i < config.n; ++i)
                p.coords[i] = std::fmod(0.3 + 2.39996 * k + 0.7 * i, config.L);
        } else {
            p.chart = ChartId::SphereNorth;
            p.coords = VectorXd(config.n);
            const double r = 0.8 * std::fmod(0.17 + 0.61803398875 * k, 1.0);
            const double ang = 2.39996322972865332 * k;  // golden-angle spiral
            p.coords[0] = r * std::cos(ang);
            p.coords[1] = r * std::sin(ang);
        }
        pts.push_back(std::move(p));
    }
    return pts;
}

}  // namespace riccilab
