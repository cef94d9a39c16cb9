#pragma once

#include <functional>
#include <vector>

#include "riccilab/flow_config.hpp"
#include "riccilab/tensor.hpp"

namespace riccilab {

/// Pointwise background data of g_tau in a fixed chart. Covers the metric,
/// Christoffels, curvature, and every derivative of those that the projected
/// generators contract against. All fields are exact closed forms.
struct MetricJet {
    int n = 0;
    double tau = 0.0;
    MatrixXd g;        // g_{ij}
    MatrixXd g_inv;    // g^{ij}
    Tensor3 gamma;     // Gamma^k_{ij}, index order (k, i, j)
    Tensor4 dgamma;    // d Gamma^k_{ij} / d x^l, index order (l, k, i, j)
    MatrixXd ric;      // R_{ij}
    MatrixXd ric_mixed; // R^k_i, index order (k, i)
    double scal = 0.0;       // R
    double dscal_dtau = 0.0; // dR/dtau
    VectorXd grad_scal;      // nabla^i R
    MatrixXd dg_dtau;        // dg_{ij}/dtau (= 2 R_{ij} on a reverse-time flow)

    VectorXd dscal_dx;       // dR/dx^i
    MatrixXd d2scal_dx2;     // d^2 R / dx^l dx^i, index order (l, i)
    VectorXd d2scal_dtaudx;  // d^2 R / dtau dx^i
    double d2scal_dtau2 = 0.0;
    Tensor3 dric_dx;         // d R_{ij} / d x^l, index order (l, i, j)
    Tensor3 dric_mixed_dx;   // d R^k_i / d x^l, index order (l, k, i)
    MatrixXd dric_mixed_dtau; // d R^k_i / d tau, index order (k, i)
    MatrixXd dric_dtau;      // d R_{ij} / d tau
    Tensor3 dgamma_dtau;     // d Gamma^k_{ij} / d tau, index order (k, i, j)
};

/// Exact background data at p. Sphere points may be given in any sphere
/// chart; derivatives refer to the stereographic chart recorded in the
/// returned point by metric_jet_charted.
MetricJet metric_jet(const FlowConfig& config, const ChartPoint& p);

/// As metric_jet, but also reports the stereographic point actually used
/// (ambient inputs are converted to the preferred chart).
MetricJet metric_jet_charted(const FlowConfig& config, const ChartPoint& p, ChartPoint& used);

/// Max over samples of ||(g(tau+h) - g(tau-h))/(2h) - sign * 2 Ric(tau)||_F.
/// sign = +1 checks the reverse-time flow equation; sign = -1 is the
/// deliberately wrong-sign control.
double ricci_flow_residual(const FlowConfig& config, const std::vector<ChartPoint>& samples,
                           double h_fd, double ricci_sign = 1.0);

/// Second-order central-difference Christoffels of an arbitrary metric field,
/// Gamma^k_{ij} indexed (k, i, j).
Tensor3 fd_christoffels(const std::function<MatrixXd(const VectorXd&)>& metric,
                        const VectorXd& q, double h);

/// Second-order central-difference Ricci tensor of an arbitrary metric field.
MatrixXd fd_ricci(const std::function<MatrixXd(const VectorXd&)>& metric,
                  const VectorXd& q, double h);

/// Deterministic sample grid covering the tau window and chart domain.
std::vector<ChartPoint> sample_grid(const FlowConfig& config, int count, double tau_margin = 0.0);

}  // namespace riccilab
