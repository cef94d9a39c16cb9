#pragma once

#include "riccilab/backgrounds.hpp"

namespace riccilab {

/// Block data of the product metric G = g_tau + tau h + (N/2tau + R) dtau^2
/// at one space-time point. Block indices run over {0..n} with 0 = tau.
struct PerelmanCoefficients {
    int n = 0;
    double tau = 0.0;
    double N = 0.0;
    double g00_inv = 0.0;  // G^{00} = 1 / (N/(2 tau) + R)
    Tensor3 block_gamma;   // Gamma^k_{ij} over the block, index order (k, i, j)
    double sphere_trace_time = 0.0;  // G^{ab} Gamma^0_{ab} over the sphere = -G^{00} N/(2 tau)
    double h_trace = 0.0;            // G^{ab} h_{ab} = N / tau
};

/// Populates the block Christoffel table. Throws std::invalid_argument when
/// N/(2 tau) + R <= 0.
PerelmanCoefficients perelman_coefficients(const MetricJet& jet, double tau, double N);

/// Exact partials of the block table: index order (l, k, i, j) where l = 0
/// means d/dtau and l >= 1 means d/dx^l.
Tensor4 perelman_block_gamma_derivs(const MetricJet& jet, double tau, double N);

/// Full coordinate chart for the product metric at small sphere dimension.
/// Coordinate order: (tau, x^1..x^n, y^1..y^N) with y a stereographic chart
/// of the round sphere of sectional curvature 1/(2N).
struct FullChartMetric {
    FlowConfig config;
    int N_small = 2;
    int dim() const { return 1 + config.n + N_small; }
    MatrixXd eval(const VectorXd& q) const;
};

/// Validator-scale chart, 2 <= N_small <= 8.
FullChartMetric full_chart_metric(const FlowConfig& config, int N_small);

struct CurvatureFd {
    Tensor3 christoffels;   // Gamma^K_{IJ} of G by central differences
    MatrixXd ricci;         // Ric_G by central differences
    double sup_ric_frame = 0.0;  // largest |component| in a G-orthonormal frame
};

/// Finite-difference ground truth for the table and the almost-Ricci-flat
/// bound. h_fd is the base step; Ricci uses 10x the step to keep the nested
/// differences well conditioned.
CurvatureFd curvature_fd(const FullChartMetric& fcm, const VectorXd& q, double h_fd);

/// Closed-form Christoffels of the full chart assembled from the block table,
/// the round-sphere factor, and the tabulated sphere-time entries; zero for
/// every mixed symbol. Used as the reference the finite differences are
/// checked against. Index order (K, I, J).
Tensor3 full_chart_christoffels_reference(const FullChartMetric& fcm, const VectorXd& q);

}  // namespace riccilab
