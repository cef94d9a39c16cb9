#pragma once

#include "riccilab/perelman.hpp"
#include "riccilab/test_functions.hpp"

namespace riccilab {

/// Second-order operator a^{pq} d_p d_q + b^p d_p over a named coordinate
/// list (no 1/2 on the diffusion term; the associated SDE noise satisfies
/// sigma sigma^T = 2a).
struct GeneratorCoeffs {
    std::vector<std::string> coord_names;
    MatrixXd a;
    VectorXd b;
};

/// Point of the block frame bundle: base space-time point plus the
/// (n+1)x(n+1) frame matrix e^i_b (row 0 = tau direction).
struct FrameState {
    ChartPoint base;
    MatrixXd e;
};

/// Flattens (tau, x, e) into the TestFunction coordinate layout.
VectorXd pack_state(const ChartPoint& base_charted, const MatrixXd& e);

double apply_generator(const GeneratorCoeffs& gc, const TestFunction& f, const VectorXd& v);

/// Exact projected generator of Brownian motion on the product manifold
/// acting on sphere-independent functions, over (tau, x^1..x^n):
///   a = diag(G^{00}, g^{ij}),
///   b_tau = 1 + G^{00}/(2 tau) - (G^{00})^2/2 (dR/dtau + R/tau),
///   b_i   = -g^{jk} Gamma^i_{jk} + (G^{00}/2) nabla^i R.
GeneratorCoeffs scalar_generator(const MetricJet& jet, double tau, double N);

/// (d_tau + Laplace_{g_tau}) f at v.
double heat_operator_apply(const TestFunction& f, const MetricJet& jet, const VectorXd& v);

/// Generator-minus-heat defect of a base-only f (computed from the operators).
double scalar_defect(const TestFunction& f, const MetricJet& jet, double tau, double N,
                     const VectorXd& v);

/// The same defect from its closed-form display:
///   (1/(N+2 tau R) - (G00)^2/2 (dR/dtau + R/tau)) f_tau
///   + G00 (f_tautau + 1/2 nabla^i R f_i).
double scalar_defect_display(const TestFunction& f, const MetricJet& jet, double tau, double N,
                             const VectorXd& v);

/// Shared constructor for horizontal-transport generators on a frame bundle:
/// base diffusion A and drift c over (tau, x), transport symbols gamma
/// (index order (row k, base dir i, col j)) and their base derivatives
/// dgamma (l, k, i, j). Frame rows r may differ from 1+n (Ricci-flow frame
/// bundle uses r = n).
struct HorizontalInputs {
    int n = 0;
    int r = 0;
    MatrixXd A;
    VectorXd c;
    Tensor3 gamma;
    Tensor4 dgamma;
};
GeneratorCoeffs build_horizontal_generator(const HorizontalInputs& in, const MatrixXd& e);

/// N-dependent projected generator L^N over (tau, x, e-block): the
/// block-trace operator G^{il} D_l D_i + b^i D_i with the exact table and
/// sphere-trace drift. This is the generator the transport SDE realizes.
GeneratorCoeffs frame_generator(const MetricJet& jet, double tau, double N, const MatrixXd& e);
double frame_generator_apply(const TestFunction& psi, const FrameState& state,
                             const MetricJet& jet, double N);

/// The block trace above is not quite the full horizontal Laplacian: sphere
/// rows of an orthonormal frame couple back into the e^0 row through
/// Gamma^0_{ab} = -(G00/2) h_ab. Contracting those rows and closing with the
/// orthonormality constraint yields two extra e^0-row terms:
///   - (G00 N / 4 tau^2) e^0_b psi_{e^0_b}
///   + [ (G00^2/4tau^2)(delta_bc - g_ij e^i_b e^j_c)
///       - (G00/4tau^2) e^0_b e^0_c ] psi_{e^0_b e^0_c}.
/// They vanish on functions that do not read the e^0 row; with them,
/// frame_generator_apply + correction equals the full-chart horizontal
/// Laplacian of the pullback exactly (small-N validated).
double fibre_projection_correction(const TestFunction& psi, const FrameState& state,
                                   const MetricJet& jet, double N);
double projected_generator_exact_apply(const TestFunction& psi, const FrameState& state,
                                       const MetricJet& jet, double N);

/// N -> infinity limit of L^N (drops the G^{00} second-order time term and
/// all G^{00}-weighted table entries).
GeneratorCoeffs limit_block_generator(const MetricJet& jet, double tau, const MatrixXd& e);

/// Range of the frame-column index in the concentration operator's leading
/// (1/2tau) e^0_b d/d e^0_b term.
enum class IndexConvention { FullBlock, SpatialOnly };

struct AsymptoticApplied {
    double D = 0.0;     // time-plus-horizontal part (survives on the orthonormal bundle)
    double N_op = 0.0;  // concentration part (vanishes there)
};
AsymptoticApplied asymptotic_operators_apply(const TestFunction& psi, const FrameState& state,
                                             const MetricJet& jet, IndexConvention conv);

/// Bounded coefficient fields of the concentration operator's first-order
/// column-0 and row-0 terms:
///   B^k_j = g^{il}(Gamma^r_{il}Gamma^k_{rj} + Gamma^r_{lj}Gamma^k_{ir}
///           - d Gamma^k_{ij}/dx^l) - R^k_j,
///   B^k   = g^{il}(Gamma^r_{il}R^k_r + R^r_l Gamma^k_{ir} - d R^k_i/dx^l)
///           + (1/2) nabla^k R.
MatrixXd concentration_B_matrix(const MetricJet& jet);
VectorXd concentration_B_vector(const MetricJet& jet);

/// (D_tau + Delta_H) applied to the spatial-block function psi at the
/// embedded orthogonal frame u (n x n), via the space-time connection.
double horizontal_heat_apply(const TestFunction& psi, const ChartPoint& base_charted,
                             const MatrixXd& u, const MetricJet& jet);

/// Embeds u in the block bundle with e^0_0 = 1 and zero off-blocks.
MatrixXd iota_embed(const MatrixXd& u);

}  // namespace riccilab
