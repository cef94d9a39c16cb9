#include "riccilab/generators.hpp"

#include <cmath>
#include <stdexcept>

namespace riccilab {

namespace {

std::vector<std::string> base_names(int n) {
    std::vector<std::string> names;
    names.reserve(1 + n);
    names.emplace_back("tau");
    for (int i = 1; i <= n; ++i) names.push_back("x" + std::to_string(i));
    return names;
}

std::vector<std::string> frame_names(int n, int r) {
    std::vector<std::string> names = base_names(n);
    for (int i = 0; i < r; ++i)
        for (int b = 0; b < r; ++b)
            names.push_back("e" + std::to_string(i) + std::to_string(b));
    return names;
}

}  // namespace

VectorXd pack_state(const ChartPoint& base_charted, const MatrixXd& e) {
    const int n = static_cast<int>(base_charted.coords.size());
    const int r = static_cast<int>(e.rows());
    VectorXd v(1 + n + r * r);
    v[0] = base_charted.tau;
    v.segment(1, n) = base_charted.coords;
    for (int i = 0; i < r; ++i)
        for (int b = 0; b < r; ++b) v[1 + n + i * r + b] = e(i, b);
    return v;
}

double apply_generator(const GeneratorCoeffs& gc, const TestFunction& f, const VectorXd& v) {
    const VectorXd g = f.grad(v);
    const MatrixXd H = f.hess(v);
    const int m = static_cast<int>(gc.b.size());
    if (v.size() != m) throw std::invalid_argument("apply_generator: layout mismatch");
    double out = gc.b.dot(g.head(m));
    for (int p = 0; p < m; ++p)
        for (int q = 0; q < m; ++q) out += gc.a(p, q) * H(p, q);
    return out;
}

GeneratorCoeffs scalar_generator(const MetricJet& jet, double tau, double N) {
    const int n = jet.n;
    const double lapse = N / (2.0 * tau) + jet.scal;
    if (!(lapse > 0.0))
        throw std::invalid_argument("scalar_generator: N/(2 tau) + R must be positive");
    const double G00 = 1.0 / lapse;

    GeneratorCoeffs gc;
    gc.coord_names = base_names(n);
    gc.a = MatrixXd::Zero(1 + n, 1 + n);
    gc.a(0, 0) = G00;
    gc.a.block(1, 1, n, n) = jet.g_inv;
    gc.b = VectorXd::Zero(1 + n);
    gc.b[0] = 1.0 + G00 / (2.0 * tau) -
              0.5 * G00 * G00 * (jet.dscal_dtau + jet.scal / tau);
    for (int i = 0; i < n; ++i) {
        double tr = 0.0;
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) tr += jet.g_inv(j, k) * jet.gamma(i, j, k);
        gc.b[1 + i] = -tr + 0.5 * G00 * jet.grad_scal[i];
    }
    return gc;
}

double heat_operator_apply(const TestFunction& f, const MetricJet& jet, const VectorXd& v) {
    const int n = jet.n;
    const VectorXd g = f.grad(v);
    const MatrixXd H = f.hess(v);
    double out = g[0];  // d/dtau
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out += jet.g_inv(i, j) * H(1 + i, 1 + j);
    for (int i = 0; i < n; ++i) {
        double tr = 0.0;
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) tr += jet.g_inv(j, k) * jet.gamma(i, j, k);
        out -= tr * g[1 + i];
    }
    return out;
}

double scalar_defect(const TestFunction& f, const MetricJet& jet, double tau, double N,
                     const VectorXd& v) {
    const GeneratorCoeffs gc = scalar_generator(jet, tau, N);
    return apply_generator(gc, f, v) - heat_operator_apply(f, jet, v);
}

double scalar_defect_display(const TestFunction& f, const MetricJet& jet, double tau, double N,
                             const VectorXd& v) {
    const double G00 = 1.0 / (N / (2.0 * tau) + jet.scal);
    const VectorXd g = f.grad(v);
    const MatrixXd H = f.hess(v);
    double out = (1.0 / (N + 2.0 * tau * jet.scal) -
                  0.5 * G00 * G00 * (jet.dscal_dtau + jet.scal / tau)) * g[0];
    double spatial = 0.0;
    for (int i = 0; i < jet.n; ++i) spatial += 0.5 * jet.grad_scal[i] * g[1 + i];
    out += G00 * (H(0, 0) + spatial);
    return out;
}

GeneratorCoeffs build_horizontal_generator(const HorizontalInputs& in, const MatrixXd& e) {
    const int n = in.n, r = in.r;
    const int nb = 1 + n;
    const int m = nb + r * r;
    GeneratorCoeffs gc;
    gc.coord_names = frame_names(n, r);
    gc.a = MatrixXd::Zero(m, m);
    gc.b = VectorXd::Zero(m);

    gc.a.topLeftCorner(nb, nb) = in.A;
    gc.b.head(nb) = in.c;

    // frame velocity map: de^k_b = C[(k,b), i] dz^i with C = -Gamma e
    MatrixXd C = MatrixXd::Zero(r * r, nb);
    for (int k = 0; k < r; ++k)
        for (int b = 0; b < r; ++b)
            for (int i = 0; i < nb; ++i) {
                double s = 0.0;
                for (int j = 0; j < r; ++j) s += in.gamma(k, i, j) * e(j, b);
                C(k * r + b, i) = -s;
            }

    gc.a.topRightCorner(nb, r * r) = in.A * C.transpose();
    gc.a.bottomLeftCorner(r * r, nb) = C * in.A;
    gc.a.bottomRightCorner(r * r, r * r) = C * in.A * C.transpose();

    // drift on the frame block:
    //   -c^i Gamma^k_{ij} e^j_b - A^{il} (d_l Gamma^k_{ij}) e^j_b
    //   + A^{il} Gamma^k_{ip} Gamma^p_{lq} e^q_b
    for (int k = 0; k < r; ++k)
        for (int b = 0; b < r; ++b) {
            double drift = 0.0;
            for (int i = 0; i < nb; ++i) drift += in.c[i] * C(k * r + b, i);
            for (int i = 0; i < nb; ++i)
                for (int l = 0; l < nb; ++l) {
                    const double w = in.A(i, l);
                    if (w == 0.0) continue;
                    double dG = 0.0, GG = 0.0;
                    for (int j = 0; j < r; ++j) dG += in.dgamma(l, k, i, j) * e(j, b);
                    for (int p = 0; p < r; ++p)
                        for (int q = 0; q < r; ++q)
                            GG += in.gamma(k, i, p) * in.gamma(p, l, q) * e(q, b);
                    drift += w * (GG - dG);
                }
            gc.b[nb + k * r + b] = drift;
        }
    return gc;
}

GeneratorCoeffs frame_generator(const MetricJet& jet, double tau, double N, const MatrixXd& e) {
    const int n = jet.n;
    const PerelmanCoefficients pc = perelman_coefficients(jet, tau, N);
    const GeneratorCoeffs base = scalar_generator(jet, tau, N);

    HorizontalInputs in;
    in.n = n;
    in.r = n + 1;
    in.A = base.a;
    in.c = base.b;
    in.gamma = pc.block_gamma;
    in.dgamma = perelman_block_gamma_derivs(jet, tau, N);
    return build_horizontal_generator(in, e);
}

double frame_generator_apply(const TestFunction& psi, const FrameState& state,
                             const MetricJet& jet, double N) {
    if (psi.layout().r != jet.n + 1)
        throw std::invalid_argument("frame_generator_apply: psi must read the block frame");
    const GeneratorCoeffs gc = frame_generator(jet, state.base.tau, N, state.e);
    return apply_generator(gc, psi, pack_state(state.base, state.e));
}

double fibre_projection_correction(const TestFunction& psi, const FrameState& state,
                                   const MetricJet& jet, double N) {
    const int n = jet.n;
    const int r = n + 1;
    const double tau = state.base.tau;
    const double G00 = 1.0 / (N / (2.0 * tau) + jet.scal);
    const VectorXd v = pack_state(state.base, state.e);
    const VectorXd g = psi.grad(v);
    const MatrixXd H = psi.hess(v);
    const int e0 = 1 + n;  // slot of e^0_0; e^0_b = e0 + b

    double out = 0.0;
    const double drift = -G00 * N / (4.0 * tau * tau);
    for (int b = 0; b < r; ++b) out += drift * state.e(0, b) * g[e0 + b];

    const double c2 = G00 * G00 / (4.0 * tau * tau);
    const double c1 = G00 / (4.0 * tau * tau);
    for (int b = 0; b < r; ++b)
        for (int c = 0; c < r; ++c) {
            double gee = 0.0;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    gee += jet.g(i, j) * state.e(1 + i, b) * state.e(1 + j, c);
            const double coeff =
                c2 * ((b == c ? 1.0 : 0.0) - gee) - c1 * state.e(0, b) * state.e(0, c);
            out += coeff * H(e0 + b, e0 + c);
        }
    return out;
}

double projected_generator_exact_apply(const TestFunction& psi, const FrameState& state,
                                       const MetricJet& jet, double N) {
    return frame_generator_apply(psi, state, jet, N) +
           fibre_projection_correction(psi, state, jet, N);
}

namespace {

// Limit of the block Christoffel table: entries carrying a G^{00} factor
// vanish, Gamma^0_{00} -> -1/(2 tau).
Tensor3 limit_block_gamma(const MetricJet& jet, double tau) {
    const int n = jet.n;
    Tensor3 bg(n + 1, n + 1, n + 1);
    for (int k = 1; k <= n; ++k) {
        for (int i = 1; i <= n; ++i)
            for (int j = 1; j <= n; ++j) bg(k, i, j) = jet.gamma(k - 1, i - 1, j - 1);
        for (int i = 1; i <= n; ++i) {
            bg(k, i, 0) = jet.ric_mixed(k - 1, i - 1);
            bg(k, 0, i) = jet.ric_mixed(k - 1, i - 1);
        }
        bg(k, 0, 0) = -0.5 * jet.grad_scal[k - 1];
    }
    bg(0, 0, 0) = -1.0 / (2.0 * tau);
    return bg;
}

// Spatial-l derivatives of the limit table (the only slices the limit
// diffusion diag(0, g^{ij}) contracts).
Tensor4 limit_block_gamma_derivs(const MetricJet& jet) {
    const int n = jet.n;
    Tensor4 d(n + 1, n + 1, n + 1, n + 1);
    for (int l = 1; l <= n; ++l)
        for (int k = 1; k <= n; ++k) {
            for (int i = 1; i <= n; ++i) {
                for (int j = 1; j <= n; ++j)
                    d(l, k, i, j) = jet.dgamma(l - 1, k - 1, i - 1, j - 1);
                d(l, k, i, 0) = jet.dric_mixed_dx(l - 1, k - 1, i - 1);
                d(l, k, 0, i) = jet.dric_mixed_dx(l - 1, k - 1, i - 1);
            }
        }
    return d;
}

VectorXd limit_drift(const MetricJet& jet) {
    const int n = jet.n;
    VectorXd c = VectorXd::Zero(1 + n);
    c[0] = 1.0;
    for (int i = 0; i < n; ++i) {
        double tr = 0.0;
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) tr += jet.g_inv(j, k) * jet.gamma(i, j, k);
        c[1 + i] = -tr;
    }
    return c;
}

MatrixXd limit_diffusion(const MetricJet& jet) {
    const int n = jet.n;
    MatrixXd A = MatrixXd::Zero(1 + n, 1 + n);
    A.block(1, 1, n, n) = jet.g_inv;
    return A;
}

}  // namespace

GeneratorCoeffs limit_block_generator(const MetricJet& jet, double tau, const MatrixXd& e) {
    HorizontalInputs in;
    in.n = jet.n;
    in.r = jet.n + 1;
    in.A = limit_diffusion(jet);
    in.c = limit_drift(jet);
    in.gamma = limit_block_gamma(jet, tau);
    in.dgamma = limit_block_gamma_derivs(jet);
    return build_horizontal_generator(in, e);
}

AsymptoticApplied asymptotic_operators_apply(const TestFunction& psi, const FrameState& state,
                                             const MetricJet& jet, IndexConvention conv) {
    const int n = jet.n;
    const int r = n + 1;
    const double tau = state.base.tau;
    const VectorXd v = pack_state(state.base, state.e);

    // D: the all-spatial part of the limit operator plus the time-direction
    // horizontal terms (d_tau and the -e^j_b R^k_j vertical drift). Realized
    // by restricting the transport symbols to spatial rows/entries and
    // masking the distinguished frame column.
    HorizontalInputs din;
    din.n = n;
    din.r = r;
    din.A = limit_diffusion(jet);
    din.c = limit_drift(jet);
    din.gamma = Tensor3(r, 1 + n, r);
    for (int k = 1; k <= n; ++k) {
        for (int i = 1; i <= n; ++i)
            for (int j = 1; j <= n; ++j) din.gamma(k, i, j) = jet.gamma(k - 1, i - 1, j - 1);
        for (int j = 1; j <= n; ++j) din.gamma(k, 0, j) = jet.ric_mixed(k - 1, j - 1);
    }
    din.dgamma = Tensor4(1 + n, r, 1 + n, r);
    for (int l = 1; l <= n; ++l)
        for (int k = 1; k <= n; ++k)
            for (int i = 1; i <= n; ++i)
                for (int j = 1; j <= n; ++j)
                    din.dgamma(l, k, i, j) = jet.dgamma(l - 1, k - 1, i - 1, j - 1);
    MatrixXd e_masked = state.e;
    e_masked.col(0).setZero();

    AsymptoticApplied out;
    const GeneratorCoeffs d_op = build_horizontal_generator(din, e_masked);
    out.D = apply_generator(d_op, psi, v);

    // N: every remaining (zero-index) term of the limit operator.
    const GeneratorCoeffs full = limit_block_generator(jet, tau, state.e);
    out.N_op = apply_generator(full, psi, v) - out.D;
    if (conv == IndexConvention::SpatialOnly) {
        const VectorXd g = psi.grad(v);
        out.N_op -= (1.0 / (2.0 * tau)) * state.e(0, 0) * g[1 + n + 0 * r + 0];
    }
    return out;
}

MatrixXd concentration_B_matrix(const MetricJet& jet) {
    const int n = jet.n;
    MatrixXd B = -jet.ric_mixed;
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int i = 0; i < n; ++i)
                for (int l = 0; l < n; ++l) {
                    const double w = jet.g_inv(i, l);
                    if (w == 0.0) continue;
                    double t = -jet.dgamma(l, k, i, j);
                    for (int r = 0; r < n; ++r)
                        t += jet.gamma(r, i, l) * jet.gamma(k, r, j) +
                             jet.gamma(r, l, j) * jet.gamma(k, i, r);
                    s += w * t;
                }
            B(k, j) += s;
        }
    return B;
}

VectorXd concentration_B_vector(const MetricJet& jet) {
    const int n = jet.n;
    VectorXd B = 0.5 * jet.grad_scal;
    for (int k = 0; k < n; ++k) {
        double s = 0.0;
        for (int i = 0; i < n; ++i)
            for (int l = 0; l < n; ++l) {
                const double w = jet.g_inv(i, l);
                if (w == 0.0) continue;
                double t = -jet.dric_mixed_dx(l, k, i);
                for (int r = 0; r < n; ++r)
                    t += jet.gamma(r, i, l) * jet.ric_mixed(k, r) +
                         jet.ric_mixed(r, l) * jet.gamma(k, i, r);
                s += w * t;
            }
        B[k] += s;
    }
    return B;
}

MatrixXd iota_embed(const MatrixXd& u) {
    const int n = static_cast<int>(u.rows());
    MatrixXd e = MatrixXd::Zero(n + 1, n + 1);
    e(0, 0) = 1.0;
    e.block(1, 1, n, n) = u;
    return e;
}

double horizontal_heat_apply(const TestFunction& psi, const ChartPoint& base_charted,
                             const MatrixXd& u, const MetricJet& jet) {
    const int n = jet.n;
    HorizontalInputs in;
    in.n = n;
    in.r = n;
    in.A = limit_diffusion(jet);
    in.c = limit_drift(jet);
    in.gamma = Tensor3(n, 1 + n, n);
    for (int k = 0; k < n; ++k) {
        for (int j = 0; j < n; ++j) {
            in.gamma(k, 0, j) = jet.ric_mixed(k, j);  // D_tau vertical part
            for (int i = 1; i <= n; ++i) in.gamma(k, i, j) = jet.gamma(k, i - 1, j);
        }
    }
    in.dgamma = Tensor4(1 + n, n, 1 + n, n);
    for (int l = 1; l <= n; ++l)
        for (int k = 0; k < n; ++k) {
            for (int j = 0; j < n; ++j) {
                in.dgamma(l, k, 0, j) = jet.dric_mixed_dx(l - 1, k, j);
                for (int i = 1; i <= n; ++i)
                    in.dgamma(l, k, i, j) = jet.dgamma(l - 1, k, i - 1, j);
            }
        }
    const GeneratorCoeffs rf = build_horizontal_generator(in, u);

    // psi reads the spatial block of the embedded frame; remap its
    // derivatives onto the n-frame layout.
    const VectorXd v_block = pack_state(base_charted, iota_embed(u));
    const VectorXd g = psi.grad(v_block);
    const MatrixXd H = psi.hess(v_block);
    const int r_block = n + 1;
    std::vector<int> map(1 + n + n * n);
    for (int p = 0; p <= n; ++p) map[p] = p;
    for (int i = 0; i < n; ++i)
        for (int b = 0; b < n; ++b)
            map[1 + n + i * n + b] = 1 + n + (i + 1) * r_block + (b + 1);

    const int m = 1 + n + n * n;
    double out = 0.0;
    for (int p = 0; p < m; ++p) out += rf.b[p] * g[map[p]];
    for (int p = 0; p < m; ++p)
        for (int q = 0; q < m; ++q) out += rf.a(p, q) * H(map[p], map[q]);
    return out;
}

}  // namespace riccilab
