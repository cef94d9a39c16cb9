#include <doctest.h>

#include <cmath>
#include <vector>

#include "riccilab/generators.hpp"
#include "riccilab/rng.hpp"

using namespace riccilab;

namespace {

const FlowConfig kTorus = FlowConfig::torus_default();
const FlowConfig kSphere = FlowConfig::sphere_default();

ChartPoint make_pt(const FlowConfig& cfg, double a, double b, double tau) {
    ChartPoint p;
    p.chart = cfg.background == BackgroundKind::FlatTorus ? ChartId::TorusPeriodic
                                                          : ChartId::SphereNorth;
    p.coords = Eigen::Vector2d(a, b);
    p.tau = tau;
    return p;
}

MatrixXd random_frame(Xoshiro256pp& rng, int r) {
    MatrixXd e(r, r);
    do {
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < r; ++j)
                e(i, j) = (i == j ? 1.0 : 0.0) + 0.6 * (rng.next_uniform() - 0.5);
    } while (std::abs(e.determinant()) < 0.1);
    return e;
}

FrameState random_state(Xoshiro256pp& rng, const FlowConfig& cfg) {
    FrameState st;
    st.base = make_pt(cfg, 0.8 * (rng.next_uniform() - 0.5), 0.8 * (rng.next_uniform() - 0.5),
                      cfg.delta + (cfg.T - cfg.delta) * (0.2 + 0.6 * rng.next_uniform()));
    st.e = random_frame(rng, cfg.n + 1);
    return st;
}

// Full-chart horizontal Laplacian applied to the pullback of psi, by
// finite-difference composition of the canonical horizontal fields. Ground
// truth for the projected generator at validator scale.
double full_chart_horizontal_laplacian(const FullChartMetric& fcm, const TestFunction& psi,
                                       const VectorXd& q, const MatrixXd& U, double eps,
                                       double h_gamma) {
    const int D = fcm.dim();
    const int n = fcm.config.n;
    auto metric = [&fcm](const VectorXd& qq) { return fcm.eval(qq); };

    // H_A Psi at an arbitrary full state (exact psi derivatives, FD symbols)
    auto HA_psi = [&](const VectorXd& qq, const MatrixXd& UU, int A) {
        const Tensor3 gam = fd_christoffels(metric, qq, h_gamma);
        ChartPoint base;
        base.tau = qq[0];
        base.coords = qq.segment(1, n);
        base.chart = fcm.config.background == BackgroundKind::FlatTorus ? ChartId::TorusPeriodic
                                                                        : ChartId::SphereNorth;
        const VectorXd v = pack_state(base, UU.topLeftCorner(n + 1, n + 1));
        const VectorXd g = psi.grad(v);
        double out = 0.0;
        for (int I = 0; I <= n; ++I) out += UU(I, A) * g[I];  // base partials
        for (int I = 0; I < D; ++I) {
            if (UU(I, A) == 0.0) continue;
            for (int K = 0; K <= n; ++K)
                for (int B = 0; B <= n; ++B) {
                    const double gpsi = g[1 + n + K * (n + 1) + B];
                    if (gpsi == 0.0) continue;
                    double GJ = 0.0;
                    for (int J = 0; J < D; ++J) GJ += gam(K, I, J) * UU(J, B);
                    out -= UU(I, A) * GJ * gpsi;
                }
        }
        return out;
    };

    const Tensor3 gam0 = fd_christoffels(metric, q, h_gamma);
    double lap = 0.0;
    for (int A = 0; A < D; ++A) {
        // flow of H_A: dq = U e_A, dU^K_B = -Gamma^K_{IJ} U^I_A U^J_B
        VectorXd dq(D);
        for (int I = 0; I < D; ++I) dq[I] = U(I, A);
        MatrixXd dU(D, D);
        for (int K = 0; K < D; ++K)
            for (int B = 0; B < D; ++B) {
                double s = 0.0;
                for (int I = 0; I < D; ++I)
                    for (int J = 0; J < D; ++J) s += gam0(K, I, J) * U(I, A) * U(J, B);
                dU(K, B) = -s;
            }
        const double plus = HA_psi(q + eps * dq, U + eps * dU, A);
        const double minus = HA_psi(q - eps * dq, U - eps * dU, A);
        lap += (plus - minus) / (2.0 * eps);
    }
    return lap;
}

}  // namespace

TEST_CASE("battery derivatives match finite differences") {
    Xoshiro256pp rng(2024);
    auto check_battery = [&](const std::vector<TestFunction>& fns) {
        for (const TestFunction& f : fns) {
            VectorXd v(f.layout().dim());
            for (int i = 0; i < v.size(); ++i) v[i] = 0.4 + rng.next_uniform();
            CHECK(derivative_check(f, v) < 1e-6);
        }
    };
    check_battery(scalar_battery(2));
    check_battery(frame_battery(2));
    check_battery(spatial_block_battery(2));
}

TEST_CASE("scalar generator on the torus: tabulated values") {
    const ChartPoint p = make_pt(kTorus, 0.3, 0.4, 1.0);
    const MetricJet j = metric_jet(kTorus, p);
    const GeneratorCoeffs gc = scalar_generator(j, 1.0, 100.0);
    CHECK(gc.a(0, 0) == doctest::Approx(0.02).epsilon(1e-15));
    CHECK(gc.a(1, 1) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(gc.b[0] == doctest::Approx(1.01).epsilon(1e-15));
    CHECK(gc.b[1] == 0.0);
    CHECK(gc.b[2] == 0.0);
    // N -> infinity: a_tautau -> 0, b_tau -> 1
    const GeneratorCoeffs big = scalar_generator(j, 1.0, 1e9);
    CHECK(big.a(0, 0) < 1e-8);
    CHECK(big.b[0] == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("scalar generator on the sphere: b_tau closed form") {
    const FlowConfig cfg = FlowConfig::sphere(1.0, 0.38, 0.02);  // calT = 0.4
    const ChartPoint p = make_pt(cfg, 0.1, -0.2, 0.2);
    const MetricJet j = metric_jet(cfg, p);
    const GeneratorCoeffs gc = scalar_generator(j, 0.2, 1000.0);
    const double G00 = 3.0 / 7510.0;
    const double R = 10.0 / 3.0;
    const double expected = 1.0 + G00 / 0.4 - 0.5 * G00 * G00 * (-R * R + R / 0.2);
    CHECK(gc.b[0] == doctest::Approx(expected).epsilon(1e-14));
    CHECK(gc.a(0, 0) == doctest::Approx(G00).epsilon(1e-14));
}

TEST_CASE("scalar defect: display identity, torus value, 1/N halving") {
    Xoshiro256pp rng(7);
    const auto battery = scalar_battery(2);

    // torus f = tau at tau=1, N=100: defect is exactly 1/N
    {
        const ChartPoint p = make_pt(kTorus, 0.2, 0.5, 1.0);
        const MetricJet j = metric_jet(kTorus, p);
        const VectorXd v = (Eigen::Vector3d() << 1.0, 0.2, 0.5).finished();
        CHECK(scalar_defect(battery[0], j, 1.0, 100.0, v) ==
              doctest::Approx(0.01).epsilon(1e-12));
        // f independent of tau: defect vanishes on the torus
        CHECK(scalar_defect(battery[2], j, 1.0, 100.0, v) == doctest::Approx(0.0));
    }

    for (const FlowConfig& cfg : {kTorus, kSphere}) {
        for (int rep = 0; rep < 20; ++rep) {
            const ChartPoint p = make_pt(cfg, rng.next_uniform() - 0.5, rng.next_uniform() - 0.5,
                                         cfg.delta + 0.5 * (cfg.T - cfg.delta));
            ChartPoint used;
            const MetricJet j = metric_jet_charted(cfg, p, used);
            VectorXd v(3);
            v << used.tau, used.coords[0], used.coords[1];
            for (const TestFunction& f : battery) {
                // algebraic identity: operator difference equals the display
                const double d1 = scalar_defect(f, j, used.tau, 1000.0, v);
                const double d2 = scalar_defect_display(f, j, used.tau, 1000.0, v);
                CHECK(std::abs(d1 - d2) < 1e-12);
                // 1/N halving
                const double dN = scalar_defect_display(f, j, used.tau, 1000.0, v);
                const double d2N = scalar_defect_display(f, j, used.tau, 2000.0, v);
                if (std::abs(dN) > 1e-10) {
                    const double ratio = std::abs(d2N) / std::abs(dN);
                    CHECK(ratio > 0.4);
                    CHECK(ratio < 0.6);
                }
            }
        }
    }
}

TEST_CASE("frame generator: annihilates constants, diffusion part is PSD") {
    Xoshiro256pp rng(11);
    CoordLayout lay{2, 3};
    const TestFunction constant(lay, "one", {TestFunction::Term{1.0, {}}});

    for (const FlowConfig& cfg : {kTorus, kSphere}) {
        for (int rep = 0; rep < 50; ++rep) {
            const FrameState st0 = random_state(rng, cfg);
            ChartPoint used;
            const MetricJet j = metric_jet_charted(cfg, st0.base, used);
            const FrameState st{used, st0.e};
            const double N = 500.0;
            CHECK(frame_generator_apply(constant, st, j, N) == doctest::Approx(0.0));

            const GeneratorCoeffs fg = frame_generator(j, used.tau, N, st.e);
            CHECK((fg.a - fg.a.transpose()).norm() < 1e-12);
            Eigen::SelfAdjointEigenSolver<MatrixXd> es(fg.a);
            CHECK(es.eigenvalues().minCoeff() > -1e-12);
        }
    }
}

TEST_CASE("base-only functions: frame generator equals scalar generator") {
    Xoshiro256pp rng(13);
    CoordLayout lay{2, 3};
    using TF = TestFunction;
    // the scalar battery re-expressed in the frame layout (same base slots)
    std::vector<TestFunction> promoted;
    promoted.emplace_back(lay, "tau", std::vector<TF::Term>{{1.0, {TF::pw(0, 1)}}});
    promoted.emplace_back(lay, "tau^2", std::vector<TF::Term>{{1.0, {TF::pw(0, 2)}}});
    promoted.emplace_back(lay, "cos(x1)", std::vector<TF::Term>{{1.0, {TF::cosf(1)}}});
    promoted.emplace_back(lay, "tau*cos(x1)cos(x2)",
                          std::vector<TF::Term>{{1.0, {TF::pw(0, 1), TF::cosf(1), TF::cosf(2)}}});
    std::vector<TestFunction> scalars;
    CoordLayout slay{2, 0};
    scalars.emplace_back(slay, "tau", std::vector<TF::Term>{{1.0, {TF::pw(0, 1)}}});
    scalars.emplace_back(slay, "tau^2", std::vector<TF::Term>{{1.0, {TF::pw(0, 2)}}});
    scalars.emplace_back(slay, "cos(x1)", std::vector<TF::Term>{{1.0, {TF::cosf(1)}}});
    scalars.emplace_back(slay, "tau*cos(x1)cos(x2)",
                         std::vector<TF::Term>{{1.0, {TF::pw(0, 1), TF::cosf(1), TF::cosf(2)}}});

    for (const FlowConfig& cfg : {kTorus, kSphere}) {
        for (int rep = 0; rep < 50; ++rep) {
            const FrameState st = random_state(rng, cfg);
            ChartPoint used;
            const MetricJet j = metric_jet_charted(cfg, st.base, used);
            const FrameState stc{used, st.e};
            VectorXd vbase(3);
            vbase << used.tau, used.coords[0], used.coords[1];
            const GeneratorCoeffs sg = scalar_generator(j, used.tau, 700.0);
            for (size_t q = 0; q < scalars.size(); ++q) {
                const double a = frame_generator_apply(promoted[q], stc, j, 700.0);
                const double b = apply_generator(sg, scalars[q], vbase);
                CHECK(std::abs(a - b) < 1e-12 * std::max(1.0, std::abs(b)));
            }
        }
    }
}

TEST_CASE("torus drift of e00 is exactly 1/(2 tau): the 1/N pieces cancel") {
    // b_e(0,0) = b_tau/(2 tau) - G00 d_tau Gamma^0_00 + G00 (Gamma^0_00)^2
    //          = (1+1/N)/(2 tau) - 1/(N tau) + 1/(2 N tau) = 1/(2 tau)
    CoordLayout lay{2, 3};
    const TestFunction e00(lay, "e00", {TestFunction::Term{1.0, {TestFunction::pw(lay.e(0, 0), 1)}}});
    for (double tau : {1.0, 0.5, 0.25}) {
        ChartPoint p = make_pt(kTorus, 0.1, 0.2, tau);
        FrameState st{p, MatrixXd::Identity(3, 3)};
        CHECK(frame_generator_apply(e00, st, metric_jet(kTorus, p), 100.0) ==
              doctest::Approx(1.0 / (2.0 * tau)).epsilon(1e-13));
    }
}

TEST_CASE("D+N equals the limit operator; D matches D_tau + Delta_H; N vanishes on i(O)") {
    Xoshiro256pp rng(17);
    const auto full_batt = frame_battery(2);
    const auto spatial_batt = spatial_block_battery(2);

    for (const FlowConfig& cfg : {kTorus, kSphere}) {
        for (int rep = 0; rep < 30; ++rep) {
            const FrameState st0 = random_state(rng, cfg);
            ChartPoint used;
            const MetricJet j = metric_jet_charted(cfg, st0.base, used);
            const FrameState st{used, st0.e};
            const VectorXd v = pack_state(used, st.e);
            const GeneratorCoeffs lim = limit_block_generator(j, used.tau, st.e);
            for (const TestFunction& psi : full_batt) {
                const AsymptoticApplied dn =
                    asymptotic_operators_apply(psi, st, j, IndexConvention::FullBlock);
                const double whole = apply_generator(lim, psi, v);
                CHECK(std::abs(dn.D + dn.N_op - whole) <
                      1e-11 * std::max(1.0, std::abs(whole)));
            }

            // on the embedded orthonormal bundle with spatial-block functions
            const MatrixXd u = random_frame(rng, 2);
            const FrameState emb{used, iota_embed(u)};
            for (const TestFunction& psi : spatial_batt) {
                const AsymptoticApplied dn =
                    asymptotic_operators_apply(psi, emb, j, IndexConvention::FullBlock);
                CHECK(std::abs(dn.N_op) < 1e-12);
                const AsymptoticApplied dn2 =
                    asymptotic_operators_apply(psi, emb, j, IndexConvention::SpatialOnly);
                CHECK(std::abs(dn2.N_op) < 1e-12);
                const double rf = horizontal_heat_apply(psi, used, u, j);
                CHECK(std::abs(dn.D - rf) < 1e-10 * std::max(1.0, std::abs(rf)));
            }
        }
    }
}

TEST_CASE("L^N - (D+N) decays like 1/N under the full-block convention") {
    Xoshiro256pp rng(19);
    const auto batt = frame_battery(2);
    for (const FlowConfig& cfg : {kTorus, kSphere}) {
        std::vector<double> defects_full, defects_spatial;
        const std::vector<double> Ns = {1000.0, 2000.0, 4000.0, 8000.0};
        std::vector<FrameState> states;
        std::vector<MetricJet> jets;
        for (int rep = 0; rep < 12; ++rep) {
            FrameState st = random_state(rng, cfg);
            ChartPoint used;
            jets.push_back(metric_jet_charted(cfg, st.base, used));
            st.base = used;
            states.push_back(st);
        }
        bool spatial_only_fails = false;
        for (double N : Ns) {
            double worst_full = 0.0, worst_spatial = 0.0;
            for (size_t r = 0; r < states.size(); ++r) {
                for (const TestFunction& psi : batt) {
                    const double ln = frame_generator_apply(psi, states[r], jets[r], N);
                    const AsymptoticApplied a =
                        asymptotic_operators_apply(psi, states[r], jets[r],
                                                   IndexConvention::FullBlock);
                    const AsymptoticApplied b =
                        asymptotic_operators_apply(psi, states[r], jets[r],
                                                   IndexConvention::SpatialOnly);
                    worst_full = std::max(worst_full, std::abs(ln - a.D - a.N_op));
                    worst_spatial = std::max(worst_spatial, std::abs(ln - b.D - b.N_op));
                }
            }
            defects_full.push_back(worst_full);
            defects_spatial.push_back(worst_spatial);
        }
        // halving when N doubles
        for (size_t i = 0; i + 1 < defects_full.size(); ++i) {
            const double ratio = defects_full[i + 1] / defects_full[i];
            CHECK(ratio > 0.35);
            CHECK(ratio < 0.65);
        }
        // the spatial-only convention leaves an O(1) residue on e00-reading psi
        spatial_only_fails = defects_spatial.back() > 10.0 * defects_full.back();
        CHECK(spatial_only_fails);
    }
}

TEST_CASE("concentration B-fields agree with the operator on linear functions") {
    Xoshiro256pp rng(23);
    CoordLayout lay{2, 3};
    for (const FlowConfig& cfg : {kTorus, kSphere}) {
        for (int rep = 0; rep < 10; ++rep) {
            const FrameState st0 = random_state(rng, cfg);
            ChartPoint used;
            const MetricJet j = metric_jet_charted(cfg, st0.base, used);
            const FrameState st{used, st0.e};
            const MatrixXd B = concentration_B_matrix(j);
            const VectorXd Bv = concentration_B_vector(j);
            for (int k = 1; k <= 2; ++k) {
                // psi = e^k_0 (linear, column 0)
                TestFunction psi(lay, "ek0",
                                 {TestFunction::Term{1.0, {TestFunction::pw(lay.e(k, 0), 1)}}});
                const AsymptoticApplied dn =
                    asymptotic_operators_apply(psi, st, j, IndexConvention::FullBlock);
                double expect = st.e(0, 0) * Bv[k - 1];
                for (int jj = 1; jj <= 2; ++jj) expect += st.e(jj, 0) * B(k - 1, jj - 1);
                CHECK(dn.N_op == doctest::Approx(expect).epsilon(1e-10));
            }
            // psi = e^0_b: N reads only the (1/2tau) term
            for (int b = 0; b <= 2; ++b) {
                TestFunction psi(lay, "e0b",
                                 {TestFunction::Term{1.0, {TestFunction::pw(lay.e(0, b), 1)}}});
                const AsymptoticApplied dn =
                    asymptotic_operators_apply(psi, st, j, IndexConvention::FullBlock);
                CHECK(dn.N_op ==
                      doctest::Approx(st.e(0, b) / (2.0 * used.tau)).epsilon(1e-10));
            }
        }
    }
}

TEST_CASE("small-N full-chart horizontal Laplacian matches L^N") {
    Xoshiro256pp rng(29);
    const auto batt = frame_battery(2);
    for (const FlowConfig& cfg : {kTorus, kSphere}) {
        for (int Ns : {2, 4}) {
            const FullChartMetric fcm = full_chart_metric(cfg, Ns);
            const int D = fcm.dim();
            VectorXd q = VectorXd::Zero(D);
            q[0] = cfg.background == BackgroundKind::FlatTorus ? 0.5 : 0.22;
            q[1] = 0.3;
            q[2] = -0.25;
            for (int a = 0; a < Ns; ++a) q[3 + a] = 0.15 + 0.1 * a;

            // G-orthonormal frame, randomly rotated
            const MatrixXd G = fcm.eval(q);
            Eigen::LLT<MatrixXd> llt(G);
            MatrixXd U = MatrixXd(llt.matrixL()).transpose().inverse();
            MatrixXd Rnd(D, D);
            for (int i = 0; i < D; ++i)
                for (int jj = 0; jj < D; ++jj) Rnd(i, jj) = rng.next_gaussian();
            const MatrixXd Q = Eigen::HouseholderQR<MatrixXd>(Rnd).householderQ();
            U = U * Q;

            ChartPoint base;
            base.tau = q[0];
            base.coords = q.segment(1, 2);
            base.chart = cfg.background == BackgroundKind::FlatTorus ? ChartId::TorusPeriodic
                                                                     : ChartId::SphereNorth;
            const MetricJet jet = metric_jet(cfg, base);
            const FrameState st{base, U.topLeftCorner(3, 3)};

            // exact projection matches the oracle on the full battery
            for (const TestFunction& psi : batt) {
                const double oracle =
                    full_chart_horizontal_laplacian(fcm, psi, q, U, 1e-4, 1e-5);
                const double exact = projected_generator_exact_apply(psi, st, jet, Ns);
                CHECK(std::abs(oracle - exact) < 1e-4 * std::max(1.0, std::abs(exact)));
            }
            // the transport operator agrees wherever psi ignores the e^0 row
            for (const TestFunction& psi : spatial_block_battery(2)) {
                const double oracle =
                    full_chart_horizontal_laplacian(fcm, psi, q, U, 1e-4, 1e-5);
                const double ln = frame_generator_apply(psi, st, jet, Ns);
                CHECK(std::abs(oracle - ln) < 1e-4 * std::max(1.0, std::abs(ln)));
                CHECK(fibre_projection_correction(psi, st, jet, Ns) == 0.0);
            }
        }
    }
}
