#include "riccilab/experiments.hpp"

#include <chrono>
#include <cmath>

#include "riccilab/generators.hpp"
#include "riccilab/rng.hpp"

namespace riccilab {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string bg_name(const FlowConfig& c) { return to_string(c.background); }

ResultRow row(const std::string& scenario, const FlowConfig& cfg, const std::string& obs,
              double estimate, double stderr_ = 0.0) {
    ResultRow r;
    r.scenario = scenario;
    r.background = bg_name(cfg);
    r.observable = obs;
    r.estimate = estimate;
    r.stderr_ = stderr_;
    return r;
}

CheckResult check(const std::string& name, bool pass, double value, double threshold,
                  std::string note = "") {
    return CheckResult{name, pass, value, threshold, std::move(note)};
}

FrameState random_frame_state(Xoshiro256pp& rng, const FlowConfig& cfg) {
    FrameState st;
    st.base.tau = cfg.delta + (cfg.T - cfg.delta) * (0.25 + 0.5 * rng.next_uniform());
    st.base.chart = cfg.background == BackgroundKind::FlatTorus ? ChartId::TorusPeriodic
                                                                : ChartId::SphereNorth;
    st.base.coords = Eigen::Vector2d(0.8 * (rng.next_uniform() - 0.5),
                                     0.8 * (rng.next_uniform() - 0.5));
    MatrixXd e(cfg.n + 1, cfg.n + 1);
    do {
        for (int i = 0; i <= cfg.n; ++i)
            for (int j = 0; j <= cfg.n; ++j)
                e(i, j) = (i == j ? 1.0 : 0.0) + 0.6 * (rng.next_uniform() - 0.5);
    } while (std::abs(e.determinant()) < 0.1);
    st.e = e;
    return st;
}

}  // namespace

ChartPoint default_start(const FlowConfig& config) {
    ChartPoint p;
    p.tau = config.delta;
    if (config.background == BackgroundKind::FlatTorus) {
        p.chart = ChartId::TorusPeriodic;
        p.coords = VectorXd::Constant(config.n, 0.9);
    } else {
        p.chart = ChartId::SphereNorth;
        p.coords = VectorXd::Zero(config.n);
        p.coords[0] = 0.25;
        p.coords[1] = -0.15;
    }
    return p;
}

// ---------------------------------------------------------------- ricci-validate

ExperimentReport ricci_validate_report(const FlowConfig& config) {
    const auto t0 = Clock::now();
    ExperimentReport rep;
    rep.scenario = "ricci-validate";
    rep.background = bg_name(config);

    const auto samples = sample_grid(config, 100, 2e-4);
    const double resid = ricci_flow_residual(config, samples, 1e-4);
    ResultRow r = row(rep.scenario, config, "flow_residual", resid);
    r.oracle = 0.0;
    r.abs_err = resid;
    r.pass = resid <= 1e-6;
    rep.rows.push_back(r);
    rep.checks.push_back(check("flow_residual<=1e-6", resid <= 1e-6, resid, 1e-6));

    if (config.background == BackgroundKind::ShrinkingSphere) {
        const double bad = ricci_flow_residual(config, samples, 1e-4, -1.0);
        ResultRow rb = row(rep.scenario, config, "flow_residual_wrong_sign", bad);
        rb.pass = bad > 1e-2;
        rep.rows.push_back(rb);
        rep.checks.push_back(check("negative_control>1e-2", bad > 1e-2, bad, 1e-2,
                                   "sign-flipped Ricci term must be detected"));
    }

    // identity-matrix and contracted-curvature identities across the grid
    double worst_inv = 0.0, worst_contract = 0.0, worst_gamma_fd = 0.0;
    for (const ChartPoint& p : samples) {
        ChartPoint used;
        const MetricJet j = metric_jet_charted(config, p, used);
        worst_inv = std::max(worst_inv,
                             (j.g * j.g_inv - MatrixXd::Identity(j.n, j.n)).norm());
        double contracted = 0.0;
        for (int a = 0; a < j.n; ++a)
            for (int b = 0; b < j.n; ++b) contracted += j.g_inv(a, b) * j.ric(b, a);
        worst_contract = std::max(worst_contract, std::abs(contracted - j.scal));
        auto metric_at = [&](const VectorXd& xi) {
            ChartPoint q = used;
            q.coords = xi;
            return metric_jet(config, q).g;
        };
        const Tensor3 fd = fd_christoffels(metric_at, used.coords, 1e-4);
        for (int k = 0; k < j.n; ++k)
            for (int a = 0; a < j.n; ++a)
                for (int b = 0; b < j.n; ++b)
                    worst_gamma_fd = std::max(
                        worst_gamma_fd,
                        std::abs(fd(k, a, b) - j.gamma(k, a, b)) /
                            std::max(1.0, std::abs(j.gamma(k, a, b))));
    }
    rep.checks.push_back(check("g*ginv=I<=1e-12", worst_inv <= 1e-12, worst_inv, 1e-12));
    rep.checks.push_back(
        check("contracted_ricci<=1e-12", worst_contract <= 1e-12, worst_contract, 1e-12));
    rep.checks.push_back(
        check("christoffel_fd<=1e-6", worst_gamma_fd <= 1e-6, worst_gamma_fd, 1e-6));

    rep.runtime_s = seconds_since(t0);
    rep.checks.push_back(check("runtime<10s", rep.runtime_s < 10.0, rep.runtime_s, 10.0));
    return rep;
}

// ---------------------------------------------------------------- curvature-check

ExperimentReport curvature_check_report(const FlowConfig& config) {
    const auto t0 = Clock::now();
    ExperimentReport rep;
    rep.scenario = "curvature-check";
    rep.background = bg_name(config);
    const bool sphere = config.background == BackgroundKind::ShrinkingSphere;
    const int n_points = 20;

    const std::vector<int> Ns = {2, 4, 8};
    // per point, per N: sup_ric_frame
    std::vector<std::vector<double>> sup(n_points, std::vector<double>(Ns.size(), 0.0));
    double worst_table = 0.0;
    for (size_t ni = 0; ni < Ns.size(); ++ni) {
        const FullChartMetric fcm = full_chart_metric(config, Ns[ni]);
        const int D = fcm.dim();
        for (int pt = 0; pt < n_points; ++pt) {
            VectorXd q = VectorXd::Zero(D);
            const double frac = (pt + 0.5) / n_points;
            // keep tau away from the lower edge where FD noise in the lapse
            // derivative dominates the 1/N curvature signal
            const double lo = config.delta + 0.3 * (config.T - config.delta);
            q[0] = lo + frac * (config.T - config.delta) * 0.65;
            q[1] = 0.35 * std::cos(2.4 * pt);
            q[2] = 0.35 * std::sin(2.4 * pt);
            for (int a = 0; a < Ns[ni]; ++a)
                q[3 + a] = 0.3 * std::cos(1.3 * pt + 0.7 * a);
            const CurvatureFd fd = curvature_fd(fcm, q, 1e-5);
            sup[pt][ni] = fd.sup_ric_frame;
            const Tensor3 ref = full_chart_christoffels_reference(fcm, q);
            for (int K = 0; K < D; ++K)
                for (int I = 0; I < D; ++I)
                    for (int J = 0; J < D; ++J)
                        worst_table = std::max(
                            worst_table, std::abs(fd.christoffels(K, I, J) - ref(K, I, J)) /
                                             std::max(1.0, std::abs(ref(K, I, J))));
        }
    }
    rep.checks.push_back(
        check("christoffel_table<=1e-5", worst_table <= 1e-5, worst_table, 1e-5,
              "finite differences vs the tabulated symbols, zero entries included"));

    if (sphere) {
        double worst_ratio = 0.0;
        for (int pt = 0; pt < n_points; ++pt) {
            double lo = 1e300, hi = 0.0;
            for (size_t ni = 0; ni < Ns.size(); ++ni) {
                const double scaled = Ns[ni] * sup[pt][ni];
                lo = std::min(lo, scaled);
                hi = std::max(hi, scaled);
            }
            worst_ratio = std::max(worst_ratio, hi / lo);
            ResultRow r = row(rep.scenario, config, "N_times_sup_ric_pt" + std::to_string(pt),
                              hi, 0.0);
            r.pass = hi / lo < 2.0;
            rep.rows.push_back(r);
        }
        rep.checks.push_back(check("ricci_scaling_ratio<2", worst_ratio < 2.0, worst_ratio, 2.0,
                                   "N * sup|Ric| across N in {2,4,8}"));
    } else {
        // the flat-torus product metric is exactly Ricci-flat; report the
        // measured sup as a near-zero control
        double worst = 0.0;
        for (int pt = 0; pt < n_points; ++pt)
            for (size_t ni = 0; ni < Ns.size(); ++ni) worst = std::max(worst, sup[pt][ni]);
        ResultRow r = row(rep.scenario, config, "sup_ric_frame_flat", worst);
        r.oracle = 0.0;
        r.abs_err = worst;
        r.pass = worst < 1e-4;
        rep.rows.push_back(r);
        rep.checks.push_back(check("flat_product_ricci_flat<=1e-4", worst < 1e-4, worst, 1e-4));
    }

    ResultRow rt = row(rep.scenario, config, "christoffel_table_max_rel_err", worst_table);
    rt.pass = worst_table <= 1e-5;
    rep.rows.push_back(rt);
    rep.runtime_s = seconds_since(t0);
    rep.checks.push_back(check("runtime<60s", rep.runtime_s < 60.0, rep.runtime_s, 60.0));
    return rep;
}

// ---------------------------------------------------------------- operator-check

ExperimentReport operator_check_report(const FlowConfig& config) {
    const auto t0 = Clock::now();
    ExperimentReport rep;
    rep.scenario = "operator-check";
    rep.background = bg_name(config);
    Xoshiro256pp rng(515151);

    // scalar defect: display identity and 1/N halving over the battery
    const auto scalars = scalar_battery(config.n);
    double worst_identity = 0.0;
    std::vector<double> Ns = {1000.0, 2000.0, 4000.0, 8000.0};
    std::vector<double> max_defect(Ns.size(), 0.0);
    for (int rep_i = 0; rep_i < 20; ++rep_i) {
        ChartPoint p;
        p.tau = config.delta + (config.T - config.delta) * (0.2 + 0.6 * rng.next_uniform());
        p.chart = config.background == BackgroundKind::FlatTorus ? ChartId::TorusPeriodic
                                                                 : ChartId::SphereNorth;
        p.coords = Eigen::Vector2d(rng.next_uniform() - 0.5, rng.next_uniform() - 0.5);
        ChartPoint used;
        const MetricJet j = metric_jet_charted(config, p, used);
        VectorXd v(3);
        v << used.tau, used.coords[0], used.coords[1];
        for (const TestFunction& f : scalars) {
            for (size_t ni = 0; ni < Ns.size(); ++ni) {
                const double d_op = scalar_defect(f, j, used.tau, Ns[ni], v);
                const double d_disp = scalar_defect_display(f, j, used.tau, Ns[ni], v);
                worst_identity = std::max(worst_identity, std::abs(d_op - d_disp));
                max_defect[ni] = std::max(max_defect[ni], std::abs(d_disp));
            }
        }
    }
    rep.checks.push_back(check("step2_defect_identity<=1e-12", worst_identity <= 1e-12,
                               worst_identity, 1e-12,
                               "operator-minus-heat equals the closed-form display"));
    bool halves = true;
    for (size_t ni = 0; ni + 1 < Ns.size(); ++ni) {
        const double ratio = max_defect[ni + 1] / max_defect[ni];
        halves = halves && ratio > 0.4 && ratio < 0.6;
        ResultRow r = row(rep.scenario, config, "step2_defect_N" + std::to_string((int)Ns[ni]),
                          max_defect[ni]);
        rep.rows.push_back(r);
    }
    rep.checks.push_back(check("step2_defect_halving", halves,
                               max_defect[1] / max_defect[0], 0.5,
                               "|defect| halves within [0.4,0.6] when N doubles"));

    // frame operator decomposition: defect slope under both conventions
    const auto batt = frame_battery(config.n);
    std::vector<FrameState> states;
    std::vector<MetricJet> jets;
    for (int k = 0; k < 12; ++k) {
        FrameState st = random_frame_state(rng, config);
        ChartPoint used;
        jets.push_back(metric_jet_charted(config, st.base, used));
        st.base = used;
        states.push_back(st);
    }
    std::vector<double> defect_full(Ns.size(), 0.0), defect_spatial(Ns.size(), 0.0);
    for (size_t ni = 0; ni < Ns.size(); ++ni) {
        for (size_t si = 0; si < states.size(); ++si)
            for (const TestFunction& psi : batt) {
                const double ln = frame_generator_apply(psi, states[si], jets[si], Ns[ni]);
                const auto a = asymptotic_operators_apply(psi, states[si], jets[si],
                                                          IndexConvention::FullBlock);
                const auto b = asymptotic_operators_apply(psi, states[si], jets[si],
                                                          IndexConvention::SpatialOnly);
                defect_full[ni] = std::max(defect_full[ni], std::abs(ln - a.D - a.N_op));
                defect_spatial[ni] = std::max(defect_spatial[ni], std::abs(ln - b.D - b.N_op));
            }
        ResultRow r = row(rep.scenario, config,
                          "decomposition_defect_N" + std::to_string((int)Ns[ni]),
                          defect_full[ni]);
        rep.rows.push_back(r);
    }
    const auto [slope, slope_se] = loglog_slope(Ns, defect_full);
    rep.slopes["decomposition_defect"] = slope;
    rep.slopes["decomposition_defect_stderr"] = slope_se;
    rep.checks.push_back(check("decomposition_slope=-1+-0.3",
                               slope > -1.3 && slope < -0.7, slope, -1.0));
    const bool full_selected = defect_full.back() < defect_spatial.back();
    rep.checks.push_back(check("convention_selected=full_block", full_selected,
                               defect_spatial.back() / defect_full.back(), 1.0,
                               "full-block column range matches the L^N oracle"));

    // identities on the embedded orthonormal bundle
    const auto spatial_batt = spatial_block_battery(config.n);
    double worst_D = 0.0, worst_N = 0.0;
    for (int k = 0; k < 20; ++k) {
        ChartPoint p;
        p.tau = config.delta + (config.T - config.delta) * (0.2 + 0.6 * rng.next_uniform());
        p.chart = config.background == BackgroundKind::FlatTorus ? ChartId::TorusPeriodic
                                                                 : ChartId::SphereNorth;
        p.coords = Eigen::Vector2d(rng.next_uniform() - 0.5, rng.next_uniform() - 0.5);
        ChartPoint used;
        const MetricJet j = metric_jet_charted(config, p, used);
        MatrixXd u(2, 2);
        do {
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b)
                    u(a, b) = (a == b ? 1.0 : 0.0) + 0.5 * (rng.next_uniform() - 0.5);
        } while (std::abs(u.determinant()) < 0.1);
        const FrameState emb{used, iota_embed(u)};
        for (const TestFunction& psi : spatial_batt) {
            const auto dn = asymptotic_operators_apply(psi, emb, j, IndexConvention::FullBlock);
            const double rf = horizontal_heat_apply(psi, used, u, j);
            worst_D = std::max(worst_D, std::abs(dn.D - rf));
            worst_N = std::max(worst_N, std::abs(dn.N_op));
        }
    }
    rep.checks.push_back(check("D=Dtau+DeltaH<=1e-10", worst_D <= 1e-10, worst_D, 1e-10));
    rep.checks.push_back(check("N=0_on_iO<=1e-12", worst_N <= 1e-12, worst_N, 1e-12));

    rep.runtime_s = seconds_since(t0);
    return rep;
}

// ---------------------------------------------------------------- time-marginal

ExperimentReport time_marginal_experiment(const FlowConfig& config, const ChartPoint& start_x,
                                          const std::vector<double>& s_list,
                                          const std::vector<double>& N_grid, const McParams& mc) {
    const auto t0 = Clock::now();
    ExperimentReport rep;
    rep.scenario = "scalar-convergence";
    rep.background = bg_name(config);
    const bool torus = config.background == BackgroundKind::FlatTorus;
    const double tau0 = start_x.tau;
    const int k_marks = static_cast<int>(s_list.size());

    std::vector<std::vector<double>> var_per_N(N_grid.size());
    bool mean_ok = true, var_ok = true, sphere_mean_ok = true;
    for (size_t ni = 0; ni < N_grid.size(); ++ni) {
        const double N = N_grid[ni];
        SimJob job;
        job.config = config;
        job.kind = ProcessKind::Projected;
        job.N = N;
        job.start = start_x;
        job.S = s_list.back();
        job.h = mc.h;
        job.marks = s_list;
        job.n_paths = mc.n_paths;
        job.rng = mc.rng;
        job.workers = mc.workers;
        std::vector<double> payload;
        run_paths(job, k_marks, [k_marks](int, const std::vector<MarkState>& m, double* out) {
            for (int q = 0; q < k_marks; ++q) out[q] = m[q].tau;
        }, payload);

        for (int q = 0; q < k_marks; ++q) {
            const double s = s_list[q];
            const McEstimate tau_est = mc_estimate(payload, k_marks, q);
            const VarianceEstimate var_est = mc_variance(payload, k_marks, q);
            const double t_mean = config.calT - tau_est.mean;

            ResultRow rm = row(rep.scenario, config, "E_t", t_mean, tau_est.stderr_);
            rm.N = N;
            rm.s = s;
            rm.n_paths = mc.n_paths;
            rm.step = mc.h;
            ResultRow rv = row(rep.scenario, config, "Var_t", var_est.var, var_est.stderr_);
            rv.N = N;
            rv.s = s;
            rv.n_paths = mc.n_paths;
            rv.step = mc.h;

            if (torus) {
                const double mean_oracle = config.calT - tau0 - (1.0 + 1.0 / N) * s;
                const double var_oracle =
                    (4.0 / N) * (tau0 * s + (1.0 + 1.0 / N) * s * s / 2.0);
                rm.oracle = mean_oracle;
                rm.abs_err = std::abs(t_mean - mean_oracle);
                rm.pass = *rm.abs_err <= 3.0 * tau_est.stderr_;
                rv.oracle = var_oracle;
                rv.abs_err = std::abs(var_est.var - var_oracle);
                rv.pass = *rv.abs_err <= 3.0 * var_est.stderr_ + 2e-5;
                mean_ok = mean_ok && *rm.pass;
                var_ok = var_ok && *rv.pass;
            } else {
                rm.oracle = config.T - s;
                rm.abs_err = std::abs(t_mean - (config.T - s));
                const double tol = 0.01 * s + 3.0 * tau_est.stderr_;
                rm.pass = *rm.abs_err <= tol;
                if (ni + 1 == N_grid.size()) sphere_mean_ok = sphere_mean_ok && *rm.pass;
            }
            rep.rows.push_back(rm);
            rep.rows.push_back(rv);
            var_per_N[ni].push_back(var_est.var);
        }
    }

    if (torus) {
        rep.checks.push_back(check("torus_mean_3sigma", mean_ok, mean_ok ? 1 : 0, 1,
                                   "E[t_s] matches T - (1+1/N)s within 3 stderr"));
        rep.checks.push_back(check("torus_var_3sigma", var_ok, var_ok ? 1 : 0, 1,
                                   "Var[t_s] matches (4/N)(tau0 s + (1+1/N)s^2/2)"));
    } else {
        rep.checks.push_back(check("sphere_mean_unit_speed", sphere_mean_ok,
                                   sphere_mean_ok ? 1 : 0, 1,
                                   "|E[t_s]-(T-s)| <= 0.01 s + 3 stderr at the largest N"));
        if (N_grid.size() >= 3) {
            std::vector<double> vars;
            for (size_t ni = 0; ni < N_grid.size(); ++ni)
                vars.push_back(var_per_N[ni][k_marks - 1]);
            const auto [slope, se] = loglog_slope(N_grid, vars);
            rep.slopes["var_t_slope"] = slope;
            rep.slopes["var_t_slope_stderr"] = se;
            rep.checks.push_back(check("var_slope_in_[-1.3,-0.7]",
                                       slope > -1.3 && slope < -0.7, slope, -1.0));
        }
    }
    rep.runtime_s = seconds_since(t0);
    return rep;
}

// ---------------------------------------------------------------- martingale residuals

ExperimentReport martingale_residual_experiment(const FlowConfig& config,
                                                const ChartPoint& start_x,
                                                const std::vector<double>& N_grid,
                                                const McParams& mc, bool omit_defect_control) {
    const auto t0 = Clock::now();
    ExperimentReport rep;
    rep.scenario = "scalar-convergence";
    rep.background = bg_name(config);
    if (config.background != BackgroundKind::FlatTorus)
        throw std::invalid_argument("martingale residuals run on the torus");

    // battery of test functions with exact derivatives
    CoordLayout lay{config.n, 0};
    using TF = TestFunction;
    std::vector<TestFunction> fs;
    fs.emplace_back(lay, "tau", std::vector<TF::Term>{{1.0, {TF::pw(0, 1)}}});
    fs.emplace_back(lay, "tau^2", std::vector<TF::Term>{{1.0, {TF::pw(0, 2)}}});
    fs.emplace_back(lay, "t", std::vector<TF::Term>{{config.calT, {}}, {-1.0, {TF::pw(0, 1)}}});
    fs.emplace_back(lay, "t^2",
                    std::vector<TF::Term>{{config.calT * config.calT, {}},
                                          {-2.0 * config.calT, {TF::pw(0, 1)}},
                                          {1.0, {TF::pw(0, 2)}}});
    fs.emplace_back(lay, "cos(x1)", std::vector<TF::Term>{{1.0, {TF::cosf(1)}}});
    fs.emplace_back(lay, "tau*cos(x1)", std::vector<TF::Term>{{1.0, {TF::pw(0, 1), TF::cosf(1)}}});
    fs.emplace_back(lay, "tau^2*sin(x2)+tau",
                    std::vector<TF::Term>{{1.0, {TF::pw(0, 2), TF::sinf(2)}},
                                          {1.0, {TF::pw(0, 1)}}});

    struct Window {
        double a, b;
        int L;  // 0 = full space, 1 = x1 ball at time a, 2 = tau below drifted start
        const char* name;
    };
    const std::vector<Window> windows = {
        {0.1, 0.4, 0, "full"},  {0.1, 0.4, 1, "x1ball"},  {0.1, 0.4, 2, "tau_low"},
        {0.2, 0.5, 0, "full"},  {0.2, 0.5, 1, "x1ball"},  {0.2, 0.5, 2, "tau_low"},
    };

    auto run_battery = [&](double N, CompensatorMode mode, int paths, int& n_within,
                           int& n_beyond, int& n_total, int& n_skipped) {
        SimJob job;
        job.config = config;
        job.kind = ProcessKind::Projected;
        job.N = N;
        job.start = start_x;
        job.S = 0.5;
        job.h = mc.h;
        job.marks = {0.1, 0.2, 0.4, 0.5};
        job.n_paths = paths;
        job.rng = mc.rng;
        job.workers = mc.workers;
        job.comp_mode = mode;
        for (const TestFunction& f : fs) job.integrands.push_back(&f);

        const int nf = static_cast<int>(fs.size());
        // payload per path: per f: Z at the 4 marks; plus x1, tau at marks 0.1 and 0.2
        const int len = nf * 4 + 4;
        std::vector<double> payload;
        run_paths(job, len, [nf](int, const std::vector<MarkState>& m, double* out) {
            for (int q = 0; q < nf; ++q)
                for (int w = 0; w < 4; ++w)
                    out[q * 4 + w] = m[w].f_values[q] - m[w].f_integrals[q];
            out[nf * 4 + 0] = m[0].x[0];
            out[nf * 4 + 1] = m[0].tau;
            out[nf * 4 + 2] = m[1].x[0];
            out[nf * 4 + 3] = m[1].tau;
        }, payload);

        const size_t P = payload.size() / len;
        for (const Window& w : windows) {
            const int ia = w.a < 0.15 ? 0 : 1;
            const int ib = w.b < 0.45 ? 2 : 3;
            for (int q = 0; q < nf; ++q) {
                std::vector<double> masked;
                masked.reserve(P);
                long hits = 0;
                for (size_t p = 0; p < P; ++p) {
                    double chi = 1.0;
                    if (w.L == 1) {
                        const double x1 = payload[p * len + nf * 4 + 2 * ia];
                        double d = std::fmod(std::abs(x1 - start_x.coords[0]), config.L);
                        d = std::min(d, config.L - d);
                        chi = d < config.L / 4.0 ? 1.0 : 0.0;
                    } else if (w.L == 2) {
                        const double tau_a = payload[p * len + nf * 4 + 2 * ia + 1];
                        chi = tau_a < config.delta + w.a ? 1.0 : 0.0;
                    }
                    hits += chi > 0.5 ? 1 : 0;
                    const double dz =
                        payload[p * len + q * 4 + ib] - payload[p * len + q * 4 + ia];
                    masked.push_back(dz * chi);
                }
                if (hits < static_cast<long>(P / 50)) {
                    ++n_skipped;
                    continue;
                }
                const McEstimate est = mc_estimate(masked, 1, 0);
                const double standardized =
                    est.stderr_ > 0 ? std::abs(est.mean) / est.stderr_ : 0.0;
                ++n_total;
                if (standardized <= 3.0) ++n_within;
                if (standardized > 3.0) ++n_beyond;
                ResultRow r = row(rep.scenario, config,
                                  std::string(mode == CompensatorMode::ExactGenerator
                                                  ? "mart_resid_"
                                                  : "mart_resid_nodefect_") +
                                      fs[q].name() + "_" + w.name + "_a" +
                                      std::to_string(w.a).substr(0, 3),
                                  est.mean, est.stderr_);
                r.N = N;
                r.s = w.b;
                r.n_paths = paths;
                r.step = mc.h;
                r.oracle = 0.0;
                r.abs_err = std::abs(est.mean);
                if (mode == CompensatorMode::ExactGenerator) r.pass = standardized <= 3.0;
                rep.rows.push_back(r);
            }
        }
    };

    int n_within = 0, n_beyond = 0, n_total = 0, n_skipped = 0;
    const double N_main = N_grid.back();
    run_battery(N_main, CompensatorMode::ExactGenerator, mc.n_paths, n_within, n_beyond,
                n_total, n_skipped);
    const double frac = n_total > 0 ? double(n_within) / n_total : 0.0;
    rep.checks.push_back(check("martingale_95pct_within_3sigma", frac >= 0.95, frac, 0.95,
                               std::to_string(n_within) + "/" + std::to_string(n_total) +
                                   " cases, " + std::to_string(n_skipped) + " skipped"));

    if (omit_defect_control) {
        int w2 = 0, b2 = 0, t2 = 0, sk2 = 0;
        const double N_control = N_grid.front();
        run_battery(N_control, CompensatorMode::HeatOnly,
                    std::max(mc.n_paths, 30000), w2, b2, t2, sk2);
        const double frac_beyond = t2 > 0 ? double(b2) / t2 : 0.0;
        rep.checks.push_back(check("omitted_defect_detected", frac_beyond >= 0.5, frac_beyond,
                                   0.5,
                                   "heat-only compensator at N=" +
                                       std::to_string((int)N_control) +
                                       " must standardize beyond 3"));
    }
    rep.runtime_s = seconds_since(t0);
    return rep;
}

// ---------------------------------------------------------------- cylinder convergence

namespace {

struct CylinderSpec {
    std::string name;
    int k = 1;
    double s1 = 0.25, s2 = 0.0;
    bool time_only = false;  // reads the clock coordinate only
    // torus: cos(x1) factors; sphere: ambient linear forms
    VectorXd v1, v2;
};

double cylinder_eval(const FlowConfig& config, const CylinderSpec& cs, const MarkState& m1,
                     const MarkState* m2) {
    if (cs.time_only) return std::cos(2.0 * (config.calT - m1.tau));
    if (config.background == BackgroundKind::FlatTorus) {
        const double f1 = std::cos(m1.x[0]);
        if (cs.k == 1) return f1;
        return f1 * std::cos(m2->x[0]);
    }
    const double f1 = cs.v1.dot(m1.x);
    if (cs.k == 1) return f1;
    return f1 * cs.v2.dot(m2->x);
}

}  // namespace

ExperimentReport cylinder_convergence_experiment(const FlowConfig& config,
                                                 const ChartPoint& start_x,
                                                 const std::vector<double>& N_grid,
                                                 const McParams& mc) {
    const auto t0 = Clock::now();
    ExperimentReport rep;
    rep.scenario = "cylinder-convergence";
    rep.background = bg_name(config);
    const bool torus = config.background == BackgroundKind::FlatTorus;

    std::vector<CylinderSpec> specs;
    {
        CylinderSpec one;
        one.name = "k1";
        one.k = 1;
        one.s1 = torus ? 0.25 : 0.15;
        one.v1 = Eigen::Vector3d(0.3, -1.1, 0.7);
        specs.push_back(one);
        CylinderSpec two;
        two.name = "k2";
        two.k = 2;
        two.s1 = torus ? 0.2 : 0.1;
        two.s2 = torus ? 0.45 : 0.25;
        two.v1 = Eigen::Vector3d(0.3, -1.1, 0.7);
        two.v2 = Eigen::Vector3d(-0.8, 0.2, 0.9);
        specs.push_back(two);
        // clock-only member: consistency with the time-marginal law
        CylinderSpec tm;
        tm.name = "k1_time";
        tm.k = 1;
        tm.s1 = one.s1;
        tm.time_only = true;
        specs.push_back(tm);
    }

    for (const CylinderSpec& cs : specs) {
        std::vector<double> marks = {cs.s1};
        if (cs.k == 2) marks.push_back(cs.s2);

        // reference law: parabolic MC at matched precision (and closed forms
        // where available)
        SimJob ref_job;
        ref_job.config = config;
        ref_job.kind = ProcessKind::Parabolic;
        ref_job.start = start_x;
        ref_job.S = marks.back();
        ref_job.h = mc.h;
        ref_job.marks = marks;
        ref_job.n_paths = mc.n_paths;
        ref_job.rng = mc.rng;
        ref_job.workers = mc.workers;
        std::vector<double> ref_payload;
        run_paths(ref_job, 1, [&](int, const std::vector<MarkState>& m, double* out) {
            out[0] = cylinder_eval(config, cs, m[0], cs.k == 2 ? &m[1] : nullptr);
        }, ref_payload);
        const McEstimate ref = mc_estimate(ref_payload, 1, 0);

        std::optional<double> closed;
        if (cs.time_only) {
            closed = std::cos(2.0 * (config.T - cs.s1));  // unit-speed clock
        } else if (torus) {
            const double x0 = start_x.coords[0];
            if (cs.k == 1) {
                closed = std::exp(-cs.s1) * std::cos(x0);
            } else {
                closed = std::exp(-(cs.s2 - cs.s1)) * 0.5 *
                         (1.0 + std::exp(-4.0 * cs.s1) * std::cos(2.0 * x0));
            }
        } else if (cs.k == 1) {
            const ChartPoint amb = chart_map(config, start_x, ChartId::SphereAmbient);
            const double cT = config.c0 - 2.0 * config.T;
            const double cs1 = config.c0 - 2.0 * (config.T - cs.s1);
            closed = (cT / cs1) * cs.v1.dot(amb.coords);
        }
        {
            ResultRow r = row(rep.scenario, config, "ref_parabolic_" + cs.name, ref.mean,
                              ref.stderr_);
            r.s = marks.back();
            r.n_paths = mc.n_paths;
            r.step = mc.h;
            if (closed) {
                r.oracle = *closed;
                r.abs_err = std::abs(ref.mean - *closed);
                r.pass = *r.abs_err <= 3.0 * ref.stderr_ + 2e-3;
                rep.checks.push_back(check("reference_matches_closed_form_" + cs.name, *r.pass,
                                           *r.abs_err, 3.0 * ref.stderr_ + 2e-3));
            }
            rep.rows.push_back(r);
        }
        const double ref_value = closed ? *closed : ref.mean;
        const double ref_se = closed ? 0.0 : ref.stderr_;

        std::vector<double> defects, bands;
        for (double N : N_grid) {
            SimJob job = ref_job;
            job.kind = ProcessKind::Projected;
            job.N = N;
            std::vector<double> payload;
            run_paths(job, 1, [&](int, const std::vector<MarkState>& m, double* out) {
                out[0] = cylinder_eval(config, cs, m[0], cs.k == 2 ? &m[1] : nullptr);
            }, payload);
            const McEstimate est = mc_estimate(payload, 1, 0);
            const double defect = std::abs(est.mean - ref_value);
            const double band = 3.0 * std::sqrt(est.stderr_ * est.stderr_ + ref_se * ref_se);
            defects.push_back(defect);
            bands.push_back(band);
            ResultRow r = row(rep.scenario, config, "cyl_" + cs.name, est.mean, est.stderr_);
            r.N = N;
            r.s = marks.back();
            r.n_paths = mc.n_paths;
            r.step = mc.h;
            r.oracle = ref_value;
            r.abs_err = defect;
            if (N == N_grid.back()) r.pass = defect <= band + 0.02;
            rep.rows.push_back(r);
        }
        rep.checks.push_back(check("cyl_defect_at_maxN_" + cs.name,
                                   defects.back() <= bands.back() + 0.02, defects.back(),
                                   bands.back() + 0.02));
        bool monotone = true;
        for (size_t i = 0; i + 1 < defects.size(); ++i)
            monotone = monotone && defects[i + 1] <= defects[i] + bands[i] + bands[i + 1];
        rep.checks.push_back(check("cyl_monotone_trend_" + cs.name, monotone,
                                   monotone ? 1.0 : 0.0, 1.0,
                                   "defect decreasing across the N grid up to stderr bands"));
    }
    rep.runtime_s = seconds_since(t0);
    return rep;
}

// ---------------------------------------------------------------- frame concentration

ExperimentReport frame_concentration_experiment(const FlowConfig& config,
                                                const ChartPoint& start_x,
                                                const std::vector<double>& N_grid,
                                                const McParams& mc) {
    const auto t0 = Clock::now();
    ExperimentReport rep;
    rep.scenario = "frame-convergence";
    rep.background = bg_name(config);
    const bool torus = config.background == BackgroundKind::FlatTorus;
    const double s_end = torus ? 0.3 : 0.25;

    const MatrixXd u0 = orthonormal_frame(config, start_x);

    // orthogonality defect against the deterministic-clock metric g_{T-s}
    // (the frame bundle the limit concentrates on); the own-tau defect is a
    // diagnostic column.
    auto run_defect = [&](double N, double h, const MatrixXd& u_start, int paths) {
        SimJob job;
        job.config = config;
        job.kind = ProcessKind::Projected;
        job.N = N;
        job.start = start_x;
        job.frame0 = iota_embed(u_start);
        job.S = s_end;
        job.h = h;
        job.marks = {s_end};
        job.n_paths = paths;
        job.rng = mc.rng;
        job.workers = mc.workers;
        std::vector<double> payload;
        run_paths(job, 5, [&](int, const std::vector<MarkState>& m, double* out) {
            const MarkState& st = m[0];
            ChartPoint p;
            p.tau = config.delta + st.s;  // deterministic clock
            p.chart = torus ? ChartId::TorusPeriodic : st.chart;
            p.coords = torus ? st.x : st.chart_coords;
            const MetricJet jet_det = metric_jet(config, p);
            const MatrixXd pi = st.frame.block(1, 1, config.n, config.n);
            out[0] = orthogonality_defect(pi, jet_det.g);
            ChartPoint own = p;
            own.tau = std::min(std::max(st.tau, config.delta), config.T);
            const MetricJet jet_own = metric_jet(config, own);
            out[1] = orthogonality_defect(pi, jet_own.g);
            out[2] = std::abs(st.frame(0, 1)) + std::abs(st.frame(0, 2));  // e^0_b leak
            out[3] = std::abs(st.frame(1, 0)) + std::abs(st.frame(2, 0));  // e^j_0 leak
            out[4] = st.frame(0, 0);
        }, payload);
        struct Out {
            McEstimate defect, own, leak_row, leak_col, e00;
        } o;
        o.defect = mc_estimate(payload, 5, 0);
        o.own = mc_estimate(payload, 5, 1);
        o.leak_row = mc_estimate(payload, 5, 2);
        o.leak_col = mc_estimate(payload, 5, 3);
        o.e00 = mc_estimate(payload, 5, 4);
        return o;
    };

    std::vector<double> corrected;
    for (double N : N_grid) {
        const auto at_h = run_defect(N, mc.h, u0, mc.n_paths);
        const auto at_h2 = run_defect(N, mc.h / 2.0, u0, mc.n_paths);
        const double corr = 2.0 * at_h2.defect.mean - at_h.defect.mean;
        corrected.push_back(corr);
        ResultRow r = row(rep.scenario, config, "orth_defect", at_h.defect.mean,
                          at_h.defect.stderr_);
        r.N = N;
        r.s = s_end;
        r.n_paths = mc.n_paths;
        r.step = mc.h;
        rep.rows.push_back(r);
        ResultRow rc = row(rep.scenario, config, "orth_defect_h_corrected", corr,
                           std::sqrt(4.0 * at_h2.defect.stderr_ * at_h2.defect.stderr_ +
                                     at_h.defect.stderr_ * at_h.defect.stderr_));
        rc.N = N;
        rc.s = s_end;
        rc.n_paths = mc.n_paths;
        rc.step = mc.h;
        rep.rows.push_back(rc);
        ResultRow ro = row(rep.scenario, config, "orth_defect_own_tau", at_h.own.mean,
                           at_h.own.stderr_);
        ro.N = N;
        ro.s = s_end;
        rep.rows.push_back(ro);
        ResultRow rl = row(rep.scenario, config, "offblock_leak_row0", at_h.leak_row.mean,
                           at_h.leak_row.stderr_);
        rl.N = N;
        rep.rows.push_back(rl);
        ResultRow rl2 = row(rep.scenario, config, "offblock_leak_col0", at_h.leak_col.mean,
                            at_h.leak_col.stderr_);
        rl2.N = N;
        rep.rows.push_back(rl2);
        ResultRow re = row(rep.scenario, config, "e00_trajectory", at_h.e00.mean,
                           at_h.e00.stderr_);
        re.N = N;
        re.s = s_end;
        re.oracle = std::sqrt((config.delta + s_end) / config.delta);
        re.abs_err = std::abs(at_h.e00.mean - *re.oracle);
        rep.rows.push_back(re);
    }

    // small-defect bound at the largest N
    const double d_large = corrected.back();
    rep.checks.push_back(check("defect_small_at_maxN", std::abs(d_large) <= 0.05,
                               std::abs(d_large), 0.05));

    // halving between the pinned N pair (1e3 -> 4e3) when both are in the grid
    double d1 = 0, d4 = 0;
    bool have_d1 = false, have_d4 = false;
    for (size_t i = 0; i < N_grid.size(); ++i) {
        if (std::abs(N_grid[i] - 1000.0) < 0.5) { d1 = corrected[i]; have_d1 = true; }
        if (std::abs(N_grid[i] - 4000.0) < 0.5) { d4 = corrected[i]; have_d4 = true; }
    }
    if (have_d1 && have_d4) {
        if (std::abs(d1) < 1e-8 && std::abs(d4) < 1e-8) {
            rep.checks.push_back(check("defect_halving_1e3_to_4e3", true, 0.0, 0.5,
                                       "defect identically zero (static flat block): "
                                       "maximal concentration"));
        } else {
            const double ratio = d4 / d1;
            rep.checks.push_back(check("defect_halving_1e3_to_4e3",
                                       ratio > 0.35 && ratio < 0.65, ratio, 0.5,
                                       "h-floor removed by Richardson extrapolation"));
        }
    }

    // e^0_0 diagnostic on the long-window torus against the transport ODE
    if (torus) {
        const FlowConfig longcfg = FlowConfig::torus(config.n, config.L, 4.5, 0.05);
        ChartPoint start = start_x;
        start.tau = 1.0;
        SimJob job;
        job.config = longcfg;
        job.kind = ProcessKind::Projected;
        job.N = N_grid.back();
        job.start = start;
        job.frame0 = MatrixXd::Identity(config.n + 1, config.n + 1);
        job.S = 3.0;
        job.h = mc.h;
        job.marks = {3.0};
        job.n_paths = mc.n_paths;
        job.rng = mc.rng;
        job.workers = mc.workers;
        std::vector<double> payload;
        run_paths(job, 1, [](int, const std::vector<MarkState>& m, double* out) {
            out[0] = m[0].frame(0, 0);
        }, payload);
        const McEstimate e00 = mc_estimate(payload, 1, 0);
        // deterministic oracle de/ds = e/(2 tau), dtau/ds = 1, step h/100
        double e_ref = 1.0, tau_ref = 1.0;
        const double hh = job.h / 100.0;
        const long K = std::lround(3.0 / hh);
        for (long k = 0; k < K; ++k) {
            const double k1 = e_ref / (2.0 * tau_ref);
            const double em = e_ref + 0.5 * hh * k1;
            e_ref += hh * em / (2.0 * (tau_ref + 0.5 * hh));
            tau_ref += hh;
        }
        ResultRow r = row(rep.scenario, config, "e00_diagnostic", e00.mean, e00.stderr_);
        r.N = job.N;
        r.s = 3.0;
        r.n_paths = mc.n_paths;
        r.step = mc.h;
        r.oracle = e_ref;
        r.abs_err = std::abs(e00.mean - e_ref);
        r.pass = *r.abs_err <= 3.0 * e00.stderr_ + 2.0 * mc.h;
        rep.rows.push_back(r);
        rep.checks.push_back(check("e00_sqrt_tau_law", *r.pass, *r.abs_err,
                                   3.0 * e00.stderr_ + 2.0 * mc.h,
                                   "sqrt(tau_s/tau_0) transport ODE oracle"));
    }

    // negative control: a start with defect 0.5 must not decay
    {
        MatrixXd bad = u0;
        bad.col(0) *= std::sqrt(1.5);  // u^T g u = diag(1.5, 1): defect 0.5
        const auto ctrl = run_defect(N_grid.back(), mc.h, bad, std::max(200, mc.n_paths / 8));
        ResultRow r = row(rep.scenario, config, "nonorthonormal_control_defect",
                          ctrl.defect.mean, ctrl.defect.stderr_);
        r.N = N_grid.back();
        r.s = s_end;
        rep.rows.push_back(r);
        rep.checks.push_back(check("negative_control_no_decay", ctrl.defect.mean > 0.3,
                                   ctrl.defect.mean, 0.3,
                                   "defect-0.5 start stays far from the orthonormal bundle"));
    }

    rep.runtime_s = seconds_since(t0);
    return rep;
}

// ---------------------------------------------------------------- gradient estimate

namespace {

// tangent chart Jacobian dX/dxi for the unit sphere (ambient from stereo)
MatrixXd stereo_jacobian(const VectorXd& xi, bool north) {
    const int n = static_cast<int>(xi.size());
    const double sigma = 1.0 + xi.squaredNorm();
    MatrixXd J(n + 1, n);
    for (int i = 0; i < n; ++i)
        for (int a = 0; a < n; ++a)
            J(i, a) = 2.0 * ((i == a ? 1.0 : 0.0) * sigma - 2.0 * xi[i] * xi[a]) /
                      (sigma * sigma);
    for (int a = 0; a < n; ++a) {
        const double dz = -4.0 * xi[a] / (sigma * sigma);
        J(n, a) = north ? dz : -dz;
    }
    return J;
}

}  // namespace

ExperimentReport gradient_estimate_experiment(const FlowConfig& config, const ChartPoint& start_x,
                                              const McParams& mc) {
    const auto t0 = Clock::now();
    ExperimentReport rep;
    rep.scenario = "gradient-estimate";
    rep.background = bg_name(config);
    const bool torus = config.background == BackgroundKind::FlatTorus;
    const double eps = 1e-3;

    struct Member {
        std::string name;
        int k;
        double s1, s2;
        VectorXd v1, v2;
    };
    std::vector<Member> members;
    if (torus) {
        members.push_back({"k1_cos", 1, 0.25, 0.0, VectorXd(), VectorXd()});
        members.push_back({"k2_coscos", 2, 0.2, 0.45, VectorXd(), VectorXd()});
    } else {
        members.push_back({"k1_linear", 1, 0.15, 0.0, Eigen::Vector3d(0.3, -1.1, 0.7),
                           Eigen::Vector3d()});
        members.push_back({"k2_linlin", 2, 0.1, 0.25, Eigen::Vector3d(0.3, -1.1, 0.7),
                           Eigen::Vector3d(-0.8, 0.2, 0.9)});
    }

    auto cyl_value = [&](const Member& mb, const MarkState& m1, const MarkState* m2) {
        if (torus) {
            const double f1 = std::cos(m1.x[0]);
            return mb.k == 1 ? f1 : f1 * std::cos(m2->x[0]);
        }
        const double f1 = mb.v1.dot(m1.x);
        return mb.k == 1 ? f1 : f1 * mb.v2.dot(m2->x);
    };

    auto member_payload = [&](const Member& mb, const ChartPoint& x0, int paths) {
        SimJob job;
        job.config = config;
        job.kind = ProcessKind::Parabolic;
        job.start = x0;
        job.S = mb.k == 1 ? mb.s1 : mb.s2;
        // torus parabolic increments are exact in law at any step, so a
        // coarse grid that divides the marks is enough there
        job.h = torus ? 0.025 : mc.h;
        std::vector<double> marks = {mb.s1};
        if (mb.k == 2) marks.push_back(mb.s2);
        job.marks = marks;
        job.n_paths = paths;
        job.rng = mc.rng;
        job.workers = mc.workers;
        std::vector<double> payload;
        run_paths(job, 1, [&](int, const std::vector<MarkState>& m, double* out) {
            out[0] = cyl_value(mb, m[0], mb.k == 2 ? &m[1] : nullptr);
        }, payload);
        return payload;
    };

    for (const Member& mb : members) {
        const int lhs_paths = torus ? (mb.k == 1 ? 3000000 : 400000) : 40000;
        const int rhs_paths = torus ? 1200000 : 100000;

        // LHS: central differences of the mean over common-random-number
        // pairs, so the difference variance is the paired one
        double lhs_sq = 0.0, lhs_var = 0.0;
        auto accumulate_dir = [&](const ChartPoint& xp, const ChartPoint& xm, double weight) {
            const auto pp = member_payload(mb, xp, lhs_paths);
            const auto pm = member_payload(mb, xm, lhs_paths);
            const McEstimate diff = mc_paired_diff(pp, pm, 1, 0);
            const double d = diff.mean / (2.0 * eps);
            const double se = diff.stderr_ / (2.0 * eps);
            lhs_sq += weight * d * d;
            lhs_var += weight * se * se;
        };
        if (torus) {
            for (int dir = 0; dir < config.n; ++dir) {
                ChartPoint xp = start_x, xm = start_x;
                xp.coords[dir] += eps;
                xm.coords[dir] -= eps;
                accumulate_dir(xp, xm, 1.0);
            }
        } else {
            const ChartPoint amb = chart_map(config, start_x, ChartId::SphereAmbient);
            // gbar-orthonormal tangent directions at x0; |grad|^2 in
            // g(T) = c(T) gbar carries the 1/c(T) weight
            const Eigen::Vector3d x0v = amb.coords;
            Eigen::Vector3d t1(1, 0, 0);
            t1 -= x0v.dot(t1) * x0v;
            t1.normalize();
            Eigen::Vector3d t2 = x0v.cross(t1).normalized();
            const double cT = config.c0 - 2.0 * config.T;
            for (const Eigen::Vector3d& dir : {t1, t2}) {
                ChartPoint xp = amb, xm = amb;
                xp.coords = (x0v + eps * dir).normalized();
                xm.coords = (x0v - eps * dir).normalized();
                accumulate_dir(xp, xm, 1.0 / cT);
            }
        }
        const double lhs = std::sqrt(lhs_sq);
        const double lhs_se = std::sqrt(lhs_var);  // conservative delta-method bound

        // RHS: parallel-gradient functional along reference paths
        SimJob job;
        job.config = config;
        job.kind = ProcessKind::Parabolic;
        job.start = start_x;
        job.S = mb.k == 1 ? mb.s1 : mb.s2;
        job.h = torus ? 0.025 : mc.h;
        std::vector<double> marks = {mb.s1};
        if (mb.k == 2) marks.push_back(mb.s2);
        job.marks = marks;
        job.n_paths = rhs_paths;
        job.rng = mc.rng;
        job.workers = mc.workers;
        const bool need_frames = mb.k == 2;
        if (need_frames) job.frame0 = orthonormal_frame(config, start_x);

        std::vector<double> payload;
        run_paths(job, 1, [&](int, const std::vector<MarkState>& m, double* out) {
            if (mb.k == 1) {
                if (torus) {
                    out[0] = std::abs(std::sin(m[0].x[0]));
                } else {
                    const double c = config.conformal_factor(m[0].tau);
                    const double vx = mb.v1.dot(m[0].x);
                    out[0] = std::sqrt(std::max(0.0, mb.v1.squaredNorm() - vx * vx) / c);
                }
                return;
            }
            // k = 2: | u_{s1}* grad^(1) f + u_{s2}* grad^(2) f |
            VectorXd comp = VectorXd::Zero(config.n);
            for (int leg = 0; leg < 2; ++leg) {
                const MarkState& st = m[leg];
                VectorXd grad_chart(config.n);
                if (torus) {
                    const double other = std::cos(m[1 - leg].x[0]);
                    grad_chart.setZero();
                    grad_chart[0] = -std::sin(st.x[0]) * other;
                } else {
                    const VectorXd& v = leg == 0 ? mb.v1 : mb.v2;
                    const double other =
                        (leg == 0 ? mb.v2.dot(m[1].x) : mb.v1.dot(m[0].x));
                    const MatrixXd J =
                        stereo_jacobian(st.chart_coords, st.chart == ChartId::SphereNorth);
                    grad_chart = other * (J.transpose() * v);
                }
                for (int a = 0; a < config.n; ++a)
                    for (int i = 0; i < config.n; ++i)
                        comp[a] += st.frame(i, a) * grad_chart[i];
            }
            out[0] = comp.norm();
        }, payload);
        const McEstimate rhs = mc_estimate(payload, 1, 0);

        ResultRow rl = row(rep.scenario, config, "grad_lhs_" + mb.name, lhs, lhs_se);
        rl.n_paths = lhs_paths;
        ResultRow rr = row(rep.scenario, config, "grad_rhs_" + mb.name, rhs.mean, rhs.stderr_);
        rr.n_paths = rhs_paths;

        const double band = 3.0 * std::sqrt(lhs_se * lhs_se + rhs.stderr_ * rhs.stderr_);
        const bool pass = lhs <= rhs.mean * 1.05 + band;
        rep.checks.push_back(check("grad_estimate_" + mb.name, pass, lhs,
                                   rhs.mean * 1.05 + band));
        if (rhs.mean > 1e-9 && rhs.stderr_ > 0.1 * rhs.mean)
            rep.checks.back().note = "inconclusive: RHS stderr exceeds 10% of RHS";

        if (torus && mb.k == 1) {
            const double lhs_oracle = std::exp(-mb.s1) * std::abs(std::sin(start_x.coords[0]));
            const double rhs_oracle = torus_mean_abs_sin(start_x.coords[0], mb.s1);
            rl.oracle = lhs_oracle;
            rl.abs_err = std::abs(lhs - lhs_oracle);
            rl.pass = *rl.abs_err <= 1e-3;
            rr.oracle = rhs_oracle;
            rr.abs_err = std::abs(rhs.mean - rhs_oracle);
            rr.pass = *rr.abs_err <= 1e-3;
            rep.checks.push_back(check("torus_k1_lhs_fourier_1e-3", *rl.pass, *rl.abs_err, 1e-3));
            rep.checks.push_back(check("torus_k1_rhs_fourier_1e-3", *rr.pass, *rr.abs_err, 1e-3));
        }
        rep.rows.push_back(rl);
        rep.rows.push_back(rr);
    }

    // finite-dimensional heat-flow gradient bound on sample points
    int pts_pass = 0, pts_total = 0;
    if (torus) {
        for (int i = 0; i < 25; ++i) {
            const double x = 0.1 + 0.23 * i;
            const double d = 0.05 + 0.012 * i;
            const double lhs = std::exp(-d) * std::abs(std::sin(x));
            const double rhs = torus_mean_abs_sin(x, d);
            ++pts_total;
            if (lhs <= rhs * (1.0 + 1e-9)) ++pts_pass;
        }
    } else {
        Xoshiro256pp rng(8080);
        const VectorXd v = Eigen::Vector3d(0.3, -1.1, 0.7);
        for (int i = 0; i < 25; ++i) {
            // sample a start point and an initial time s
            ChartPoint x0;
            x0.chart = ChartId::SphereNorth;
            x0.coords = Eigen::Vector2d(0.6 * (rng.next_uniform() - 0.5),
                                        0.6 * (rng.next_uniform() - 0.5));
            x0.tau = config.delta;
            const double s_from = 0.05 + 0.25 * rng.next_uniform();
            const double cT = config.c0 - 2.0 * config.T;
            const double cs = config.c0 - 2.0 * s_from;
            const ChartPoint amb = chart_map(config, x0, ChartId::SphereAmbient);
            const double vx = amb.coords.dot(v);
            // |grad H_{sT} f|_{g(T)} is closed form: (c_T/c_s)/sqrt(c_T) |grad f|_gbar
            const double lhs =
                (cT / cs) / std::sqrt(cT) * std::sqrt(std::max(0.0, v.squaredNorm() - vx * vx));
            // H_{sT} |grad f| by Feynman-Kac Monte Carlo
            const double dur = config.T - s_from;
            SimJob job;
            job.config = config;
            job.kind = ProcessKind::Parabolic;
            job.start = x0;
            job.S = std::round(dur / mc.h) * mc.h;
            job.h = mc.h;
            job.marks = {job.S};
            job.n_paths = 4000;
            job.rng = mc.rng;
            job.workers = mc.workers;
            std::vector<double> payload;
            run_paths(job, 1, [&](int, const std::vector<MarkState>& m, double* out) {
                const double vy = m[0].x.dot(v);
                out[0] = std::sqrt(std::max(0.0, v.squaredNorm() - vy * vy) / cs);
            }, payload);
            const McEstimate rhs = mc_estimate(payload, 1, 0);
            ++pts_total;
            if (lhs <= rhs.mean + 3.0 * rhs.stderr_ + 1e-3) ++pts_pass;
        }
    }
    rep.checks.push_back(check("heat_gradient_bound_points", pts_pass == pts_total,
                               pts_pass, pts_total,
                               "|grad H f| <= H |grad f| on the sample battery"));

    rep.runtime_s = seconds_since(t0);
    return rep;
}

}  // namespace riccilab
