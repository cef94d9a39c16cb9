#include <benchmark/benchmark.h>

#include "riccilab/reference.hpp"

using namespace riccilab;

namespace {

ChartPoint torus_start() {
    ChartPoint p;
    p.chart = ChartId::TorusPeriodic;
    p.coords = Eigen::Vector2d(1.0, 2.0);
    p.tau = 0.1;
    return p;
}

ChartPoint sphere_start() {
    ChartPoint p;
    p.chart = ChartId::SphereNorth;
    p.coords = Eigen::Vector2d(0.2, -0.1);
    p.tau = 0.02;
    return p;
}

SimJob base_job(const FlowConfig& cfg, const ChartPoint& start, bool frames) {
    SimJob job;
    job.config = cfg;
    job.kind = ProcessKind::Projected;
    job.N = 1000.0;
    job.start = start;
    job.S = 0.25;
    job.h = 1e-3;
    job.marks = {0.25};
    job.n_paths = 64;
    job.rng.master_seed = 7;
    job.workers = 1;
    if (frames)
        job.frame0 = MatrixXd::Identity(cfg.n + 1, cfg.n + 1);
    return job;
}

void run_job(benchmark::State& state, const SimJob& base) {
    SimJob job = base;
    std::vector<double> payload;
    for (auto _ : state) {
        run_paths(job, 1, [](int, const std::vector<MarkState>& m, double* out) {
            out[0] = m[0].tau;
        }, payload);
        benchmark::DoNotOptimize(payload.data());
        ++job.rng.master_seed;
    }
    state.SetItemsProcessed(state.iterations() * job.n_paths *
                            static_cast<long>(job.S / job.h));
}

void BM_TorusBaseSteps(benchmark::State& state) {
    run_job(state, base_job(FlowConfig::torus_default(), torus_start(), false));
}
BENCHMARK(BM_TorusBaseSteps);

void BM_TorusFrameSteps(benchmark::State& state) {
    run_job(state, base_job(FlowConfig::torus_default(), torus_start(), true));
}
BENCHMARK(BM_TorusFrameSteps);

void BM_SphereBaseSteps(benchmark::State& state) {
    run_job(state, base_job(FlowConfig::sphere_default(), sphere_start(), false));
}
BENCHMARK(BM_SphereBaseSteps);

void BM_SphereFrameSteps(benchmark::State& state) {
    run_job(state, base_job(FlowConfig::sphere_default(), sphere_start(), true));
}
BENCHMARK(BM_SphereFrameSteps);

void BM_SphereMetricJet(benchmark::State& state) {
    const FlowConfig cfg = FlowConfig::sphere_default();
    const ChartPoint p = sphere_start();
    for (auto _ : state) {
        const MetricJet j = metric_jet(cfg, p);
        benchmark::DoNotOptimize(j.scal);
    }
}
BENCHMARK(BM_SphereMetricJet);

void BM_FrameGeneratorApply(benchmark::State& state) {
    const FlowConfig cfg = FlowConfig::sphere_default();
    const ChartPoint p = sphere_start();
    const MetricJet jet = metric_jet(cfg, p);
    const auto batt = frame_battery(cfg.n);
    FrameState st{p, MatrixXd::Identity(3, 3)};
    st.e(0, 1) = 0.2;
    st.e(2, 1) = -0.1;
    for (auto _ : state) {
        double acc = 0.0;
        for (const TestFunction& psi : batt)
            acc += frame_generator_apply(psi, st, jet, 1000.0);
        benchmark::DoNotOptimize(acc);
    }
    state.SetItemsProcessed(state.iterations() * batt.size());
}
BENCHMARK(BM_FrameGeneratorApply);

void BM_FullChartRicciFd(benchmark::State& state) {
    const FullChartMetric fcm = full_chart_metric(FlowConfig::sphere_default(), 4);
    VectorXd q = VectorXd::Zero(fcm.dim());
    q[0] = 0.25;
    q[1] = 0.3;
    q[2] = -0.1;
    for (int a = 0; a < 4; ++a) q[3 + a] = 0.2 + 0.1 * a;
    for (auto _ : state) {
        const CurvatureFd fd = curvature_fd(fcm, q, 1e-5);
        benchmark::DoNotOptimize(fd.sup_ric_frame);
    }
}
BENCHMARK(BM_FullChartRicciFd);

}  // namespace

BENCHMARK_MAIN();
