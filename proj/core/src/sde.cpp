#include "riccilab/sde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace riccilab {

namespace {

constexpr double kSingularDet = 1e-8;
constexpr double kChartSwitchR2 = 2.25;  // switch stereographic charts beyond |xi|^2

long steps_for(double S, double h) {
    const long k = std::lround(S / h);
    if (std::abs(k * h - S) > 1e-9 * std::max(1.0, S))
        throw std::invalid_argument("sde: horizon must be a multiple of the step");
    return k;
}

std::vector<long> mark_steps(const std::vector<double>& marks, double h) {
    std::vector<long> idx;
    idx.reserve(marks.size());
    long prev = -1;
    for (double m : marks) {
        const long k = std::lround(m / h);
        if (std::abs(k * h - m) > 1e-9)
            throw std::invalid_argument("sde: mark times must be multiples of h");
        if (k <= prev) throw std::invalid_argument("sde: marks must be strictly increasing");
        idx.push_back(k);
        prev = k;
    }
    return idx;
}

// Transport matrix of the exact block connection: M(k,j) = Gamma^k_{ij} dz^i
// with dz = (dtau, dx).
void block_transport_matrix(const Tensor3& bg, double dtau, const VectorXd& dx, MatrixXd& M) {
    const int r = bg.dim0();
    for (int k = 0; k < r; ++k)
        for (int j = 0; j < r; ++j) {
            double s = bg(k, 0, j) * dtau;
            for (int i = 1; i < r; ++i) s += bg(k, i, j) * dx[i - 1];
            M(k, j) = s;
        }
}

// Parabolic transport matrix: M(k,j) = Gamma^k_{ij} dx^i + R^k_j ds.
void parabolic_transport_matrix(const MetricJet& jet, const VectorXd& dx, double ds, MatrixXd& M) {
    const int n = jet.n;
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j) {
            double s = jet.ric_mixed(k, j) * ds;
            for (int i = 0; i < n; ++i) s += jet.gamma(k, i, j) * dx[i];
            M(k, j) = s;
        }
}

void heun_update(MatrixXd& e, const MatrixXd& M0, const MatrixXd& M1, MatrixXd& tmp1,
                 MatrixXd& tmp2) {
    tmp1.noalias() = M0 * e;            // predictor increment
    tmp2 = e - tmp1;                    // predictor state
    e.noalias() -= 0.5 * (tmp1 + M1 * tmp2);
}

struct PathScratch {
    double tau = 0.0;
    VectorXd x;          // torus chart coords (wrapped) or sphere ambient
    VectorXd xi;         // sphere stereographic coords of the frame chart
    ChartId chart = ChartId::TorusPeriodic;
    MatrixXd e, M0, M1, tmp1, tmp2;
    VectorXd noise, dx;
    bool stopped = false;
    double stopped_at = std::numeric_limits<double>::quiet_NaN();
    bool singular = false;
    std::vector<double> integrals;
    std::vector<double> phi_prev;
};

class PathRunner {
public:
    explicit PathRunner(const SimJob& job) : job_(job) {
        const FlowConfig& cfg = job.config;
        n_ = cfg.n;
        sphere_ = cfg.background == BackgroundKind::ShrinkingSphere;
        frames_ = job.frame0.has_value();
        steps_ = steps_for(job.S, job.h);
        mark_idx_ = mark_steps(job.marks, job.h);
        if (job.kind == ProcessKind::Parabolic && job.S > cfg.T - cfg.delta + 1e-12)
            throw std::invalid_argument("sde: parabolic horizon exceeds T - delta");
        if (!job.integrands.empty() && sphere_)
            throw std::invalid_argument("sde: compensated integrands supported on the torus");
        if (frames_) {
            const int r_expect = job.kind == ProcessKind::Projected ? n_ + 1 : n_;
            if (job.frame0->rows() != r_expect || job.frame0->cols() != r_expect)
                throw std::invalid_argument("sde: frame0 has the wrong size");
            if (std::abs(job.frame0->determinant()) < kSingularDet)
                throw std::invalid_argument("sde: frame0 is singular");
        }
        if (sphere_) {
            if (job.start.chart == ChartId::TorusPeriodic)
                throw std::invalid_argument("sde: sphere start needs a sphere chart");
        } else if (job.start.chart != ChartId::TorusPeriodic) {
            throw std::invalid_argument("sde: torus start needs the periodic chart");
        }
        torus_jet_ = metric_jet(cfg, sphere_ ? job.start : ChartPoint{job.start.coords,
                                                                      job.start.tau,
                                                                      ChartId::TorusPeriodic});
    }

    int n_marks() const { return static_cast<int>(mark_idx_.size()); }

    void run(int path, std::vector<MarkState>& out) const {
        Xoshiro256pp rng = job_.rng.stream_for_path(path);
        PathScratch st;
        init_scratch(st);
        out.resize(mark_idx_.size());

        size_t next_mark = 0;
        if (!mark_idx_.empty() && mark_idx_[0] == 0) {
            record_mark(st, 0, out[0]);
            next_mark = 1;
        }
        for (long k = 0; k < steps_; ++k) {
            if (!st.stopped) advance(st, rng, (k + 1) * job_.h);
            if (next_mark < mark_idx_.size() && mark_idx_[next_mark] == k + 1) {
                record_mark(st, (k + 1) * job_.h, out[next_mark]);
                ++next_mark;
            }
        }
    }

private:
    void init_scratch(PathScratch& st) const {
        st.tau = job_.kind == ProcessKind::Parabolic ? job_.config.delta : job_.start.tau;
        if (sphere_) {
            ChartPoint amb = chart_map(job_.config, job_.start, ChartId::SphereAmbient);
            st.x = amb.coords;
            if (frames_) {
                st.chart = sphere_preferred_chart(st.x);
                st.xi = sphere_ambient_to_stereo(st.x, st.chart == ChartId::SphereNorth);
            }
        } else {
            st.x = torus_wrap(job_.start.coords, job_.config.L);
            st.chart = ChartId::TorusPeriodic;
        }
        if (frames_) {
            st.e = *job_.frame0;
            const int r = static_cast<int>(st.e.rows());
            st.M0.resize(r, r);
            st.M1.resize(r, r);
            st.tmp1.resize(r, r);
            st.tmp2.resize(r, r);
        }
        st.dx.resize(n_);
        st.integrals.assign(job_.integrands.size(), 0.0);
        st.phi_prev.resize(job_.integrands.size());
        for (size_t q = 0; q < job_.integrands.size(); ++q)
            st.phi_prev[q] = compensator(st, *job_.integrands[q]);
    }

    double g00_inv(double tau, double scal) const {
        return 1.0 / (job_.N / (2.0 * tau) + scal);
    }

    // Scalar curvature and its tau derivative without building a full jet
    // (both backgrounds are closed-form; the sphere is conformal with
    // c(tau) linear).
    void curvature_scalars(double tau, double& scal, double& dscal) const {
        if (!sphere_) {
            scal = 0.0;
            dscal = 0.0;
            return;
        }
        const double n = job_.config.n;
        const double c = job_.config.conformal_factor(tau);
        scal = n * (n - 1.0) / c;
        dscal = -2.0 * n * (n - 1.0) * (n - 1.0) / (c * c);
    }

    // Exact projected drift of the tau coordinate.
    double tau_drift(double tau, double scal, double dscal) const {
        const double G00 = g00_inv(tau, scal);
        return 1.0 + G00 / (2.0 * tau) - 0.5 * G00 * G00 * (dscal + scal / tau);
    }

    double compensator(const PathScratch& st, const TestFunction& f) const {
        VectorXd v(1 + n_);
        v[0] = st.tau;
        v.segment(1, n_) = st.x;
        const VectorXd g = f.grad(v);
        const MatrixXd H = f.hess(v);
        double out = g[0];  // d/dtau drift 1 (heat operator)
        for (int i = 0; i < n_; ++i) out += H(1 + i, 1 + i);  // flat Laplacian
        if (job_.kind == ProcessKind::Projected &&
            job_.comp_mode == CompensatorMode::ExactGenerator) {
            const double G00 = 2.0 * st.tau / job_.N;  // torus: R = 0
            out += (1.0 / job_.N) * g[0] + G00 * H(0, 0);
        }
        return out;
    }

    void advance(PathScratch& st, Xoshiro256pp& rng, double s_next) const {
        const double h = job_.h;
        const double sqh = std::sqrt(h);
        const double tau0 = st.tau;

        MetricJet jet0;
        if (sphere_ && frames_) {
            ChartPoint p;
            p.tau = tau0;
            p.coords = st.xi;
            p.chart = st.chart;
            jet0 = metric_jet(job_.config, p);
        }

        // --- tau update ---
        double tau1;
        if (job_.kind == ProcessKind::Parabolic) {
            tau1 = tau0 + h;
        } else {
            double scal, dscal;
            curvature_scalars(tau0, scal, dscal);
            const double drift = tau_drift(tau0, scal, dscal);
            const double sig = std::sqrt(2.0 * g00_inv(tau0, scal));
            tau1 = tau0 + drift * h + sig * sqh * rng.next_gaussian();
        }
        // The observation end tau = T is absorbing. The lower edge tau = delta
        // is where the motion is based; it is an artifact of the window
        // construction, so early noise dips are reflected instead of killed
        // (only relevant for small N; the reflection probability vanishes
        // with 1/N).
        bool stop_now = false;
        if (tau1 >= job_.config.T) {
            tau1 = job_.config.T;
            stop_now = true;
        } else if (tau1 < job_.config.delta) {
            tau1 = 2.0 * job_.config.delta - tau1;
        }

        // --- spatial update ---
        if (sphere_) {
            const double c = job_.config.conformal_factor(tau0);
            const double amp = std::sqrt(2.0 / c) * sqh;
            VectorXd xi_amb(3);
            for (int i = 0; i < 3; ++i) xi_amb[i] = rng.next_gaussian();
            const VectorXd tangential = xi_amb - st.x.dot(xi_amb) * st.x;
            VectorXd xnew = st.x + amp * tangential;
            xnew /= xnew.norm();
            if (frames_) {
                // chart increment and transport before committing the move
                const bool north = st.chart == ChartId::SphereNorth;
                const VectorXd xi_next = sphere_ambient_to_stereo(xnew, north);
                st.dx = xi_next - st.xi;
                ChartPoint pnext;
                pnext.tau = tau1;
                pnext.coords = xi_next;
                pnext.chart = st.chart;
                const MetricJet jet1 = metric_jet(job_.config, pnext);
                transport(st, jet0, jet1, tau1 - tau0);
                st.xi = xi_next;
                // switch charts when drifting toward the pole
                if (st.xi.squaredNorm() > kChartSwitchR2) switch_chart(st);
            }
            st.x = xnew;
        } else {
            for (int i = 0; i < n_; ++i) st.dx[i] = std::sqrt(2.0 * h) * rng.next_gaussian();
            if (frames_) {
                const MetricJet& j0 = torus_jet_;
                transport(st, j0, j0, tau1 - tau0);
            }
            VectorXd xnew = st.x + st.dx;
            st.x = torus_wrap(xnew, job_.config.L);
        }
        st.tau = tau1;

        if (frames_) {
            if (job_.reorthonormalize && job_.kind == ProcessKind::Parabolic)
                reorthonormalize(st);
            if (std::abs(st.e.determinant()) < kSingularDet) st.singular = true;
        }

        // --- compensated integrals (torus only) ---
        for (size_t q = 0; q < job_.integrands.size(); ++q) {
            const double phi1 = compensator(st, *job_.integrands[q]);
            st.integrals[q] += 0.5 * (st.phi_prev[q] + phi1) * job_.h;
            st.phi_prev[q] = phi1;
        }

        if (stop_now) {
            st.stopped = true;
            st.stopped_at = s_next;
        }
    }

    void transport_once(PathScratch& st, const MetricJet& jet_a, const MetricJet& jet_b,
                        double tau_a, double dtau, const VectorXd& dx) const {
        if (job_.kind == ProcessKind::Projected) {
            const PerelmanCoefficients pc0 = perelman_coefficients(jet_a, tau_a, job_.N);
            const PerelmanCoefficients pc1 =
                perelman_coefficients(jet_b, tau_a + dtau, job_.N);
            block_transport_matrix(pc0.block_gamma, dtau, dx, st.M0);
            block_transport_matrix(pc1.block_gamma, dtau, dx, st.M1);
        } else {
            parabolic_transport_matrix(jet_a, dx, dtau, st.M0);
            parabolic_transport_matrix(jet_b, dx, dtau, st.M1);
        }
        heun_update(st.e, st.M0, st.M1, st.tmp1, st.tmp2);
    }

    // Midpoint transport across the realized increment. Rare tail increments
    // are subdivided along the straight chart segment so the product integral
    // cannot blow up; typical increments stay single-step, keeping the
    // orthogonality error linear in h (the measurable floor the experiments
    // subtract by Richardson extrapolation).
    void transport(PathScratch& st, const MetricJet& jet0, const MetricJet& jet1,
                   double dtau) const {
        const double size = st.dx.norm() + std::abs(dtau);
        const int k = std::min(64, std::max(1, static_cast<int>(std::ceil(size / 0.35))));
        if (k == 1) {
            transport_once(st, jet0, jet1, st.tau, dtau, st.dx);
            return;
        }
        const VectorXd dsub = st.dx / k;
        const double dtsub = dtau / k;
        MetricJet jet_a = jet0;
        for (int j = 0; j < k; ++j) {
            MetricJet jet_b;
            if (j == k - 1) {
                jet_b = jet1;
            } else if (sphere_) {
                ChartPoint p;
                p.tau = st.tau + (j + 1) * dtsub;
                p.coords = st.xi + (j + 1) * dsub;
                p.chart = st.chart;
                jet_b = metric_jet(job_.config, p);
            } else {
                jet_b = torus_jet_;
            }
            transport_once(st, jet_a, jet_b, st.tau + j * dtsub, dtsub, dsub);
            jet_a = jet_b;
        }
    }

    void switch_chart(PathScratch& st) const {
        const MatrixXd J = sphere_chart_transition_jacobian(st.xi);
        if (job_.kind == ProcessKind::Projected) {
            st.e.block(1, 0, n_, n_ + 1) = J * st.e.block(1, 0, n_, n_ + 1);
        } else {
            st.e = J * st.e;
        }
        st.xi = st.xi / st.xi.squaredNorm();
        st.chart = st.chart == ChartId::SphereNorth ? ChartId::SphereSouth : ChartId::SphereNorth;
    }

    void reorthonormalize(PathScratch& st) const {
        ChartPoint p;
        p.tau = st.tau;
        p.coords = st.xi.size() ? st.xi : st.x;
        p.chart = sphere_ ? st.chart : ChartId::TorusPeriodic;
        const MetricJet jet = metric_jet(job_.config, p);
        const MatrixXd Q = st.e.transpose() * jet.g * st.e;
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(Q);
        const MatrixXd inv_sqrt = es.operatorInverseSqrt();
        st.e = st.e * inv_sqrt;
    }

    void record_mark(const PathScratch& st, double s, MarkState& m) const {
        m.s = s;
        m.tau = st.tau;
        m.x = st.x;
        m.chart = st.chart;
        if (sphere_ && frames_) m.chart_coords = st.xi;
        if (frames_) m.frame = st.e;
        m.stopped = st.stopped;
        m.stopped_at = st.stopped_at;
        m.singular = st.singular;
        m.f_values.resize(job_.integrands.size());
        m.f_integrals = st.integrals;
        if (!job_.integrands.empty()) {
            VectorXd v(1 + n_);
            v[0] = st.tau;
            v.segment(1, n_) = st.x;
            for (size_t q = 0; q < job_.integrands.size(); ++q)
                m.f_values[q] = job_.integrands[q]->eval(v);
        }
    }

    const SimJob& job_;
    int n_ = 0;
    bool sphere_ = false;
    bool frames_ = false;
    long steps_ = 0;
    std::vector<long> mark_idx_;
    MetricJet torus_jet_;
};

void parallel_over_paths(int n_paths, int workers, const std::function<void(int, int)>& block_fn) {
    int w = workers > 0 ? workers
                        : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    w = std::min(w, std::max(1, n_paths));
    if (w == 1) {
        block_fn(0, n_paths);
        return;
    }
    std::vector<std::thread> threads;
    threads.reserve(w);
    const int chunk = (n_paths + w - 1) / w;
    for (int t = 0; t < w; ++t) {
        const int lo = t * chunk;
        const int hi = std::min(n_paths, lo + chunk);
        if (lo >= hi) break;
        threads.emplace_back(block_fn, lo, hi);
    }
    for (auto& th : threads) th.join();
}

}  // namespace

void run_paths(const SimJob& job, int payload_len, const PathPayloadFn& fn,
               std::vector<double>& payloads) {
    const PathRunner runner(job);
    payloads.assign(static_cast<size_t>(job.n_paths) * payload_len, 0.0);
    parallel_over_paths(job.n_paths, job.workers, [&](int lo, int hi) {
        std::vector<MarkState> marks;
        for (int p = lo; p < hi; ++p) {
            runner.run(p, marks);
            fn(p, marks, payloads.data() + static_cast<size_t>(p) * payload_len);
        }
    });
}

PathEnsemble simulate_paths(const SimJob& job) {
    const PathRunner runner(job);
    PathEnsemble ens;
    ens.n_paths = job.n_paths;
    ens.h = job.h;
    ens.horizon = job.S;
    ens.mark_times = job.marks;
    ens.states.resize(static_cast<size_t>(job.n_paths) * job.marks.size());
    ens.stopped_at.assign(job.n_paths, std::numeric_limits<double>::quiet_NaN());
    ens.singular_flag.assign(job.n_paths, 0);
    parallel_over_paths(job.n_paths, job.workers, [&](int lo, int hi) {
        std::vector<MarkState> marks;
        for (int p = lo; p < hi; ++p) {
            runner.run(p, marks);
            for (size_t m = 0; m < marks.size(); ++m)
                ens.states[static_cast<size_t>(p) * marks.size() + m] = marks[m];
            for (const MarkState& m : marks) {
                if (m.stopped && std::isnan(ens.stopped_at[p])) ens.stopped_at[p] = m.stopped_at;
                if (m.singular) ens.singular_flag[p] = 1;
            }
        }
    });
    return ens;
}

PathEnsemble simulate_base_paths(const FlowConfig& config, const CoeffsProvider& provider,
                                 const ChartPoint& start, double S, double h, int n_paths,
                                 const RngSpec& rng, const std::vector<double>& marks) {
    const long steps = steps_for(S, h);
    const std::vector<long> midx = mark_steps(marks, h);
    const int n = static_cast<int>(start.coords.size());
    const int m = 1 + n;

    PathEnsemble ens;
    ens.n_paths = n_paths;
    ens.h = h;
    ens.horizon = S;
    ens.mark_times = marks;
    ens.states.resize(static_cast<size_t>(n_paths) * marks.size());
    ens.stopped_at.assign(n_paths, std::numeric_limits<double>::quiet_NaN());
    ens.singular_flag.assign(n_paths, 0);

    for (int p = 0; p < n_paths; ++p) {
        Xoshiro256pp gen = rng.stream_for_path(p);
        ChartPoint z = start;
        bool stopped = false;
        size_t next_mark = 0;
        auto record = [&](long k) {
            if (next_mark < midx.size() && midx[next_mark] == k) {
                MarkState ms;
                ms.s = k * h;
                ms.tau = z.tau;
                ms.x = z.coords;
                ms.chart = z.chart;
                ms.stopped = stopped;
                ens.states[static_cast<size_t>(p) * marks.size() + next_mark] = ms;
                ++next_mark;
            }
        };
        record(0);
        for (long k = 0; k < steps; ++k) {
            if (!stopped) {
                const GeneratorCoeffs gc = provider(z);
                if (static_cast<int>(gc.b.size()) != m)
                    throw std::invalid_argument("simulate_base_paths: coefficient size mismatch");
                // sigma sigma^T = 2a
                MatrixXd sigma;
                bool diagonal = true;
                for (int i = 0; i < m && diagonal; ++i)
                    for (int j = 0; j < m; ++j)
                        if (i != j && std::abs(gc.a(i, j)) > 1e-14) {
                            diagonal = false;
                            break;
                        }
                if (diagonal) {
                    sigma = MatrixXd::Zero(m, m);
                    for (int i = 0; i < m; ++i) {
                        const double v = 2.0 * gc.a(i, i);
                        if (v < -1e-12)
                            throw std::invalid_argument("simulate_base_paths: a not PSD");
                        sigma(i, i) = std::sqrt(std::max(0.0, v));
                    }
                } else {
                    Eigen::SelfAdjointEigenSolver<MatrixXd> es(2.0 * gc.a);
                    if (es.eigenvalues().minCoeff() < -1e-10)
                        throw std::invalid_argument("simulate_base_paths: a not PSD");
                    sigma = es.eigenvectors() *
                            es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                            es.eigenvectors().transpose();
                }
                VectorXd xi(m);
                for (int i = 0; i < m; ++i) xi[i] = gen.next_gaussian();
                VectorXd dz = gc.b * h + sigma * (std::sqrt(h) * xi);
                z.tau += dz[0];
                z.coords += dz.tail(n);
                if (z.chart == ChartId::TorusPeriodic)
                    z.coords = torus_wrap(z.coords, config.L);
                if (z.tau >= config.T) {
                    z.tau = config.T;
                    stopped = true;
                    ens.stopped_at[p] = (k + 1) * h;
                } else if (z.tau < config.delta) {
                    z.tau = 2.0 * config.delta - z.tau;
                }
            }
            record(k + 1);
        }
    }
    return ens;
}

std::vector<MatrixXd> transport_frame_along_path(const std::vector<ChartPoint>& path,
                                                 const TransportCoeffs& gamma_of,
                                                 const MatrixXd& e0, bool* singular_flag) {
    if (path.empty()) throw std::invalid_argument("transport: empty path");
    const int r = static_cast<int>(e0.rows());
    std::vector<MatrixXd> out;
    out.reserve(path.size());
    MatrixXd e = e0, M0(r, r), M1(r, r), t1(r, r), t2(r, r);
    if (singular_flag) *singular_flag = false;
    out.push_back(e);
    for (size_t k = 0; k + 1 < path.size(); ++k) {
        VectorXd dz(1 + path[k].coords.size());
        dz[0] = path[k + 1].tau - path[k].tau;
        dz.tail(path[k].coords.size()) = path[k + 1].coords - path[k].coords;
        M0 = gamma_of(path[k], dz);
        M1 = gamma_of(path[k + 1], dz);
        heun_update(e, M0, M1, t1, t2);
        if (singular_flag && std::abs(e.determinant()) < kSingularDet) *singular_flag = true;
        out.push_back(e);
    }
    return out;
}

double pairwise_sum(const double* data, size_t count, size_t stride) {
    if (count <= 8) {
        double s = 0.0;
        for (size_t i = 0; i < count; ++i) s += data[i * stride];
        return s;
    }
    const size_t half = count / 2;
    return pairwise_sum(data, half, stride) + pairwise_sum(data + half * stride, count - half, stride);
}

McEstimate mc_estimate(const std::vector<double>& payloads, int payload_len, int column) {
    const size_t n = payloads.size() / payload_len;
    if (n == 0) throw std::invalid_argument("mc_estimate: empty ensemble");
    McEstimate est;
    est.n_effective = static_cast<long>(n);
    est.mean = pairwise_sum(payloads.data() + column, n, payload_len) / static_cast<double>(n);
    if (n > 1) {
        std::vector<double> dev2(n);
        for (size_t i = 0; i < n; ++i) {
            const double d = payloads[i * payload_len + column] - est.mean;
            dev2[i] = d * d;
        }
        const double var = pairwise_sum(dev2.data(), n) / static_cast<double>(n - 1);
        est.stderr_ = std::sqrt(var / static_cast<double>(n));
    }
    return est;
}

McEstimate mc_paired_diff(const std::vector<double>& a, const std::vector<double>& b,
                          int payload_len, int column) {
    if (a.size() != b.size()) throw std::invalid_argument("mc_paired_diff: size mismatch");
    const size_t n = a.size() / payload_len;
    std::vector<double> diff(n);
    for (size_t i = 0; i < n; ++i)
        diff[i] = a[i * payload_len + column] - b[i * payload_len + column];
    return mc_estimate(diff, 1, 0);
}

VarianceEstimate mc_variance(const std::vector<double>& payloads, int payload_len, int column) {
    const size_t n = payloads.size() / payload_len;
    if (n < 2) throw std::invalid_argument("mc_variance: need at least two paths");
    const double mean =
        pairwise_sum(payloads.data() + column, n, payload_len) / static_cast<double>(n);
    std::vector<double> d2(n), d4(n);
    for (size_t i = 0; i < n; ++i) {
        const double d = payloads[i * payload_len + column] - mean;
        d2[i] = d * d;
        d4[i] = d2[i] * d2[i];
    }
    VarianceEstimate ve;
    const double nn = static_cast<double>(n);
    ve.var = pairwise_sum(d2.data(), n) / (nn - 1.0);
    const double mu4 = pairwise_sum(d4.data(), n) / nn;
    const double var_of_var = std::max(0.0, (mu4 - ve.var * ve.var * (nn - 3.0) / (nn - 1.0)) / nn);
    ve.stderr_ = std::sqrt(var_of_var);
    return ve;
}

std::string ensemble_to_csv(const PathEnsemble& ens, int n_spatial) {
    std::ostringstream os;
    os << "path_id,s";
    for (int i = 1; i <= n_spatial; ++i) os << ",x" << i;
    os << ",tau";
    const bool frames = !ens.states.empty() && ens.states.front().frame.size() > 0;
    int r = 0;
    if (frames) {
        r = static_cast<int>(ens.states.front().frame.rows());
        for (int i = 0; i < r; ++i)
            for (int b = 0; b < r; ++b) os << ",e_" << i << b;
    }
    os << ",stopped\n";
    char buf[40];
    auto put = [&](double v) {
        snprintf(buf, sizeof buf, "%.17g", v);
        os << ',' << buf;
    };
    for (int p = 0; p < ens.n_paths; ++p)
        for (size_t m = 0; m < ens.mark_times.size(); ++m) {
            const MarkState& st = ens.at(p, static_cast<int>(m));
            os << p;
            put(st.s);
            for (int i = 0; i < n_spatial; ++i) put(i < st.x.size() ? st.x[i] : 0.0);
            put(st.tau);
            if (frames)
                for (int i = 0; i < r; ++i)
                    for (int b = 0; b < r; ++b) put(st.frame(i, b));
            os << ',' << (st.stopped ? 1 : 0) << '\n';
        }
    return os.str();
}

}  // namespace riccilab
