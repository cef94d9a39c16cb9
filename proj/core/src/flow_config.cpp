#include "riccilab/flow_config.hpp"

#include <cmath>
#include <stdexcept>

namespace riccilab {

std::string to_string(BackgroundKind k) {
    return k == BackgroundKind::FlatTorus ? "torus" : "sphere";
}

std::string to_string(ChartId c) {
    switch (c) {
        case ChartId::TorusPeriodic: return "torus";
        case ChartId::SphereAmbient: return "ambient";
        case ChartId::SphereNorth: return "north";
        case ChartId::SphereSouth: return "south";
    }
    return "?";
}

FlowConfig FlowConfig::torus(int n, double L, double T, double delta) {
    FlowConfig c;
    c.background = BackgroundKind::FlatTorus;
    c.n = n;
    c.L = L;
    c.T = T;
    c.delta = delta;
    c.calT = T + delta;
    c.validate();
    return c;
}

FlowConfig FlowConfig::sphere(double c0, double T, double delta) {
    FlowConfig c;
    c.background = BackgroundKind::ShrinkingSphere;
    c.n = 2;
    c.c0 = c0;
    c.T = T;
    c.delta = delta;
    c.calT = T + delta;
    c.validate();
    return c;
}

void FlowConfig::validate() const {
    if (n < 1) throw std::invalid_argument("flow: n must be positive");
    if (!(delta > 0.0) || !(delta < T))
        throw std::invalid_argument("flow: need 0 < delta < T");
    if (std::abs(calT - (T + delta)) > 1e-15 * std::max(1.0, T))
        throw std::invalid_argument("flow: calT must equal T + delta");
    if (background == BackgroundKind::ShrinkingSphere) {
        if (n != 2) throw std::invalid_argument("flow: sphere background requires n = 2");
        if (!(c0 > 0.0)) throw std::invalid_argument("flow: sphere c0 must be positive");
        // c(t) = c0 - 2t must stay positive on [0, calT].
        if (!(calT < c0 / 2.0))
            throw std::invalid_argument("flow: sphere requires T + delta < c0/2");
    } else {
        if (!(L > 0.0)) throw std::invalid_argument("flow: torus L must be positive");
    }
}

VectorXd torus_wrap(const VectorXd& x, double L) {
    VectorXd w = x;
    for (int i = 0; i < w.size(); ++i) {
        w[i] = std::fmod(w[i], L);
        if (w[i] < 0.0) w[i] += L;
    }
    return w;
}

VectorXd sphere_ambient_to_stereo(const VectorXd& ambient, bool north) {
    const int m = static_cast<int>(ambient.size());
    const double z = ambient[m - 1];
    const double denom = north ? (1.0 + z) : (1.0 - z);
    if (std::abs(denom) < 1e-12)
        throw std::domain_error("chart_map: point at the stereographic pole");
    return ambient.head(m - 1) / denom;
}

VectorXd sphere_stereo_to_ambient(const VectorXd& xi, bool north) {
    const int n = static_cast<int>(xi.size());
    const double sigma = 1.0 + xi.squaredNorm();
    VectorXd a(n + 1);
    a.head(n) = 2.0 * xi / sigma;
    const double z = (2.0 - sigma) / sigma;
    a[n] = north ? z : -z;
    return a;
}

Eigen::MatrixXd sphere_chart_transition_jacobian(const VectorXd& xi) {
    const int n = static_cast<int>(xi.size());
    const double r2 = xi.squaredNorm();
    if (r2 < 1e-14)
        throw std::domain_error("chart transition undefined at the origin");
    Eigen::MatrixXd J = Eigen::MatrixXd::Identity(n, n) * r2 - 2.0 * xi * xi.transpose();
    return J / (r2 * r2);
}

ChartId sphere_preferred_chart(const VectorXd& ambient) {
    return ambient[ambient.size() - 1] >= 0.0 ? ChartId::SphereNorth : ChartId::SphereSouth;
}

namespace {

VectorXd to_ambient(const ChartPoint& p) {
    switch (p.chart) {
        case ChartId::SphereAmbient: {
            const double norm = p.coords.norm();
            if (norm < 1e-6)
                throw std::domain_error("chart_map: ambient point has near-zero norm");
            if (std::abs(norm - 1.0) > 1e-10)
                throw std::domain_error("chart_map: ambient point is not on the unit sphere");
            return p.coords / norm;
        }
        case ChartId::SphereNorth: return sphere_stereo_to_ambient(p.coords, true);
        case ChartId::SphereSouth: return sphere_stereo_to_ambient(p.coords, false);
        default:
            throw std::domain_error("chart_map: torus point in sphere conversion");
    }
}

}  // namespace

ChartPoint chart_map(const FlowConfig& config, const ChartPoint& p, ChartId target_chart) {
    ChartPoint out;
    out.tau = p.tau;
    out.chart = target_chart;

    if (config.background == BackgroundKind::FlatTorus) {
        if (p.chart != ChartId::TorusPeriodic || target_chart != ChartId::TorusPeriodic)
            throw std::domain_error("chart_map: torus has a single periodic chart");
        out.coords = torus_wrap(p.coords, config.L);
        return out;
    }

    if (p.chart == ChartId::TorusPeriodic || target_chart == ChartId::TorusPeriodic)
        throw std::domain_error("chart_map: sphere point cannot use the torus chart");

    const VectorXd ambient = to_ambient(p);
    switch (target_chart) {
        case ChartId::SphereAmbient: out.coords = ambient; break;
        case ChartId::SphereNorth: out.coords = sphere_ambient_to_stereo(ambient, true); break;
        case ChartId::SphereSouth: out.coords = sphere_ambient_to_stereo(ambient, false); break;
        default: break;
    }
    return out;
}

}  // namespace riccilab
