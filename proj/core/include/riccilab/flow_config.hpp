#pragma once

#include <Eigen/Dense>
#include <string>

namespace riccilab {

using Eigen::VectorXd;

enum class BackgroundKind { FlatTorus, ShrinkingSphere };

std::string to_string(BackgroundKind k);

/// Closed-form backward Ricci-flow background on the reverse-time window
/// [delta, T], calT = T + delta, g_tau = g(calT - tau).
struct FlowConfig {
    BackgroundKind background = BackgroundKind::FlatTorus;
    int n = 2;           // spatial dimension
    double T = 1.0;      // observation time
    double delta = 0.05; // boundary offset
    double calT = 1.05;  // T + delta
    double L = 2.0 * M_PI; // torus side length
    double c0 = 1.0;       // sphere initial scale

    static FlowConfig torus(int n, double L, double T, double delta);
    static FlowConfig sphere(double c0, double T, double delta);
    static FlowConfig torus_default() { return torus(2, 2.0 * M_PI, 1.0, 0.05); }
    static FlowConfig sphere_default() { return sphere(1.0, 0.4, 0.02); }

    /// Throws std::invalid_argument when the window or flow constraints fail.
    void validate() const;

    bool tau_in_range(double tau) const { return tau >= delta && tau <= T; }

    /// Sphere conformal factor c(tau) = c0 - 2 t = c0 - 2 calT + 2 tau  (n = 2).
    double conformal_factor(double tau) const { return c0 - 2.0 * (calT - tau); }
};

enum class ChartId { TorusPeriodic, SphereAmbient, SphereNorth, SphereSouth };

std::string to_string(ChartId c);

/// A space-time sample: chart coordinates on M plus reverse time tau.
/// Sphere points carry either the ambient unit vector (n+1 coords) or
/// stereographic coordinates (n coords).
struct ChartPoint {
    VectorXd coords;
    double tau = 0.0;
    ChartId chart = ChartId::TorusPeriodic;
};

/// Same manifold point expressed in target_chart. Round trips are identity to
/// 1e-12. Throws std::domain_error at a chart's pole and on invalid points.
ChartPoint chart_map(const FlowConfig& config, const ChartPoint& p, ChartId target_chart);

/// Wraps torus coordinates into [0, L).
VectorXd torus_wrap(const VectorXd& x, double L);

/// Stereographic <-> ambient helpers for the unit n-sphere.
VectorXd sphere_ambient_to_stereo(const VectorXd& ambient, bool north);
VectorXd sphere_stereo_to_ambient(const VectorXd& xi, bool north);

/// Jacobian of the chart transition xi -> xi/|xi|^2 evaluated at xi.
Eigen::MatrixXd sphere_chart_transition_jacobian(const VectorXd& xi);

/// Chart with the smaller |coords| for the given ambient point.
ChartId sphere_preferred_chart(const VectorXd& ambient);

}  // namespace riccilab
