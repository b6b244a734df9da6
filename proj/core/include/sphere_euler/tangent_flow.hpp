#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "sphere_euler/energy.hpp"
#include "sphere_euler/mesh.hpp"

namespace sphere_euler {

// [X; V] in TS^2.
struct PhasePoint {
  Vec3 X = Vec3::UnitX();
  Vec3 V = Vec3::Zero();

  // Renormalizes X and removes the normal part of V.
  void project();
};

// g(X, t). Only the tangential part drives the motion; the normal part is the
// constraint force and is replaced by the exact geodesic constraint.
using Forcing = std::function<Vec3(const Vec3& X, double t)>;
// Pressure gradient grad(Theta1 o p)(X, t), tangential.
using PressureGradient = std::function<Vec3(const Vec3& X, double t)>;

// Geodesic motion plus the pressure gradient: g = -X - grad(Theta1 o p).
Forcing forcing_from_pressure(PressureGradient grad);

// Barycentric interpolation in space and linear interpolation in time of
// nodal pressure gradients; constant outside [times.front(), times.back()].
PressureGradient interpolated_pressure(MeshPtr mesh, std::vector<double> times, std::vector<VectorField> fields);

// Velocity-averaged step
//   V1 = P[V0 + h/2 g_T(X0)] + h/2 g_T(X1),  X1 = exp_X0(h (V0 + P^{-1} V1) / 2),
// P parallel transport X0 -> X1, solved by fixed point.
PhasePoint step_predictor(const PhasePoint& state, double h, const Forcing& g, double t = 0.0);

// X'' = -X - grad(Theta1 o p) - (|V|^2 - 1) X written with the rotation kernel
//   [X; V](t + dt) = R(dt)[X; V](t) + int_t^{t+dt} R(t + dt - u)[0; F(u)] du,
// trapezoid quadrature per step. Returns tau/dt + 1 samples.
std::vector<PhasePoint> integrate_integral_equation(const PhasePoint& initial, const PressureGradient& grad,
                                                    double tau, double dt);

struct TrajectoryBundle {
  std::vector<double> times;
  std::vector<std::vector<PhasePoint>> paths;  // paths[particle][sample]
  std::vector<int> labels;                     // starting node
  double h = 0.0;
  std::string forcing;

  std::size_t particles() const { return paths.size(); }
};

// One particle per mesh node, V0 per node, steps of step_predictor.
TrajectoryBundle integrate_bundle(const Mesh& mesh, const VectorField& V0, const Forcing& g, double h, int steps,
                                  std::string forcing_label = "custom");

// Columnar text dump: t particle_id X0 X1 X2 V0 V1 V2.
void write_trajectories(std::ostream& os, const TrajectoryBundle& bundle);

struct TangentCostReport {
  std::vector<double> per_particle;  // int |X'|^2 + |V'|^2 dt
  double aggregate = 0.0;            // mass weighted
  double w2 = 0.0;                   // W2^2(rho0, rho_tau), half-squared cost
  double curvature_term = 0.0;       // sum m int s'^4 kappa^2 dt
  double kappa_g_term = 0.0;         // sum m int s'^4 kappa_g^2 dt
  double forcing_term = 0.0;         // sum m int |g_T|^2 dt, when a forcing is given
  double general_margin = 0.0;       // (aggregate - w2 - curvature) / aggregate
  double unit_speed_margin = 0.0;    // (aggregate - 2 w2 - forcing) / aggregate
};

TangentCostReport tangent_cost(const Mesh& mesh, const TrajectoryBundle& traj, const ScalarField& rho0,
                               const Forcing& g = nullptr);

// Per-particle cost and its Frenet form s'^2 + s'^4 kappa^2 + s''^2.
double particle_cost(const std::vector<double>& t, const std::vector<PhasePoint>& path);
double particle_cost_frenet(const std::vector<double>& t, const std::vector<PhasePoint>& path);

struct VorticityReport {
  std::vector<double> times;
  std::vector<double> sup_curl;                   // sup |X . curl V|
  std::vector<std::vector<double>> circulation;   // [time][contour]
  std::vector<double> contour_heights;            // z of the latitude loops
};

VorticityReport vorticity_diagnostic(const Mesh& mesh, const std::vector<double>& times,
                                     const std::vector<VectorField>& fields,
                                     std::vector<double> contour_heights = {-0.5, 0.0, 0.5});

// Circulation of V around the latitude circle z = height, counterclockwise
// seen from +z.
double latitude_circulation(const Mesh& mesh, const VectorField& V, double height, int samples = 720);

struct PathRegularityReport {
  double sum = 0.0;    // sum W2^2(rho_{j+1}, rho_j) / dt_j, standard cost d^2
  double bound = 0.0;  // 2 tau int int (|grad q|^2 + |grad Theta1 o rho|^2) rho
  double margin = 0.0; // bound - sum
  bool holds = false;
};

// Exact: lattice transport between consecutive snapshots. On sub-cell
// displacements it overestimates badly (it scales like displacement times
// spacing), so solver output uses Linearized: the rho-weighted H^-1 norm
// phi^T K_rho phi with K_rho phi = m (rho_{j+1} - rho_j), rho at the midpoint.
enum class PathMetric { Exact, Linearized };

PathRegularityReport path_regularity(const Mesh& mesh, const std::vector<double>& times,
                                     const std::vector<ScalarField>& densities,
                                     const std::vector<ScalarField>& potentials, const ThetaModel& theta,
                                     double tol = 1e-9, PathMetric metric = PathMetric::Exact);

// Standard-cost W2^2 between nearby densities by the linearization above.
double linearized_w2_squared(const Mesh& mesh, const ScalarField& a, const ScalarField& b);

// Largest number of particles sharing a nearest node at the last sample,
// divided by the mean; a crude crossing indicator.
double crossing_multiplicity(const Mesh& mesh, const TrajectoryBundle& traj);

}  // namespace sphere_euler
