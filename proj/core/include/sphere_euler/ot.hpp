#pragma once

#include <vector>

#include "sphere_euler/energy.hpp"
#include "sphere_euler/mesh.hpp"

namespace sphere_euler {

// Values use cost d^2/2, so they are half the usual squared Wasserstein
// distance. Multiply by 2 before comparing with other OT libraries.
enum class CostKind { HalfSquared, Distance };

double ground_cost(const Vec3& x, const Vec3& y, CostKind kind = CostKind::HalfSquared);

struct PlanEntry {
  int i, j;
  double mass;
};

struct TransportPlan {
  std::vector<PlanEntry> entries;  // masses, not densities
  Eigen::VectorXd row_marginal(int n) const;
  Eigen::VectorXd col_marginal(int m) const;
};

struct PotentialPair {
  Eigen::VectorXd phi1;  // source side
  Eigen::VectorXd phi2;  // target side
};

struct TransportResult {
  double value = 0.0;
  TransportPlan plan;
  PotentialPair potentials;
  long pivots = 0;
};

// Point-mass problems; a and b are masses with equal totals.
TransportResult transport_exact(const std::vector<Vec3>& xs, const Eigen::VectorXd& a,
                                const std::vector<Vec3>& ys, const Eigen::VectorXd& b,
                                CostKind kind = CostKind::HalfSquared);

// Densities on one mesh.
TransportResult w2_squared_exact(const Mesh& mesh, const ScalarField& mu, const ScalarField& nu);
double w2_squared(const Mesh& mesh, const ScalarField& mu, const ScalarField& nu);
double w1_distance(const Mesh& mesh, const ScalarField& mu, const ScalarField& nu);

struct SinkhornOptions {
  double tol = 1e-8;       // marginal L1 residual
  int max_iter = 100000;
  double scaling = 0.5;    // reg schedule factor
};

TransportResult sinkhorn(const std::vector<Vec3>& xs, const Eigen::VectorXd& a,
                         const std::vector<Vec3>& ys, const Eigen::VectorXd& b, double reg,
                         const SinkhornOptions& opts = {});
TransportResult sinkhorn(const Mesh& mesh, const ScalarField& mu, const ScalarField& nu, double reg,
                         const SinkhornOptions& opts = {});

// phi^c(x_i) = min_j d(x_i, x_j)^2 / 2 - phi(x_j)
ScalarField c_transform(const Mesh& mesh, const ScalarField& phi);

// nu = T # mu with T(x) = exp_x(grad phi(x)); barycentric deposition.
ScalarField push_forward_map(const Mesh& mesh, const ScalarField& phi, const ScalarField& mu);
// Same with an explicit per-node tangent displacement field.
ScalarField push_forward_field(const Mesh& mesh, const VectorField& disp, const ScalarField& mu);

struct ConcavityReport {
  bool concave = true;
  double worst = 0.0;  // smallest eigenvalue found
  int node = -1;
};
ConcavityReport is_dsq_concave(const Mesh& mesh, const ScalarField& phi, double tol = 1e-8);

ScalarField generalized_geodesic(const Mesh& mesh, const ScalarField& f, const ScalarField& phi0,
                                 const ScalarField& phi1, double s);

// Largest violation of phi1(x_i) + phi2(x_j) <= c_ij over all node pairs.
double dual_infeasibility(const Mesh& mesh, const PotentialPair& pot);

// sum_i w_i h^2 F°(phi1_i / h^2) + sum_j w_j phi2_j f_j, a lower bound for
// W(f, rho) + h^2 U(rho) where phi1 lives on the rho side.
double dual_lower_bound(const Mesh& mesh, const PotentialPair& pot, const ScalarField& f,
                        const ThetaModel& theta, double h = 1.0, double feas_tol = 1e-9);

}  // namespace sphere_euler
