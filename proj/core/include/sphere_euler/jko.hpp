#pragma once

#include <vector>

#include "sphere_euler/energy.hpp"
#include "sphere_euler/ot.hpp"

namespace sphere_euler {

// Discrete support for the corrector: points with quadrature weights. A mesh
// converts to one implicitly; the toy problems in the tests use bare points.
struct PointCloud {
  std::vector<Vec3> nodes;
  Eigen::VectorXd weights;

  PointCloud() = default;
  PointCloud(std::vector<Vec3> n, Eigen::VectorXd w) : nodes(std::move(n)), weights(std::move(w)) {}
  PointCloud(const Mesh& mesh) : nodes(mesh.nodes), weights(mesh.weights) {}  // NOLINT
  std::size_t size() const { return nodes.size(); }
};

struct JkoOptions {
  double tol = 1e-10;     // absolute duality gap
  int max_iter = 60;      // zoom rounds of the piecewise-linear LP
  int segments = 8;       // secant pieces inside the zoom window
  bool allow_pinned = true;
  ScalarField init;       // optional starting density for the zoom windows
};

struct JkoResult {
  ScalarField rho_h;
  double value = 0.0;
  double dual_value = 0.0;
  PotentialPair potentials;  // phi1 on the rho_h side, phi2 on the f side
  int iterations = 0;
  double optimality_residual = 0.0;  // primal - dual
  bool pinned = false;               // rho_h = f certified without an LP
};

class JkoConvergenceError : public ConvergenceError {
 public:
  JkoConvergenceError(const std::string& what, JkoResult best)
      : ConvergenceError(what, best.optimality_residual), best_(std::move(best)) {}
  const JkoResult& best() const { return best_; }

 private:
  JkoResult best_;
};

// W2^2(f, rho) + h^2 U(rho), W2^2 with the half-squared ground cost.
double jko_energy(const PointCloud& pc, const ScalarField& rho, const ScalarField& f, double h,
                  const ThetaModel& theta);

// Lower bound for min jko_energy from a rho-side potential; phi2 is its
// c-transform and a constant shift is optimized. Returns the value and the
// completed pair.
double jko_dual_value(const PointCloud& pc, const ScalarField& phi1, const ScalarField& f, double h,
                      const ThetaModel& theta, PotentialPair* completed = nullptr);

JkoResult jko_step(const PointCloud& pc, const ScalarField& f, double h, const ThetaModel& theta,
                   const JkoOptions& opts = {});

// W1 between f and the push-forward of rho_h under exp(h^2 grad Theta1(rho_h)).
double optimality_map_residual(const Mesh& mesh, const JkoResult& result, const ScalarField& f, double h,
                               const ThetaModel& theta);

bool minimizer_bounds_check(const JkoResult& result, double delta1, double tol = 0.0);

// U(f) - U(rho_h) - h^2 int rho_h |grad Theta1(rho_h)|^2.
double fisher_gap_check(const Mesh& mesh, const ScalarField& f, const JkoResult& result, double h,
                        const ThetaModel& theta);

// Centered second differences (not divided by ds^2) in s of
//   log det[ D^2 d^2/2 (., y_s) + (1 - s) h D^2 phi0 + s h^2 D^2 phih ] at node,
//   y_s = exp_x((1 - s) h grad phi0 + s h^2 grad phih),
// on samples + 1 equally spaced points of [0, 1].
std::vector<double> jacobian_logconcavity_probe(const Mesh& mesh, const ScalarField& phi0, const ScalarField& phih,
                                                int node, double h, int samples = 100, double gamma = 1.0);

}  // namespace sphere_euler
