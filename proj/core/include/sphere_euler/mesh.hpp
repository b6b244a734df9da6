#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "sphere_euler/geometry.hpp"

namespace sphere_euler {

// Per-node scalars (densities, potentials) and per-node ambient 3-vectors.
using ScalarField = Eigen::VectorXd;
using VectorField = Eigen::MatrixX3d;
using SparseMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct Mesh {
  int level = 0;
  std::vector<Vec3> nodes;
  Eigen::VectorXd weights;                  // dual-cell areas, sum 4 pi
  std::vector<std::vector<int>> stencils;   // one-ring neighbours, ascending
  std::vector<std::array<int, 3>> faces;    // counter-clockwise seen from outside
  std::vector<std::vector<int>> node_faces;
  std::vector<Vec3> t1, t2;                 // t1 x t2 = node
  double mean_spacing = 0.0;

  // Least-squares stencil rows: grad f = (Gx f, Gy f, Gz f); Hessian entries
  // in the (t1, t2) basis from the same quadratic fit.
  SparseMat Gx, Gy, Gz;
  SparseMat H11, H12, H22;
  SparseMat K;  // unweighted P1 stiffness

  std::size_t size() const { return nodes.size(); }
  std::uint64_t checksum() const;
};

using MeshPtr = std::shared_ptr<const Mesh>;

MeshPtr build_icosphere(int subdivisions);
// Builds operators for an arbitrary triangulated point set on the sphere.
MeshPtr build_mesh(std::vector<Vec3> nodes, std::vector<std::array<int, 3>> faces, int level = -1);

void write_mesh(std::ostream& os, const Mesh& mesh);
MeshPtr read_mesh(std::istream& is);

// Quadrature.
double integrate(const Mesh& mesh, const ScalarField& f);
double mass(const Mesh& mesh, const ScalarField& rho);
ScalarField uniform_density(const Mesh& mesh);
// Throws DomainError unless values >= 0 and mass = 1 within tol.
void check_density(const Mesh& mesh, const ScalarField& rho, double tol = 1e-10);
ScalarField normalize_density(const Mesh& mesh, ScalarField rho);
ScalarField project_zero_mean(const Mesh& mesh, ScalarField f);

// Discrete differential operators.
VectorField gradient(const Mesh& mesh, const ScalarField& f);
ScalarField divergence(const Mesh& mesh, const VectorField& V);
ScalarField curl_normal(const Mesh& mesh, const VectorField& V);
// Per-node Hessian of f as an ambient 3x3 matrix acting on the tangent plane.
std::vector<Mat3> hessian(const Mesh& mesh, const ScalarField& f);
VectorField cross_normal(const Mesh& mesh, const VectorField& V);  // X x V
VectorField project_tangent(const Mesh& mesh, const VectorField& V);

// P1 finite elements on the flat triangulation. K_rho uses the face mean of rho
// as coefficient (rho empty means 1).
SparseMat stiffness(const Mesh& mesh, const ScalarField& rho = ScalarField());
// -M^{-1} K f with the lumped spherical mass.
ScalarField laplacian(const Mesh& mesh, const ScalarField& f);
// Right-hand side b_i = sum_T rho_T |T| grad N_i . V_T of the weak divergence.
ScalarField weak_divergence_rhs(const Mesh& mesh, const VectorField& V,
                                const ScalarField& rho = ScalarField());

// Point location and transfer.
struct Location {
  int face = -1;
  std::array<int, 3> vertex{};
  std::array<double, 3> bary{};
};
// hint is a node index near p, or -1.
Location locate(const Mesh& mesh, const Vec3& p, int hint = -1);
int nearest_node(const Mesh& mesh, const Vec3& p, int hint = -1);
double interpolate(const Mesh& mesh, const ScalarField& f, const Vec3& p, int hint = -1);
Vec3 interpolate(const Mesh& mesh, const VectorField& V, const Vec3& p, int hint = -1);

// Deposit point masses at positions barycentrically; returns node masses.
Eigen::VectorXd deposit(const Mesh& mesh, const std::vector<Vec3>& points,
                        const Eigen::VectorXd& masses, const std::vector<int>& hints = {});

// Symmetrically scaled Gaussian smoothing of width eps on geodesic distance.
// Row-stochastic and mass preserving, so uniform densities are fixed and
// convex integrals do not increase.
class Mollifier {
 public:
  Mollifier(MeshPtr mesh, double eps);
  ScalarField apply(const ScalarField& rho) const;
  double eps() const { return eps_; }
  const SparseMat& matrix() const { return S_; }

 private:
  MeshPtr mesh_;
  double eps_;
  SparseMat S_;
};

ScalarField mollify(const MeshPtr& mesh, const ScalarField& rho, double eps);
double default_eps(const Mesh& mesh, double eps_factor = 2.0);

}  // namespace sphere_euler
