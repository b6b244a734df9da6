#include "sphere_euler/helmholtz.hpp"

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <cmath>
#include <random>
#include <string>

namespace sphere_euler {

double greens_function(double angle) {
  if (!(angle > 0.0)) throw DomainError("greens_function: singular at zero angle");
  return std::log(1.0 - std::cos(angle)) / kFourPi;
}

ScalarField solve_poisson(const Mesh& mesh, const ScalarField& g) {
  const int n = int(mesh.size());
  const ScalarField g0 = project_zero_mean(mesh, g);
  const ScalarField gw = g0.cwiseProduct(mesh.weights);
  ScalarField u(n);
#ifdef SPHERE_EULER_HAVE_OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int i = 0; i < n; ++i) {
    const Vec3& x = mesh.nodes[i];
    double s = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      // 1 - cos a = |x - y|^2 / 2, better conditioned for close pairs
      const double c = 0.5 * (x - mesh.nodes[j]).squaredNorm();
      s += std::log(c) * gw[j];
    }
    const double r2 = mesh.weights[i] / kPi;
    s += (std::log(0.5 * r2) - 1.0) * gw[i];
    u[i] = s / kFourPi;
  }
  return project_zero_mean(mesh, u);
}

HelmholtzParts helmholtz_decompose(const Mesh& mesh, const VectorField& V) {
  HelmholtzParts p;
  p.q = solve_poisson(mesh, divergence(mesh, V));
  p.psi = -solve_poisson(mesh, divergence(mesh, cross_normal(mesh, V)));
  p.residual = V - gradient(mesh, p.q) - cross_normal(mesh, gradient(mesh, p.psi));
  return p;
}

namespace {

void check_positive(const ScalarField& rho, const char* who) {
  for (Eigen::Index i = 0; i < rho.size(); ++i)
    if (!(rho[i] > 0.0)) throw DomainError(std::string(who) + ": vacuum at node " + std::to_string(i));
}

// phi = x0 + K_rho^+ b, normalized to zero rho-mean.
WeightedParts solve_weighted(const Mesh& mesh, const SparseMat& Kr, ScalarField b, const ScalarField& x0,
                             const ScalarField& rho, double tol) {
  Eigen::SparseMatrix<double> K = Kr;
  b.array() -= b.mean();
  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                           Eigen::DiagonalPreconditioner<double>>
      cg;
  cg.setTolerance(tol);
  cg.setMaxIterations(std::max<int>(1000, 4 * int(b.size())));
  cg.compute(K);
  ScalarField dx = cg.solve(b);
  WeightedParts out;
  out.iterations = int(cg.iterations());
  out.cg_error = cg.error();
  if (cg.info() != Eigen::Success && cg.error() > 1e3 * tol)
    throw ConvergenceError("weighted_decompose: CG stalled", cg.error());
  ScalarField phi = x0 + dx;
  const ScalarField rw = rho.cwiseProduct(mesh.weights);
  phi.array() -= phi.dot(rw) / rw.sum();
  out.phi = phi;
  return out;
}

}  // namespace

WeightedParts weighted_decompose(const Mesh& mesh, const VectorField& V, const ScalarField& rho,
                                 const ScalarField& hint, double tol) {
  check_positive(rho, "weighted_decompose");
  const SparseMat Kr = stiffness(mesh, rho);
  ScalarField b = weak_divergence_rhs(mesh, V, rho);
  ScalarField x0 = ScalarField::Zero(b.size());
  if (hint.size() == b.size()) {
    x0 = hint;
    b -= Kr * hint;
  }
  WeightedParts out = solve_weighted(mesh, Kr, std::move(b), x0, rho, tol);
  out.w = V - gradient(mesh, out.phi);
  return out;
}

WeightedParts weighted_decompose_increment(const Mesh& mesh, const ScalarField& base, const VectorField& dV,
                                           const ScalarField& rho, double tol) {
  check_positive(rho, "weighted_decompose");
  const SparseMat Kr = stiffness(mesh, rho);
  WeightedParts out = solve_weighted(mesh, Kr, weak_divergence_rhs(mesh, dV, rho), base, rho, tol);
  out.w = gradient(mesh, base) + dV - gradient(mesh, out.phi);
  return out;
}

double increment_energy(const Mesh& mesh, const ScalarField& base, const VectorField& dV, const ScalarField& rho) {
  double e = 0.0;
  for (const auto& t : mesh.faces) {
    const Vec3& p0 = mesh.nodes[t[0]];
    const Vec3& p1 = mesh.nodes[t[1]];
    const Vec3& p2 = mesh.nodes[t[2]];
    const Vec3 nrm = (p1 - p0).cross(p2 - p0);
    const double area2 = nrm.norm();
    const Vec3 nh = nrm / area2;
    // P1 gradient on the flat face
    Vec3 g = (base[t[0]] * nh.cross(p2 - p1) + base[t[1]] * nh.cross(p0 - p2) + base[t[2]] * nh.cross(p1 - p0)) / area2;
    Vec3 vt = (dV.row(t[0]) + dV.row(t[1]) + dV.row(t[2])).transpose() / 3.0;
    vt -= nh.dot(vt) * nh;
    g += vt;
    const double rt = (rho[t[0]] + rho[t[1]] + rho[t[2]]) / 3.0;
    e += rt * 0.5 * area2 * g.squaredNorm();
  }
  return 0.5 * e;
}

double kinetic_energy(const Mesh& mesh, const ScalarField& q, const ScalarField& rho) {
  return 0.5 * q.dot(stiffness(mesh, rho) * q);
}

double field_energy(const Mesh& mesh, const VectorField& V, const ScalarField& rho) {
  double e = 0.0;
  for (const auto& t : mesh.faces) {
    const Vec3& p0 = mesh.nodes[t[0]];
    const Vec3 nrm = (mesh.nodes[t[1]] - p0).cross(mesh.nodes[t[2]] - p0);
    const double area = 0.5 * nrm.norm();
    const Vec3 nh = nrm.normalized();
    Vec3 vt = (V.row(t[0]) + V.row(t[1]) + V.row(t[2])).transpose() / 3.0;
    vt -= nh.dot(vt) * nh;
    const double rt = rho.size() ? (rho[t[0]] + rho[t[1]] + rho[t[2]]) / 3.0 : 1.0;
    e += rt * area * vt.squaredNorm();
  }
  return 0.5 * e;
}

double nodal_energy(const Mesh& mesh, const VectorField& V, const ScalarField& rho) {
  double e = 0.0;
  for (Eigen::Index i = 0; i < V.rows(); ++i) e += mesh.weights[i] * rho[i] * V.row(i).squaredNorm();
  return e;
}

double spectral_gap_estimate(const Mesh& mesh, const ScalarField& rho, double tol) {
  for (Eigen::Index i = 0; i < rho.size(); ++i)
    if (!(rho[i] > 0.0)) throw DomainError("spectral_gap_estimate: vacuum at node " + std::to_string(i));
  const int n = int(mesh.size());
  const int block = std::min(5, n - 1);
  Eigen::SparseMatrix<double> K = stiffness(mesh, rho);
  const ScalarField md = rho.cwiseProduct(mesh.weights);
  Eigen::SparseMatrix<double> A = K;
  for (int i = 0; i < n; ++i) A.coeffRef(i, i) += md[i];
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
  if (ldlt.info() != Eigen::Success) throw DomainError("spectral_gap_estimate: factorization failed");

  const double mtot = md.sum();
  auto deflate = [&](Eigen::MatrixXd& Y) {
    for (int c = 0; c < Y.cols(); ++c) Y.col(c).array() -= Y.col(c).dot(md) / mtot;
  };
  std::mt19937 rng(12345);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd Y(n, block);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < block; ++c) Y(i, c) = nd(rng);
  deflate(Y);

  double prev = 0.0, lam = 0.0;
  for (int it = 0; it < 500; ++it) {
    Eigen::MatrixXd Z(n, block);
    for (int c = 0; c < block; ++c) Z.col(c) = ldlt.solve(md.cwiseProduct(Y.col(c)));
    deflate(Z);
    const Eigen::MatrixXd Kr = Z.transpose() * (K * Z);
    const Eigen::MatrixXd Mr = Z.transpose() * md.asDiagonal() * Z;
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (Kr + Kr.transpose()),
                                                                 0.5 * (Mr + Mr.transpose()));
    Y = Z * es.eigenvectors();
    for (int c = 0; c < block; ++c) Y.col(c) /= std::sqrt(Y.col(c).dot(md.cwiseProduct(Y.col(c))));
    lam = es.eigenvalues()[0];
    if (it > 2 && std::abs(lam - prev) <= tol * std::abs(lam)) break;
    prev = lam;
  }
  return lam;
}

}  // namespace sphere_euler
