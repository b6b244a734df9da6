#include <Eigen/Geometry>
#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "sphere_euler/mesh.hpp"

using namespace sphere_euler;

namespace {

ScalarField coord(const Mesh& m, int k) {
  ScalarField f(Eigen::Index(m.size()));
  for (std::size_t i = 0; i < m.size(); ++i) f[Eigen::Index(i)] = m.nodes[i][k];
  return f;
}

}  // namespace

TEST_CASE("icosphere sizes and weights") {
  auto m0 = build_icosphere(0);
  CHECK(m0->size() == 12);
  CHECK(m0->weights.sum() == doctest::Approx(kFourPi).epsilon(1e-6));
  CHECK(build_icosphere(2)->size() == 162);
  auto m3 = build_icosphere(3);
  CHECK(m3->weights.sum() == doctest::Approx(kFourPi).epsilon(1e-12));
  const ScalarField z = coord(*m3, 2);
  CHECK(integrate(*m3, z.cwiseProduct(z)) == doctest::Approx(kFourPi / 3).epsilon(0.02));
}

TEST_CASE("gradient of coordinate functions") {
  auto m = build_icosphere(3);
  const ScalarField z = coord(*m, 2);
  const VectorField g = gradient(*m, z);
  double err = 0.0;
  for (std::size_t i = 0; i < m->size(); ++i) {
    const Vec3& x = m->nodes[i];
    err = std::max(err, (Vec3(g.row(Eigen::Index(i)).transpose()) - (Vec3::UnitZ() - x.z() * x)).norm());
  }
  CHECK(err < m->mean_spacing * m->mean_spacing);
  CHECK(gradient(*m, ScalarField::Constant(Eigen::Index(m->size()), 3.0)).cwiseAbs().maxCoeff() < 1e-12);
  VectorField sum = VectorField::Zero(Eigen::Index(m->size()), 3);
  ScalarField s2 = ScalarField::Zero(Eigen::Index(m->size()));
  for (int k = 0; k < 3; ++k) s2 += gradient(*m, coord(*m, k)).rowwise().squaredNorm();
  CHECK((s2.array() - 2.0).abs().maxCoeff() < 0.01);
}

TEST_CASE("curl of gradient and divergence of rotation") {
  auto m = build_icosphere(4);
  const VectorField g = gradient(*m, coord(*m, 2));
  CHECK(curl_normal(*m, g).cwiseAbs().maxCoeff() < 1e-2);
  const VectorField r = cross_normal(*m, g);
  CHECK(divergence(*m, r).cwiseAbs().maxCoeff() < 1e-2);
  CHECK(curl_normal(*m, VectorField::Zero(Eigen::Index(m->size()), 3)).cwiseAbs().maxCoeff() == 0.0);
  // div grad z = -2 z
  CHECK((divergence(*m, g) + 2.0 * coord(*m, 2)).cwiseAbs().maxCoeff() < 0.02);
}

TEST_CASE("Hessian of z") {
  auto m = build_icosphere(4);
  const auto H = hessian(*m, coord(*m, 2));
  double err = 0.0;
  for (std::size_t i = 0; i < m->size(); ++i) {
    const Vec3& x = m->nodes[i];
    const Mat3 P = Mat3::Identity() - x * x.transpose();
    err = std::max(err, (H[i] - (-x.z() * P)).norm());
  }
  CHECK(err < 0.01);
}

TEST_CASE("FEM Laplacian") {
  auto m = build_icosphere(4);
  const ScalarField z = coord(*m, 2);
  // pointwise consistency fails at the valence-5 vertices; the L2 error is first order
  const ScalarField e = laplacian(*m, z) + 2.0 * z;
  CHECK(std::sqrt(e.cwiseAbs2().dot(m->weights) / kFourPi) < 0.015);
  const SparseMat K = stiffness(*m);
  CHECK((K * ScalarField::Ones(Eigen::Index(m->size()))).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(0.5 * z.dot(K * z) == doctest::Approx(kFourPi / 3).epsilon(0.01));
}

TEST_CASE("densities") {
  auto m = build_icosphere(2);
  const ScalarField u = uniform_density(*m);
  CHECK(mass(*m, u) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_NOTHROW(check_density(*m, u));
  CHECK_THROWS_AS(check_density(*m, 2.0 * u), DomainError);
  ScalarField bad = u;
  bad[0] = -1e-3;
  CHECK_THROWS_AS(check_density(*m, bad), DomainError);
}

TEST_CASE("locate, interpolate and deposit") {
  auto m = build_icosphere(3);
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n(0.0, 1.0);
  const ScalarField z = coord(*m, 2);
  std::vector<Vec3> pts;
  for (int k = 0; k < 200; ++k) {
    const Vec3 p = Vec3(n(rng), n(rng), n(rng)).normalized();
    pts.push_back(p);
    const Location loc = locate(*m, p);
    REQUIRE(loc.face >= 0);
    double s = 0.0;
    for (double b : loc.bary) {
      CHECK(b >= -1e-12);
      s += b;
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(interpolate(*m, z, p) == doctest::Approx(p.z()).epsilon(0.01).scale(1.0));
    CHECK((m->nodes[std::size_t(nearest_node(*m, p))] - p).norm() <= m->mean_spacing * 1.5);
  }
  const Eigen::VectorXd masses = Eigen::VectorXd::Constant(200, 1.0 / 200);
  const Eigen::VectorXd dep = deposit(*m, pts, masses);
  CHECK(dep.sum() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(dep.minCoeff() >= 0.0);
}

TEST_CASE("mollifier") {
  auto m = build_icosphere(3);
  const double eps = default_eps(*m);
  Mollifier mo(m, eps);
  const ScalarField u = uniform_density(*m);
  CHECK((mo.apply(u) - u).cwiseAbs().maxCoeff() < 1e-12);
  ScalarField r(Eigen::Index(m->size()));
  for (std::size_t i = 0; i < m->size(); ++i) r[Eigen::Index(i)] = 1.0 + 0.5 * std::pow(m->nodes[i].x(), 3);
  r = normalize_density(*m, r);
  const ScalarField s = mo.apply(r);
  CHECK(mass(*m, s) == doctest::Approx(1.0).epsilon(1e-12));
  // convex integral does not increase
  CHECK(s.cwiseProduct(s).dot(m->weights) <= r.cwiseProduct(r).dot(m->weights) + 1e-12);
  // shrinking the width recovers the density
  const double e1 = (mollify(m, r, eps) - r).cwiseAbs().maxCoeff();
  const double e2 = (mollify(m, r, eps / 2) - r).cwiseAbs().maxCoeff();
  CHECK(e2 < e1);
}

TEST_CASE("mesh io round trip") {
  auto m = build_icosphere(2);
  std::stringstream ss;
  write_mesh(ss, *m);
  auto r = read_mesh(ss);
  CHECK(r->size() == m->size());
  CHECK(r->checksum() == m->checksum());
}
