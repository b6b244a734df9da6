#include <Eigen/Geometry>
#include <cmath>
#include <random>

#include "doctest.h"
#include "sphere_euler/geometry.hpp"

using namespace sphere_euler;

namespace {

Vec3 random_point(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return Vec3(n(rng), n(rng), n(rng)).normalized();
}

Vec3 random_tangent(const Vec3& x, double scale, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return scale * project_tangent(x, Vec3(n(rng), n(rng), n(rng)));
}

}  // namespace

TEST_CASE("exp map fixed points") {
  const Vec3 e1 = Vec3::UnitX(), e2 = Vec3::UnitY(), e3 = Vec3::UnitZ();
  CHECK((exp_map(e1, Vec3::Zero()) - e1).norm() < 1e-15);
  CHECK((exp_map(e1, 0.5 * kPi * e2) - e2).norm() < 1e-15);
  CHECK((exp_map(e1, kPi * e3) + e1).norm() < 1e-15);
}

TEST_CASE("log map and distance") {
  const Vec3 e1 = Vec3::UnitX(), e2 = Vec3::UnitY();
  CHECK(log_map(e1, e1).norm() == 0.0);
  CHECK((log_map(e1, e2) - 0.5 * kPi * e2).norm() < 1e-15);
  CHECK(distance(e1, e1) == 0.0);
  CHECK(distance(e1, e2) == doctest::Approx(kPi / 2).epsilon(1e-15));
  CHECK(distance(e1, -e1) == doctest::Approx(kPi).epsilon(1e-15));
  CHECK_THROWS_AS(log_map(e1, -e1), CutLocusError);
}

TEST_CASE("exp and log round trip") {
  std::mt19937_64 rng(1);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const Vec3 x = random_point(rng), y = random_point(rng);
    if ((x + y).norm() < 1e-3) continue;
    worst = std::max(worst, (exp_map(x, log_map(x, y)) - y).norm());
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("spherical cosine rule") {
  std::mt19937_64 rng(2);
  for (int k = 0; k < 200; ++k) {
    const Vec3 x = random_point(rng);
    const Vec3 xi = random_tangent(x, 1.0, rng), eta = random_tangent(x, 1.0, rng);
    const double a = xi.norm(), b = eta.norm();
    const double cth = xi.dot(eta) / (a * b);
    const double lhs = std::cos(distance(exp_map(x, xi), exp_map(x, eta)));
    CHECK(lhs == doctest::Approx(std::cos(a) * std::cos(b) + std::sin(a) * std::sin(b) * cth).epsilon(1e-10));
  }
}

TEST_CASE("Hessian of half squared distance") {
  SUBCASE("pi/4 determinant") {
    const Vec3 x = Vec3::UnitX();
    const Vec3 y = exp_map(x, 0.25 * kPi * Vec3::UnitY());
    CHECK(hessian_half_dsq(x, y).det() == doctest::Approx(kPi / 4).epsilon(1e-12));
  }
  SUBCASE("pi/3 eigenvalues") {
    const Vec3 x = Vec3::UnitX();
    const Vec3 y = exp_map(x, kPi / 3 * Vec3::UnitY());
    auto ev = hessian_half_dsq(x, y).eigenvalues();
    std::sort(ev.data(), ev.data() + 2);
    CHECK(ev[0] == doctest::Approx(kPi / (3 * std::sqrt(3.0))).epsilon(1e-12));
    CHECK(ev[1] == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("tau -> 0 is the identity") {
    const Vec3 x = Vec3::UnitZ();
    const auto H = hessian_half_dsq(x, exp_map(x, 1e-9 * Vec3::UnitX()));
    CHECK((H.tangent_matrix() - Mat2::Identity()).norm() < 1e-9);
  }
}

TEST_CASE("tau cot tau") {
  CHECK(jacobian_det_tau_cot(0.0) == 1.0);
  CHECK(jacobian_det_tau_cot(kPi / 4) == doctest::Approx(kPi / 4).epsilon(1e-14));
  const int n = 100;
  const double a = 0.01, b = 1.5, ds = (b - a) / (n - 1);
  for (int i = 1; i + 1 < n; ++i) {
    const double t = a + i * ds;
    const double d2 = std::log(jacobian_det_tau_cot(t + ds)) - 2 * std::log(jacobian_det_tau_cot(t)) +
                      std::log(jacobian_det_tau_cot(t - ds));
    CHECK(d2 <= 1e-8);
  }
}

TEST_CASE("parallel transport") {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 100; ++k) {
    const Vec3 x = random_point(rng), y = random_point(rng);
    const Vec3 v = random_tangent(x, 1.0, rng);
    const Vec3 pv = parallel_transport(x, y, v);
    CHECK(std::abs(pv.dot(y)) < 1e-12);
    CHECK(pv.norm() == doctest::Approx(v.norm()).epsilon(1e-12));
    // the geodesic direction is carried to the arrival velocity
    const Vec3 w = log_map(x, y);
    CHECK((parallel_transport(x, y, w) + log_map(y, x)).norm() < 1e-10);
  }
}

TEST_CASE("Frenet frames of sampled curves") {
  SUBCASE("unit-speed great circle") {
    std::vector<double> t;
    std::vector<Vec3> X;
    for (int k = 0; k <= 200; ++k) {
      t.push_back(0.01 * k);
      X.push_back(Vec3(std::cos(t.back()), std::sin(t.back()), 0.0));
    }
    const auto fr = frenet_from_samples(t, X);
    for (std::size_t k = 5; k + 5 < fr.size(); ++k) {
      CHECK(std::abs(fr[k].frame.kappa_g) < 1e-6);
      CHECK(fr[k].frame.kappa == doctest::Approx(1.0).epsilon(1e-4));
      CHECK(fr[k].speed == doctest::Approx(1.0).epsilon(1e-4));
    }
  }
  SUBCASE("latitude circle") {
    const double th0 = 1.0;
    std::vector<double> t;
    std::vector<Vec3> X;
    for (int k = 0; k <= 400; ++k) {
      t.push_back(0.005 * k);
      const double lam = t.back() / std::sin(th0);
      X.push_back(Vec3(std::sin(th0) * std::cos(lam), std::sin(th0) * std::sin(lam), std::cos(th0)));
    }
    const auto fr = frenet_from_samples(t, X);
    for (std::size_t k = 5; k + 5 < fr.size(); ++k)
      CHECK(std::abs(fr[k].frame.kappa_g) == doctest::Approx(1.0 / std::tan(th0)).epsilon(1e-4));
  }
  SUBCASE("reparametrized great circle") {
    std::vector<double> t;
    std::vector<Vec3> X;
    for (int k = 0; k <= 400; ++k) {
      t.push_back(0.005 * k);
      const double s = t.back() + 0.3 * t.back() * t.back();
      X.push_back(Vec3(std::cos(s), 0.0, std::sin(s)));
    }
    const auto fr = frenet_from_samples(t, X);
    for (std::size_t k = 5; k + 5 < fr.size(); ++k) {
      CHECK(std::abs(fr[k].frame.kappa_g) < 1e-5);
      CHECK(fr[k].speed_rate == doctest::Approx(0.6).epsilon(1e-3));
    }
  }
}

TEST_CASE("Jacobi interpolant") {
  const Vec3 x = Vec3::UnitZ(), zeta(0.3, 0.1, 0.0);
  CHECK((jacobi_interpolant(x, Vec3(0.2, 0, 0), Vec3::Zero(), 0.7) - exp_map(x, Vec3(0.2, 0, 0))).norm() < 1e-15);
  CHECK((jacobi_interpolant(x, Vec3::Zero(), zeta, 0.0) - x).norm() < 1e-15);
  CHECK((jacobi_interpolant(x, Vec3::Zero(), zeta, 1.0) - exp_map(x, zeta)).norm() < 1e-15);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 1000; ++k) {
    const Vec3 p = random_point(rng);
    const Vec3 xi = random_tangent(p, 1.0, rng).normalized() * u(rng);
    const Vec3 z = random_tangent(p, 1.0, rng).normalized() * u(rng);
    const double d = distance(jacobi_interpolant(p, xi, z, 0.0), jacobi_interpolant(p, xi, z, 1.0));
    CHECK(d * d <= kPi * kPi / 4 * z.squaredNorm() + 1e-12);
  }
}

TEST_CASE("Hessian matches finite differences") {
  std::mt19937_64 rng(5);
  const double s = 1e-4;
  for (int k = 0; k < 100; ++k) {
    const Vec3 x = random_point(rng);
    const Vec3 y = exp_map(x, random_tangent(x, 1.0, rng).normalized() * (0.1 + 2.8 * std::uniform_real_distribution<double>(0, 1)(rng)));
    const Vec3 v = random_tangent(x, 1.0, rng).normalized();
    auto f = [&](double t) {
      const double d = distance(exp_map(x, t * v), y);
      return 0.5 * d * d;
    };
    const double fd = (f(s) - 2 * f(0) + f(-s)) / (s * s);
    CHECK(hessian_half_dsq(x, y).quad(v) == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
  }
}
