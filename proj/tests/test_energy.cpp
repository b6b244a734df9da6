#include <cmath>
#include <random>

#include "doctest.h"
#include "sphere_euler/energy.hpp"

using namespace sphere_euler;

namespace {

ScalarField zonal(const Mesh& m, double a) {
  ScalarField f(Eigen::Index(m.size()));
  for (std::size_t i = 0; i < m.size(); ++i) f[Eigen::Index(i)] = 1.0 + a * m.nodes[i].z();
  return f;
}

}  // namespace

TEST_CASE("internal energy of the uniform density") {
  auto m = build_icosphere(3);
  const ScalarField u = uniform_density(*m);
  CHECK(internal_energy(*m, u, ThetaModel::power(1.4)) == doctest::Approx(std::pow(kFourPi, -0.4)).epsilon(1e-12));
  CHECK(internal_energy(*m, u, ThetaModel::log()) == doctest::Approx(std::log(1.0 / kFourPi)).epsilon(1e-12));
}

TEST_CASE("pressure") {
  const auto t2 = ThetaModel::power(2.0);
  CHECK(pressure(0.0, t2) == 0.0);
  CHECK(pressure(3.0, t2) == doctest::Approx(9.0));
  for (const auto& th : {ThetaModel::power(1.4), ThetaModel::power(5.0 / 3.0), ThetaModel::log()})
    for (double r = 0.05; r < 5.0; r *= 1.3)
      CHECK(r * th.theta1(r) - r * th.theta(r) == doctest::Approx(pressure(r, th)).epsilon(1e-12));
}

TEST_CASE("chi inverts Theta1") {
  for (const auto& th : {ThetaModel::power(1.4), ThetaModel::power(2.0, 0.5), ThetaModel::log()})
    for (double r = 0.05; r < 5.0; r *= 1.7) CHECK(th.chi(th.theta1(r)) == doctest::Approx(r).epsilon(1e-10));
}

TEST_CASE("Phi from Theta") {
  const double g = 1.4;
  const auto th = ThetaModel::from_theta1_power(g);
  const PhiModel p = phi_from_theta(th);
  CHECK(p.phi(1.0) == doctest::Approx((g - 1) / (2 * (2 * g - 1))).epsilon(1e-12));
  const double d = 1e-4;
  CHECK((p.phi(1 + d) - 2 * p.phi(1) + p.phi(1 - d)) / (d * d) == doctest::Approx(p.d2phi(1.0)).epsilon(1e-6));
  const double k = std::pow(th.dtheta1(1.0), 2);
  CHECK(p.d2phi(1.0) == doctest::Approx(k).epsilon(1e-12));
}

TEST_CASE("Phi entropy and information") {
  auto m = build_icosphere(4);
  const ScalarField mu = uniform_density(*m);
  const ScalarField one = ScalarField::Ones(mu.size());
  CHECK(std::abs(phi_entropy(*m, one, mu, PhiModel::square())) < 1e-12);
  CHECK(phi_information(*m, one, mu, PhiModel::half_square()) < 1e-20);
  const ScalarField f = zonal(*m, 0.1);
  CHECK(phi_entropy(*m, f, mu, PhiModel::square()) == doctest::Approx(0.01 / 3).epsilon(0.01));
  CHECK(phi_information(*m, zonal(*m, 1.0), mu, PhiModel::half_square()) == doctest::Approx(2.0 / 3).epsilon(0.01));
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-0.4, 0.4);
  for (int k = 0; k < 20; ++k) {
    ScalarField r(mu.size());
    const double a = u(rng), b = u(rng), c = u(rng);
    for (std::size_t i = 0; i < m->size(); ++i) {
      const Vec3& x = m->nodes[i];
      r[Eigen::Index(i)] = 1.0 + a * x.x() + b * x.y() * x.z() + c * x.z() * x.z();
    }
    CHECK(phi_entropy(*m, r, mu, PhiModel::r_log_r()) >= -1e-14);
  }
}

TEST_CASE("special Fisher functional") {
  auto m = build_icosphere(4);
  const auto th = ThetaModel::power(1.4);
  CHECK(special_fisher(*m, uniform_density(*m), th) < 1e-24);
  const ScalarField r = normalize_density(*m, zonal(*m, 0.3));
  const PhiModel p = phi_from_theta(th);
  const ScalarField comp = special_fisher_density(*m, r, th, FisherForm::Composed);
  const ScalarField chain = special_fisher_density(*m, r, th, FisherForm::ChainRule);
  // chain rule against Phi'' |grad rho|^2
  const VectorField g = gradient(*m, r);
  for (Eigen::Index i = 0; i < r.size(); ++i)
    CHECK(chain[i] == doctest::Approx(p.d2phi(r[i]) * g.row(i).squaredNorm()).epsilon(1e-8).scale(1e-12));
  CHECK(comp.dot(m->weights) == doctest::Approx(chain.dot(m->weights)).epsilon(0.01));
  auto m3 = build_icosphere(3);
  const double f3 = special_fisher(*m3, normalize_density(*m3, zonal(*m3, 0.3)), th);
  CHECK(f3 == doctest::Approx(special_fisher(*m, r, th)).epsilon(0.05));
}

TEST_CASE("admissibility") {
  CHECK(check_admissible(PhiModel::r_log_r()).admissible);
  CHECK(check_admissible(PhiModel::half_square()).admissible);
  for (double g : {1.1, 1.25, 1.4, 1.49}) CHECK(check_admissible(PhiModel::power(2 * g - 1)).admissible);
  CHECK_FALSE(check_admissible(PhiModel::power(2 * 1.8 - 1)).admissible);
}

TEST_CASE("convexity hypotheses") {
  const auto a = check_convexity_hypotheses(ThetaModel::power(1.4));
  CHECK(a.all());
  const auto b = check_convexity_hypotheses(ThetaModel::power(5.0 / 3.0));
  CHECK(b.holds[0]);
  CHECK(b.holds[1]);
  CHECK(b.holds[2]);
  const auto c = check_convexity_hypotheses(ThetaModel::log());
  CHECK(c.holds[0]);
  CHECK_FALSE(c.holds[1]);
}

TEST_CASE("entropy production") {
  auto m = build_icosphere(4);
  const ScalarField mu = uniform_density(*m);
  const ScalarField one = ScalarField::Ones(mu.size());
  CHECK(std::abs(entropy_production_margin(*m, one, mu, PhiModel::half_square(), 1.0)) < 1e-14);
  const ScalarField f = zonal(*m, 0.2);
  CHECK(entropy_production_margin(*m, f, mu, PhiModel::half_square(), 1.0) ==
        doctest::Approx(0.04 / 3 - 0.04 / 6).epsilon(0.01));
  // the first spherical harmonics saturate the Poincare inequality at kappa0 = 2
  CHECK(std::abs(entropy_production_margin(*m, zonal(*m, 0.05), mu, PhiModel::half_square(), 2.0)) < 1e-6);
}

TEST_CASE("Jensen bound") {
  auto m = build_icosphere(3);
  const auto th = ThetaModel::power(1.4);
  CHECK(std::abs(jensen_bound_margin(*m, uniform_density(*m), th)) < 1e-12);
  CHECK(jensen_bound_margin(*m, normalize_density(*m, zonal(*m, 0.5)), th) >= -1e-12);
}
