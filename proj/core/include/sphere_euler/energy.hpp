#pragma once

#include <functional>
#include <string>

#include "sphere_euler/mesh.hpp"

namespace sphere_euler {

// Specific internal energy Theta with Theta_1 = r Theta' + Theta and
// chi = Theta_1^{-1}. F(r) = r Theta(r) is the energy density.
class ThetaModel {
 public:
  enum class Kind { Power, Log, Custom };
  using Fn = std::function<double(double)>;

  // Theta(r) = coef * r^(gamma - 1)
  static ThetaModel power(double gamma, double coef = 1.0);
  // Theta_1(r) = r^(gamma - 1), i.e. Theta(r) = r^(gamma - 1) / gamma.
  static ThetaModel from_theta1_power(double gamma);
  static ThetaModel log();
  static ThetaModel custom(Fn theta, Fn dtheta, Fn d2theta, std::string name = "custom");

  Kind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  double gamma() const { return gamma_; }
  double coef() const { return coef_; }

  double theta(double r) const;
  double dtheta(double r) const;
  double d2theta(double r) const;
  double theta1(double r) const;
  double dtheta1(double r) const;
  double chi(double s) const;
  double F(double r) const;  // r Theta(r), 0 at r = 0 when finite
  // Legendre-type conjugate F°(s) = inf_{r >= 0} (s r + F(r)).
  double F_conj(double s) const;
  // Whether Theta needs strictly positive densities.
  bool needs_positive() const { return kind_ == Kind::Log; }
  double theta1_at_zero() const;

 private:
  Kind kind_ = Kind::Power;
  std::string name_;
  double gamma_ = 1.4, coef_ = 1.0;
  Fn th_, dth_, d2th_;
};

struct PhiModel {
  enum class Provenance { FromTheta, Explicit };
  std::function<double(double)> phi, dphi, d2phi;
  Provenance provenance = Provenance::Explicit;
  std::string name;

  static PhiModel r_log_r();
  static PhiModel half_square();  // r^2 / 2
  static PhiModel square();       // r^2
  static PhiModel power(double p);  // r^p
};

// Internal energy and pressure.
double internal_energy(const Mesh& mesh, const ScalarField& rho, const ThetaModel& theta);
double pressure(double rho, const ThetaModel& theta);

PhiModel phi_from_theta(const ThetaModel& theta);

// Measures mu are densities against the mesh weights.
double phi_entropy(const Mesh& mesh, const ScalarField& f, const ScalarField& mu, const PhiModel& phi);
double phi_information(const Mesh& mesh, const ScalarField& f, const ScalarField& mu, const PhiModel& phi);

enum class FisherForm { Composed, ChainRule };
double special_fisher(const Mesh& mesh, const ScalarField& rho, const ThetaModel& theta,
                      FisherForm form = FisherForm::Composed);
// Per-node integrand rho |grad(Theta_1 o rho)|^2.
ScalarField special_fisher_density(const Mesh& mesh, const ScalarField& rho, const ThetaModel& theta,
                                   FisherForm form = FisherForm::Composed);

struct ProbeGrid {
  double lo = 1e-4, hi = 1e4;
  int points = 400;
  std::vector<double> values() const;
};

struct AdmissibilityReport {
  bool admissible = false;
  double worst = 0.0;  // most negative normalized second divided difference
  double at = 0.0;
};
AdmissibilityReport check_admissible(const PhiModel& phi, const ProbeGrid& grid = {});

struct HypothesisReport {
  bool holds[5] = {false, false, false, false, false};
  double K2 = 0.0;
  std::string detail[5];
  bool all() const { return holds[0] && holds[1] && holds[2] && holds[3] && holds[4]; }
};
HypothesisReport check_convexity_hypotheses(const ThetaModel& theta, const ProbeGrid& grid = {});

// (1 / 2 kappa0) I_Phi - Ent_Phi.
double entropy_production_margin(const Mesh& mesh, const ScalarField& f, const ScalarField& mu,
                                 const PhiModel& phi, double kappa0);

// Concave phi with r Theta(r) = phi(Phi(r)), evaluated by inverting Phi.
double phi_composite(const ThetaModel& theta, const PhiModel& phi, double value);
// 4 pi * phi(mean of Phi(rho)) - U(rho), the Jensen gap against normalized measure.
double jensen_bound_margin(const Mesh& mesh, const ScalarField& rho, const ThetaModel& theta);

}  // namespace sphere_euler
