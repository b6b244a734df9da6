#include "sphere_euler/energy.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <algorithm>
#include <cmath>
#include <limits>

namespace sphere_euler {

namespace {

double integrate_gk(const std::function<double(double)>& f, double a, double b) {
  if (b <= a) return 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-13);
}

// nondecreasing slopes on a (possibly nonuniform) grid
bool slopes_nondecreasing(const std::vector<double>& x, const std::vector<double>& y, double& worst,
                          double& at) {
  worst = 0.0;
  at = 0.0;
  bool ok = true;
  for (std::size_t k = 1; k + 1 < x.size(); ++k) {
    const double s0 = (y[k] - y[k - 1]) / (x[k] - x[k - 1]);
    const double s1 = (y[k + 1] - y[k]) / (x[k + 1] - x[k]);
    const double scale = std::abs(s0) + std::abs(s1) + 1e-300;
    const double d = (s1 - s0) / scale;
    if (d < worst) {
      worst = d;
      at = x[k];
    }
    if (d < -1e-8) ok = false;
  }
  return ok;
}

}  // namespace

ThetaModel ThetaModel::power(double gamma, double coef) {
  if (!(gamma > 1.0)) throw DomainError("ThetaModel::power: gamma must exceed 1");
  if (!(coef > 0.0)) throw DomainError("ThetaModel::power: coefficient must be positive");
  ThetaModel m;
  m.kind_ = Kind::Power;
  m.gamma_ = gamma;
  m.coef_ = coef;
  m.name_ = "power";
  return m;
}

ThetaModel ThetaModel::from_theta1_power(double gamma) { return power(gamma, 1.0 / gamma); }

ThetaModel ThetaModel::log() {
  ThetaModel m;
  m.kind_ = Kind::Log;
  m.name_ = "log";
  return m;
}

ThetaModel ThetaModel::custom(Fn theta, Fn dtheta, Fn d2theta, std::string name) {
  ThetaModel m;
  m.kind_ = Kind::Custom;
  m.th_ = std::move(theta);
  m.dth_ = std::move(dtheta);
  m.d2th_ = std::move(d2theta);
  m.name_ = std::move(name);
  return m;
}

double ThetaModel::theta(double r) const {
  switch (kind_) {
    case Kind::Power: return coef_ * std::pow(r, gamma_ - 1.0);
    case Kind::Log: return std::log(r);
    default: return th_(r);
  }
}

double ThetaModel::dtheta(double r) const {
  switch (kind_) {
    case Kind::Power: return coef_ * (gamma_ - 1.0) * std::pow(r, gamma_ - 2.0);
    case Kind::Log: return 1.0 / r;
    default: return dth_(r);
  }
}

double ThetaModel::d2theta(double r) const {
  switch (kind_) {
    case Kind::Power: return coef_ * (gamma_ - 1.0) * (gamma_ - 2.0) * std::pow(r, gamma_ - 3.0);
    case Kind::Log: return -1.0 / (r * r);
    default: return d2th_(r);
  }
}

double ThetaModel::theta1(double r) const {
  switch (kind_) {
    case Kind::Power: return coef_ * gamma_ * std::pow(r, gamma_ - 1.0);
    case Kind::Log: return 1.0 + std::log(r);
    default: return r * dth_(r) + th_(r);
  }
}

double ThetaModel::dtheta1(double r) const {
  switch (kind_) {
    case Kind::Power: return coef_ * gamma_ * (gamma_ - 1.0) * std::pow(r, gamma_ - 2.0);
    case Kind::Log: return 1.0 / r;
    default: return r * d2th_(r) + 2.0 * dth_(r);
  }
}

double ThetaModel::theta1_at_zero() const {
  switch (kind_) {
    case Kind::Power: return 0.0;
    case Kind::Log: return -std::numeric_limits<double>::infinity();
    default: return theta1(1e-12);
  }
}

double ThetaModel::chi(double s) const {
  switch (kind_) {
    case Kind::Power:
      return s <= 0.0 ? 0.0 : std::pow(s / (coef_ * gamma_), 1.0 / (gamma_ - 1.0));
    case Kind::Log: return std::exp(s - 1.0);
    default: break;
  }
  if (s <= theta1_at_zero()) return 0.0;
  double lo = 0.0, hi = 1.0;
  while (theta1(hi) < s) {
    hi *= 2.0;
    if (hi > 1e300) throw DomainError("chi: no bracket");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-12 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (theta1(mid) < s) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

double ThetaModel::F(double r) const {
  if (r <= 0.0) return 0.0;
  return r * theta(r);
}

double ThetaModel::F_conj(double s) const {
  if (-s <= theta1_at_zero()) return 0.0;
  const double r = chi(-s);
  return s * r + F(r);
}

PhiModel PhiModel::r_log_r() {
  PhiModel p;
  p.phi = [](double r) { return r > 0.0 ? r * std::log(r) : 0.0; };
  p.dphi = [](double r) { return std::log(r) + 1.0; };
  p.d2phi = [](double r) { return 1.0 / r; };
  p.name = "r log r";
  return p;
}

PhiModel PhiModel::half_square() {
  PhiModel p;
  p.phi = [](double r) { return 0.5 * r * r; };
  p.dphi = [](double r) { return r; };
  p.d2phi = [](double) { return 1.0; };
  p.name = "r^2/2";
  return p;
}

PhiModel PhiModel::square() {
  PhiModel p;
  p.phi = [](double r) { return r * r; };
  p.dphi = [](double r) { return 2.0 * r; };
  p.d2phi = [](double) { return 2.0; };
  p.name = "r^2";
  return p;
}

PhiModel PhiModel::power(double q) {
  PhiModel p;
  p.phi = [q](double r) { return std::pow(r, q); };
  p.dphi = [q](double r) { return q * std::pow(r, q - 1.0); };
  p.d2phi = [q](double r) { return q * (q - 1.0) * std::pow(r, q - 2.0); };
  p.name = "r^" + std::to_string(q);
  return p;
}

double internal_energy(const Mesh& mesh, const ScalarField& rho, const ThetaModel& theta) {
  double u = 0.0;
  for (Eigen::Index i = 0; i < rho.size(); ++i) {
    if (rho[i] <= 0.0) {
      if (theta.needs_positive()) throw DomainError("internal_energy: zero density with log model");
      continue;
    }
    u += mesh.weights[i] * theta.F(rho[i]);
  }
  return u;
}

double pressure(double rho, const ThetaModel& theta) {
  if (rho < 0.0) throw DomainError("pressure: negative density");
  if (rho == 0.0) return 0.0;
  return rho * rho * theta.dtheta(rho);
}

PhiModel phi_from_theta(const ThetaModel& theta) {
  PhiModel p;
  p.provenance = PhiModel::Provenance::FromTheta;
  p.name = "from " + theta.name();
  if (theta.kind() == ThetaModel::Kind::Power) {
    const double g = theta.gamma(), c = theta.coef();
    const double K = c * c * g * g * (g - 1.0) * (g - 1.0);
    p.d2phi = [K, g](double r) { return K * std::pow(r, 2.0 * g - 3.0); };
    p.dphi = [K, g](double r) { return K * std::pow(r, 2.0 * g - 2.0) / (2.0 * g - 2.0); };
    p.phi = [K, g](double r) { return K * std::pow(r, 2.0 * g - 1.0) / ((2.0 * g - 2.0) * (2.0 * g - 1.0)); };
    return p;
  }
  if (theta.kind() == ThetaModel::Kind::Log) {
    // r Theta_1'(r)^2 = 1/r; the integral from 0 diverges, use r log r
    PhiModel q = PhiModel::r_log_r();
    q.provenance = PhiModel::Provenance::FromTheta;
    q.name = p.name;
    return q;
  }
  auto th = std::make_shared<ThetaModel>(theta);
  p.d2phi = [th](double r) {
    const double d = th->dtheta1(r);
    return r * d * d;
  };
  p.dphi = [th](double r) {
    return integrate_gk([th](double u) { const double d = th->dtheta1(u); return u * d * d; }, 0.0, r);
  };
  p.phi = [th](double r) {
    return integrate_gk([th, r](double u) { const double d = th->dtheta1(u); return (r - u) * u * d * d; },
                        0.0, r);
  };
  return p;
}

double phi_entropy(const Mesh& mesh, const ScalarField& f, const ScalarField& mu, const PhiModel& phi) {
  double a = 0.0, m = 0.0;
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    if (f[i] < 0.0) throw DomainError("phi_entropy: negative f");
    const double w = mesh.weights[i] * mu[i];
    a += w * phi.phi(f[i]);
    m += w * f[i];
  }
  return a - phi.phi(m);
}

double phi_information(const Mesh& mesh, const ScalarField& f, const ScalarField& mu, const PhiModel& phi) {
  const VectorField g = gradient(mesh, f);
  double s = 0.0;
  for (Eigen::Index i = 0; i < f.size(); ++i)
    s += mesh.weights[i] * mu[i] * phi.d2phi(f[i]) * g.row(i).squaredNorm();
  return s;
}

ScalarField special_fisher_density(const Mesh& mesh, const ScalarField& rho, const ThetaModel& theta,
                                   FisherForm form) {
  const Eigen::Index n = rho.size();
  ScalarField out(n);
  if (form == FisherForm::Composed) {
    ScalarField t1(n);
    for (Eigen::Index i = 0; i < n; ++i) t1[i] = theta.theta1(rho[i]);
    const VectorField g = gradient(mesh, t1);
    for (Eigen::Index i = 0; i < n; ++i) out[i] = rho[i] * g.row(i).squaredNorm();
  } else {
    const VectorField g = gradient(mesh, rho);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double d = theta.dtheta1(rho[i]);
      out[i] = rho[i] * d * d * g.row(i).squaredNorm();
    }
  }
  return out;
}

double special_fisher(const Mesh& mesh, const ScalarField& rho, const ThetaModel& theta, FisherForm form) {
  for (Eigen::Index i = 0; i < rho.size(); ++i)
    if (!(rho[i] > 0.0)) throw DomainError("special_fisher: density must be positive");
  return mesh.weights.dot(special_fisher_density(mesh, rho, theta, form));
}

std::vector<double> ProbeGrid::values() const {
  std::vector<double> v(points);
  const double a = std::log(lo), b = std::log(hi);
  for (int k = 0; k < points; ++k) v[k] = std::exp(a + (b - a) * k / (points - 1));
  return v;
}

AdmissibilityReport check_admissible(const PhiModel& phi, const ProbeGrid& grid) {
  const auto r = grid.values();
  std::vector<double> g(r.size());
  for (std::size_t k = 0; k < r.size(); ++k) {
    const double d = phi.d2phi(r[k]);
    if (!(d > 0.0)) throw DomainError("check_admissible: Phi'' vanishes at r = " + std::to_string(r[k]));
    g[k] = -1.0 / d;
  }
  AdmissibilityReport rep;
  rep.admissible = slopes_nondecreasing(r, g, rep.worst, rep.at);
  return rep;
}

HypothesisReport check_convexity_hypotheses(const ThetaModel& theta, const ProbeGrid& grid) {
  HypothesisReport rep;
  const auto r = grid.values();
  const std::size_t n = r.size();

  // (i) t -> Theta(e^t): first derivative r Theta', second r Theta' + r^2 Theta''
  {
    bool ok = true;
    for (double x : r) {
      const double d1 = x * theta.dtheta(x);
      const double d2 = d1 + x * x * theta.d2theta(x);
      if (!(d1 > 0.0)) ok = false;
      if (d2 < -1e-10 * (std::abs(d1) + std::abs(x * x * theta.d2theta(x)))) ok = false;
    }
    rep.holds[0] = ok;
    rep.detail[0] = ok ? "Theta(e^t) increasing and convex on grid" : "Theta(e^t) not increasing/convex";
  }
  // (ii) Theta -> 0 at 0+, -> infinity at infinity
  {
    bool ok = true;
    for (double x : r)
      if (!(theta.theta(x) > 0.0)) ok = false;
    const double slope_lo = ok ? r[0] * theta.dtheta(r[0]) / theta.theta(r[0]) : 0.0;
    const double slope_hi = ok ? r[n - 1] * theta.dtheta(r[n - 1]) / theta.theta(r[n - 1]) : 0.0;
    ok = ok && slope_lo > 1e-3 && slope_hi > 1e-3 && theta.theta(r[0]) < theta.theta(r[n - 1]);
    rep.holds[1] = ok;
    rep.detail[1] = "log-log slopes " + std::to_string(slope_lo) + ", " + std::to_string(slope_hi);
  }
  // (iii) Delta_2: Theta(2x) <= K2 Theta(x)
  {
    bool ok = true;
    std::vector<double> ratio;
    for (double x : r) {
      const double a = theta.theta(x);
      if (!(a > 0.0)) {
        ok = false;
        break;
      }
      ratio.push_back(theta.theta(2.0 * x) / a);
    }
    if (ok) {
      rep.K2 = *std::max_element(ratio.begin(), ratio.end());
      // the ratio must settle rather than keep growing at the top of the grid
      const std::size_t tail = ratio.size() - ratio.size() / 10;
      for (std::size_t k = tail + 1; k < ratio.size(); ++k)
        if (ratio[k] > ratio[k - 1] * (1.0 + 1e-6)) ok = false;
      ok = ok && std::isfinite(rep.K2);
    }
    rep.holds[2] = ok;
    rep.detail[2] = ok ? "K2 = " + std::to_string(rep.K2) : "no finite K2 on grid";
  }
  // (iv) r Theta_1'(r) nondecreasing
  {
    bool ok = true;
    double prev = r[0] * theta.dtheta1(r[0]);
    for (std::size_t k = 1; k < n; ++k) {
      const double cur = r[k] * theta.dtheta1(r[k]);
      if (cur < prev - 1e-10 * (std::abs(prev) + std::abs(cur))) ok = false;
      prev = cur;
    }
    rep.holds[3] = ok;
    rep.detail[3] = ok ? "r Theta_1' nondecreasing" : "r Theta_1' decreases somewhere";
  }
  // (v) -1/(r Theta_1'^2) convex
  {
    std::vector<double> g(n);
    bool pos = true;
    for (std::size_t k = 0; k < n; ++k) {
      const double d = theta.dtheta1(r[k]);
      if (!(d != 0.0)) pos = false;
      g[k] = -1.0 / (r[k] * d * d);
    }
    double worst = 0.0, at = 0.0;
    const bool ok = pos && slopes_nondecreasing(r, g, worst, at);
    rep.holds[4] = ok;
    rep.detail[4] = "worst normalized second difference " + std::to_string(worst);
  }
  return rep;
}

double entropy_production_margin(const Mesh& mesh, const ScalarField& f, const ScalarField& mu,
                                 const PhiModel& phi, double kappa0) {
  if (!(kappa0 > 0.0)) throw DomainError("entropy_production_margin: kappa0 must be positive");
  return phi_information(mesh, f, mu, phi) / (2.0 * kappa0) - phi_entropy(mesh, f, mu, phi);
}

double phi_composite(const ThetaModel& theta, const PhiModel& phi, double value) {
  if (value <= 0.0) return 0.0;
  double lo = 0.0, hi = 1.0;
  while (phi.phi(hi) < value) {
    hi *= 2.0;
    if (hi > 1e200) throw DomainError("phi_composite: no bracket");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (phi.phi(mid) < value) lo = mid; else hi = mid;
    if (hi - lo <= 1e-15 * hi) break;
  }
  return theta.F(0.5 * (lo + hi));
}

double jensen_bound_margin(const Mesh& mesh, const ScalarField& rho, const ThetaModel& theta) {
  const PhiModel phi = phi_from_theta(theta);
  const double area = mesh.weights.sum();
  double avg = 0.0;
  for (Eigen::Index i = 0; i < rho.size(); ++i) avg += mesh.weights[i] * phi.phi(rho[i]);
  avg /= area;
  return area * phi_composite(theta, phi, avg) - internal_energy(mesh, rho, theta);
}

}  // namespace sphere_euler
