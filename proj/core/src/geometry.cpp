#include "sphere_euler/geometry.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>

namespace sphere_euler {

namespace {

Vec3 checked_unit(const Vec3& v) {
  const double n = v.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw DomainError("sphere point has zero or non-finite norm");
  if (std::abs(n - 1.0) > kRejectTol)
    throw DomainError("sphere point off the unit sphere by " + std::to_string(std::abs(n - 1.0)));
  return v / n;
}

Vec3 checked_tangent(const Vec3& x, const Vec3& w) {
  const double dn = x.dot(w);
  if (std::abs(dn) > kRejectTol * std::max(1.0, w.norm()))
    throw DomainError("vector is not tangent: x.w = " + std::to_string(dn));
  return w - dn * x;
}

}  // namespace

SpherePoint::SpherePoint(const Vec3& v) : coords(checked_unit(v)) {}

TangentVector::TangentVector(const SpherePoint& b, const Vec3& v)
    : base(b), vec(checked_tangent(b.coords, v)) {}

Vec3 project_tangent(const Vec3& x, const Vec3& v) { return v - x.dot(v) * x; }

void tangent_basis(const Vec3& x, Vec3& t1, Vec3& t2) {
  Vec3 a = std::abs(x.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  t1 = (a - a.dot(x) * x).normalized();
  t2 = x.cross(t1);
}

Vec3 exp_map(const Vec3& x, const Vec3& w) {
  const Vec3 v = checked_tangent(x, w);
  const double n = v.norm();
  if (n == 0.0) return x;
  Vec3 y = x * std::cos(n) + v * (std::sin(n) / n);
  return y / y.norm();
}

Vec3 log_map(const Vec3& x, const Vec3& y) {
  const double c = x.dot(y);
  const Vec3 u = y - c * x;
  const double s = u.norm();
  if (c < 0.0 && s < 1e-10) throw CutLocusError("log_map: antipodal points");
  if (s == 0.0) return Vec3::Zero();
  const double theta = std::atan2(s, c);
  Vec3 z = u * (theta / s);
  return z - x.dot(z) * x;
}

double distance(const Vec3& x, const Vec3& y) {
  return std::atan2(x.cross(y).norm(), std::clamp(x.dot(y), -1.0, 1.0));
}

SpherePoint exp_map(const SpherePoint& x, const TangentVector& w) {
  if ((x.coords - w.base.coords).norm() > kRejectTol)
    throw DomainError("exp_map: tangent vector attached to a different base point");
  return SpherePoint(exp_map(x.coords, w.vec));
}

TangentVector log_map(const SpherePoint& x, const SpherePoint& y) {
  return TangentVector(x, log_map(x.coords, y.coords));
}

double distance(const SpherePoint& x, const SpherePoint& y) { return distance(x.coords, y.coords); }

Vec3 parallel_transport(const Vec3& x, const Vec3& y, const Vec3& v) {
  const Vec3 w = log_map(x, y);
  const double th = w.norm();
  if (th < 1e-15) return project_tangent(y, v);
  const Vec3 e = w / th;
  const double a = v.dot(e);
  const Vec3 perp = v - a * e - x.dot(v) * x;
  return a * (-x * std::sin(th) + e * std::cos(th)) + perp;
}

Vec3 geodesic_velocity(const Vec3& x, const Vec3& w) {
  const double th = w.norm();
  if (th == 0.0) return w;
  const Vec3 e = w / th;
  return th * (-x * std::sin(th) + e * std::cos(th));
}

Mat2 HessianOperator::tangent_matrix() const {
  Vec3 t1, t2;
  tangent_basis(base, t1, t2);
  Mat2 m;
  m(0, 0) = t1.dot(matrix * t1);
  m(0, 1) = t1.dot(matrix * t2);
  m(1, 0) = t2.dot(matrix * t1);
  m(1, 1) = t2.dot(matrix * t2);
  return m;
}

Eigen::Vector2d HessianOperator::eigenvalues() const {
  Eigen::SelfAdjointEigenSolver<Mat2> es(tangent_matrix());
  return es.eigenvalues();
}

double HessianOperator::det() const { return tangent_matrix().determinant(); }

double jacobian_det_tau_cot(double tau) {
  if (!(tau >= 0.0) || tau >= kPi / 2) throw DomainError("jacobian_det_tau_cot: tau outside [0, pi/2)");
  if (tau < 1e-6) return 1.0 - tau * tau / 3.0;
  return tau * std::cos(tau) / std::sin(tau);
}

HessianOperator hessian_half_dsq(const Vec3& x, const Vec3& y) {
  HessianOperator H;
  H.base = x;
  const Mat3 P = Mat3::Identity() - x * x.transpose();
  const Vec3 z = log_map(x, y);
  const double tau = z.norm();
  if (kPi - tau < 1e-9) throw CutLocusError("hessian_half_dsq: antipodal points");
  if (tau < 1e-12) {
    H.matrix = P;
    return H;
  }
  const Vec3 eta = z / tau;
  const double delta = tau < 1e-6 ? 1.0 - tau * tau / 3.0 : tau * std::cos(tau) / std::sin(tau);
  H.matrix = (1.0 - delta) * eta * eta.transpose() + delta * P;
  return H;
}

std::vector<FrenetSample> frenet_from_samples(const std::vector<double>& t,
                                              const std::vector<Vec3>& X) {
  const std::size_t n = X.size();
  if (n < 5 || t.size() != n) throw DomainError("frenet_from_samples: need >= 5 time-stamped samples");
  const double dt = (t.back() - t.front()) / double(n - 1);
  if (!(dt > 0.0)) throw DomainError("frenet_from_samples: time stamps must increase");
  for (std::size_t k = 1; k < n; ++k)
    if (std::abs((t[k] - t[k - 1]) - dt) > 1e-9 * std::max(1.0, std::abs(dt)))
      throw DomainError("frenet_from_samples: time stamps must be uniform");

  std::vector<FrenetSample> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    Vec3 d1, d2;
    if (k == 0) {
      d1 = (-3.0 * X[0] + 4.0 * X[1] - X[2]) / (2.0 * dt);
      d2 = (2.0 * X[0] - 5.0 * X[1] + 4.0 * X[2] - X[3]) / (dt * dt);
    } else if (k == n - 1) {
      d1 = (3.0 * X[k] - 4.0 * X[k - 1] + X[k - 2]) / (2.0 * dt);
      d2 = (2.0 * X[k] - 5.0 * X[k - 1] + 4.0 * X[k - 2] - X[k - 3]) / (dt * dt);
    } else {
      d1 = (X[k + 1] - X[k - 1]) / (2.0 * dt);
      d2 = (X[k + 1] - 2.0 * X[k] + X[k - 1]) / (dt * dt);
    }
    const Vec3 x = X[k].normalized();
    d1 = project_tangent(x, d1);
    const double sd = d1.norm();
    if (sd < 1e-12) throw DomainError("frenet_from_samples: stationary trajectory");
    const double sdd = d1.dot(d2) / sd;
    const Vec3 g1 = d1 / sd;
    const Vec3 g2 = (d2 - sdd * g1) / (sd * sd);
    const Vec3 side = x.cross(g1);

    FrenetSample& s = out[k];
    s.t = t[k];
    s.speed = sd;
    s.speed_rate = sdd;
    s.frame.tangent = g1;
    s.frame.kappa_n = g2.dot(x);
    s.frame.kappa_g = g2.dot(side);
    s.frame.kappa = std::hypot(s.frame.kappa_n, s.frame.kappa_g);
    if (s.frame.kappa > 0.0) {
      s.frame.normal_n = (s.frame.kappa_n * x + s.frame.kappa_g * side) / s.frame.kappa;
    } else {
      s.frame.normal_n = x;
    }
    s.frame.binormal = g1.cross(s.frame.normal_n);
  }
  return out;
}

Vec3 jacobi_interpolant(const Vec3& x, const Vec3& xi, const Vec3& zeta, double s) {
  const Vec3 v = xi + s * zeta;
  if (v.norm() >= kPi) throw CutLocusError("jacobi_interpolant: tangent norm reaches pi");
  return exp_map(x, v);
}

Mat3 rotation_about(const Vec3& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

}  // namespace sphere_euler
