#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>
#include <vector>

namespace sphere_euler {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat2 = Eigen::Matrix2d;

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Raised for antipodal pairs; callers decide how to fall back.
class CutLocusError : public DomainError {
 public:
  using DomainError::DomainError;
};

// Iterative solver gave up; the message carries the last residual.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

constexpr double kPi = 3.14159265358979323846;
constexpr double kFourPi = 4.0 * kPi;

// Tangency below kSilentTol is corrected quietly, above kRejectTol it throws.
constexpr double kSilentTol = 1e-12;
constexpr double kRejectTol = 1e-6;

struct SpherePoint {
  Vec3 coords;

  SpherePoint() : coords(1.0, 0.0, 0.0) {}
  explicit SpherePoint(const Vec3& v);
  SpherePoint(double x, double y, double z) : SpherePoint(Vec3(x, y, z)) {}
};

struct TangentVector {
  SpherePoint base;
  Vec3 vec;

  TangentVector(const SpherePoint& b, const Vec3& v);
};

struct FrenetFrame {
  Vec3 tangent;
  Vec3 normal_n;
  Vec3 binormal;
  double kappa_n = 0.0;
  double kappa_g = 0.0;
  double kappa = 0.0;
};

struct FrenetSample {
  double t = 0.0;
  FrenetFrame frame;
  double speed = 0.0;       // ds/dt
  double speed_rate = 0.0;  // d2s/dt2
};

// Ambient 3x3 representation of the Hessian of y -> d(x, y)^2 / 2 taken in x.
struct HessianOperator {
  Vec3 base;
  Mat3 matrix;

  double quad(const Vec3& v) const { return v.dot(matrix * v); }
  // Restriction to the tangent plane in the basis returned by tangent_basis(base).
  Mat2 tangent_matrix() const;
  Eigen::Vector2d eigenvalues() const;
  double det() const;
};

Vec3 project_tangent(const Vec3& x, const Vec3& v);
// Orthonormal (t1, t2) with t1 x t2 = x.
void tangent_basis(const Vec3& x, Vec3& t1, Vec3& t2);

Vec3 exp_map(const Vec3& x, const Vec3& w);
Vec3 log_map(const Vec3& x, const Vec3& y);
double distance(const Vec3& x, const Vec3& y);

SpherePoint exp_map(const SpherePoint& x, const TangentVector& w);
TangentVector log_map(const SpherePoint& x, const SpherePoint& y);
double distance(const SpherePoint& x, const SpherePoint& y);

// Transport v in T_x to T_y along the minimizing geodesic.
Vec3 parallel_transport(const Vec3& x, const Vec3& y, const Vec3& v);

// Velocity at time 1 of t -> exp_x(t w).
Vec3 geodesic_velocity(const Vec3& x, const Vec3& w);

HessianOperator hessian_half_dsq(const Vec3& x, const Vec3& y);
double jacobian_det_tau_cot(double tau);

std::vector<FrenetSample> frenet_from_samples(const std::vector<double>& t,
                                              const std::vector<Vec3>& X);

Vec3 jacobi_interpolant(const Vec3& x, const Vec3& xi, const Vec3& zeta, double s);

Mat3 rotation_about(const Vec3& axis, double angle);

}  // namespace sphere_euler
