#include "sphere_euler/tangent_flow.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <algorithm>
#include <cmath>
#include <ostream>

#include "sphere_euler/ot.hpp"

namespace sphere_euler {

namespace {

constexpr int kMaxFixedPoint = 20;
constexpr double kFixedPointTol = 1e-12;

// Second-order first derivative of uniformly sampled vectors.
std::vector<Vec3> derivative(const std::vector<Vec3>& y, double dt) {
  const std::size_t n = y.size();
  std::vector<Vec3> d(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (k == 0) {
      d[k] = (-3.0 * y[0] + 4.0 * y[1] - y[2]) / (2.0 * dt);
    } else if (k == n - 1) {
      d[k] = (3.0 * y[k] - 4.0 * y[k - 1] + y[k - 2]) / (2.0 * dt);
    } else {
      d[k] = (y[k + 1] - y[k - 1]) / (2.0 * dt);
    }
  }
  return d;
}

double trapezoid(const std::vector<double>& f, double dt) {
  double s = 0.0;
  for (std::size_t k = 0; k + 1 < f.size(); ++k) s += 0.5 * (f[k] + f[k + 1]) * dt;
  return s;
}

double uniform_step(const std::vector<double>& t) {
  if (t.size() < 5) throw DomainError("trajectory too short: need at least 5 samples");
  const double dt = (t.back() - t.front()) / double(t.size() - 1);
  if (!(dt > 0.0)) throw DomainError("trajectory times must increase");
  return dt;
}

}  // namespace

void PhasePoint::project() {
  X.normalize();
  V -= X.dot(V) * X;
}

Forcing forcing_from_pressure(PressureGradient grad) {
  return [grad = std::move(grad)](const Vec3& X, double t) -> Vec3 { return -X - grad(X, t); };
}

PressureGradient interpolated_pressure(MeshPtr mesh, std::vector<double> times, std::vector<VectorField> fields) {
  if (times.empty() || times.size() != fields.size())
    throw DomainError("interpolated_pressure: times and fields differ in length");
  return [mesh = std::move(mesh), times = std::move(times), fields = std::move(fields)](const Vec3& X,
                                                                                        double t) -> Vec3 {
    const int hint = nearest_node(*mesh, X);
    if (times.size() == 1 || t <= times.front()) return project_tangent(X, interpolate(*mesh, fields.front(), X, hint));
    if (t >= times.back()) return project_tangent(X, interpolate(*mesh, fields.back(), X, hint));
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const std::size_t k = std::size_t(it - times.begin());
    const double a = (t - times[k - 1]) / (times[k] - times[k - 1]);
    const Vec3 g = (1.0 - a) * interpolate(*mesh, fields[k - 1], X, hint) + a * interpolate(*mesh, fields[k], X, hint);
    return project_tangent(X, g);
  };
}

PhasePoint step_predictor(const PhasePoint& state, double h, const Forcing& g, double t) {
  if (!(h > 0.0)) throw DomainError("step_predictor: h must be positive");
  PhasePoint s0 = state;
  s0.project();
  const Vec3& X0 = s0.X;
  const Vec3& V0 = s0.V;
  const Vec3 half0 = V0 + 0.5 * h * project_tangent(X0, g(X0, t));

  Vec3 X1 = exp_map(X0, h * V0);
  Vec3 V1 = Vec3::Zero();
  double diff = 0.0;
  for (int it = 0; it < kMaxFixedPoint; ++it) {
    V1 = parallel_transport(X0, X1, half0) + 0.5 * h * project_tangent(X1, g(X1, t + h));
    const Vec3 avg = 0.5 * (V0 + parallel_transport(X1, X0, V1));
    const Vec3 Xn = exp_map(X0, h * avg);
    diff = (Xn - X1).norm();
    X1 = Xn;
    if (diff < kFixedPointTol) {
      V1 = parallel_transport(X0, X1, half0) + 0.5 * h * project_tangent(X1, g(X1, t + h));
      PhasePoint out{X1, V1};
      out.project();
      return out;
    }
  }
  throw ConvergenceError("step_predictor: fixed point did not converge", diff);
}

std::vector<PhasePoint> integrate_integral_equation(const PhasePoint& initial, const PressureGradient& grad,
                                                    double tau, double dt) {
  if (!(dt > 0.0) || !(tau >= 0.0)) throw DomainError("integrate_integral_equation: need dt > 0, tau >= 0");
  const int steps = int(std::llround(tau / dt));
  if (std::abs(steps * dt - tau) > 1e-9 * std::max(1.0, tau))
    throw DomainError("integrate_integral_equation: tau must be a multiple of dt");
  auto F = [&](const Vec3& X, const Vec3& V, double t) -> Vec3 {
    return -project_tangent(X, grad(X, t)) - (V.squaredNorm() - 1.0) * X;
  };
  std::vector<PhasePoint> out;
  out.reserve(steps + 1);
  PhasePoint s = initial;
  s.project();
  out.push_back(s);
  const double c = std::cos(dt), sn = std::sin(dt);
  for (int k = 0; k < steps; ++k) {
    const double t0 = k * dt;
    const Vec3 F0 = F(s.X, s.V, t0);
    const Vec3 Xr = c * s.X + sn * s.V + 0.5 * dt * sn * F0;
    const Vec3 Vr = -sn * s.X + c * s.V + 0.5 * dt * c * F0;
    PhasePoint n{Xr, Vr};
    double diff = 0.0;
    bool ok = false;
    for (int it = 0; it < kMaxFixedPoint; ++it) {
      const Vec3 Vn = Vr + 0.5 * dt * F(n.X, n.V, t0 + dt);
      diff = (Vn - n.V).norm();
      n.V = Vn;
      if (diff < kFixedPointTol) {
        ok = true;
        break;
      }
    }
    if (!ok) throw ConvergenceError("integrate_integral_equation: fixed point did not converge", diff);
    n.project();
    s = n;
    out.push_back(s);
  }
  return out;
}

TrajectoryBundle integrate_bundle(const Mesh& mesh, const VectorField& V0, const Forcing& g, double h, int steps,
                                  std::string forcing_label) {
  if (steps < 0) throw DomainError("integrate_bundle: negative step count");
  const int n = int(mesh.size());
  TrajectoryBundle b;
  b.h = h;
  b.forcing = std::move(forcing_label);
  b.times.resize(steps + 1);
  for (int k = 0; k <= steps; ++k) b.times[k] = k * h;
  b.paths.assign(n, {});
  b.labels.resize(n);
#ifdef SPHERE_EULER_HAVE_OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int i = 0; i < n; ++i) {
    b.labels[i] = i;
    auto& p = b.paths[i];
    p.reserve(steps + 1);
    PhasePoint s{mesh.nodes[i], V0.row(i).transpose()};
    s.project();
    p.push_back(s);
    for (int k = 0; k < steps; ++k) {
      s = step_predictor(s, h, g, k * h);
      p.push_back(s);
    }
  }
  return b;
}

void write_trajectories(std::ostream& os, const TrajectoryBundle& b) {
  os << "# t particle_id X0 X1 X2 V0 V1 V2\n";
  char buf[256];
  for (std::size_t k = 0; k < b.times.size(); ++k) {
    for (std::size_t p = 0; p < b.paths.size(); ++p) {
      const PhasePoint& s = b.paths[p][k];
      std::snprintf(buf, sizeof buf, "%.17g %d %.17g %.17g %.17g %.17g %.17g %.17g\n", b.times[k], b.labels[p],
                    s.X.x(), s.X.y(), s.X.z(), s.V.x(), s.V.y(), s.V.z());
      os << buf;
    }
  }
}

double particle_cost(const std::vector<double>& t, const std::vector<PhasePoint>& path) {
  const double dt = uniform_step(t);
  std::vector<Vec3> X(path.size()), V(path.size());
  for (std::size_t k = 0; k < path.size(); ++k) {
    X[k] = path[k].X;
    V[k] = path[k].V;
  }
  const auto dX = derivative(X, dt);
  const auto dV = derivative(V, dt);
  std::vector<double> f(path.size());
  for (std::size_t k = 0; k < path.size(); ++k) f[k] = dX[k].squaredNorm() + dV[k].squaredNorm();
  return trapezoid(f, dt);
}

double particle_cost_frenet(const std::vector<double>& t, const std::vector<PhasePoint>& path) {
  const double dt = uniform_step(t);
  std::vector<Vec3> X(path.size());
  for (std::size_t k = 0; k < path.size(); ++k) X[k] = path[k].X;
  const auto fr = frenet_from_samples(t, X);
  std::vector<double> f(path.size());
  for (std::size_t k = 0; k < fr.size(); ++k) {
    const double sd = fr[k].speed;
    f[k] = sd * sd + std::pow(sd, 4) * fr[k].frame.kappa * fr[k].frame.kappa + fr[k].speed_rate * fr[k].speed_rate;
  }
  return trapezoid(f, dt);
}

TangentCostReport tangent_cost(const Mesh& mesh, const TrajectoryBundle& traj, const ScalarField& rho0,
                               const Forcing& g) {
  const double dt = uniform_step(traj.times);
  if (traj.paths.size() != mesh.size()) throw DomainError("tangent_cost: one particle per node expected");
  const int n = int(mesh.size());
  TangentCostReport r;
  r.per_particle.resize(n);
  std::vector<double> curv(n), kg(n), forc(n, 0.0);
  std::vector<Vec3> ends(n);
  Eigen::VectorXd masses(n);
#ifdef SPHERE_EULER_HAVE_OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int p = 0; p < n; ++p) {
    const auto& path = traj.paths[p];
    const int node = traj.labels[p];
    masses[p] = rho0[node] * mesh.weights[node];
    r.per_particle[p] = particle_cost(traj.times, path);
    std::vector<Vec3> X(path.size());
    for (std::size_t k = 0; k < path.size(); ++k) X[k] = path[k].X;
    const auto fr = frenet_from_samples(traj.times, X);
    std::vector<double> a(fr.size()), b(fr.size()), c(fr.size(), 0.0);
    for (std::size_t k = 0; k < fr.size(); ++k) {
      const double s4 = std::pow(fr[k].speed, 4);
      a[k] = s4 * fr[k].frame.kappa * fr[k].frame.kappa;
      b[k] = s4 * fr[k].frame.kappa_g * fr[k].frame.kappa_g;
      if (g) c[k] = project_tangent(X[k], g(X[k], traj.times[k])).squaredNorm();
    }
    curv[p] = trapezoid(a, dt);
    kg[p] = trapezoid(b, dt);
    forc[p] = trapezoid(c, dt);
    ends[p] = path.back().X;
  }
  for (int p = 0; p < n; ++p) {
    r.aggregate += masses[p] * r.per_particle[p];
    r.curvature_term += masses[p] * curv[p];
    r.kappa_g_term += masses[p] * kg[p];
    r.forcing_term += masses[p] * forc[p];
  }
  const ScalarField rho_tau = deposit(mesh, ends, masses, traj.labels).cwiseQuotient(mesh.weights);
  ScalarField start(n);
  for (int p = 0; p < n; ++p) start[traj.labels[p]] = rho0[traj.labels[p]];
  r.w2 = w2_squared(mesh, start, rho_tau);
  const double agg = std::max(r.aggregate, 1e-300);
  r.general_margin = (r.aggregate - r.w2 - r.curvature_term) / agg;
  r.unit_speed_margin = (r.aggregate - 2.0 * r.w2 - (g ? r.forcing_term : r.kappa_g_term)) / agg;
  return r;
}

double latitude_circulation(const Mesh& mesh, const VectorField& V, double height, int samples) {
  if (!(std::abs(height) < 1.0)) throw DomainError("latitude_circulation: height must lie in (-1, 1)");
  const double r = std::sqrt(1.0 - height * height);
  const double dphi = 2.0 * kPi / samples;
  double c = 0.0;
  int hint = -1;
  for (int k = 0; k < samples; ++k) {
    const double phi = k * dphi;
    const Vec3 X(r * std::cos(phi), r * std::sin(phi), height);
    const Vec3 dl(-r * std::sin(phi), r * std::cos(phi), 0.0);
    hint = nearest_node(mesh, X, hint);
    c += interpolate(mesh, V, X, hint).dot(dl) * dphi;
  }
  return c;
}

VorticityReport vorticity_diagnostic(const Mesh& mesh, const std::vector<double>& times,
                                     const std::vector<VectorField>& fields, std::vector<double> contour_heights) {
  if (times.size() != fields.size()) throw DomainError("vorticity_diagnostic: times and fields differ in length");
  VorticityReport r;
  r.times = times;
  r.contour_heights = std::move(contour_heights);
  for (const auto& V : fields) {
    r.sup_curl.push_back(curl_normal(mesh, V).cwiseAbs().maxCoeff());
    std::vector<double> circ;
    for (double z : r.contour_heights) circ.push_back(latitude_circulation(mesh, V, z));
    r.circulation.push_back(std::move(circ));
  }
  return r;
}

PathRegularityReport path_regularity(const Mesh& mesh, const std::vector<double>& times,
                                     const std::vector<ScalarField>& densities,
                                     const std::vector<ScalarField>& potentials, const ThetaModel& theta,
                                     double tol, PathMetric metric) {
  if (densities.size() < 3) throw DomainError("path_regularity: need at least 3 snapshots");
  if (times.size() != densities.size() || potentials.size() != densities.size())
    throw DomainError("path_regularity: series lengths differ");
  PathRegularityReport r;
  std::vector<double> integrand(densities.size());
  for (std::size_t j = 0; j < densities.size(); ++j) {
    const ScalarField& rho = densities[j];
    const VectorField gq = gradient(mesh, potentials[j]);
    ScalarField t1(rho.size());
    for (Eigen::Index i = 0; i < rho.size(); ++i) t1[i] = theta.theta1(rho[i]);
    const VectorField gt = gradient(mesh, t1);
    double s = 0.0;
    for (Eigen::Index i = 0; i < rho.size(); ++i)
      s += mesh.weights[i] * rho[i] * (gq.row(i).squaredNorm() + gt.row(i).squaredNorm());
    integrand[j] = s;
    if (j > 0) {
      const double dt = times[j] - times[j - 1];
      if (!(dt > 0.0)) throw DomainError("path_regularity: times must increase");
      const double w2 = metric == PathMetric::Exact ? 2.0 * w2_squared(mesh, densities[j - 1], rho)
                                                    : linearized_w2_squared(mesh, densities[j - 1], rho);
      r.sum += w2 / dt;
      r.bound += dt * (integrand[j - 1] + integrand[j]);
    }
  }
  r.margin = r.bound - r.sum;
  r.holds = r.margin >= -tol;
  return r;
}

double linearized_w2_squared(const Mesh& mesh, const ScalarField& a, const ScalarField& b) {
  if (a.size() != Eigen::Index(mesh.size()) || b.size() != a.size())
    throw DomainError("linearized_w2_squared: size mismatch");
  const ScalarField mid = 0.5 * (a + b);
  ScalarField rhs = mesh.weights.cwiseProduct(b - a);
  rhs.array() -= rhs.sum() / double(rhs.size());
  if (rhs.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  const SparseMat K = stiffness(mesh, mid);
  Eigen::ConjugateGradient<SparseMat, Eigen::Lower | Eigen::Upper> cg;
  cg.setTolerance(1e-12);
  cg.setMaxIterations(20 * int(mesh.size()));
  cg.compute(K);
  const ScalarField phi = cg.solve(rhs);
  return phi.dot(K * phi);
}

double crossing_multiplicity(const Mesh& mesh, const TrajectoryBundle& traj) {
  std::vector<int> count(mesh.size(), 0);
  for (std::size_t p = 0; p < traj.paths.size(); ++p)
    ++count[nearest_node(mesh, traj.paths[p].back().X, traj.labels[p])];
  const double mean = double(traj.paths.size()) / double(mesh.size());
  return *std::max_element(count.begin(), count.end()) / mean;
}

}  // namespace sphere_euler
