#include "sphere_euler/ot.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

#include "sphere_euler/network_simplex.hpp"

namespace sphere_euler {

namespace {

double log_sum_exp(const double* v, int n) {
  double m = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < n; ++k) m = std::max(m, v[k]);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (int k = 0; k < n; ++k) s += std::exp(v[k] - m);
  return m + std::log(s);
}

std::vector<int> support(const Eigen::VectorXd& a) {
  std::vector<int> idx;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a[i] < 0.0) throw DomainError("transport: negative mass");
    if (a[i] > 0.0) idx.push_back(int(i));
  }
  return idx;
}

void check_balance(double sa, double sb) {
  if (std::abs(sa - sb) > 1e-8 * std::max(1.0, std::max(sa, sb)))
    throw DomainError("transport: marginals carry different total mass (" + std::to_string(sa) + " vs " +
                      std::to_string(sb) + ")");
}

// Extend potentials from the supports to all points by c-transforms.
void complete_potentials(const std::vector<Vec3>& xs, const std::vector<Vec3>& ys, CostKind kind,
                         const std::vector<int>& si, const std::vector<int>& tj, PotentialPair& pot) {
  std::vector<char> in_s(xs.size(), 0), in_t(ys.size(), 0);
  for (int i : si) in_s[i] = 1;
  for (int j : tj) in_t[j] = 1;
  for (std::size_t j = 0; j < ys.size(); ++j) {
    if (in_t[j]) continue;
    double m = std::numeric_limits<double>::infinity();
    for (int i : si) m = std::min(m, ground_cost(xs[i], ys[j], kind) - pot.phi1[i]);
    pot.phi2[Eigen::Index(j)] = si.empty() ? 0.0 : m;
  }
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (in_s[i]) continue;
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < ys.size(); ++j) m = std::min(m, ground_cost(xs[i], ys[j], kind) - pot.phi2[Eigen::Index(j)]);
    pot.phi1[Eigen::Index(i)] = m;
  }
  const double shift = pot.phi2.mean();
  pot.phi2.array() -= shift;
  pot.phi1.array() += shift;
}

std::vector<Vec3> mesh_points(const Mesh& m) { return m.nodes; }

}  // namespace

double ground_cost(const Vec3& x, const Vec3& y, CostKind kind) {
  const double d = distance(x, y);
  return kind == CostKind::HalfSquared ? 0.5 * d * d : d;
}

Eigen::VectorXd TransportPlan::row_marginal(int n) const {
  Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
  for (const auto& e : entries) r[e.i] += e.mass;
  return r;
}

Eigen::VectorXd TransportPlan::col_marginal(int m) const {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(m);
  for (const auto& e : entries) c[e.j] += e.mass;
  return c;
}

TransportResult transport_exact(const std::vector<Vec3>& xs, const Eigen::VectorXd& a,
                                const std::vector<Vec3>& ys, const Eigen::VectorXd& b, CostKind kind) {
  if (std::size_t(a.size()) != xs.size() || std::size_t(b.size()) != ys.size())
    throw DomainError("transport: mass and point counts differ");
  const auto si = support(a);
  const auto tj = support(b);
  const double sa = a.sum(), sb = b.sum();
  check_balance(sa, sb);
  TransportResult res;
  res.potentials.phi1 = Eigen::VectorXd::Zero(a.size());
  res.potentials.phi2 = Eigen::VectorXd::Zero(b.size());
  if (si.empty() || tj.empty()) return res;

  const int ns = int(si.size()), nt = int(tj.size());
  NetworkSimplex ns_solver(ns + nt);
  ns_solver.reserve_arcs(std::size_t(ns) * nt);
  for (int p = 0; p < ns; ++p) ns_solver.set_supply(p, a[si[p]]);
  for (int q = 0; q < nt; ++q) ns_solver.set_supply(ns + q, -b[tj[q]] * (sa / sb));
  for (int p = 0; p < ns; ++p)
    for (int q = 0; q < nt; ++q) ns_solver.add_arc(p, ns + q, ground_cost(xs[si[p]], ys[tj[q]], kind));
  const auto status = ns_solver.run();
  if (status != NetworkSimplex::Status::Optimal) throw DomainError("transport: network simplex failed");

  int e = 0;
  for (int p = 0; p < ns; ++p) {
    for (int q = 0; q < nt; ++q, ++e) {
      const double fl = ns_solver.flow(e);
      if (fl > 0.0) {
        res.plan.entries.push_back({si[p], tj[q], fl});
        res.value += fl * ground_cost(xs[si[p]], ys[tj[q]], kind);
      }
    }
  }
  for (int p = 0; p < ns; ++p) res.potentials.phi1[si[p]] = -ns_solver.potential(p);
  for (int q = 0; q < nt; ++q) res.potentials.phi2[tj[q]] = ns_solver.potential(ns + q);
  complete_potentials(xs, ys, kind, si, tj, res.potentials);
  res.pivots = ns_solver.pivots();
  return res;
}

TransportResult w2_squared_exact(const Mesh& mesh, const ScalarField& mu, const ScalarField& nu) {
  const Eigen::VectorXd a = mu.cwiseProduct(mesh.weights);
  const Eigen::VectorXd b = nu.cwiseProduct(mesh.weights);
  const auto pts = mesh_points(mesh);
  return transport_exact(pts, a, pts, b, CostKind::HalfSquared);
}

double w2_squared(const Mesh& mesh, const ScalarField& mu, const ScalarField& nu) {
  if ((mu - nu).cwiseAbs().maxCoeff() == 0.0) return 0.0;
  return w2_squared_exact(mesh, mu, nu).value;
}

double w1_distance(const Mesh& mesh, const ScalarField& mu, const ScalarField& nu) {
  if ((mu - nu).cwiseAbs().maxCoeff() == 0.0) return 0.0;
  const Eigen::VectorXd a = mu.cwiseProduct(mesh.weights);
  const Eigen::VectorXd b = nu.cwiseProduct(mesh.weights);
  // common mass cancels in W1, transport only the excess
  const Eigen::VectorXd common = a.cwiseMin(b);
  return transport_exact(mesh.nodes, a - common, mesh.nodes, b - common, CostKind::Distance).value;
}

TransportResult sinkhorn(const std::vector<Vec3>& xs, const Eigen::VectorXd& a, const std::vector<Vec3>& ys,
                         const Eigen::VectorXd& b, double reg, const SinkhornOptions& opts) {
  if (!(reg > 0.0)) throw DomainError("sinkhorn: reg must be positive");
  const auto si = support(a);
  const auto tj = support(b);
  check_balance(a.sum(), b.sum());
  const int n = int(si.size()), m = int(tj.size());
  Eigen::MatrixXd C(n, m);
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < m; ++q) C(p, q) = ground_cost(xs[si[p]], ys[tj[q]]);
  Eigen::VectorXd la(n), lb(m);
  for (int p = 0; p < n; ++p) la[p] = std::log(a[si[p]]);
  for (int q = 0; q < m; ++q) lb[q] = std::log(b[tj[q]] * a.sum() / b.sum());

  Eigen::VectorXd f = Eigen::VectorXd::Zero(n), g = Eigen::VectorXd::Zero(m);
  std::vector<double> buf(std::max(n, m));
  auto sweep = [&](double r) {
    for (int p = 0; p < n; ++p) {
      for (int q = 0; q < m; ++q) buf[q] = lb[q] + (g[q] - C(p, q)) / r;
      f[p] = -r * log_sum_exp(buf.data(), m);
    }
    for (int q = 0; q < m; ++q) {
      for (int p = 0; p < n; ++p) buf[p] = la[p] + (f[p] - C(p, q)) / r;
      g[q] = -r * log_sum_exp(buf.data(), n);
    }
  };
  auto residual = [&](double r) {
    double res = 0.0;
    for (int p = 0; p < n; ++p) {
      double row = 0.0;
      for (int q = 0; q < m; ++q) row += std::exp(la[p] + lb[q] + (f[p] + g[q] - C(p, q)) / r);
      res += std::abs(row - std::exp(la[p]));
    }
    return res;
  };

  double r = std::max(reg, C.maxCoeff());
  int it = 0;
  while (r > reg) {
    for (int k = 0; k < 50 && it < opts.max_iter; ++k, ++it) sweep(r);
    r = std::max(reg, r * opts.scaling);
  }
  double res = std::numeric_limits<double>::infinity();
  for (; it < opts.max_iter; ++it) {
    sweep(reg);
    if ((it & 7) == 0 || it + 1 == opts.max_iter) {
      res = residual(reg);
      if (res < opts.tol) break;
    }
  }
  res = residual(reg);
  if (!(res < opts.tol))
    throw ConvergenceError("sinkhorn: marginal residual " + std::to_string(res) + " after " +
                               std::to_string(opts.max_iter) + " iterations",
                           res);

  TransportResult out;
  out.potentials.phi1 = Eigen::VectorXd::Zero(a.size());
  out.potentials.phi2 = Eigen::VectorXd::Zero(b.size());
  for (int p = 0; p < n; ++p) {
    for (int q = 0; q < m; ++q) {
      const double pm = std::exp(la[p] + lb[q] + (f[p] + g[q] - C(p, q)) / reg);
      if (pm > 0.0) {
        out.plan.entries.push_back({si[p], tj[q], pm});
        out.value += pm * C(p, q);
      }
    }
  }
  const double shift = g.mean();
  for (int p = 0; p < n; ++p) out.potentials.phi1[si[p]] = f[p] + shift;
  for (int q = 0; q < m; ++q) out.potentials.phi2[tj[q]] = g[q] - shift;
  out.pivots = it;
  return out;
}

TransportResult sinkhorn(const Mesh& mesh, const ScalarField& mu, const ScalarField& nu, double reg,
                         const SinkhornOptions& opts) {
  return sinkhorn(mesh.nodes, mu.cwiseProduct(mesh.weights), mesh.nodes, nu.cwiseProduct(mesh.weights), reg,
                  opts);
}

ScalarField c_transform(const Mesh& mesh, const ScalarField& phi) {
  const int n = int(mesh.size());
  ScalarField out(n);
  for (int i = 0; i < n; ++i) {
    double m = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) m = std::min(m, ground_cost(mesh.nodes[i], mesh.nodes[j]) - phi[j]);
    out[i] = m;
  }
  return out;
}

ScalarField push_forward_field(const Mesh& mesh, const VectorField& disp, const ScalarField& mu) {
  const int n = int(mesh.size());
  std::vector<Vec3> pts(n);
  std::vector<int> hints(n);
  for (int i = 0; i < n; ++i) {
    const Vec3 v = project_tangent(mesh.nodes[i], Vec3(disp.row(i)));
    if (v.norm() >= kPi - 1e-6) throw DomainError("push_forward: displacement reaches the cut locus");
    pts[i] = exp_map(mesh.nodes[i], v);
    hints[i] = i;
  }
  const Eigen::VectorXd m = deposit(mesh, pts, mu.cwiseProduct(mesh.weights), hints);
  return m.cwiseQuotient(mesh.weights);
}

ScalarField push_forward_map(const Mesh& mesh, const ScalarField& phi, const ScalarField& mu) {
  return push_forward_field(mesh, gradient(mesh, phi), mu);
}

ConcavityReport is_dsq_concave(const Mesh& mesh, const ScalarField& phi, double tol) {
  ConcavityReport rep;
  rep.worst = std::numeric_limits<double>::infinity();
  const VectorField g = gradient(mesh, phi);
  const auto H = hessian(mesh, phi);
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    const Vec3& x = mesh.nodes[i];
    const Vec3 gi = g.row(Eigen::Index(i)).transpose();
    double lam;
    if (gi.norm() >= kPi - 1e-6) {
      lam = -gi.norm();
    } else {
      const Vec3 y = exp_map(x, gi);
      HessianOperator op = hessian_half_dsq(x, y);
      op.matrix += H[i];
      lam = op.eigenvalues().minCoeff();
    }
    if (lam < rep.worst) {
      rep.worst = lam;
      rep.node = int(i);
    }
  }
  rep.concave = rep.worst >= -tol;
  return rep;
}

ScalarField generalized_geodesic(const Mesh& mesh, const ScalarField& f, const ScalarField& phi0,
                                 const ScalarField& phi1, double s) {
  if (s < 0.0 || s > 1.0) throw DomainError("generalized_geodesic: s outside [0, 1]");
  const VectorField d = (1.0 - s) * gradient(mesh, phi0) + s * gradient(mesh, phi1);
  return push_forward_field(mesh, d, f);
}

double dual_infeasibility(const Mesh& mesh, const PotentialPair& pot) {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < mesh.size(); ++i)
    for (std::size_t j = 0; j < mesh.size(); ++j)
      worst = std::max(worst, pot.phi1[Eigen::Index(i)] + pot.phi2[Eigen::Index(j)] -
                                  ground_cost(mesh.nodes[i], mesh.nodes[j]));
  return worst;
}

double dual_lower_bound(const Mesh& mesh, const PotentialPair& pot, const ScalarField& f,
                        const ThetaModel& theta, double h, double feas_tol) {
  if (!(h > 0.0)) throw DomainError("dual_lower_bound: h must be positive");
  const double viol = dual_infeasibility(mesh, pot);
  if (viol > feas_tol) throw DomainError("dual_lower_bound: potentials infeasible by " + std::to_string(viol));
  const double h2 = h * h;
  double s = 0.0;
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    const Eigen::Index k = Eigen::Index(i);
    s += mesh.weights[k] * (h2 * theta.F_conj(pot.phi1[k] / h2) + pot.phi2[k] * f[k]);
  }
  return s;
}

}  // namespace sphere_euler
