#include "sphere_euler/jko.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "sphere_euler/network_simplex.hpp"

namespace sphere_euler {

namespace {

double internal_energy_points(const PointCloud& pc, const ScalarField& rho, const ThetaModel& theta) {
  double u = 0.0;
  for (std::size_t i = 0; i < pc.size(); ++i) u += pc.weights[Eigen::Index(i)] * theta.F(rho[Eigen::Index(i)]);
  return u;
}

Eigen::MatrixXd cost_matrix(const PointCloud& pc) {
  const int n = int(pc.size());
  Eigen::MatrixXd c(n, n);
#ifdef SPHERE_EULER_HAVE_OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) c(i, j) = ground_cost(pc.nodes[i], pc.nodes[j]);
  return c;
}

void check_input(const PointCloud& pc, const ScalarField& f, double h) {
  if (!(h >= 0.0)) throw DomainError("jko: h must be nonnegative");
  if (std::size_t(f.size()) != pc.size()) throw DomainError("jko: density size mismatch");
  for (Eigen::Index i = 0; i < f.size(); ++i)
    if (!(f[i] > 0.0)) throw DomainError("jko: f must be strictly positive");
}

// Optimal shift t for phi1 + t, phi2 - t: total rho mass equals total f mass.
double best_shift(const ScalarField& phi1, const Eigen::VectorXd& w, double mass, double h2,
                  const ThetaModel& theta) {
  auto excess = [&](double t) {
    double m = 0.0;
    for (Eigen::Index i = 0; i < phi1.size(); ++i) m += w[i] * theta.chi(-(phi1[i] + t) / h2);
    return m - mass;
  };
  double lo = -1.0, hi = 1.0;
  while (excess(lo) < 0.0) lo = 2.0 * lo - 1.0;
  while (excess(hi) > 0.0) hi = 2.0 * hi + 1.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo) + std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (excess(mid) > 0.0) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

double dual_value_impl(const PointCloud& pc, const Eigen::MatrixXd& c, const ScalarField& phi1_in,
                       const ScalarField& f, double h, const ThetaModel& theta, PotentialPair* out) {
  const int n = int(pc.size());
  const double h2 = h * h;
  const Eigen::VectorXd b = f.cwiseProduct(pc.weights);
  const double mass = b.sum();
  ScalarField phi1 = phi1_in;
  if (h2 > 0.0) phi1.array() += best_shift(phi1, pc.weights, mass, h2, theta);
  ScalarField phi2(n);
  for (int j = 0; j < n; ++j) {
    double m = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) m = std::min(m, c(i, j) - phi1[i]);
    phi2[j] = m;
  }
  double d = phi2.dot(b);
  if (h2 > 0.0) {
    for (int i = 0; i < n; ++i) d += pc.weights[i] * h2 * theta.F_conj(phi1[i] / h2);
  }
  if (out) {
    out->phi1 = phi1;
    out->phi2 = phi2;
  }
  return d;
}

// Whether t_j - t_i <= d(x_i, x_j)^2 / 2 for all pairs. Only pairs closer than
// sqrt(2 (max t - min t)) can violate; they are found by a sweep in z.
bool pinned_feasible(const PointCloud& pc, const ScalarField& t) {
  const int n = int(pc.size());
  if (n < 2) return true;
  const double spread = t.maxCoeff() - t.minCoeff();
  if (spread <= 0.0) return true;
  const double r = std::sqrt(2.0 * spread);
  const double dz = r >= kPi ? 2.0 : 2.0 * std::sin(0.5 * r);
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) { return pc.nodes[a].z() < pc.nodes[b].z(); });
  for (int a = 0; a < n; ++a) {
    const int i = order[a];
    for (int b = a + 1; b < n; ++b) {
      const int j = order[b];
      if (pc.nodes[j].z() - pc.nodes[i].z() > dz) break;
      const double cij = ground_cost(pc.nodes[i], pc.nodes[j]);
      if (std::abs(t[j] - t[i]) > cij) return false;
    }
  }
  return true;
}

struct Segment {
  int node;
  int arc;
};

}  // namespace

double jko_energy(const PointCloud& pc, const ScalarField& rho, const ScalarField& f, double h,
                  const ThetaModel& theta) {
  if (!(h >= 0.0)) throw DomainError("jko_energy: h must be nonnegative");
  const Eigen::VectorXd a = f.cwiseProduct(pc.weights);
  const Eigen::VectorXd b = rho.cwiseProduct(pc.weights);
  const double w = (a - b).cwiseAbs().maxCoeff() == 0.0 ? 0.0
                                                       : transport_exact(pc.nodes, a, pc.nodes, b).value;
  return w + h * h * internal_energy_points(pc, rho, theta);
}

double jko_dual_value(const PointCloud& pc, const ScalarField& phi1, const ScalarField& f, double h,
                      const ThetaModel& theta, PotentialPair* completed) {
  return dual_value_impl(pc, cost_matrix(pc), phi1, f, h, theta, completed);
}

JkoResult jko_step(const PointCloud& pc, const ScalarField& f, double h, const ThetaModel& theta,
                   const JkoOptions& opts) {
  check_input(pc, f, h);
  const int n = int(pc.size());
  const double h2 = h * h;
  const Eigen::VectorXd& w = pc.weights;
  const Eigen::VectorXd b = f.cwiseProduct(w);
  const double mass = b.sum();
  JkoResult res;
  if (opts.allow_pinned) {
    // rho = f is optimal iff -h^2 Theta1(f) is a feasible Kantorovich potential.
    ScalarField t1(n);
    for (int i = 0; i < n; ++i) t1[i] = h2 * theta.theta1(f[i]);
    if (pinned_feasible(pc, t1)) {
      res.rho_h = f;
      res.pinned = true;
      res.value = h2 * internal_energy_points(pc, f, theta);
      res.potentials.phi1 = -t1;
      res.potentials.phi2 = t1;  // the c-transform of -t1, by feasibility
      res.dual_value = res.value;
      if (h2 > 0.0) {
        const double shift = best_shift(res.potentials.phi1, w, mass, h2, theta);
        res.potentials.phi1.array() += shift;
        res.potentials.phi2.array() -= shift;
        double d = res.potentials.phi2.dot(b);
        for (int i = 0; i < n; ++i) d += w[i] * h2 * theta.F_conj(res.potentials.phi1[i] / h2);
        res.dual_value = d;
      }
      res.optimality_residual = std::max(0.0, res.value - res.dual_value);
      return res;
    }
  }

  const Eigen::MatrixXd c = cost_matrix(pc);

  // Convex separable part G_i(m) = h^2 w_i F(m / w_i) on node masses m.
  auto G = [&](int i, double m) { return h2 * w[i] * theta.F(m / w[i]); };

  Eigen::VectorXd center = b;
  if (opts.init.size() == n) center = opts.init.cwiseProduct(w) * (mass / opts.init.dot(w));
  Eigen::VectorXd halfw = (0.5 * center).cwiseMax(1e-3 * mass / n);

  JkoResult best;
  best.optimality_residual = std::numeric_limits<double>::infinity();
  const int K = std::max(2, opts.segments);

  for (int it = 1; it <= opts.max_iter; ++it) {
    NetworkSimplex ns(2 * n + 1);
    ns.reserve_arcs(std::size_t(n) * n + std::size_t(n) * (K + 2));
    for (int j = 0; j < n; ++j) ns.set_supply(j, b[j]);
    ns.set_supply(2 * n, -mass);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) ns.add_arc(j, n + i, c(i, j));
    std::vector<Segment> segs;
    std::vector<double> lo(n), hi(n);
    for (int i = 0; i < n; ++i) {
      lo[i] = std::max(0.0, center[i] - halfw[i]);
      hi[i] = std::min(mass, center[i] + halfw[i]);
      std::vector<double> bp{0.0};
      if (lo[i] > 0.0) bp.push_back(lo[i]);
      for (int k = 1; k <= K; ++k) bp.push_back(lo[i] + (hi[i] - lo[i]) * k / K);
      if (hi[i] < mass) bp.push_back(mass);
      for (std::size_t k = 1; k < bp.size(); ++k) {
        const double len = bp[k] - bp[k - 1];
        if (!(len > 0.0)) continue;
        const double slope = (G(i, bp[k]) - G(i, bp[k - 1])) / len;
        segs.push_back({i, ns.add_arc(n + i, 2 * n, slope, len)});
      }
    }
    if (ns.run() != NetworkSimplex::Status::Optimal) throw ConvergenceError("jko_step: LP not optimal", 0.0);

    Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
    for (const auto& s : segs) a[s.node] += ns.flow(s.arc);
    a = a.cwiseMax(0.0);
    a *= mass / a.sum();
    ScalarField rho = a.cwiseQuotient(w);

    // Primal: exact transport for this marginal plus the true G.
    double primal = 0.0;
    for (int i = 0; i < n; ++i) primal += G(i, a[i]);
    primal += (a - b).cwiseAbs().maxCoeff() == 0.0 ? 0.0 : transport_exact(pc.nodes, b, pc.nodes, a).value;

    ScalarField phi1(n);
    for (int i = 0; i < n; ++i) phi1[i] = ns.potential(n + i) - ns.potential(2 * n);
    PotentialPair pot;
    const double dual = h2 > 0.0 ? dual_value_impl(pc, c, phi1, f, h, theta, &pot) : primal;
    const double gap = std::max(0.0, primal - dual);

    if (gap < best.optimality_residual) {
      best.rho_h = rho;
      best.value = primal;
      best.dual_value = dual;
      best.potentials = pot;
      best.optimality_residual = gap;
    }
    best.iterations = it;
    if (best.optimality_residual <= opts.tol) return best;

    for (int i = 0; i < n; ++i) {
      const bool inside = (a[i] > lo[i] || lo[i] == 0.0) && (a[i] < hi[i] || hi[i] == mass);
      halfw[i] = inside ? std::max(0.25 * halfw[i], 1e-14 * mass) : 2.0 * halfw[i];
      center[i] = a[i];
    }
  }
  throw JkoConvergenceError("jko_step: duality gap above tolerance", best);
}

double optimality_map_residual(const Mesh& mesh, const JkoResult& result, const ScalarField& f, double h,
                               const ThetaModel& theta) {
  const int n = int(mesh.size());
  ScalarField phi(n);
  for (int i = 0; i < n; ++i) phi[i] = h * h * theta.theta1(result.rho_h[i]);
  const ScalarField pushed = push_forward_map(mesh, phi, result.rho_h);
  return w1_distance(mesh, pushed, f);
}

bool minimizer_bounds_check(const JkoResult& result, double delta1, double tol) {
  if (!(delta1 > 0.0)) throw DomainError("minimizer_bounds_check: delta1 must be positive");
  if (result.rho_h.size() == 0) return false;
  return result.rho_h.minCoeff() >= delta1 - tol && result.rho_h.maxCoeff() <= 1.0 / delta1 + tol;
}

double fisher_gap_check(const Mesh& mesh, const ScalarField& f, const JkoResult& result, double h,
                        const ThetaModel& theta) {
  return internal_energy(mesh, f, theta) - internal_energy(mesh, result.rho_h, theta) -
         h * h * special_fisher(mesh, result.rho_h, theta);
}

std::vector<double> jacobian_logconcavity_probe(const Mesh& mesh, const ScalarField& phi0, const ScalarField& phih,
                                                int node, double h, int samples, double gamma) {
  if (node < 0 || std::size_t(node) >= mesh.size()) throw DomainError("jacobian probe: node out of range");
  if (samples < 2) throw DomainError("jacobian probe: need at least 2 intervals");
  const Vec3& x = mesh.nodes[node];
  const Vec3 g0 = gradient(mesh, phi0).row(node).transpose();
  const Vec3 gh = gradient(mesh, phih).row(node).transpose();
  if (h * g0.norm() + gamma * h * h * gh.norm() >= kPi / 2)
    throw DomainError("jacobian probe: step too large for the displacement bound");
  const Mat3 H0 = hessian(mesh, phi0)[node];
  const Mat3 Hh = hessian(mesh, phih)[node];
  std::vector<double> logdet(samples + 1);
  for (int k = 0; k <= samples; ++k) {
    const double s = double(k) / samples;
    const Vec3 y = exp_map(x, (1.0 - s) * h * g0 + s * h * h * gh);
    HessianOperator op = hessian_half_dsq(x, y);
    op.matrix += (1.0 - s) * h * H0 + s * h * h * Hh;
    const double d = op.det();
    if (!(d > 0.0)) throw DomainError("jacobian probe: nonpositive determinant");
    logdet[k] = std::log(d);
  }
  std::vector<double> d2(samples - 1);
  for (int k = 1; k < samples; ++k) d2[k - 1] = logdet[k + 1] - 2.0 * logdet[k] + logdet[k - 1];
  return d2;
}

}  // namespace sphere_euler
