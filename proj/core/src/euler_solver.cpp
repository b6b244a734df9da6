#include "sphere_euler/euler_solver.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

#include "sphere_euler/ot.hpp"

namespace sphere_euler {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

ScalarField theta1_of(const ScalarField& rho, const ThetaModel& theta) {
  ScalarField t(rho.size());
  for (Eigen::Index i = 0; i < rho.size(); ++i) t[i] = theta.theta1(rho[i]);
  return t;
}

double sup_norm(const VectorField& V) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < V.rows(); ++i) s = std::max(s, V.row(i).norm());
  return s;
}

double hessian_sup(const Mesh& mesh, const ScalarField& f) {
  const auto H = hessian(mesh, f);
  double s = 0.0;
  for (std::size_t i = 0; i < H.size(); ++i) {
    Eigen::SelfAdjointEigenSolver<Mat3> es(H[i], Eigen::EigenvaluesOnly);
    s = std::max(s, es.eigenvalues().cwiseAbs().maxCoeff());
  }
  return s;
}

}  // namespace

double EnergyLedger::worst_increase() const {
  double w = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < rows.size(); ++k)
    w = std::max(w, rows[k].hamiltonian - rows[k - 1].hamiltonian - rows[k].budget);
  return w;
}

double EnergyLedger::worst_dissipation() const {
  double w = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < rows.size(); ++k) w = std::min(w, rows[k].dissipation_margin + rows[k].budget);
  return w;
}

InitialData static_preset(const Mesh& mesh) {
  return {uniform_density(mesh), ScalarField::Zero(Eigen::Index(mesh.size())), "static"};
}

InitialData zonal_preset(const Mesh& mesh, double a, double b) {
  const int n = int(mesh.size());
  ScalarField rho(n), q(n);
  for (int i = 0; i < n; ++i) {
    const double z = mesh.nodes[i].z();
    rho[i] = 1.0 + a * z;
    q[i] = b * z;
  }
  if (rho.minCoeff() <= 0.0) throw DomainError("zonal preset: |a| must be below 1");
  return {normalize_density(mesh, rho), q, "zonal"};
}

InitialData rossby_preset(const Mesh& mesh, double a, int m) {
  if (m < 1) throw DomainError("rossby preset: m must be positive");
  const int n = int(mesh.size());
  ScalarField rho(n), q(n);
  for (int i = 0; i < n; ++i) {
    const Vec3& x = mesh.nodes[i];
    const double r = std::hypot(x.x(), x.y());
    const double lam = std::atan2(x.y(), x.x());
    const double s = std::pow(r, m);
    rho[i] = 1.0 + a * s * std::cos(m * lam);
    q[i] = a * s * std::sin(m * lam);
  }
  if (rho.minCoeff() <= 0.0) throw DomainError("rossby preset: |a| must be below 1");
  return {normalize_density(mesh, rho), q, "rossby"};
}

ScalarField stage1_predict(const Mesh& mesh, const ScalarField& rho, const ScalarField& q, double h) {
  if (!(h >= 0.0)) throw DomainError("stage1: h must be nonnegative");
  const VectorField g = gradient(mesh, q);
  if (h * sup_norm(g) >= kPi) throw DomainError("stage1: h |grad q| reaches pi");
  if (h == 0.0 || g.cwiseAbs().maxCoeff() == 0.0) return rho;
  return push_forward_field(mesh, h * g, rho);
}

JkoResult stage2_correct(const MeshPtr& mesh, const ScalarField& f, double h, const ThetaModel& theta, double eps,
                         bool smooth_f, const JkoOptions& opts) {
  if (smooth_f && eps > 0.0) return jko_step(*mesh, mollify(mesh, f, eps), h, theta, opts);
  return jko_step(*mesh, f, h, theta, opts);
}

Vec3 arrival_velocity(const Mesh& mesh, const VectorField& grad_q0, const Vec3& z, double h, int hint) {
  if (h == 0.0) return project_tangent(z, interpolate(mesh, grad_q0, z, hint));
  int nh = nearest_node(mesh, z, hint);
  Vec3 x = exp_map(z, -h * project_tangent(z, interpolate(mesh, grad_q0, z, nh)));
  for (int it = 0; it < 50; ++it) {
    nh = nearest_node(mesh, x, nh);
    const Vec3 gx = project_tangent(x, interpolate(mesh, grad_q0, x, nh));
    const Vec3 xn = exp_map(z, -h * parallel_transport(x, z, gx));
    const double d = (xn - x).norm();
    x = xn;
    if (d < 1e-15) break;
  }
  // equals -log_z(x) / h at the fixed point, without the cancellation for small h
  nh = nearest_node(mesh, x, nh);
  return parallel_transport(x, z, project_tangent(x, interpolate(mesh, grad_q0, x, nh)));
}

ProjectionResult stage3_project(const Mesh& mesh, const ScalarField& rho_h, const ScalarField& q0,
                                const VectorField& grad_p, double h) {
  const int n = int(mesh.size());
  for (int i = 0; i < n; ++i)
    if (!(rho_h[i] > 0.0)) throw DomainError("stage3: vacuum at node " + std::to_string(i));
  const VectorField gq = gradient(mesh, q0);
  ProjectionResult out;
  out.v.resize(n, 3);
#ifdef SPHERE_EULER_HAVE_OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int i = 0; i < n; ++i) {
    const Vec3& y = mesh.nodes[i];
    const Vec3 gp = project_tangent(y, Vec3(grad_p.row(i).transpose()));
    const Vec3 z = exp_map(y, h * h * gp);
    const Vec3 u = arrival_velocity(mesh, gq, z, h, i);
    const Vec3 gpz = project_tangent(z, interpolate(mesh, grad_p, z, i));
    out.v.row(i) = parallel_transport(z, y, u - h * gpz).transpose();
  }
  // project only the change against the exact P1 gradient of q0, so a step
  // that moves nothing returns q0
  const VectorField dv = out.v - gq;
  const WeightedParts wp = weighted_decompose_increment(mesh, q0, dv, rho_h);
  out.energy = increment_energy(mesh, q0, dv, rho_h);
  out.q_h = wp.phi;
  out.w = wp.w;
  out.iterations = wp.iterations;
  out.cg_error = wp.cg_error;
  return out;
}

double hamiltonian(const Mesh& mesh, const ScalarField& rho, const ScalarField& q, const ThetaModel& theta) {
  return kinetic_energy(mesh, q, rho) + internal_energy(mesh, rho, theta);
}

RunResult run(const RunConfig& cfg) {
  if (!cfg.mesh) throw DomainError("run: mesh missing");
  const Mesh& mesh = *cfg.mesh;
  if (!(cfg.h > 0.0)) throw DomainError("run: h must be positive");
  if (!(cfg.tau >= cfg.h)) throw DomainError("run: tau must be at least h");
  check_density(mesh, cfg.initial.rho);
  if (cfg.initial.q.size() != cfg.initial.rho.size()) throw DomainError("run: potential size mismatch");

  RunResult res;
  res.h = cfg.h;
  res.eps = cfg.eps_factor > 0.0 ? default_eps(mesh, cfg.eps_factor) : 0.0;
  std::unique_ptr<Mollifier> moll;
  if (res.eps > 0.0) moll = std::make_unique<Mollifier>(cfg.mesh, res.eps);
  auto smooth = [&](const ScalarField& r) { return moll ? moll->apply(r) : r; };

  const ThetaModel& theta = cfg.theta;
  const double h = cfg.h, h2 = h * h;
  const int steps = int(std::floor(cfg.tau / h + 1e-9));

  SolverState st;
  st.rho = cfg.initial.rho;
  st.q = cfg.initial.q;
  st.v = gradient(mesh, st.q);
  st.w = VectorField::Zero(st.v.rows(), 3);

  auto make_row = [&](int step, double t, const ScalarField& rho, const ScalarField& q) {
    LedgerRow r;
    r.step = step;
    r.t = t;
    r.kinetic = kinetic_energy(mesh, q, rho);
    r.internal = internal_energy(mesh, rho, theta);
    r.hamiltonian = r.kinetic + r.internal;
    r.fisher = special_fisher(mesh, rho, theta);
    r.rho_min = rho.minCoeff();
    r.rho_max = rho.maxCoeff();
    r.mass_error = std::abs(mass(mesh, rho) - 1.0);
    return r;
  };

  {
    LedgerRow r0 = make_row(0, 0.0, st.rho, st.q);
    r0.w2_step = 0.0;
    const ScalarField t1 = theta1_of(smooth(st.rho), theta);
    Snapshot s0{0, 0.0, st.rho, st.q, st.v, st.w, gradient(mesh, t1)};
    r0.forcing_sup = sup_norm(s0.grad_p);
    r0.hessian_sup = hessian_sup(mesh, t1);
    st.ledger.rows.push_back(r0);
    res.snapshots.push_back(std::move(s0));
  }

  for (int n = 1; n <= steps; ++n) {
    try {
      const LedgerRow& prev = st.ledger.rows.back();
      const ScalarField f = stage1_predict(mesh, st.rho, st.q, h);
      const double f_mass_err = std::abs(mass(mesh, f) - 1.0);
      const JkoResult jr = stage2_correct(cfg.mesh, f, h, theta, res.eps, cfg.mollify_density, cfg.jko);
      const ScalarField& rho_h = jr.rho_h;
      const ScalarField t1p = theta1_of(smooth(rho_h), theta);
      const VectorField grad_p = gradient(mesh, t1p);
      const double hs = hessian_sup(mesh, t1p);
      if (h * hs > cfg.hessian_guard)
        throw DomainError("step " + std::to_string(n) + ": h sup|D^2 Theta1(p)| = " + std::to_string(h * hs) +
                          " exceeds the guard");
      const ProjectionResult pr = stage3_project(mesh, rho_h, st.q, grad_p, h);

      LedgerRow r = make_row(n, n * h, rho_h, pr.q_h);
      r.hessian_sup = hs;
      r.forcing_sup = sup_norm(grad_p);
      r.jko_gap = jr.optimality_residual;
      r.jko_pinned = jr.pinned;
      r.dissipation_margin = prev.hamiltonian - r.hamiltonian - 0.5 * h2 * r.fisher;
      const double ev = pr.energy;
      r.projection_loss = ev - r.kinetic;
      const VectorField gqh = gradient(mesh, pr.q_h);
      const double quad_mismatch = std::abs(field_energy(mesh, gqh, rho_h) - r.kinetic);
      r.budget = quad_mismatch + pr.cg_error * std::max(ev, 1e-300) + r.jko_gap +
                 (f_mass_err + r.mass_error) * std::abs(r.hamiltonian);

      // Convexity cross term on the f side.
      {
        const VectorField gq = gradient(mesh, st.q);
        const VectorField gt = gradient(mesh, theta1_of(rho_h, theta));
        double s = 0.0;
        for (std::size_t i = 0; i < mesh.size(); ++i) {
          const Eigen::Index k = Eigen::Index(i);
          const Vec3 u = arrival_velocity(mesh, gq, mesh.nodes[i], h, int(i));
          const Vec3 g = gt.row(k).transpose();
          s += mesh.weights[k] * f[k] * g.dot(h * u - h2 * g);
        }
        r.cross_margin = prev.internal + s - r.internal;
      }

      if (cfg.ledger_transport) {
        const double w_f0 = w2_squared(mesh, f, st.rho);
        const double w_fh = jr.pinned ? 0.0 : std::max(0.0, jr.value - h2 * internal_energy(mesh, rho_h, theta));
        const double w_0h = jr.pinned ? w_f0 : w2_squared(mesh, st.rho, rho_h);
        const double e0 = w_f0 + h2 * prev.internal;
        const double eh = w_fh + h2 * r.internal;
        r.w2_step = w_0h;
        r.descent_margin = e0 - eh - 2.0 / (kPi * kPi) * w_0h;
        r.predictor_margin = prev.hamiltonian - e0;
      } else {
        r.w2_step = kNaN;
        r.descent_margin = kNaN;
        r.predictor_margin = kNaN;
      }

      st.rho = rho_h;
      st.q = pr.q_h;
      st.w = pr.w;
      st.v = gqh + pr.w;
      st.t = n * h;
      st.ledger.rows.push_back(r);
      res.snapshots.push_back(Snapshot{n, n * h, st.rho, st.q, gqh, pr.w, grad_p});
    } catch (const std::exception& e) {
      res.aborted = true;
      res.diagnostic = e.what();
      break;
    }
  }
  res.ledger = st.ledger;
  res.final_state = std::move(st);
  return res;
}

double weak_continuity_residual(const Mesh& mesh, const std::vector<Snapshot>& snaps, const ScalarTest& psi) {
  if (snaps.empty()) throw DomainError("weak_continuity_residual: no snapshots");
  auto pairing = [&](const Snapshot& s, auto&& fn) {
    double acc = 0.0;
    for (std::size_t i = 0; i < mesh.size(); ++i) {
      const Eigen::Index k = Eigen::Index(i);
      acc += mesh.weights[k] * s.rho[k] * fn(mesh.nodes[i], Vec3(s.v.row(k).transpose()), s.t);
    }
    return acc;
  };
  const auto value = [&](const Vec3& x, const Vec3&, double t) { return psi.value(x, t); };
  const auto flux = [&](const Vec3& x, const Vec3& v, double t) {
    return psi.time_derivative(x, t) + v.dot(psi.gradient(x, t));
  };
  double r = pairing(snaps.front(), value) - pairing(snaps.back(), value);
  double prev = pairing(snaps.front(), flux);
  for (std::size_t j = 1; j < snaps.size(); ++j) {
    const double cur = pairing(snaps[j], flux);
    r += 0.5 * (snaps[j].t - snaps[j - 1].t) * (prev + cur);
    prev = cur;
  }
  return std::abs(r);
}

double weak_acceleration_residual(const Mesh& mesh, const std::vector<Snapshot>& snaps, const ThetaModel& theta,
                                  const VectorTest& phi) {
  const std::size_t m = snaps.size();
  if (m < 2) throw DomainError("weak_acceleration_residual: need at least 2 snapshots");
  std::vector<double> integrand(m);
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t a = j == 0 ? 0 : j - 1;
    const std::size_t b = j + 1 == m ? j : j + 1;
    const VectorField dv = (snaps[b].v - snaps[a].v) / (snaps[b].t - snaps[a].t);
    const VectorField gt = gradient(mesh, theta1_of(snaps[j].rho, theta));
    double s = 0.0;
    for (std::size_t i = 0; i < mesh.size(); ++i) {
      const Eigen::Index k = Eigen::Index(i);
      const Vec3& y = mesh.nodes[i];
      const Vec3 p = phi(y, snaps[j].t);
      s += mesh.weights[k] * snaps[j].rho[k] *
           (p.dot(dv.row(k).transpose()) + p.dot(y) + p.dot(gt.row(k).transpose()));
    }
    integrand[j] = s;
  }
  double r = 0.0;
  for (std::size_t j = 1; j < m; ++j) r += 0.5 * (snaps[j].t - snaps[j - 1].t) * (integrand[j - 1] + integrand[j]);
  return std::abs(r);
}

double onofri_check(const Mesh& mesh, const ScalarField& q) {
  const double mean_q = integrate(mesh, q) / kFourPi;
  const double grad2 = 2.0 * kinetic_energy(mesh, q, ScalarField()) / kFourPi;
  const double qmax = q.maxCoeff();
  const double lse = qmax + std::log(integrate(mesh, (q.array() - qmax).exp().matrix()) / kFourPi);
  return mean_q + 0.25 * grad2 - lse;
}

GronwallReport gronwall_compare(const Mesh& mesh, const RunResult& a, const RunResult& b, double tol) {
  if (a.snapshots.empty() || b.snapshots.empty()) throw DomainError("gronwall_compare: empty run");
  if (a.snapshots.front().rho.size() != Eigen::Index(mesh.size()) ||
      b.snapshots.front().rho.size() != Eigen::Index(mesh.size()))
    throw DomainError("gronwall_compare: runs do not share the mesh");
  if ((a.snapshots.front().rho - b.snapshots.front().rho).cwiseAbs().maxCoeff() > 1e-12 ||
      (a.snapshots.front().q - b.snapshots.front().q).cwiseAbs().maxCoeff() > 1e-12)
    throw DomainError("gronwall_compare: runs do not share initial data");

  std::vector<std::pair<const Snapshot*, const Snapshot*>> common;
  std::size_t jb = 0;
  for (const auto& sa : a.snapshots) {
    while (jb < b.snapshots.size() && b.snapshots[jb].t < sa.t - 1e-9) ++jb;
    if (jb < b.snapshots.size() && std::abs(b.snapshots[jb].t - sa.t) <= 1e-9) common.push_back({&sa, &b.snapshots[jb]});
  }

  GronwallReport rep;
  double hs = 0.0;
  for (const auto& r : a.ledger.rows) hs = std::max(hs, r.hessian_sup);
  for (const auto& r : b.ledger.rows) hs = std::max(hs, r.hessian_sup);
  rep.lipschitz = 1.0 + hs;
  const double L = rep.lipschitz;

  // Per-unit-time local error of a velocity-update scheme with step h:
  // h/2 (|a| + L |v|), integrated against each run's own snapshots.
  auto local_rate = [&](const Snapshot& s) { return sup_norm(s.grad_p) + L * sup_norm(s.v); };
  auto disc_increment = [&](const RunResult& run, double t0, double t1) {
    double acc = 0.0;
    for (std::size_t k = 1; k < run.snapshots.size(); ++k) {
      const Snapshot& s0 = run.snapshots[k - 1];
      const Snapshot& s1 = run.snapshots[k];
      if (s0.t < t0 - 1e-9 || s1.t > t1 + 1e-9) continue;
      acc += 0.5 * (s1.t - s0.t) * (local_rate(s0) + local_rate(s1));
    }
    return 0.5 * run.h * acc;
  };
  auto force_gap = [&](const Snapshot& sa, const Snapshot& sb) {
    double m = 0.0;
    for (Eigen::Index i = 0; i < sa.grad_p.rows(); ++i) m = std::max(m, (sa.grad_p.row(i) - sb.grad_p.row(i)).norm());
    return m;
  };

  std::vector<double> d_eta, d_disc;
  double eta = 0.0;
  rep.holds = true;
  rep.worst_margin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < common.size(); ++k) {
    const Snapshot& sa = *common[k].first;
    const Snapshot& sb = *common[k].second;
    if (k == 0) {
      d_eta.push_back(0.0);
      d_disc.push_back(0.0);
    } else {
      const Snapshot& pa = *common[k - 1].first;
      const Snapshot& pb = *common[k - 1].second;
      const double de = 0.5 * (sa.t - pa.t) * (force_gap(pa, pb) + force_gap(sa, sb));
      d_eta.push_back(de);
      d_disc.push_back(disc_increment(a, pa.t, sa.t) + disc_increment(b, pb.t, sb.t));
      eta += de;
    }
    double env = 0.0;
    for (std::size_t i = 1; i <= k; ++i) {
      const double decay = std::exp(L * (sa.t - common[i].first->t));
      env += decay * (d_eta[i] + d_disc[i]);
    }
    const double bound = 0.5 * kPi * env;
    const double meas = w1_distance(mesh, sa.rho, sb.rho);
    rep.times.push_back(sa.t);
    rep.eta.push_back(eta);
    rep.bound.push_back(bound);
    rep.measured.push_back(meas);
    rep.worst_margin = std::min(rep.worst_margin, bound + tol - meas);
  }
  rep.holds = rep.worst_margin >= 0.0;
  return rep;
}

}  // namespace sphere_euler
