#pragma once

#include <functional>
#include <string>
#include <vector>

#include "sphere_euler/energy.hpp"
#include "sphere_euler/helmholtz.hpp"
#include "sphere_euler/jko.hpp"
#include "sphere_euler/mesh.hpp"

namespace sphere_euler {

struct LedgerRow {
  int step = 0;
  double t = 0.0;
  double kinetic = 0.0;      // 1/2 int |grad q|^2 rho
  double internal = 0.0;     // U(rho)
  double hamiltonian = 0.0;  // kinetic + internal
  double w2_step = 0.0;      // W2^2(rho_n, rho_{n+1}); NaN when not computed
  double fisher = 0.0;       // int rho |grad Theta1(rho)|^2
  // H_n - H_{n+1} - h^2/2 fisher(rho_{n+1})
  double dissipation_margin = 0.0;
  // Tolerance budget for the step: kinetic-energy quadrature mismatch,
  // projection solve error, corrector gap and deposition mass error.
  double budget = 0.0;
  // E(rho_n; f) - E(rho_h; f) - 2/pi^2 W2^2(rho_n, rho_h); NaN when not computed
  double descent_margin = 0.0;
  // U(rho_n) + int f grad Theta1(rho_h) . grad(-h phi0 + h^2 phi_h) - U(rho_h)
  double cross_margin = 0.0;
  // H(rho_n, q_n) - E(rho_n; f); NaN when not computed
  double predictor_margin = 0.0;
  double jko_gap = 0.0;
  bool jko_pinned = false;
  double projection_loss = 0.0;  // 1/2 int |v|^2 rho_h - kinetic, >= 0
  double hessian_sup = 0.0;      // sup |D^2 Theta1(p)|, p the smoothed density
  double forcing_sup = 0.0;      // sup |grad Theta1(p)|
  double rho_min = 0.0, rho_max = 0.0;
  double mass_error = 0.0;
};

struct EnergyLedger {
  std::vector<LedgerRow> rows;  // rows[0] is the initial state

  // Largest H_{k+1} - H_k - budget_{k+1} over steps.
  double worst_increase() const;
  // Smallest dissipation_margin + budget over steps.
  double worst_dissipation() const;
};

struct SolverState {
  ScalarField rho;
  ScalarField q;
  VectorField v;  // grad q + w
  VectorField w;  // rotational remainder, not fed back into the predictor
  double t = 0.0;
  EnergyLedger ledger;
};

struct Snapshot {
  int step = 0;
  double t = 0.0;
  ScalarField rho, q;
  VectorField v;       // grad q, the transporting velocity
  VectorField w;
  VectorField grad_p;  // grad Theta1(p) used in the projection of this step
};

struct InitialData {
  ScalarField rho;
  ScalarField q;
  std::string name;
};

InitialData static_preset(const Mesh& mesh);
// rho ~ 1 + a cos(theta), q = b cos(theta).
InitialData zonal_preset(const Mesh& mesh, double a, double b);
// rho ~ 1 + a sin(theta)^m cos(m lambda), q = a sin(theta)^m sin(m lambda).
InitialData rossby_preset(const Mesh& mesh, double a, int m);

struct RunConfig {
  MeshPtr mesh;
  ThetaModel theta = ThetaModel::power(1.4);
  double h = 0.02;
  double tau = 0.2;
  double eps_factor = 2.0;        // smoothing width in mean node spacings; 0 disables
  bool mollify_density = false;   // smooth f before the corrector as well
  bool ledger_transport = true;   // exact transport terms in the ledger
  double hessian_guard = 0.5;     // abort when h sup|D^2 Theta1(p)| exceeds this
  JkoOptions jko;
  InitialData initial;
};

struct RunResult {
  std::vector<Snapshot> snapshots;
  EnergyLedger ledger;
  SolverState final_state;
  bool aborted = false;
  std::string diagnostic;
  double h = 0.0;
  double eps = 0.0;
};

// Stage 1: push rho forward by x -> exp_x(h grad q).
ScalarField stage1_predict(const Mesh& mesh, const ScalarField& rho, const ScalarField& q, double h);

// Stage 2: corrector, optionally smoothing f first (eps > 0 and smooth_f).
JkoResult stage2_correct(const MeshPtr& mesh, const ScalarField& f, double h, const ThetaModel& theta,
                         double eps = 0.0, bool smooth_f = false, const JkoOptions& opts = {});

struct ProjectionResult {
  ScalarField q_h;
  VectorField w;
  VectorField v;  // assembled nodal velocity before projection
  double energy = 0.0;  // 1/2 int |v|^2 rho_h, face quadrature with grad q0 taken in P1
  int iterations = 0;
  double cg_error = 0.0;
};

// Stage 3: v(y) = u(T*y) - h grad Theta1(p)(T*y) carried to y, with
// T*(y) = exp_y(h^2 grad Theta1(p)(y)) and u the arrival velocity of the
// predictor; then the rho_h-weighted decomposition of v.
ProjectionResult stage3_project(const Mesh& mesh, const ScalarField& rho_h, const ScalarField& q0,
                                const VectorField& grad_p, double h);

// Arrival velocity at z of the predictor geodesic x -> exp_x(h grad q0(x)).
Vec3 arrival_velocity(const Mesh& mesh, const VectorField& grad_q0, const Vec3& z, double h, int hint = -1);

double hamiltonian(const Mesh& mesh, const ScalarField& rho, const ScalarField& q, const ThetaModel& theta);

RunResult run(const RunConfig& config);

// Weak forms. Test functions are given pointwise; spatial gradients are
// taken from the callables, not from the mesh.
struct ScalarTest {
  std::function<double(const Vec3&, double)> value;
  std::function<double(const Vec3&, double)> time_derivative;
  std::function<Vec3(const Vec3&, double)> gradient;
};

// |int psi(0) rho_0 - int psi(T) rho_T + int int (d_t psi rho + rho v . grad psi)|
double weak_continuity_residual(const Mesh& mesh, const std::vector<Snapshot>& snaps, const ScalarTest& psi);

using VectorTest = std::function<Vec3(const Vec3&, double)>;
// |int int rho phi . d_t v + int int rho (phi . y + phi . grad Theta1(rho))|,
// d_t v by centered differences (one-sided at the ends).
double weak_acceleration_residual(const Mesh& mesh, const std::vector<Snapshot>& snaps, const ThetaModel& theta,
                                  const VectorTest& phi);

// mean(q) + 1/4 mean|grad q|^2 - log mean(e^q), means against m / 4 pi.
double onofri_check(const Mesh& mesh, const ScalarField& q);

struct GronwallReport {
  std::vector<double> times;
  std::vector<double> measured;  // W1(rho_A(t), rho_B(t))
  std::vector<double> eta;       // int_0^t sup |grad Theta1(p_A) - grad Theta1(p_B)|
  std::vector<double> bound;     // pi/2 (envelope(eta) + discretization terms)
  double lipschitz = 0.0;        // 1 + sup |D^2 Theta1(p)|
  bool holds = false;
  double worst_margin = 0.0;     // min bound + tol - measured
};

GronwallReport gronwall_compare(const Mesh& mesh, const RunResult& a, const RunResult& b, double tol = 1e-6);

}  // namespace sphere_euler
