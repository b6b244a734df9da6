#pragma once

#include "sphere_euler/mesh.hpp"

namespace sphere_euler {

// (4 pi)^{-1} log(1 - cos a); throws at a = 0.
double greens_function(double angle);

// u = G * g with the self cell replaced by the disc average of G over the
// dual-cell area: (log(r^2 / 2) - 1) / 4 pi, pi r^2 = w_i. g is projected to
// zero mean first; the output has zero mean.
ScalarField solve_poisson(const Mesh& mesh, const ScalarField& g);

struct HelmholtzParts {
  ScalarField q;          // gradient potential
  ScalarField psi;        // stream function
  VectorField residual;   // V - grad q - X x grad psi
};

HelmholtzParts helmholtz_decompose(const Mesh& mesh, const VectorField& V);

struct WeightedParts {
  ScalarField phi;   // zero rho-mean potential
  VectorField w;     // V - grad phi at nodes
  int iterations = 0;
  double cg_error = 0.0;
};

// Solves div(rho grad phi) = div(rho V) weakly with P1 elements. hint is an
// optional starting potential; only the correction is solved for.
WeightedParts weighted_decompose(const Mesh& mesh, const VectorField& V, const ScalarField& rho,
                                 const ScalarField& hint = ScalarField(), double tol = 1e-10);

// Same projection for V = grad(base) + dV, with grad(base) the exact P1
// gradient on each face: the result is base itself when dV = 0.
WeightedParts weighted_decompose_increment(const Mesh& mesh, const ScalarField& base, const VectorField& dV,
                                           const ScalarField& rho, double tol = 1e-10);
// 1/2 int |grad(base) + dV|^2 rho in the face quadrature of the above.
double increment_energy(const Mesh& mesh, const ScalarField& base, const VectorField& dV, const ScalarField& rho);

// Energies in the P1 face quadrature: 1/2 int |grad q|^2 rho and
// 1/2 int |V_T|^2 rho with V_T the face mean projected onto the face plane.
double kinetic_energy(const Mesh& mesh, const ScalarField& q, const ScalarField& rho);
double field_energy(const Mesh& mesh, const VectorField& V, const ScalarField& rho);
// Nodal quadrature int |V|^2 rho dm.
double nodal_energy(const Mesh& mesh, const VectorField& V, const ScalarField& rho);

// Smallest nonzero eigenvalue of K_rho phi = lambda M_rho phi.
double spectral_gap_estimate(const Mesh& mesh, const ScalarField& rho, double tol = 1e-10);

}  // namespace sphere_euler
