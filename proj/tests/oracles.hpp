#pragma once

// Independent reference computations shared by the unit and acceptance tests.

#include <Eigen/Geometry>
#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "sphere_euler/ot.hpp"

namespace sphere_euler::testing {

struct Instance {
  std::vector<Vec3> xs, ys;
  Eigen::VectorXd a, b;
};

inline Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return Vec3(n(rng), n(rng), n(rng)).normalized();
}

// Points on a cap of radius < pi/2 so no pair is antipodal.
inline Instance random_instance(int n, int m, bool uniform, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.2, 1.0);
  Instance in;
  auto pick = [&] {
    Vec3 p;
    do p = random_unit(rng);
    while (p.z() < 0.1);
    return p;
  };
  for (int i = 0; i < n; ++i) in.xs.push_back(pick());
  for (int j = 0; j < m; ++j) in.ys.push_back(pick());
  in.a = uniform ? Eigen::VectorXd::Ones(n) : Eigen::VectorXd(n);
  in.b = uniform ? Eigen::VectorXd::Ones(m) : Eigen::VectorXd(m);
  if (!uniform) {
    for (int i = 0; i < n; ++i) in.a[i] = u(rng);
    for (int j = 0; j < m; ++j) in.b[j] = u(rng);
  }
  in.a /= in.a.sum();
  in.b /= in.b.sum();
  return in;
}

inline double half_sq(const Vec3& x, const Vec3& y) {
  const double d = std::atan2(x.cross(y).norm(), x.dot(y));
  return 0.5 * d * d;
}

// Minimum over the vertices of the transportation polytope. Equal square
// uniform problems use permutations (Birkhoff); otherwise every basis of
// n + m - 1 cells is solved and checked for feasibility.
inline double brute_force_transport(const Instance& in) {
  const int n = int(in.xs.size()), m = int(in.ys.size());
  Eigen::MatrixXd C(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) C(i, j) = half_sq(in.xs[i], in.ys[j]);
  const bool square_uniform = n == m && (in.a.array() == in.a[0]).all() && (in.b.array() == in.b[0]).all();
  double best = 1e300;
  if (square_uniform) {
    std::vector<int> p(n);
    std::iota(p.begin(), p.end(), 0);
    do {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += C(i, p[i]);
      best = std::min(best, s / n);
    } while (std::next_permutation(p.begin(), p.end()));
    return best;
  }
  const int cells = n * m, k = n + m - 1;
  std::vector<int> sel(cells, 0);
  std::fill(sel.end() - k, sel.end(), 1);
  Eigen::VectorXd rhs(n + m);
  rhs << in.a, in.b;
  do {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n + m, k);
    std::vector<int> idx;
    for (int c = 0; c < cells; ++c)
      if (sel[c]) idx.push_back(c);
    for (int t = 0; t < k; ++t) {
      A(idx[t] / m, t) = 1.0;
      A(n + idx[t] % m, t) = 1.0;
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    if (lu.rank() < k) continue;
    const Eigen::VectorXd x = lu.solve(rhs);
    if ((A * x - rhs).cwiseAbs().maxCoeff() > 1e-12 || x.minCoeff() < -1e-12) continue;
    double s = 0.0;
    for (int t = 0; t < k; ++t) s += C(idx[t] / m, idx[t] % m) * x[t];
    best = std::min(best, s);
  } while (std::next_permutation(sel.begin(), sel.end()));
  return best;
}

}  // namespace sphere_euler::testing
