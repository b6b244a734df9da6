#include "sphere_euler/mesh.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace sphere_euler {

namespace {

using Triplet = Eigen::Triplet<double>;

double spherical_triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
  const double num = std::abs(a.dot(b.cross(c)));
  const double den = 1.0 + a.dot(b) + b.dot(c) + c.dot(a);
  return 2.0 * std::atan2(num, den);
}

void icosahedron(std::vector<Vec3>& v, std::vector<std::array<int, 3>>& f) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  v = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
       {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (auto& p : v) p.normalize();
  f = {{0, 11, 5}, {0, 5, 1}, {0, 1, 7},  {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
       {11, 10, 2}, {10, 7, 6}, {7, 1, 8}, {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
       {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
}

void subdivide(std::vector<Vec3>& v, std::vector<std::array<int, 3>>& f) {
  std::map<std::pair<int, int>, int> mid;
  auto midpoint = [&](int a, int b) {
    auto key = std::minmax(a, b);
    auto it = mid.find(key);
    if (it != mid.end()) return it->second;
    const int id = int(v.size());
    v.push_back((v[a] + v[b]).normalized());
    mid.emplace(key, id);
    return id;
  };
  std::vector<std::array<int, 3>> out;
  out.reserve(f.size() * 4);
  for (const auto& t : f) {
    const int ab = midpoint(t[0], t[1]);
    const int bc = midpoint(t[1], t[2]);
    const int ca = midpoint(t[2], t[0]);
    out.push_back({t[0], ab, ca});
    out.push_back({t[1], bc, ab});
    out.push_back({t[2], ca, bc});
    out.push_back({ab, bc, ca});
  }
  f.swap(out);
}

bool face_contains(const Mesh& m, int fi, const Vec3& p, double tol) {
  const auto& t = m.faces[fi];
  const Vec3& a = m.nodes[t[0]];
  const Vec3& b = m.nodes[t[1]];
  const Vec3& c = m.nodes[t[2]];
  return p.dot(a.cross(b)) >= -tol && p.dot(b.cross(c)) >= -tol && p.dot(c.cross(a)) >= -tol &&
         p.dot(a + b + c) > 0.0;
}

Location make_location(const Mesh& m, int fi, const Vec3& p) {
  const auto& t = m.faces[fi];
  Mat3 A;
  A.col(0) = m.nodes[t[0]];
  A.col(1) = m.nodes[t[1]];
  A.col(2) = m.nodes[t[2]];
  Vec3 lam = A.partialPivLu().solve(p);
  for (int k = 0; k < 3; ++k) lam[k] = std::max(lam[k], 0.0);
  lam /= lam.sum();
  Location loc;
  loc.face = fi;
  loc.vertex = t;
  loc.bary = {lam[0], lam[1], lam[2]};
  return loc;
}

void build_operators(Mesh& m) {
  const int n = int(m.size());
  std::vector<Triplet> gx, gy, gz, h11, h12, h22;
  for (int i = 0; i < n; ++i) {
    const Vec3& x = m.nodes[i];
    const auto& nb = m.stencils[i];
    const int k = int(nb.size());
    Eigen::MatrixXd A(k, 5);
    Eigen::VectorXd sw(k);
    for (int r = 0; r < k; ++r) {
      const Vec3& y = m.nodes[nb[r]];
      const Vec3 u = y - x.dot(y) * x;
      const double a = u.dot(m.t1[i]);
      const double b = u.dot(m.t2[i]);
      A.row(r) << a, b, 0.5 * a * a, a * b, 0.5 * b * b;
      sw[r] = 1.0 / u.norm();
    }
    const Eigen::MatrixXd Aw = sw.asDiagonal() * A;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(Aw, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    if (s.size() < 5 || s[4] < 1e-10 * s[0])
      throw DomainError("mesh: rank-deficient gradient stencil at node " + std::to_string(i));
    const Eigen::MatrixXd C = svd.matrixV() * s.cwiseInverse().asDiagonal() *
                              svd.matrixU().transpose() * sw.asDiagonal();
    Vec3 diag = Vec3::Zero();
    double d11 = 0, d12 = 0, d22 = 0;
    for (int r = 0; r < k; ++r) {
      const Vec3 c = C(0, r) * m.t1[i] + C(1, r) * m.t2[i];
      const int j = nb[r];
      gx.emplace_back(i, j, c.x());
      gy.emplace_back(i, j, c.y());
      gz.emplace_back(i, j, c.z());
      h11.emplace_back(i, j, C(2, r));
      h12.emplace_back(i, j, C(3, r));
      h22.emplace_back(i, j, C(4, r));
      diag += c;
      d11 += C(2, r);
      d12 += C(3, r);
      d22 += C(4, r);
    }
    gx.emplace_back(i, i, -diag.x());
    gy.emplace_back(i, i, -diag.y());
    gz.emplace_back(i, i, -diag.z());
    h11.emplace_back(i, i, -d11);
    h12.emplace_back(i, i, -d12);
    h22.emplace_back(i, i, -d22);
  }
  auto fill = [n](SparseMat& M, std::vector<Triplet>& t) {
    M.resize(n, n);
    M.setFromTriplets(t.begin(), t.end());
    M.makeCompressed();
  };
  fill(m.Gx, gx);
  fill(m.Gy, gy);
  fill(m.Gz, gz);
  fill(m.H11, h11);
  fill(m.H12, h12);
  fill(m.H22, h22);
}

}  // namespace

std::uint64_t Mesh::checksum() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* p, std::size_t len) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= b[i];
      h *= 1099511628211ULL;
    }
  };
  for (const auto& x : nodes) mix(x.data(), 3 * sizeof(double));
  for (const auto& f : faces) mix(f.data(), 3 * sizeof(int));
  return h;
}

MeshPtr build_icosphere(int subdivisions) {
  if (subdivisions < 0 || subdivisions > 7) throw DomainError("build_icosphere: subdivisions outside [0, 7]");
  std::vector<Vec3> v;
  std::vector<std::array<int, 3>> f;
  icosahedron(v, f);
  for (int s = 0; s < subdivisions; ++s) subdivide(v, f);
  return build_mesh(std::move(v), std::move(f), subdivisions);
}

MeshPtr build_mesh(std::vector<Vec3> nodes, std::vector<std::array<int, 3>> faces, int level) {
  auto m = std::make_shared<Mesh>();
  m->level = level;
  for (auto& p : nodes) p.normalize();
  m->nodes = std::move(nodes);
  const int n = int(m->nodes.size());
  for (auto& t : faces) {
    const Vec3& a = m->nodes[t[0]];
    const Vec3& b = m->nodes[t[1]];
    const Vec3& c = m->nodes[t[2]];
    if ((b - a).cross(c - a).dot(a + b + c) < 0.0) std::swap(t[1], t[2]);
  }
  m->faces = std::move(faces);

  m->weights = Eigen::VectorXd::Zero(n);
  std::vector<std::set<int>> nb(n);
  m->node_faces.assign(n, {});
  double len = 0.0;
  std::size_t edges = 0;
  for (std::size_t fi = 0; fi < m->faces.size(); ++fi) {
    const auto& t = m->faces[fi];
    const double area = spherical_triangle_area(m->nodes[t[0]], m->nodes[t[1]], m->nodes[t[2]]);
    for (int k = 0; k < 3; ++k) {
      m->weights[t[k]] += area / 3.0;
      m->node_faces[t[k]].push_back(int(fi));
      const int a = t[k], b = t[(k + 1) % 3];
      nb[a].insert(b);
      nb[b].insert(a);
      if (a < b) {
        len += distance(m->nodes[a], m->nodes[b]);
        ++edges;
      }
    }
  }
  // every edge is visited from both faces, once with a < b
  m->mean_spacing = edges ? len / double(edges) : 0.0;
  m->stencils.resize(n);
  m->t1.resize(n);
  m->t2.resize(n);
  for (int i = 0; i < n; ++i) {
    m->stencils[i].assign(nb[i].begin(), nb[i].end());
    if (m->stencils[i].size() < 5) throw DomainError("mesh: node with fewer than 5 neighbours");
    if (!(m->weights[i] > 0.0)) throw DomainError("mesh: node with zero dual area");
    tangent_basis(m->nodes[i], m->t1[i], m->t2[i]);
  }
  build_operators(*m);
  m->K = stiffness(*m);
  return m;
}

void write_mesh(std::ostream& os, const Mesh& m) {
  os << "# sphere_euler mesh format 1\n";
  os << "# level " << m.level << " nodes " << m.size() << " faces " << m.faces.size()
     << " checksum " << m.checksum() << "\n";
  os << "# node_id x y z weight | s node_id neighbours... | f a b c\n";
  char buf[160];
  for (std::size_t i = 0; i < m.size(); ++i) {
    const Vec3& x = m.nodes[i];
    std::snprintf(buf, sizeof buf, "%zu %.17g %.17g %.17g %.17g\n", i, x.x(), x.y(), x.z(), m.weights[i]);
    os << buf;
  }
  for (std::size_t i = 0; i < m.size(); ++i) {
    os << "s " << i;
    for (int j : m.stencils[i]) os << ' ' << j;
    os << '\n';
  }
  for (const auto& f : m.faces) os << "f " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
}

MeshPtr read_mesh(std::istream& is) {
  std::vector<Vec3> nodes;
  std::vector<double> weights;
  std::vector<std::array<int, 3>> faces;
  int level = -1;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    if (line[0] == '#') {
      std::string hash, key;
      ls >> hash >> key;
      if (key == "level") ls >> level;
      continue;
    }
    if (line[0] == 's') continue;  // stencils are rebuilt from faces
    if (line[0] == 'f') {
      char c;
      std::array<int, 3> f{};
      if (!(ls >> c >> f[0] >> f[1] >> f[2])) throw DomainError("read_mesh: bad face line: " + line);
      faces.push_back(f);
      continue;
    }
    std::size_t id;
    double x, y, z, w;
    if (!(ls >> id >> x >> y >> z >> w) || id != nodes.size())
      throw DomainError("read_mesh: bad node line: " + line);
    nodes.emplace_back(x, y, z);
    weights.push_back(w);
  }
  for (const auto& f : faces)
    for (int k : f)
      if (k < 0 || std::size_t(k) >= nodes.size()) throw DomainError("read_mesh: face index out of range");
  auto m = build_mesh(std::move(nodes), std::move(faces), level);
  for (std::size_t i = 0; i < weights.size(); ++i)
    if (std::abs(weights[i] - m->weights[i]) > 1e-9 * std::max(1.0, weights[i]))
      throw DomainError("read_mesh: stored weights disagree with faces");
  return m;
}

double integrate(const Mesh& m, const ScalarField& f) { return m.weights.dot(f); }
double mass(const Mesh& m, const ScalarField& rho) { return m.weights.dot(rho); }

ScalarField uniform_density(const Mesh& m) {
  return ScalarField::Constant(Eigen::Index(m.size()), 1.0 / m.weights.sum());
}

void check_density(const Mesh& m, const ScalarField& rho, double tol) {
  if (std::size_t(rho.size()) != m.size()) throw DomainError("density: size does not match mesh");
  for (Eigen::Index i = 0; i < rho.size(); ++i)
    if (!(rho[i] >= 0.0)) throw DomainError("density: negative or non-finite value at node " + std::to_string(i));
  const double M = mass(m, rho);
  if (std::abs(M - 1.0) > tol) throw DomainError("density: mass " + std::to_string(M) + " differs from 1");
}

ScalarField normalize_density(const Mesh& m, ScalarField rho) {
  const double M = mass(m, rho);
  if (!(M > 0.0)) throw DomainError("normalize_density: zero mass");
  return rho / M;
}

ScalarField project_zero_mean(const Mesh& m, ScalarField f) {
  f.array() -= integrate(m, f) / m.weights.sum();
  return f;
}

VectorField gradient(const Mesh& m, const ScalarField& f) {
  VectorField g(f.size(), 3);
  g.col(0) = m.Gx * f;
  g.col(1) = m.Gy * f;
  g.col(2) = m.Gz * f;
  return g;
}

ScalarField divergence(const Mesh& m, const VectorField& V) {
  return m.Gx * V.col(0) + m.Gy * V.col(1) + m.Gz * V.col(2);
}

ScalarField curl_normal(const Mesh& m, const VectorField& V) {
  const int n = int(m.size());
  ScalarField out(n);
  const SparseMat* G[3] = {&m.Gx, &m.Gy, &m.Gz};
  for (int i = 0; i < n; ++i) {
    // directional derivatives of V along t1 and t2
    Vec3 d1 = Vec3::Zero(), d2 = Vec3::Zero();
    for (int a = 0; a < 3; ++a) {
      for (SparseMat::InnerIterator it(*G[a], i); it; ++it) {
        const Vec3 vj = V.row(it.col()).transpose();
        d1 += it.value() * m.t1[i][a] * vj;
        d2 += it.value() * m.t2[i][a] * vj;
      }
    }
    out[i] = m.t2[i].dot(d1) - m.t1[i].dot(d2);
  }
  return out;
}

std::vector<Mat3> hessian(const Mesh& m, const ScalarField& f) {
  const ScalarField a = m.H11 * f, b = m.H12 * f, c = m.H22 * f;
  std::vector<Mat3> out(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    const Vec3& u = m.t1[i];
    const Vec3& v = m.t2[i];
    out[i] = a[i] * u * u.transpose() + b[i] * (u * v.transpose() + v * u.transpose()) + c[i] * v * v.transpose();
  }
  return out;
}

VectorField cross_normal(const Mesh& m, const VectorField& V) {
  VectorField out(V.rows(), 3);
  for (Eigen::Index i = 0; i < V.rows(); ++i) out.row(i) = m.nodes[i].cross(Vec3(V.row(i))).transpose();
  return out;
}

VectorField project_tangent(const Mesh& m, const VectorField& V) {
  VectorField out(V.rows(), 3);
  for (Eigen::Index i = 0; i < V.rows(); ++i)
    out.row(i) = project_tangent(m.nodes[i], Vec3(V.row(i))).transpose();
  return out;
}

SparseMat stiffness(const Mesh& m, const ScalarField& rho) {
  const int n = int(m.size());
  std::vector<Triplet> trip;
  trip.reserve(m.faces.size() * 9);
  for (const auto& t : m.faces) {
    const double rt = rho.size() ? (rho[t[0]] + rho[t[1]] + rho[t[2]]) / 3.0 : 1.0;
    for (int k = 0; k < 3; ++k) {
      const int i = t[k], j = t[(k + 1) % 3], o = t[(k + 2) % 3];
      const Vec3 e1 = m.nodes[i] - m.nodes[o];
      const Vec3 e2 = m.nodes[j] - m.nodes[o];
      const double cot = e1.dot(e2) / e1.cross(e2).norm();
      const double w = 0.5 * cot * rt;
      trip.emplace_back(i, j, -w);
      trip.emplace_back(j, i, -w);
      trip.emplace_back(i, i, w);
      trip.emplace_back(j, j, w);
    }
  }
  SparseMat K(n, n);
  K.setFromTriplets(trip.begin(), trip.end());
  K.makeCompressed();
  return K;
}

ScalarField laplacian(const Mesh& m, const ScalarField& f) {
  return -(m.K * f).cwiseQuotient(m.weights);
}

ScalarField weak_divergence_rhs(const Mesh& m, const VectorField& V, const ScalarField& rho) {
  ScalarField b = ScalarField::Zero(Eigen::Index(m.size()));
  for (const auto& t : m.faces) {
    const Vec3& p0 = m.nodes[t[0]];
    const Vec3& p1 = m.nodes[t[1]];
    const Vec3& p2 = m.nodes[t[2]];
    const Vec3 nrm = (p1 - p0).cross(p2 - p0);
    const double area2 = nrm.norm();
    const Vec3 nh = nrm / area2;
    const double rt = rho.size() ? (rho[t[0]] + rho[t[1]] + rho[t[2]]) / 3.0 : 1.0;
    const Vec3 VT = (V.row(t[0]) + V.row(t[1]) + V.row(t[2])).transpose() / 3.0;
    const Vec3* p[3] = {&p0, &p1, &p2};
    for (int k = 0; k < 3; ++k) {
      const Vec3 edge = *p[(k + 2) % 3] - *p[(k + 1) % 3];
      const Vec3 gradN = nh.cross(edge) / area2;
      b[t[k]] += rt * 0.5 * area2 * gradN.dot(VT);
    }
  }
  return b;
}

int nearest_node(const Mesh& m, const Vec3& p, int hint) {
  int cur = hint >= 0 ? hint : 0;
  double best = p.dot(m.nodes[cur]);
  for (;;) {
    int next = cur;
    for (int j : m.stencils[cur]) {
      const double d = p.dot(m.nodes[j]);
      if (d > best) {
        best = d;
        next = j;
      }
    }
    if (next == cur) return cur;
    cur = next;
  }
}

Location locate(const Mesh& m, const Vec3& p, int hint) {
  const int k = nearest_node(m, p, hint);
  for (int fi : m.node_faces[k])
    if (face_contains(m, fi, p, 1e-14)) return make_location(m, fi, p);
  for (int j : m.stencils[k])
    for (int fi : m.node_faces[j])
      if (face_contains(m, fi, p, 1e-14)) return make_location(m, fi, p);
  int best = -1;
  double worst_best = -1e300;
  for (std::size_t fi = 0; fi < m.faces.size(); ++fi) {
    const auto& t = m.faces[fi];
    const Vec3& a = m.nodes[t[0]];
    const Vec3& b = m.nodes[t[1]];
    const Vec3& c = m.nodes[t[2]];
    if (p.dot(a + b + c) <= 0.0) continue;
    const double w = std::min({p.dot(a.cross(b)), p.dot(b.cross(c)), p.dot(c.cross(a))});
    if (w > worst_best) {
      worst_best = w;
      best = int(fi);
    }
  }
  if (best < 0) throw DomainError("locate: point not on mesh");
  return make_location(m, best, p);
}

double interpolate(const Mesh& m, const ScalarField& f, const Vec3& p, int hint) {
  const Location loc = locate(m, p, hint);
  return loc.bary[0] * f[loc.vertex[0]] + loc.bary[1] * f[loc.vertex[1]] + loc.bary[2] * f[loc.vertex[2]];
}

Vec3 interpolate(const Mesh& m, const VectorField& V, const Vec3& p, int hint) {
  const Location loc = locate(m, p, hint);
  Vec3 v = Vec3::Zero();
  for (int k = 0; k < 3; ++k) v += loc.bary[k] * Vec3(V.row(loc.vertex[k]));
  return project_tangent(p, v);
}

Eigen::VectorXd deposit(const Mesh& m, const std::vector<Vec3>& points, const Eigen::VectorXd& masses,
                        const std::vector<int>& hints) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(Eigen::Index(m.size()));
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (masses[Eigen::Index(i)] == 0.0) continue;
    const Location loc = locate(m, points[i], hints.empty() ? -1 : hints[i]);
    for (int k = 0; k < 3; ++k) out[loc.vertex[k]] += loc.bary[k] * masses[Eigen::Index(i)];
  }
  return out;
}

Mollifier::Mollifier(MeshPtr mesh, double eps) : mesh_(std::move(mesh)), eps_(eps) {
  if (!(eps > 0.0)) throw DomainError("mollify: eps must be positive");
  const Mesh& m = *mesh_;
  const int n = int(m.size());
  const double cutoff = 5.0 * eps;
  const double cmin = cutoff >= kPi ? -2.0 : std::cos(cutoff);
  std::vector<Triplet> trip;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double c = m.nodes[i].dot(m.nodes[j]);
      if (c < cmin) continue;
      const double d = distance(m.nodes[i], m.nodes[j]);
      trip.emplace_back(i, j, std::exp(-0.5 * d * d / (eps * eps)));
    }
  }
  SparseMat K(n, n);
  K.setFromTriplets(trip.begin(), trip.end());
  K.makeCompressed();

  // a_i sum_j K_ij w_j a_j = 1
  Eigen::VectorXd a = Eigen::VectorXd::Ones(n);
  for (int it = 0; it < 5000; ++it) {
    const Eigen::VectorXd r = a.cwiseProduct(K * a.cwiseProduct(m.weights));
    if ((r.array() - 1.0).abs().maxCoeff() < 1e-15) break;
    a.array() /= r.array().sqrt();
  }
  S_ = K;
  for (int i = 0; i < n; ++i)
    for (SparseMat::InnerIterator it(S_, i); it; ++it) it.valueRef() *= a[i] * a[it.col()] * m.weights[it.col()];
}

ScalarField Mollifier::apply(const ScalarField& rho) const { return S_ * rho; }

ScalarField mollify(const MeshPtr& mesh, const ScalarField& rho, double eps) {
  return Mollifier(mesh, eps).apply(rho);
}

double default_eps(const Mesh& m, double eps_factor) { return eps_factor * m.mean_spacing; }

}  // namespace sphere_euler
