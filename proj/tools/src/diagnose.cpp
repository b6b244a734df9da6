#include "diagnose.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "sphere_euler/tangent_flow.hpp"

namespace sphere_euler::cli {

using nlohmann::json;

namespace {

json jnum(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json check(const std::string& name, bool pass, double margin, json extra = json::object()) {
  extra["name"] = name;
  extra["pass"] = pass;
  extra["margin"] = jnum(margin);
  return extra;
}

json monitor(const std::string& name, double value, json extra = json::object()) {
  extra["name"] = name;
  extra["pass"] = nullptr;
  extra["value"] = jnum(value);
  return extra;
}

}  // namespace

ScalarField band_limited_field(const Mesh& mesh, int degree, double amplitude, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  struct Term {
    int a, b, c;
    double k;
  };
  std::vector<Term> terms;
  for (int a = 0; a <= degree; ++a)
    for (int b = 0; a + b <= degree; ++b)
      for (int c = 0; a + b + c <= degree; ++c)
        if (a + b + c > 0) terms.push_back({a, b, c, nd(rng)});
  ScalarField f(Eigen::Index(mesh.size()));
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    const Vec3& x = mesh.nodes[i];
    double s = 0.0;
    for (const auto& t : terms) s += t.k * std::pow(x.x(), t.a) * std::pow(x.y(), t.b) * std::pow(x.z(), t.c);
    f[Eigen::Index(i)] = s;
  }
  f.array() -= f.mean();
  const double m = f.cwiseAbs().maxCoeff();
  if (m > 0.0) f *= amplitude / m;
  return f;
}

double vorticity_budget(const Mesh& mesh, const std::vector<VectorField>& fields) {
  double v = 0.0;
  for (const auto& F : fields)
    for (Eigen::Index i = 0; i < F.rows(); ++i) v = std::max(v, F.row(i).norm());
  return mesh.mean_spacing * mesh.mean_spacing * v + 1e-12;
}

RunResult LoadedRun::as_result() const {
  RunResult r;
  r.h = config.h;
  for (const auto& s : stored.snapshots) {
    r.snapshots.push_back(s.snap);
    r.ledger.rows.push_back(s.row);
  }
  return r;
}

LoadedRun load_run(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path base(dir);
  for (const char* f : {"summary.json", "snapshots.ndjson", "ledger.csv"})
    if (!fs::exists(base / f)) throw InputError("missing artifact '" + (base / f).string() + "'");
  LoadedRun run;
  {
    std::ifstream in(base / "summary.json");
    json j;
    try {
      in >> j;
      if (j.at("format_version").get<int>() != kFormatVersion) throw InputError("summary.json: unsupported format_version");
      run.config = parse_config(j.at("config"));
    } catch (const json::exception& e) {
      throw InputError(std::string("summary.json: ") + e.what());
    }
  }
  run.stored = read_snapshots_file((base / "snapshots.ndjson").string());
  if (run.stored.mesh_level != run.config.mesh_level) throw InputError("snapshots and summary disagree on mesh level");
  run.mesh = build_icosphere(run.stored.mesh_level);
  return run;
}

json diagnose(const LoadedRun& run, const LoadedRun* compare, std::uint64_t seed) {
  const Mesh& mesh = *run.mesh;
  const ThetaModel theta = make_theta(run.config);
  const auto& snaps = run.stored.snapshots;
  json checks = json::array();

  double mass_err = 0.0;
  for (const auto& s : snaps) mass_err = std::max(mass_err, std::abs(mass(mesh, s.snap.rho) - 1.0));
  checks.push_back(check("mass_conservation", mass_err <= 1e-10, 1e-10 - mass_err));

  double inc = -std::numeric_limits<double>::infinity(), diss = std::numeric_limits<double>::infinity();
  double desc = diss, cross = diss, raw_diss = diss;
  bool have_desc = false;
  for (std::size_t k = 1; k < snaps.size(); ++k) {
    const auto& r = snaps[k].row;
    inc = std::max(inc, r.hamiltonian - snaps[k - 1].row.hamiltonian - r.budget);
    diss = std::min(diss, r.dissipation_margin + r.budget);
    raw_diss = std::min(raw_diss, r.dissipation_margin);
    cross = std::min(cross, r.cross_margin + r.budget);
    if (std::isfinite(r.descent_margin)) {
      have_desc = true;
      desc = std::min(desc, r.descent_margin + r.budget);
    }
  }
  const bool steps = snaps.size() > 1;
  checks.push_back(check("ledger_monotonicity", !steps || inc <= 0.0, steps ? -inc : 0.0));
  checks.push_back(check("dissipation_floor", !steps || diss >= 0.0, steps ? diss : 0.0,
                         {{"raw_margin", jnum(steps ? raw_diss : 0.0)}}));
  checks.push_back(check("cross_term", !steps || cross >= 0.0, steps ? cross : 0.0));
  if (have_desc) checks.push_back(check("energy_descent", desc >= 0.0, desc));
  else checks.push_back(monitor("energy_descent", std::numeric_limits<double>::quiet_NaN(), {{"note", "not computed"}}));

  // Density bounds set by the initial state.
  {
    const ScalarField& r0 = snaps.front().snap.rho;
    const double d1 = std::min(kFourPi * r0.minCoeff(), 1.0 / (kFourPi * r0.maxCoeff()));
    double slack = std::numeric_limits<double>::infinity();
    for (const auto& s : snaps) {
      slack = std::min(slack, kFourPi * s.snap.rho.minCoeff() - d1);
      slack = std::min(slack, 1.0 / d1 - kFourPi * s.snap.rho.maxCoeff());
    }
    // The corrector keeps these bounds relative to its input; the predictor
    // may compress, so across steps the slack is only recorded.
    checks.push_back(monitor("density_bounds_slack", slack, {{"delta1", d1}}));
  }

  std::vector<double> times;
  std::vector<ScalarField> dens, pots;
  std::vector<VectorField> vel;
  for (const auto& s : snaps) {
    times.push_back(s.snap.t);
    dens.push_back(s.snap.rho);
    pots.push_back(s.snap.q);
    vel.push_back(s.snap.v + s.snap.w);
  }
  if (snaps.size() > 1) {
    const auto pr = path_regularity(mesh, times, dens, pots, theta, 1e-9, PathMetric::Linearized);
    checks.push_back(check("path_regularity", pr.holds, pr.margin, {{"sum", pr.sum}, {"bound", pr.bound}}));
  }
  {
    const auto vr = vorticity_diagnostic(mesh, times, vel);
    double sup = 0.0, circ = 0.0;
    for (double c : vr.sup_curl) sup = std::max(sup, c);
    for (const auto& row : vr.circulation)
      for (std::size_t k = 0; k < row.size(); ++k) circ = std::max(circ, std::abs(row[k] - vr.circulation.front()[k]));
    const double budget = vorticity_budget(mesh, vel);
    checks.push_back(check("vorticity", sup <= budget, budget - sup,
                           {{"sup_curl", sup}, {"budget", budget}, {"circulation_drift", circ}}));
  }

  const double tau = times.back() > 0.0 ? times.back() : 1.0;
  ScalarTest psi{[tau](const Vec3& x, double t) { return x.z() * (1.0 - t / tau); },
                 [tau](const Vec3& x, double) { return -x.z() / tau; },
                 [tau](const Vec3& x, double t) { return Vec3((Vec3::UnitZ() - x.z() * x) * (1.0 - t / tau)); }};
  std::vector<Snapshot> plain;
  for (const auto& s : snaps) plain.push_back(s.snap);
  checks.push_back(monitor("weak_continuity_residual", weak_continuity_residual(mesh, plain, psi)));
  if (plain.size() > 1) {
    VectorTest phi = [](const Vec3& x, double) { return Vec3(Vec3::UnitZ() - x.z() * x); };
    checks.push_back(monitor("weak_acceleration_residual", weak_acceleration_residual(mesh, plain, theta, phi)));
  }

  {
    std::mt19937_64 rng(seed);
    double worst = onofri_check(mesh, snaps.back().snap.q);
    for (int k = 0; k < 20; ++k) worst = std::min(worst, onofri_check(mesh, band_limited_field(mesh, 4, 1.0, rng)));
    checks.push_back(check("onofri", worst >= -1e-4, worst + 1e-4, {{"worst", worst}}));
  }

  if (compare) {
    const auto g = gronwall_compare(mesh, run.as_result(), compare->as_result());
    checks.push_back(check("gronwall", g.holds, g.worst_margin,
                           {{"times", g.times}, {"measured", g.measured}, {"bound", g.bound}, {"lipschitz", g.lipschitz}}));
  }

  bool all = true;
  for (const auto& c : checks)
    if (c["pass"].is_boolean() && !c["pass"].get<bool>()) all = false;
  json out;
  out["format_version"] = kFormatVersion;
  out["mesh"] = {{"level", mesh.level}, {"checksum", hex64(mesh.checksum())}};
  out["snapshots"] = snaps.size();
  out["seed"] = seed;
  out["all_pass"] = all;
  out["checks"] = checks;
  return out;
}

}  // namespace sphere_euler::cli
