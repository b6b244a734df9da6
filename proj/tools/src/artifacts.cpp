#include "artifacts.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace sphere_euler::cli {

using nlohmann::json;

std::string num(double x) {
  if (!std::isfinite(x)) return "null";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

namespace {

void write_array(std::ostream& os, const double* p, std::size_t n) {
  os << '[';
  for (std::size_t i = 0; i < n; ++i) {
    if (i) os << ',';
    os << num(p[i]);
  }
  os << ']';
}

void write_scalar(std::ostream& os, const ScalarField& f) { write_array(os, f.data(), std::size_t(f.size())); }

// Row-major x0 y0 z0 x1 ...
void write_vector(std::ostream& os, const VectorField& V) {
  std::vector<double> flat(std::size_t(V.rows()) * 3);
  for (Eigen::Index i = 0; i < V.rows(); ++i)
    for (int k = 0; k < 3; ++k) flat[std::size_t(i) * 3 + k] = V(i, k);
  write_array(os, flat.data(), flat.size());
}

double as_double(const json& v) { return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>(); }

ScalarField scalar_from(const json& a, std::size_t n, const char* name) {
  if (!a.is_array() || a.size() != n) throw InputError(std::string("snapshot: field '") + name + "' has wrong length");
  ScalarField f(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) f[Eigen::Index(i)] = as_double(a[i]);
  return f;
}

VectorField vector_from(const json& a, std::size_t n, const char* name) {
  if (!a.is_array() || a.size() != 3 * n) throw InputError(std::string("snapshot: field '") + name + "' has wrong length");
  VectorField V(static_cast<Eigen::Index>(n), 3);
  for (std::size_t i = 0; i < n; ++i)
    for (int k = 0; k < 3; ++k) V(Eigen::Index(i), k) = as_double(a[3 * i + k]);
  return V;
}

}  // namespace

json ledger_row_json(const LedgerRow& r) {
  auto d = [](double x) { return std::isfinite(x) ? json(x) : json(nullptr); };
  return json{{"step", r.step},
              {"t", d(r.t)},
              {"kinetic", d(r.kinetic)},
              {"internal", d(r.internal)},
              {"hamiltonian", d(r.hamiltonian)},
              {"w2_step", d(r.w2_step)},
              {"fisher", d(r.fisher)},
              {"dissipation_margin", d(r.dissipation_margin)},
              {"budget", d(r.budget)},
              {"descent_margin", d(r.descent_margin)},
              {"cross_margin", d(r.cross_margin)},
              {"predictor_margin", d(r.predictor_margin)},
              {"jko_gap", d(r.jko_gap)},
              {"jko_pinned", r.jko_pinned},
              {"projection_loss", d(r.projection_loss)},
              {"hessian_sup", d(r.hessian_sup)},
              {"forcing_sup", d(r.forcing_sup)},
              {"rho_min", d(r.rho_min)},
              {"rho_max", d(r.rho_max)},
              {"mass_error", d(r.mass_error)}};
}

LedgerRow ledger_row_from_json(const json& j) {
  LedgerRow r;
  try {
    r.step = j.at("step").get<int>();
    r.t = as_double(j.at("t"));
    r.kinetic = as_double(j.at("kinetic"));
    r.internal = as_double(j.at("internal"));
    r.hamiltonian = as_double(j.at("hamiltonian"));
    r.w2_step = as_double(j.at("w2_step"));
    r.fisher = as_double(j.at("fisher"));
    r.dissipation_margin = as_double(j.at("dissipation_margin"));
    r.budget = as_double(j.at("budget"));
    r.descent_margin = as_double(j.at("descent_margin"));
    r.cross_margin = as_double(j.at("cross_margin"));
    r.predictor_margin = as_double(j.at("predictor_margin"));
    r.jko_gap = as_double(j.at("jko_gap"));
    r.jko_pinned = j.at("jko_pinned").get<bool>();
    r.projection_loss = as_double(j.at("projection_loss"));
    r.hessian_sup = as_double(j.at("hessian_sup"));
    r.forcing_sup = as_double(j.at("forcing_sup"));
    r.rho_min = as_double(j.at("rho_min"));
    r.rho_max = as_double(j.at("rho_max"));
    r.mass_error = as_double(j.at("mass_error"));
  } catch (const json::exception& e) {
    throw InputError(std::string("ledger row: ") + e.what());
  }
  return r;
}

void write_snapshot(std::ostream& os, const Mesh& mesh, const Snapshot& s, const LedgerRow& row) {
  os << "{\"format_version\":" << kFormatVersion << ",\"mesh_level\":" << mesh.level << ",\"mesh_checksum\":\""
     << hex64(mesh.checksum()) << "\",\"nodes\":" << mesh.size() << ",\"step\":" << s.step << ",\"t\":" << num(s.t);
  os << ",\"rho\":";
  write_scalar(os, s.rho);
  os << ",\"q\":";
  write_scalar(os, s.q);
  os << ",\"velocity\":";
  write_vector(os, s.v);
  os << ",\"w\":";
  write_vector(os, s.w);
  os << ",\"grad_p\":";
  write_vector(os, s.grad_p);
  // Ledger values go through the same formatter as the fields.
  const json lj = ledger_row_json(row);
  os << ",\"ledger\":{";
  bool first = true;
  for (auto it = lj.begin(); it != lj.end(); ++it) {
    if (!first) os << ',';
    first = false;
    os << '"' << it.key() << "\":";
    if (it->is_number_float()) os << num(it->get<double>());
    else os << it->dump();
  }
  os << "}}\n";
}

void write_ledger_csv(std::ostream& os, const EnergyLedger& ledger) {
  os << "step,t,kinetic,internal,hamiltonian,w2_step,fisher,dissipation_margin\n";
  auto c = [](double x) { return std::isfinite(x) ? num(x) : std::string("nan"); };
  for (const auto& r : ledger.rows)
    os << r.step << ',' << c(r.t) << ',' << c(r.kinetic) << ',' << c(r.internal) << ',' << c(r.hamiltonian) << ','
       << c(r.w2_step) << ',' << c(r.fisher) << ',' << c(r.dissipation_margin) << '\n';
}

StoredRun read_snapshots(std::istream& is, double mass_tol) {
  StoredRun run;
  std::string line;
  int lineno = 0;
  MeshPtr mesh;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw InputError("snapshots line " + std::to_string(lineno) + ": " + e.what());
    }
    try {
      if (j.at("format_version").get<int>() != kFormatVersion)
        throw InputError("snapshots line " + std::to_string(lineno) + ": unsupported format_version");
      const int level = j.at("mesh_level").get<int>();
      const std::uint64_t sum = std::stoull(j.at("mesh_checksum").get<std::string>(), nullptr, 16);
      if (!mesh) {
        if (level < 0 || level > 6) throw InputError("snapshots: mesh_level out of range");
        mesh = build_icosphere(level);
        if (mesh->checksum() != sum) throw InputError("snapshots: mesh checksum does not match level " + std::to_string(level));
        run.mesh_level = level;
        run.mesh_checksum = sum;
      } else if (level != run.mesh_level || sum != run.mesh_checksum) {
        throw InputError("snapshots line " + std::to_string(lineno) + ": mesh changes within the file");
      }
      const std::size_t n = mesh->size();
      StoredSnapshot s;
      s.snap.step = j.at("step").get<int>();
      s.snap.t = j.at("t").get<double>();
      s.snap.rho = scalar_from(j.at("rho"), n, "rho");
      s.snap.q = scalar_from(j.at("q"), n, "q");
      s.snap.v = vector_from(j.at("velocity"), n, "velocity");
      s.snap.w = vector_from(j.at("w"), n, "w");
      s.snap.grad_p = vector_from(j.at("grad_p"), n, "grad_p");
      s.row = ledger_row_from_json(j.at("ledger"));
      if (!(s.snap.rho.minCoeff() >= 0.0))
        throw NumericalError("snapshot step " + std::to_string(s.snap.step) + ": negative density");
      const double merr = std::abs(mass(*mesh, s.snap.rho) - 1.0);
      if (!(merr <= mass_tol))
        throw NumericalError("snapshot step " + std::to_string(s.snap.step) + ": mass error " + num(merr));
      run.snapshots.push_back(std::move(s));
    } catch (const json::exception& e) {
      throw InputError("snapshots line " + std::to_string(lineno) + ": " + e.what());
    } catch (const std::invalid_argument&) {
      throw InputError("snapshots line " + std::to_string(lineno) + ": bad mesh_checksum");
    }
  }
  if (run.snapshots.empty()) throw InputError("snapshots: no records");
  return run;
}

StoredRun read_snapshots_file(const std::string& path, double mass_tol) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  return read_snapshots(in, mass_tol);
}

json summary_json(const CliConfig& cfg, const Mesh& mesh, const RunResult& res) {
  const auto& rows = res.ledger.rows;
  double min_descent = std::numeric_limits<double>::infinity();
  double min_cross = min_descent, max_mass = 0.0;
  int pinned = 0;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    if (std::isfinite(rows[k].descent_margin)) min_descent = std::min(min_descent, rows[k].descent_margin + rows[k].budget);
    min_cross = std::min(min_cross, rows[k].cross_margin + rows[k].budget);
    pinned += rows[k].jko_pinned ? 1 : 0;
  }
  for (const auto& r : rows) max_mass = std::max(max_mass, r.mass_error);
  auto d = [](double x) { return std::isfinite(x) ? json(x) : json(nullptr); };
  json j;
  j["format_version"] = kFormatVersion;
  j["config"] = cfg.to_json();
  j["mesh"] = {{"level", mesh.level}, {"nodes", mesh.size()}, {"checksum", hex64(mesh.checksum())}};
  j["eps"] = res.eps;
  j["steps"] = rows.empty() ? 0 : int(rows.size()) - 1;
  j["aborted"] = res.aborted;
  j["diagnostic"] = res.diagnostic;
  j["initial_hamiltonian"] = rows.empty() ? json(nullptr) : d(rows.front().hamiltonian);
  j["final_hamiltonian"] = rows.empty() ? json(nullptr) : d(rows.back().hamiltonian);
  j["worst_increase"] = d(res.ledger.worst_increase());
  j["worst_dissipation"] = d(res.ledger.worst_dissipation());
  j["worst_descent"] = d(min_descent);
  j["worst_cross"] = d(min_cross);
  j["max_mass_error"] = max_mass;
  j["pinned_steps"] = pinned;
  return j;
}

void write_run_artifacts(const std::string& dir, const CliConfig& cfg, const Mesh& mesh, const RunResult& res) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create output directory '" + dir + "': " + ec.message());
  const fs::path base(dir);
  {
    std::ofstream os(base / "snapshots.ndjson");
    for (std::size_t k = 0; k < res.snapshots.size(); ++k)
      write_snapshot(os, mesh, res.snapshots[k], res.ledger.rows[k]);
    if (!os) throw InputError("failed writing snapshots.ndjson");
  }
  {
    std::ofstream os(base / "ledger.csv");
    write_ledger_csv(os, res.ledger);
  }
  {
    std::ofstream os(base / "summary.json");
    os << summary_json(cfg, mesh, res).dump(2) << '\n';
  }
}

}  // namespace sphere_euler::cli
