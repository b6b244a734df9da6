#include "config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>

#ifdef SPHERE_EULER_HAVE_OPENMP
#include <omp.h>
#endif

namespace sphere_euler::cli {

using nlohmann::json;

namespace {

template <class T>
T field(const json& j, const char* name) {
  if (!j.contains(name)) throw InputError(std::string("config: missing field '") + name + "'");
  try {
    return j.at(name).get<T>();
  } catch (const json::exception&) {
    throw InputError(std::string("config: field '") + name + "' has the wrong type");
  }
}

template <class T>
void optional_field(const json& j, const char* name, T& out) {
  if (j.contains(name)) out = field<T>(j, name);
}

struct PresetCall {
  std::string name;
  std::vector<double> args;
  std::string path;
};

PresetCall parse_preset(const std::string& spec) {
  PresetCall p;
  if (spec.rfind("from_file:", 0) == 0) {
    p.name = "from_file";
    p.path = spec.substr(10);
    if (p.path.empty()) throw InputError("preset from_file needs a path");
    return p;
  }
  static const std::regex re(R"(^\s*([a-z_]+)\s*(?:\(([^)]*)\))?\s*$)");
  std::smatch m;
  if (!std::regex_match(spec, m, re)) throw InputError("cannot parse preset '" + spec + "'");
  p.name = m[1];
  std::stringstream ss(m[2].str());
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t pos = 0;
      p.args.push_back(std::stod(tok, &pos));
      if (tok.find_first_not_of(" \t", pos) != std::string::npos) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw InputError("bad preset argument '" + tok + "' in '" + spec + "'");
    }
  }
  return p;
}

double arg_or(const PresetCall& p, std::size_t i, double def) { return i < p.args.size() ? p.args[i] : def; }

}  // namespace

json CliConfig::to_json() const {
  json j;
  j["mesh_level"] = mesh_level;
  j["gamma"] = gamma;
  j["theta_variant"] = theta_variant;
  j["h"] = h;
  j["tau"] = tau;
  j["eps_factor"] = eps_factor;
  j["initial_density"] = initial_density;
  if (!initial_potential.empty()) j["initial_potential"] = initial_potential;
  j["seed"] = seed;
  j["output_dir"] = output_dir;
  j["ledger_transport"] = ledger_transport;
  j["mollify_density"] = mollify_density;
  j["hessian_guard"] = hessian_guard;
  return j;
}

CliConfig parse_config(const json& j) {
  if (!j.is_object()) throw InputError("config: top level must be an object");
  CliConfig c;
  c.mesh_level = field<int>(j, "mesh_level");
  c.gamma = field<double>(j, "gamma");
  c.h = field<double>(j, "h");
  c.tau = field<double>(j, "tau");
  c.initial_density = field<std::string>(j, "initial_density");
  optional_field(j, "theta_variant", c.theta_variant);
  optional_field(j, "eps_factor", c.eps_factor);
  optional_field(j, "initial_potential", c.initial_potential);
  optional_field(j, "seed", c.seed);
  optional_field(j, "output_dir", c.output_dir);
  optional_field(j, "ledger_transport", c.ledger_transport);
  optional_field(j, "mollify_density", c.mollify_density);
  optional_field(j, "hessian_guard", c.hessian_guard);

  if (c.mesh_level < 1 || c.mesh_level > 6) throw InputError("config: mesh_level must lie in [1, 6]");
  if (!(c.gamma > 1.0)) throw InputError("config: gamma must exceed 1");
  if (!(c.h > 0.0)) throw InputError("config: h must be positive");
  if (!(c.tau >= c.h)) throw InputError("config: tau must be at least h");
  if (!(c.eps_factor >= 0.0)) throw InputError("config: eps_factor must be nonnegative");
  if (c.theta_variant != "power" && c.theta_variant != "theta1_power" && c.theta_variant != "log")
    throw InputError("config: theta_variant must be power, theta1_power or log");
  return c;
}

CliConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InputError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

ThetaModel make_theta(const CliConfig& cfg) {
  if (cfg.theta_variant == "log") return ThetaModel::log();
  if (cfg.theta_variant == "theta1_power") return ThetaModel::from_theta1_power(cfg.gamma);
  return ThetaModel::power(cfg.gamma);
}

ScalarField read_values(const std::string& path, std::size_t expected) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::vector<double> vals;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto c = line.find('#'); c != std::string::npos) line.resize(c);
    std::istringstream ls(line);
    std::string tok;
    while (ls >> tok) {
      char* end = nullptr;
      const double v = std::strtod(tok.c_str(), &end);
      if (end == tok.c_str() || *end != '\0' || !std::isfinite(v))
        throw InputError(path + ":" + std::to_string(lineno) + ": bad number '" + tok + "'");
      vals.push_back(v);
    }
  }
  if (expected && vals.size() != expected)
    throw InputError(path + ": expected " + std::to_string(expected) + " values, got " + std::to_string(vals.size()));
  return Eigen::Map<const ScalarField>(vals.data(), Eigen::Index(vals.size()));
}

InitialData make_initial(const Mesh& mesh, const CliConfig& cfg) {
  const PresetCall d = parse_preset(cfg.initial_density);
  InitialData init;
  try {
    if (d.name == "static") {
      init = static_preset(mesh);
    } else if (d.name == "zonal") {
      init = zonal_preset(mesh, arg_or(d, 0, 0.2), arg_or(d, 1, 0.1));
    } else if (d.name == "rossby") {
      init = rossby_preset(mesh, arg_or(d, 0, 0.1), int(arg_or(d, 1, 2)));
    } else if (d.name == "from_file") {
      ScalarField rho = read_values(d.path, mesh.size());
      if (rho.minCoeff() <= 0.0) throw InputError(d.path + ": density must be positive");
      init = {normalize_density(mesh, rho), ScalarField::Zero(rho.size()), "from_file"};
    } else {
      throw InputError("unknown density preset '" + d.name + "'");
    }
  } catch (const DomainError& e) {
    throw InputError(e.what());
  }
  if (!cfg.initial_potential.empty()) {
    const PresetCall q = parse_preset(cfg.initial_potential);
    if (q.name == "zero") {
      init.q.setZero();
    } else if (q.name == "from_file") {
      init.q = read_values(q.path, mesh.size());
    } else if (q.name == "zonal") {
      for (std::size_t i = 0; i < mesh.size(); ++i) init.q[Eigen::Index(i)] = arg_or(q, 0, 0.1) * mesh.nodes[i].z();
    } else {
      throw InputError("unknown potential preset '" + q.name + "'");
    }
  }
  return init;
}

RunConfig make_run_config(const CliConfig& cfg, MeshPtr mesh) {
  RunConfig rc;
  rc.theta = make_theta(cfg);
  rc.h = cfg.h;
  rc.tau = cfg.tau;
  rc.eps_factor = cfg.eps_factor;
  rc.mollify_density = cfg.mollify_density;
  rc.ledger_transport = cfg.ledger_transport;
  rc.hessian_guard = cfg.hessian_guard;
  rc.initial = make_initial(*mesh, cfg);
  rc.mesh = std::move(mesh);
  return rc;
}

void apply_thread_limit() {
#ifdef SPHERE_EULER_HAVE_OPENMP
  if (const char* s = std::getenv("SPHERE_EULER_THREADS")) {
    const int n = std::atoi(s);
    if (n > 0) omp_set_num_threads(n);
  }
#endif
}

}  // namespace sphere_euler::cli
