#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "artifacts.hpp"
#include "diagnose.hpp"

using namespace sphere_euler;
using namespace sphere_euler::cli;
using nlohmann::json;

namespace {

struct Discrete {
  std::vector<Vec3> points;
  Eigen::VectorXd masses;
  MeshPtr mesh;       // set for mesh densities
  ScalarField density;
};

Discrete read_measure(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InputError(path + ": not valid JSON: " + e.what());
  }
  Discrete d;
  try {
    if (j.contains("points")) {
      for (const auto& p : j.at("points")) {
        if (!p.is_array() || p.size() != 3) throw InputError(path + ": points must be [x, y, z] triples");
        Vec3 x(p[0].get<double>(), p[1].get<double>(), p[2].get<double>());
        if (!(x.norm() > 0.0)) throw InputError(path + ": zero point");
        d.points.push_back(x.normalized());
      }
      const auto& m = j.at("masses");
      if (m.size() != d.points.size()) throw InputError(path + ": masses and points differ in length");
      d.masses.resize(Eigen::Index(m.size()));
      for (std::size_t i = 0; i < m.size(); ++i) {
        d.masses[Eigen::Index(i)] = m[i].get<double>();
        if (!(d.masses[Eigen::Index(i)] >= 0.0)) throw InputError(path + ": negative mass");
      }
      if (d.points.empty()) throw InputError(path + ": no points");
    } else if (j.contains("mesh_level")) {
      const int level = j.at("mesh_level").get<int>();
      if (level < 0 || level > 6) throw InputError(path + ": mesh_level out of range");
      d.mesh = build_icosphere(level);
      const auto& a = j.at("density");
      if (a.size() != d.mesh->size()) throw InputError(path + ": density length does not match the mesh");
      d.density.resize(Eigen::Index(a.size()));
      for (std::size_t i = 0; i < a.size(); ++i) d.density[Eigen::Index(i)] = a[i].get<double>();
      try {
        check_density(*d.mesh, d.density);
      } catch (const DomainError& e) {
        throw InputError(path + ": " + e.what());
      }
    } else {
      throw InputError(path + ": expected 'points'/'masses' or 'mesh_level'/'density'");
    }
  } catch (const json::exception& e) {
    throw InputError(path + ": " + e.what());
  }
  return d;
}

int cmd_run(const std::string& config_path, const std::string& out_override, const std::int64_t seed) {
  CliConfig cfg = load_config(config_path);
  if (!out_override.empty()) cfg.output_dir = out_override;
  if (seed >= 0) cfg.seed = std::uint64_t(seed);
  MeshPtr mesh = build_icosphere(cfg.mesh_level);
  RunConfig rc = make_run_config(cfg, mesh);
  const RunResult res = run(rc);
  write_run_artifacts(cfg.output_dir, cfg, *mesh, res);
  const auto& last = res.ledger.rows.back();
  std::printf("steps %d  H %.12g -> %.12g  worst dissipation %.3e\n", int(res.ledger.rows.size()) - 1,
              res.ledger.rows.front().hamiltonian, last.hamiltonian, res.ledger.worst_dissipation());
  std::printf("artifacts in %s\n", cfg.output_dir.c_str());
  if (res.aborted) {
    std::fprintf(stderr, "aborted: %s\n", res.diagnostic.c_str());
    return 3;
  }
  return 0;
}

int cmd_transport(const std::string& src, const std::string& dst, bool duality) {
  const Discrete a = read_measure(src), b = read_measure(dst);
  std::vector<Vec3> xs, ys;
  Eigen::VectorXd ma, mb;
  if (a.mesh && b.mesh) {
    if (a.mesh->level != b.mesh->level) throw InputError("source and target live on different meshes");
    xs = ys = a.mesh->nodes;
    ma = a.density.cwiseProduct(a.mesh->weights);
    mb = b.density.cwiseProduct(b.mesh->weights);
  } else if (!a.mesh && !b.mesh) {
    xs = a.points;
    ys = b.points;
    ma = a.masses;
    mb = b.masses;
  } else {
    throw InputError("source and target must both be point sets or both mesh densities");
  }
  const double ta = ma.sum(), tb = mb.sum();
  if (!(ta > 0.0) || std::abs(ta - tb) > 1e-9 * std::max(1.0, ta))
    throw InputError("source and target masses differ");
  const TransportResult half = transport_exact(xs, ma, ys, mb, CostKind::HalfSquared);
  const TransportResult w1 = transport_exact(xs, ma, ys, mb, CostKind::Distance);
  std::printf("W2^2 half-squared cost (d^2/2): %.17g\n", half.value);
  std::printf("W2^2 standard cost (d^2):       %.17g\n", 2.0 * half.value);
  std::printf("W1:                             %.17g\n", w1.value);
  if (duality) {
    const auto& p = half.potentials;
    const double dual = ma.dot(p.phi1) + mb.dot(p.phi2);
    double infeas = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < xs.size(); ++i)
      for (std::size_t j = 0; j < ys.size(); ++j)
        infeas = std::max(infeas, p.phi1[Eigen::Index(i)] + p.phi2[Eigen::Index(j)] - ground_cost(xs[i], ys[j]));
    std::printf("primal: %.17g\ndual:   %.17g\ngap:    %.3e\ndual infeasibility: %.3e\n", half.value, dual,
                half.value - dual, std::max(0.0, infeas));
    if (half.value - dual < -1e-9) return 3;
  }
  return 0;
}

int cmd_jko(const std::string& config_path, const std::string& out_dir) {
  const CliConfig cfg = load_config(config_path);
  MeshPtr mesh = build_icosphere(cfg.mesh_level);
  const ThetaModel theta = make_theta(cfg);
  const InitialData init = make_initial(*mesh, cfg);
  const ScalarField f = cfg.eps_factor > 0.0 && cfg.mollify_density
                            ? mollify(mesh, init.rho, default_eps(*mesh, cfg.eps_factor))
                            : init.rho;
  const JkoResult r = jko_step(*mesh, f, cfg.h, theta);
  const double d1 = std::min(kFourPi * f.minCoeff(), 1.0 / (kFourPi * f.maxCoeff()));
  json j;
  j["format_version"] = kFormatVersion;
  j["h"] = cfg.h;
  j["value"] = r.value;
  j["dual_value"] = r.dual_value;
  j["gap"] = r.optimality_residual;
  j["pinned"] = r.pinned;
  j["iterations"] = r.iterations;
  j["delta1"] = d1;
  j["bounds_hold"] = minimizer_bounds_check(r, d1, 1e-12);
  j["fisher_gap"] = fisher_gap_check(*mesh, f, r, cfg.h, theta);
  j["map_residual"] = optimality_map_residual(*mesh, r, f, cfg.h, theta);
  std::cout << j.dump(2) << '\n';
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ofstream os(std::filesystem::path(out_dir) / "jko.json");
    os << j.dump(2) << '\n';
  }
  return 0;
}

int cmd_diagnose(const std::string& dir, const std::string& compare_dir, std::int64_t seed) {
  const LoadedRun run = load_run(dir);
  LoadedRun other;
  if (!compare_dir.empty()) other = load_run(compare_dir);
  const std::uint64_t s = seed >= 0 ? std::uint64_t(seed) : run.config.seed;
  const json d = diagnose(run, compare_dir.empty() ? nullptr : &other, s);
  {
    std::ofstream os(std::filesystem::path(dir) / "diagnostics.json");
    os << d.dump(2) << '\n';
  }
  for (const auto& c : d["checks"]) {
    const char* verdict = c["pass"].is_null() ? "info" : (c["pass"].get<bool>() ? "pass" : "FAIL");
    const json& v = c.contains("margin") ? c["margin"] : c["value"];
    std::printf("%-28s %-5s %s\n", c["name"].get<std::string>().c_str(), verdict, v.dump().c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  apply_thread_limit();
  CLI::App app{"Isentropic Euler flow on the sphere"};
  app.require_subcommand(1);

  std::string config, out, source, target, dir, compare;
  std::int64_t seed = -1;
  bool duality = false;

  auto* run_cmd = app.add_subcommand("run", "run the solver and write artifacts");
  run_cmd->add_option("--config", config, "config JSON")->required();
  run_cmd->add_option("--out", out, "output directory (overrides output_dir)");
  run_cmd->add_option("--seed", seed, "seed recorded with the run");

  auto* tr_cmd = app.add_subcommand("transport", "optimal transport between two measures");
  tr_cmd->add_option("--source", source, "source measure JSON")->required();
  tr_cmd->add_option("--target", target, "target measure JSON")->required();
  tr_cmd->add_flag("--check-duality", duality, "report primal, dual and gap");

  auto* jko_cmd = app.add_subcommand("jko", "one corrector step on the configured initial density");
  jko_cmd->add_option("--config", config, "config JSON")->required();
  jko_cmd->add_option("--out", out, "directory for jko.json");

  auto* dg_cmd = app.add_subcommand("diagnose", "checks on stored run artifacts");
  dg_cmd->add_option("--out", dir, "run directory")->required();
  dg_cmd->add_option("--compare", compare, "second run for the Gronwall comparison");
  dg_cmd->add_option("--seed", seed, "seed for the random potentials");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*run_cmd) return cmd_run(config, out, seed);
    if (*tr_cmd) return cmd_transport(source, target, duality);
    if (*jko_cmd) return cmd_jko(config, out);
    if (*dg_cmd) return cmd_diagnose(dir, compare, seed);
  } catch (const InputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const ConvergenceError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const DomainError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
