#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "sphere_euler/euler_solver.hpp"

namespace sphere_euler::cli {

// Bad user input: config fields, file formats. Maps to exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical abort or a violated invariant on load. Maps to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kFormatVersion = 1;

struct CliConfig {
  int mesh_level = 3;
  double gamma = 1.4;
  std::string theta_variant = "power";
  double h = 0.02;
  double tau = 0.2;
  double eps_factor = 2.0;
  std::string initial_density;
  std::string initial_potential;  // empty: take the preset's potential
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  bool ledger_transport = true;
  bool mollify_density = false;
  double hessian_guard = 0.5;

  nlohmann::json to_json() const;
};

// Required: mesh_level, gamma, h, tau, initial_density.
CliConfig parse_config(const nlohmann::json& j);
CliConfig load_config(const std::string& path);

ThetaModel make_theta(const CliConfig& cfg);

// Presets: "static", "zonal(a, b)", "rossby(a, m)", "from_file:PATH".
InitialData make_initial(const Mesh& mesh, const CliConfig& cfg);

// Whitespace separated values, '#' starts a comment.
ScalarField read_values(const std::string& path, std::size_t expected);

RunConfig make_run_config(const CliConfig& cfg, MeshPtr mesh);

// Caps the OpenMP pool from SPHERE_EULER_THREADS when set.
void apply_thread_limit();

}  // namespace sphere_euler::cli
