#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "artifacts.hpp"

namespace sphere_euler::cli {

// Random polynomial of total degree <= degree in (x, y, z) restricted to the
// sphere, i.e. a band-limited field, scaled to sup norm amplitude.
ScalarField band_limited_field(const Mesh& mesh, int degree, double amplitude, std::mt19937_64& rng);

// Vorticity tolerance for gradient data: spacing^2 sup|v| plus roundoff.
double vorticity_budget(const Mesh& mesh, const std::vector<VectorField>& fields);

struct LoadedRun {
  CliConfig config;
  MeshPtr mesh;
  StoredRun stored;

  RunResult as_result() const;
};

// Reads summary.json and snapshots.ndjson from dir. Missing files raise
// InputError, invariant failures NumericalError.
LoadedRun load_run(const std::string& dir);

// Inequality checks on stored artifacts; compare adds the Gronwall check
// against a second run with the same mesh and initial data.
nlohmann::json diagnose(const LoadedRun& run, const LoadedRun* compare, std::uint64_t seed);

}  // namespace sphere_euler::cli
