#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "config.hpp"

namespace sphere_euler::cli {

// Decimal with 17 significant digits; NaN and infinities as null.
std::string num(double x);

struct StoredSnapshot {
  Snapshot snap;
  LedgerRow row;
};

struct StoredRun {
  int mesh_level = 0;
  std::uint64_t mesh_checksum = 0;
  std::vector<StoredSnapshot> snapshots;
};

void write_snapshot(std::ostream& os, const Mesh& mesh, const Snapshot& s, const LedgerRow& row);
void write_ledger_csv(std::ostream& os, const EnergyLedger& ledger);
nlohmann::json ledger_row_json(const LedgerRow& row);
LedgerRow ledger_row_from_json(const nlohmann::json& j);

// Parses snapshots.ndjson. Malformed lines raise InputError; a snapshot
// whose density fails the mass or positivity invariant raises NumericalError.
StoredRun read_snapshots(std::istream& is, double mass_tol = 1e-10);
StoredRun read_snapshots_file(const std::string& path, double mass_tol = 1e-10);

nlohmann::json summary_json(const CliConfig& cfg, const Mesh& mesh, const RunResult& res);

// Writes snapshots.ndjson, ledger.csv and summary.json into dir.
void write_run_artifacts(const std::string& dir, const CliConfig& cfg, const Mesh& mesh, const RunResult& res);

std::string hex64(std::uint64_t v);

}  // namespace sphere_euler::cli
