#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mfcl/config.hpp"
#include "mfcl/dynamics.hpp"
#include "mfcl/experiments.hpp"
#include "mfcl/hydro.hpp"
#include "mfcl/transport.hpp"

namespace mfcl {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kManifestSchema = 1;

// CSV renderers. Fixed column order, 17 significant digits, '\n' endings.
std::string trajectory_csv(const Trajectory& tr);
std::string monitor_csv(const Trajectory& tr);
std::string field_csv(const ChemGrid& grid);
std::string rate_table_csv(const RateTable& table);
std::string replicate_csv(const RateTable& table);
std::string plan_csv(const TransportPlan& plan);
std::string dobrushin_csv(const std::vector<DobrushinSample>& samples);
std::string coupling_csv(const CoupledSeries& series);
std::string euler_state_csv(const EulerState& state);
std::string euler_compare_csv(const EulerCompare& result);

std::string sha1_hex(const std::string& bytes);
std::string sha1_file(const std::filesystem::path& path);

struct OutputFile {
  std::string name;
  std::string sha1;
  std::uintmax_t bytes = 0;

  bool operator==(const OutputFile&) const = default;
};

struct RunManifest {
  int schema = kManifestSchema;
  std::string tool_version = kToolVersion;
  std::string command;
  std::optional<SimConfig> config;
  std::optional<BoundConstants> constants;
  std::map<std::string, bool> criteria;
  nlohmann::json results = nlohmann::json::object();
  std::vector<OutputFile> files;
  double wall_seconds = 0.0;
  Index steps = 0;
};

nlohmann::json to_json(const BoundConstants& c);
nlohmann::json to_json(const RunManifest& m);

/// Writes every record as dir/name, fills manifest.files in name order and
/// writes dir/manifest.json. Throws std::runtime_error on I/O failure.
std::vector<OutputFile> write_outputs(const std::map<std::string, std::string>& records,
                                      RunManifest& manifest, const std::filesystem::path& dir);

/// Recomputes the digest of every file listed in dir/manifest.json.
/// Returns an empty string on success, otherwise the first problem.
std::string verify_manifest(const std::filesystem::path& dir);

}  // namespace mfcl
