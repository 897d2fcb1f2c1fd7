#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "pdmpclt/empirical.hpp"
#include "pdmpclt/state.hpp"
#include "pdmpclt/trajectory.hpp"

namespace pdmpclt {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kToolVersion = "0.1.0";

// Shortest round-trip decimal form; locale-free, so re-runs are byte-stable.
std::string format_double(double v);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

// CSV rows of already-formatted cells.
std::string csv_join(const std::vector<std::string>& cells);

// Trajectory skeleton: n, tau, y components, regime.
std::string trajectory_csv(const Trajectory& traj);

// Point cloud: y components, regime, weight. Weights are validated
// (nonnegative, total within 1e-9 of 1) and renormalized exactly.
std::string point_cloud_csv(const EmpiricalMeasure& mu, int dim);
EmpiricalMeasure parse_point_cloud_csv(const std::string& text);

// FNV-1a over a canonical string, as a hex token for manifests.
std::string fnv1a_hex(const std::string& payload);

// Report envelope: schema_version plus payload. Volatile data (timestamps)
// lives only inside the manifest's "volatile" section so byte comparisons can
// exclude it.
nlohmann::json report_envelope(nlohmann::json payload);
nlohmann::json manifest_json(const std::string& command, const std::string& config_hash,
                             std::uint64_t seed, const std::vector<std::string>& outputs);

void ensure_directory(const std::string& path);

}  // namespace pdmpclt
