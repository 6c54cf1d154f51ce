#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "tagcode/estimator.hpp"
#include "tagcode/experiments.hpp"

namespace tagcode {

std::string tool_version();

// Writes to a sibling temporary file, then renames it over `path`.
void atomic_write(const std::filesystem::path& path, const std::string& content);

// Shortest round-trip-stable decimal form used in every CSV cell.
std::string format_number(double v);

std::string sweep_csv(const std::vector<SweepRow>& rows, std::uint64_t config_hash);
// One row per array that ran (skipped arrays are omitted).
std::string histogram_csv(const std::vector<ArrayRecord>& records, std::uint64_t seed,
                          std::uint64_t config_hash);
// Long format: one row per (array, method).
std::string array_errors_csv(const std::vector<ArrayRecord>& records, std::uint64_t seed,
                             std::uint64_t config_hash);
std::string multipath_csv(const std::vector<MultipathRow>& rows, std::uint64_t seed,
                          std::uint64_t config_hash);
std::string robustness_csv(const std::vector<RobustnessRow>& rows, std::uint64_t config_hash);

// JSON rendering of an ErrorReport (per-orientation vectors included when asked).
std::string report_json(const ErrorReport& report, bool per_orientation);

struct CodeMetadata {
  std::string method;
  std::size_t length = 0;
  int tag_count = 0;
  double design_snr_db = 0.0;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  std::vector<double> proportions;  // empty for constructed codes
  double objective = 0.0;
  double rounded_objective = 0.0;
  std::size_t iterations = 0;
  bool converged = true;
  std::string selected;
};

std::string code_metadata_json(const CodeMetadata& meta);

struct RunManifest {
  std::uint64_t config_hash = 0;
  std::string tool_version;
  std::string subcommand;
  std::map<std::string, std::uint64_t> seeds;
  std::chrono::system_clock::time_point started;
  std::chrono::system_clock::time_point finished;
  std::vector<std::string> outputs;
  std::map<std::string, std::string> notes;
};

std::string manifest_json(const RunManifest& manifest);

}  // namespace tagcode
