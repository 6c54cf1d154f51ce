#include "tagcode/io.hpp"

#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>

#include <json.hpp>

#include "tagcode/config.hpp"
#include "tagcode/error.hpp"

#ifndef TAGCODE_VERSION
#define TAGCODE_VERSION "0.0.0"
#endif

namespace tagcode {

namespace {

std::string iso_utc(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// JSON has no inf/nan; they become strings.
nlohmann::json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

}  // namespace

std::string tool_version() { return TAGCODE_VERSION; }

void atomic_write(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw Error("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error("cannot move output into place at '" + path.string() + "': " + ec.message());
  }
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string sweep_csv(const std::vector<SweepRow>& rows, std::uint64_t config_hash) {
  std::string out =
      "method,snr_db,avg_error,worst_error,variance,avg_error_se,worst_error_se,avg_root_error,"
      "misdecode_rate,seed,config_hash\n";
  const std::string hash = hash_hex(config_hash);
  for (const auto& r : rows) {
    const auto& e = r.report;
    out += std::string(method_name(r.method)) + "," + format_number(r.snr_db) + "," +
           format_number(e.average) + "," + format_number(e.worst) + "," +
           format_number(e.variance_across_orientations) + "," + format_number(e.average_se) + "," +
           format_number(e.worst_se) + "," + format_number(e.average_root) + "," +
           format_number(e.misdecode_rate) + "," + std::to_string(r.seed) + "," + hash + "\n";
  }
  return out;
}

std::string histogram_csv(const std::vector<ArrayRecord>& records, std::uint64_t seed,
                          std::uint64_t config_hash) {
  std::string out = "array_seed,ratio,worst_ratio,array_index,seed,config_hash\n";
  const std::string hash = hash_hex(config_hash);
  for (const auto& r : records) {
    if (r.skipped) continue;
    out += std::to_string(r.array_seed) + "," + format_number(r.ratio) + "," +
           format_number(r.worst_ratio) + "," + std::to_string(r.array_index) + "," +
           std::to_string(seed) + "," + hash + "\n";
  }
  return out;
}

std::string array_errors_csv(const std::vector<ArrayRecord>& records, std::uint64_t seed,
                             std::uint64_t config_hash) {
  std::string out = "array_seed,method,avg_error,worst_error,array_index,seed,config_hash\n";
  const std::string hash = hash_hex(config_hash);
  for (const auto& r : records) {
    for (std::size_t i = 0; i < r.methods.size(); ++i)
      out += std::to_string(r.array_seed) + "," + std::string(method_name(r.methods[i])) + "," +
             format_number(r.average[i]) + "," + format_number(r.worst[i]) + "," +
             std::to_string(r.array_index) + "," + std::to_string(seed) + "," + hash + "\n";
  }
  return out;
}

std::string multipath_csv(const std::vector<MultipathRow>& rows, std::uint64_t seed,
                          std::uint64_t config_hash) {
  std::string out =
      "channel,method,snr_db,avg_error_fixed_tx,worst_error_fixed_tx,avg_error_se_fixed_tx,"
      "avg_error_rx_ref,worst_error_rx_ref,avg_error_se_rx_ref,seed,config_hash\n";
  const std::string hash = hash_hex(config_hash);
  for (const auto& r : rows) {
    out += r.channel + "," + std::string(method_name(r.method)) + "," + format_number(r.snr_db) +
           "," + format_number(r.fixed_transmit.average) + "," +
           format_number(r.fixed_transmit.worst) + "," +
           format_number(r.fixed_transmit.average_se) + "," +
           format_number(r.received_reference.average) + "," +
           format_number(r.received_reference.worst) + "," +
           format_number(r.received_reference.average_se) + "," + std::to_string(seed) + "," +
           hash + "\n";
  }
  return out;
}

std::string robustness_csv(const std::vector<RobustnessRow>& rows, std::uint64_t config_hash) {
  std::string out = "design_snr_db,method,avg_error,worst_error,avg_error_se,draws,seed,config_hash\n";
  const std::string hash = hash_hex(config_hash);
  for (const auto& r : rows) {
    out += format_number(r.design_snr_db) + "," + std::string(method_name(r.method)) + "," +
           format_number(r.avg_error) + "," + format_number(r.worst_error) + "," +
           format_number(r.avg_error_se) + "," + std::to_string(r.draws) + "," +
           std::to_string(r.seed) + "," + hash + "\n";
  }
  return out;
}

std::string report_json(const ErrorReport& report, bool per_orientation) {
  nlohmann::ordered_json j;
  j["trials"] = report.trials;
  j["seed"] = report.seed;
  j["average"] = number(report.average);
  j["worst"] = number(report.worst);
  j["worst_index"] = report.worst_index;
  j["variance_across_orientations"] = number(report.variance_across_orientations);
  j["average_se"] = number(report.average_se);
  j["worst_se"] = number(report.worst_se);
  j["average_root"] = number(report.average_root);
  j["misdecode_rate"] = number(report.misdecode_rate);
  if (per_orientation) {
    j["per_orientation_mean"] = report.per_orientation_mean;
    j["per_orientation_sd"] = report.per_orientation_sd;
  }
  return j.dump(2) + "\n";
}

std::string code_metadata_json(const CodeMetadata& meta) {
  nlohmann::ordered_json j;
  j["method"] = meta.method;
  j["length"] = meta.length;
  j["tag_count"] = meta.tag_count;
  j["design_snr_db"] = number(meta.design_snr_db);
  j["sigma"] = number(meta.sigma);
  j["seed"] = meta.seed;
  j["config_hash"] = hash_hex(meta.config_hash);
  if (!meta.proportions.empty()) {
    j["proportions"] = meta.proportions;
    j["objective"] = number(meta.objective);
    j["rounded_objective"] = number(meta.rounded_objective);
    j["iterations"] = meta.iterations;
    j["converged"] = meta.converged;
    j["selected"] = meta.selected;
  }
  return j.dump(2) + "\n";
}

std::string manifest_json(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["config_hash"] = hash_hex(m.config_hash);
  j["tool_version"] = m.tool_version;
  j["subcommand"] = m.subcommand;
  j["seeds"] = m.seeds;
  j["started"] = iso_utc(m.started);
  j["finished"] = iso_utc(m.finished);
  j["outputs"] = m.outputs;
  if (!m.notes.empty()) j["notes"] = m.notes;
  return j.dump(2) + "\n";
}

}  // namespace tagcode
