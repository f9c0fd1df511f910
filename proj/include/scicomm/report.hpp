#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "scicomm/errors.hpp"
#include "scicomm/jsonl.hpp"

namespace scicomm {

inline constexpr const char* kVersion = "0.1.0";

// Flat `key = value` config; lines starting with '#' are comments.
struct KvConfig {
  std::map<std::string, std::string> values;

  static KvConfig parse_file(const std::string& path);
  const std::string& require(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  bool has(const std::string& key) const { return values.count(key) > 0; }
};

struct RunManifest {
  std::string command_line;
  std::string config_digest;
  uint64_t seed = 0;
  std::map<std::string, std::string> input_digests;   // path -> FNV-1a hex
  std::string version = kVersion;
  std::string started_at;    // ISO 8601 UTC
  std::string finished_at;
};

std::string utc_timestamp();
json manifest_to_json(const RunManifest& manifest);
void write_manifest(const RunManifest& manifest, const std::string& path);

struct ReportConfig {
  std::string findings_path;
  std::string pairs_path;
  std::string causality_path;      // raw annotation JSONL per task
  std::string certainty_path;
  std::string generality_path;
  std::string bws_tuples_path;
  std::string bws_judgments_path;
  double ims_threshold = 4.0;
  bool exclude_easy = true;
  uint64_t seed = 0;
  std::string out_dir;
  std::string command_line;        // recorded in the manifest
  std::string config_digest;
};

ReportConfig report_config_from_kv(const KvConfig& kv);

struct ReportOutputs {
  std::vector<std::string> files;   // paths written, manifest last
  WarningLog warnings;
};

// End-to-end composition: aggregate labels per task, score sensationalism,
// compute agreement and distortion tables, and write the report directory
// (agreement.csv, breakdown.csv, sankey_*.json, cooccurrence.json,
// sens_scores.jsonl, changes.jsonl, summary.json, manifest.json).
ReportOutputs run_report(const ReportConfig& config);

}  // namespace scicomm
