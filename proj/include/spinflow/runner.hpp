#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "spinflow/config.hpp"
#include "spinflow/transport.hpp"

namespace spinflow {

const char* version_string();

struct TaskRecord {
  std::size_t index = 0;
  std::string label;
  std::vector<std::uint64_t> seeds;
};

struct OutputRecord {
  std::string file; // relative to the output directory
  std::string sha256;
};

struct RunManifest {
  std::string software_version;
  std::string scenario;
  std::string config_text; // normalised config, re-parseable
  std::uint64_t root_seed = 0;
  std::vector<TaskRecord> tasks;
  std::vector<OutputRecord> outputs;
  double wall_time_s = 0.0;
  int threads = 1;
  bool complete = true;
  std::vector<std::string> failures;

  std::string to_json() const;
  static RunManifest from_json(const std::string& text);
};

struct RunOptions {
  std::filesystem::path out_dir;
  int threads = 0; // 0 keeps the OpenMP default
};

/// Runs the scenario's task grid, writes every output atomically plus
/// `manifest.json` into the output directory. Task failures are recorded
/// in the manifest (complete = false) rather than thrown.
RunManifest run_experiment(const ExperimentConfig& cfg, const RunOptions& opts);

struct VerifyReport {
  bool ok = true;
  std::vector<std::string> messages;
};

/// Checks the recorded checksums against the files next to the manifest,
/// re-runs the config into `scratch_dir` and compares again.
VerifyReport verify_manifest(const std::filesystem::path& manifest_path,
                             const std::filesystem::path& scratch_dir, int threads = 0);

/// `time_ns,c_uu,c_ud,c_du,c_dd,c11,c11_stderr`.
std::string series_csv(const CorrelationSeries& series);
CorrelationSeries read_series_csv(const std::filesystem::path& path);

/// `{alpha, alpha_stderr, window_lo_ns, window_hi_ns, r_squared, classification}`.
std::string fit_json(const PowerLawFit& fit, const ClassifyThresholds& th = {});

} // namespace spinflow
