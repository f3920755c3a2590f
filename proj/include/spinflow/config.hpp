#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "spinflow/haar.hpp"
#include "spinflow/model.hpp"
#include "spinflow/propagator.hpp"

namespace spinflow {

/// Flat `key = value` text. Arrays are comma separated, `#` starts a
/// comment, keys may contain dots. Every key must be consumed by the
/// reader; leftovers are reported as unknown keys.
class ConfigMap {
public:
  static ConfigMap parse(const std::string& text);
  static ConfigMap load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  std::string get_string(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;
  std::uint64_t get_uint(const std::string& key) const;
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<std::int64_t> get_ints(const std::string& key) const;

  /// Keys present in the text that were never read.
  std::vector<std::string> unused_keys() const;
  std::string to_text() const;

private:
  const std::string& raw(const std::string& key) const;

  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
};

/// Serialisation with keys `ladder.*`, `field.w_mhz`, `drive.*`.
void write_ladder(const LadderSpec& spec, ConfigMap& out);
LadderSpec read_ladder(const ConfigMap& in);
void write_field(const PotentialField& field, ConfigMap& out);
PotentialField read_field(const ConfigMap& in);
void write_drive(const DrivePlan& plan, ConfigMap& out);
DrivePlan read_drive(const ConfigMap& in);

enum class Scenario {
  clean_diffusion,
  disorder_sweep,
  stark_sweep,
  haar_entropy,
  leakage_check,
  decoherence_check,
  product_state_study,
  calib_demo,
};

std::string to_string(Scenario s);
Scenario parse_scenario(const std::string& name);

inline constexpr int kSchemaVersion = 1;

struct ExperimentConfig {
  Scenario scenario = Scenario::clean_diffusion;
  std::string preset = "hardcore"; // uniform | hardcore | device | inline
  int rungs = 8;
  std::uint64_t coupling_seed = 2024;
  std::optional<LadderSpec> ladder; // set when preset == inline

  std::vector<double> sweep_mhz;
  double t_max_ns = 200.0;
  double dt_ns = 4.0;
  std::pair<double, double> fit_window_ns{50.0, 200.0};
  std::pair<double, double> strong_window_ns{100.0, 400.0};
  double strong_threshold_mhz = 24.0;

  int realizations = 1;
  int haar_seeds = 10;
  std::uint64_t root_seed = 1;
  double t_r_ns = 200.0;
  bool wide_phase = false;
  KrylovConfig krylov;

  int n_traj = 500;
  double t1_ns = 32100.0;
  double anharmonicity_mhz = 222.0;
  std::uint64_t n_shots = 0;
  int n_qubits = 12;
  std::vector<double> t_r_list_ns;
  std::vector<int> walls;
  double tilt_mhz = 60.0;
  std::string out_dir = "spinflow-out";

  std::vector<double> time_grid() const;
  LadderSpec ladder_spec() const;
  DriveDistribution drive_distribution() const;
  void validate() const;
};

/// Scenario-specific defaults, before any keys are applied.
ExperimentConfig scenario_defaults(Scenario s);

/// Throws std::invalid_argument on a missing/unsupported schema_version,
/// unknown keys or invalid values.
ExperimentConfig parse_experiment(const ConfigMap& map);
ExperimentConfig load_experiment(const std::filesystem::path& path);

/// Complete, normalised text form; to_config(parse_experiment(to_config(c)))
/// reproduces the same text.
ConfigMap to_config(const ExperimentConfig& cfg);

} // namespace spinflow
