#include "spinflow/config.hpp"

#include <fmt/format.h>

#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "spinflow/io.hpp"

namespace spinflow {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const auto* first = text.data();
  const auto* last = first + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || text.empty())
    throw std::invalid_argument(fmt::format("config key '{}': '{}' is not a valid number", key, text));
  return v;
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + io::format_number(v[i]);
  return out;
}

template <typename Int>
std::string join_ints(const std::vector<Int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + std::to_string(v[i]);
  return out;
}

std::pair<double, double> read_window(const ConfigMap& m, const std::string& key) {
  const auto v = m.get_doubles(key);
  if (v.size() != 2) throw std::invalid_argument("config key '" + key + "' needs two values: lo, hi");
  return {v[0], v[1]};
}

} // namespace

ConfigMap ConfigMap::parse(const std::string& text) {
  ConfigMap m;
  std::stringstream ss(text);
  std::string line;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(fmt::format("config line {}: expected 'key = value'", line_no));
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw std::invalid_argument(fmt::format("config line {}: empty key", line_no));
    if (m.values_.count(key)) throw std::invalid_argument(fmt::format("config line {}: duplicate key '{}'", line_no, key));
    m.values_[key] = trim(line.substr(eq + 1));
  }
  return m;
}

ConfigMap ConfigMap::load(const std::filesystem::path& path) { return parse(io::read_file(path)); }

const std::string& ConfigMap::raw(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw std::invalid_argument("config is missing key '" + key + "'");
  used_.insert(key);
  return it->second;
}

std::string ConfigMap::get_string(const std::string& key) const { return raw(key); }
double ConfigMap::get_double(const std::string& key) const { return parse_number<double>(key, raw(key)); }
std::int64_t ConfigMap::get_int(const std::string& key) const { return parse_number<std::int64_t>(key, raw(key)); }
std::uint64_t ConfigMap::get_uint(const std::string& key) const { return parse_number<std::uint64_t>(key, raw(key)); }

std::vector<double> ConfigMap::get_doubles(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : split_list(raw(key))) out.push_back(parse_number<double>(key, item));
  return out;
}

std::vector<std::int64_t> ConfigMap::get_ints(const std::string& key) const {
  std::vector<std::int64_t> out;
  for (const auto& item : split_list(raw(key))) out.push_back(parse_number<std::int64_t>(key, item));
  return out;
}

std::vector<std::string> ConfigMap::unused_keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_)
    if (!used_.count(k)) out.push_back(k);
  return out;
}

std::string ConfigMap::to_text() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

void write_ladder(const LadderSpec& spec, ConfigMap& out) {
  out.set("ladder.rungs", std::to_string(spec.rungs));
  out.set("ladder.parallel_up", join(spec.parallel_up));
  out.set("ladder.parallel_down", join(spec.parallel_down));
  out.set("ladder.rung", join(spec.rung));
  out.set("ladder.diag_down", join(spec.diag_down));
  out.set("ladder.diag_up", join(spec.diag_up));
  out.set("ladder.nnn_up", join(spec.nnn_up));
  out.set("ladder.nnn_down", join(spec.nnn_down));
  out.set("ladder.local_dim", std::to_string(spec.local_dim));
  out.set("ladder.anharmonicity", join(spec.anharmonicity));
}

LadderSpec read_ladder(const ConfigMap& in) {
  LadderSpec s;
  s.rungs = static_cast<int>(in.get_int("ladder.rungs"));
  s.parallel_up = in.get_doubles("ladder.parallel_up");
  s.parallel_down = in.get_doubles("ladder.parallel_down");
  s.rung = in.get_doubles("ladder.rung");
  auto optional = [&in](const std::string& key) {
    return in.has(key) ? in.get_doubles(key) : std::vector<double>{};
  };
  s.diag_down = optional("ladder.diag_down");
  s.diag_up = optional("ladder.diag_up");
  s.nnn_up = optional("ladder.nnn_up");
  s.nnn_down = optional("ladder.nnn_down");
  s.local_dim = in.has("ladder.local_dim") ? static_cast<int>(in.get_int("ladder.local_dim")) : 2;
  s.anharmonicity = optional("ladder.anharmonicity");
  s.validate();
  return s;
}

void write_field(const PotentialField& field, ConfigMap& out) { out.set("field.w_mhz", join(field.w_mhz)); }

PotentialField read_field(const ConfigMap& in) {
  PotentialField f{in.get_doubles("field.w_mhz")};
  for (double w : f.w_mhz)
    if (!std::isfinite(w)) throw std::invalid_argument("field.w_mhz must be finite");
  return f;
}

void write_drive(const DrivePlan& plan, ConfigMap& out) {
  out.set("drive.omega_mhz", join(plan.omega_mhz));
  out.set("drive.phi", join(plan.phi));
  out.set("drive.duration_ns", io::format_number(plan.duration_ns));
}

DrivePlan read_drive(const ConfigMap& in) {
  DrivePlan p;
  p.omega_mhz = in.get_doubles("drive.omega_mhz");
  p.phi = in.get_doubles("drive.phi");
  p.duration_ns = in.get_double("drive.duration_ns");
  p.validate(static_cast<int>(p.omega_mhz.size()));
  return p;
}

namespace {

constexpr std::pair<Scenario, const char*> kScenarioNames[] = {
    {Scenario::clean_diffusion, "clean-diffusion"},
    {Scenario::disorder_sweep, "disorder-sweep"},
    {Scenario::stark_sweep, "stark-sweep"},
    {Scenario::haar_entropy, "haar-entropy"},
    {Scenario::leakage_check, "leakage-check"},
    {Scenario::decoherence_check, "decoherence-check"},
    {Scenario::product_state_study, "product-state-study"},
    {Scenario::calib_demo, "calib-demo"},
};

} // namespace

std::string to_string(Scenario s) {
  for (const auto& [v, name] : kScenarioNames)
    if (v == s) return name;
  throw std::logic_error("unnamed scenario");
}

Scenario parse_scenario(const std::string& name) {
  for (const auto& [v, n] : kScenarioNames)
    if (name == n) return v;
  std::string known;
  for (const auto& [v, n] : kScenarioNames) known += (known.empty() ? "" : ", ") + std::string(n);
  throw std::invalid_argument("unknown scenario '" + name + "' (known: " + known + ")");
}

std::vector<double> ExperimentConfig::time_grid() const {
  const double steps = t_max_ns / dt_ns;
  const auto n = static_cast<long>(std::llround(steps));
  if (std::abs(steps - static_cast<double>(n)) > 1e-9 * std::max(1.0, steps))
    throw std::invalid_argument("t_max_ns must be a multiple of dt_ns");
  std::vector<double> t(static_cast<std::size_t>(n) + 1);
  for (long i = 0; i <= n; ++i) t[static_cast<std::size_t>(i)] = static_cast<double>(i) * dt_ns;
  return t;
}

LadderSpec ExperimentConfig::ladder_spec() const {
  if (preset == "inline") {
    if (!ladder) throw std::invalid_argument("preset 'inline' needs ladder.* keys");
    return *ladder;
  }
  return ladder_preset(preset, rungs, coupling_seed);
}

DriveDistribution ExperimentConfig::drive_distribution() const {
  return wide_phase ? DriveDistribution::wide_phase() : DriveDistribution{};
}

void ExperimentConfig::validate() const {
  auto require = [](bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
  };
  require(rungs >= 1, "rungs must be >= 1");
  require(dt_ns > 0.0 && t_max_ns >= 0.0, "need dt_ns > 0 and t_max_ns >= 0");
  (void)time_grid();
  require(fit_window_ns.first > 0.0 && fit_window_ns.first < fit_window_ns.second,
          "fit_window_ns needs 0 < lo < hi");
  require(strong_window_ns.first > 0.0 && strong_window_ns.first < strong_window_ns.second,
          "strong_window_ns needs 0 < lo < hi");
  require(realizations >= 1, "realizations must be >= 1");
  require(haar_seeds >= 1, "haar_seeds must be >= 1");
  require(t_r_ns >= 0.0, "t_r_ns must be >= 0");
  require(n_traj >= 1, "n_traj must be >= 1");
  require(t1_ns > 0.0, "t1_ns must be > 0");
  require(anharmonicity_mhz > 0.0, "anharmonicity_mhz must be > 0");
  require(n_qubits >= 1 && n_qubits <= 40, "n_qubits must be in [1, 40]");
  krylov.validate();
  if (scenario == Scenario::disorder_sweep || scenario == Scenario::stark_sweep)
    require(!sweep_mhz.empty(), "sweep scenarios need a non-empty sweep_mhz list");
  if (scenario == Scenario::haar_entropy) require(!t_r_list_ns.empty(), "haar-entropy needs t_r_list_ns");
  if (scenario == Scenario::product_state_study) require(!walls.empty(), "product-state-study needs walls");
  if (preset == "inline") require(ladder.has_value(), "preset 'inline' needs ladder.* keys");
  if (scenario != Scenario::haar_entropy && scenario != Scenario::calib_demo) ladder_spec().validate();
}

ExperimentConfig scenario_defaults(Scenario s) {
  ExperimentConfig c;
  c.scenario = s;
  switch (s) {
  case Scenario::clean_diffusion:
    break;
  case Scenario::disorder_sweep:
    c.rungs = 6;
    c.sweep_mhz = {35.0, 50.0, 70.0};
    c.realizations = 10;
    break;
  case Scenario::stark_sweep:
    c.sweep_mhz = {0.0, 20.0, 40.0, 80.0};
    c.t_max_ns = 400.0;
    break;
  case Scenario::haar_entropy:
    c.haar_seeds = 5;
    c.t_r_list_ns = {0.0, 25.0, 50.0, 100.0, 150.0, 200.0};
    break;
  case Scenario::leakage_check:
    c.rungs = 4;
    break;
  case Scenario::decoherence_check:
    c.t_max_ns = 200.0;
    c.dt_ns = 20.0;
    break;
  case Scenario::product_state_study:
    c.rungs = 6;
    c.walls = {2, 10};
    break;
  case Scenario::calib_demo:
    break;
  }
  return c;
}

ExperimentConfig parse_experiment(const ConfigMap& map) {
  if (!map.has("schema_version")) throw std::invalid_argument("config is missing 'schema_version'");
  const auto version = map.get_int("schema_version");
  if (version != kSchemaVersion)
    throw std::invalid_argument(fmt::format("unsupported schema_version {} (expected {})", version, kSchemaVersion));
  ExperimentConfig c = scenario_defaults(parse_scenario(map.get_string("scenario")));

  auto opt = [&map](const char* key, auto& field) {
    if (!map.has(key)) return;
    using T = std::decay_t<decltype(field)>;
    if constexpr (std::is_same_v<T, std::string>) field = map.get_string(key);
    else if constexpr (std::is_same_v<T, double>) field = map.get_double(key);
    else if constexpr (std::is_same_v<T, int>) field = static_cast<int>(map.get_int(key));
    else if constexpr (std::is_same_v<T, std::uint64_t>) field = map.get_uint(key);
    else if constexpr (std::is_same_v<T, std::vector<double>>) field = map.get_doubles(key);
    else if constexpr (std::is_same_v<T, std::vector<int>>) {
      field.clear();
      for (auto v : map.get_ints(key)) field.push_back(static_cast<int>(v));
    } else if constexpr (std::is_same_v<T, std::pair<double, double>>) field = read_window(map, key);
  };
  opt("preset", c.preset);
  opt("rungs", c.rungs);
  opt("coupling_seed", c.coupling_seed);
  opt("sweep_mhz", c.sweep_mhz);
  opt("t_max_ns", c.t_max_ns);
  opt("dt_ns", c.dt_ns);
  opt("fit_window_ns", c.fit_window_ns);
  opt("strong_window_ns", c.strong_window_ns);
  opt("strong_threshold_mhz", c.strong_threshold_mhz);
  opt("realizations", c.realizations);
  opt("haar_seeds", c.haar_seeds);
  opt("root_seed", c.root_seed);
  opt("t_r_ns", c.t_r_ns);
  if (map.has("drive_mode")) {
    const auto mode = map.get_string("drive_mode");
    if (mode != "device" && mode != "wide-phase")
      throw std::invalid_argument("drive_mode must be 'device' or 'wide-phase'");
    c.wide_phase = mode == "wide-phase";
  }
  opt("krylov.tol", c.krylov.tol);
  opt("krylov.m_min", c.krylov.m_min);
  opt("krylov.m_max", c.krylov.m_max);
  opt("krylov.substep_ns", c.krylov.step_ns);
  opt("n_traj", c.n_traj);
  opt("t1_ns", c.t1_ns);
  opt("anharmonicity_mhz", c.anharmonicity_mhz);
  opt("n_shots", c.n_shots);
  opt("n_qubits", c.n_qubits);
  opt("t_r_list_ns", c.t_r_list_ns);
  opt("walls", c.walls);
  opt("tilt_mhz", c.tilt_mhz);
  opt("out_dir", c.out_dir);
  if (c.preset == "inline") {
    c.ladder = read_ladder(map);
    c.rungs = c.ladder->rungs;
  }
  if (const auto unused = map.unused_keys(); !unused.empty()) {
    std::string list;
    for (const auto& k : unused) list += (list.empty() ? "" : ", ") + k;
    throw std::invalid_argument("unknown config keys: " + list);
  }
  c.validate();
  return c;
}

ExperimentConfig load_experiment(const std::filesystem::path& path) {
  return parse_experiment(ConfigMap::load(path));
}

ConfigMap to_config(const ExperimentConfig& c) {
  ConfigMap m;
  auto num = [](double v) { return io::format_number(v); };
  m.set("schema_version", std::to_string(kSchemaVersion));
  m.set("scenario", to_string(c.scenario));
  m.set("preset", c.preset);
  m.set("rungs", std::to_string(c.rungs));
  m.set("coupling_seed", std::to_string(c.coupling_seed));
  m.set("sweep_mhz", join(c.sweep_mhz));
  m.set("t_max_ns", num(c.t_max_ns));
  m.set("dt_ns", num(c.dt_ns));
  m.set("fit_window_ns", join({c.fit_window_ns.first, c.fit_window_ns.second}));
  m.set("strong_window_ns", join({c.strong_window_ns.first, c.strong_window_ns.second}));
  m.set("strong_threshold_mhz", num(c.strong_threshold_mhz));
  m.set("realizations", std::to_string(c.realizations));
  m.set("haar_seeds", std::to_string(c.haar_seeds));
  m.set("root_seed", std::to_string(c.root_seed));
  m.set("t_r_ns", num(c.t_r_ns));
  m.set("drive_mode", c.wide_phase ? "wide-phase" : "device");
  m.set("krylov.tol", num(c.krylov.tol));
  m.set("krylov.m_min", std::to_string(c.krylov.m_min));
  m.set("krylov.m_max", std::to_string(c.krylov.m_max));
  m.set("krylov.substep_ns", num(c.krylov.step_ns));
  m.set("n_traj", std::to_string(c.n_traj));
  m.set("t1_ns", num(c.t1_ns));
  m.set("anharmonicity_mhz", num(c.anharmonicity_mhz));
  m.set("n_shots", std::to_string(c.n_shots));
  m.set("n_qubits", std::to_string(c.n_qubits));
  m.set("t_r_list_ns", join(c.t_r_list_ns));
  m.set("walls", join_ints(c.walls));
  m.set("tilt_mhz", num(c.tilt_mhz));
  m.set("out_dir", c.out_dir);
  if (c.preset == "inline" && c.ladder) write_ladder(*c.ladder, m);
  return m;
}

} // namespace spinflow
