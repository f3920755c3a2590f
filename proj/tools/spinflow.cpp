#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <omp.h>

#include <cstdio>
#include <iostream>
#include <optional>

#include "spinflow/calib.hpp"
#include "spinflow/io.hpp"
#include "spinflow/runner.hpp"

namespace {

using namespace spinflow;

struct GlobalFlags {
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::string out_dir;
  std::optional<double> krylov_tol;
  std::optional<int> krylov_mmax;
  std::optional<double> substep_ns;
  std::optional<std::size_t> max_dim;

  void apply(ExperimentConfig& cfg) const {
    if (seed) cfg.root_seed = *seed;
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (krylov_tol) cfg.krylov.tol = *krylov_tol;
    if (krylov_mmax) cfg.krylov.m_max = *krylov_mmax;
    if (substep_ns) cfg.krylov.step_ns = *substep_ns;
  }
};

std::pair<double, double> parse_window(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw CLI::ValidationError("--window", "expected lo:hi, e.g. 50:200");
  return {std::stod(text.substr(0, colon)), std::stod(text.substr(colon + 1))};
}

int finish_run(const ExperimentConfig& cfg, const GlobalFlags& flags, const std::string& echo_file) {
  const auto manifest = run_experiment(cfg, {cfg.out_dir, flags.threads});
  if (!echo_file.empty()) std::cout << io::read_file(std::filesystem::path(cfg.out_dir) / echo_file);
  std::cerr << fmt::format("wrote {} outputs and manifest.json to {} in {:.1f} s\n", manifest.outputs.size(),
                           cfg.out_dir, manifest.wall_time_s);
  for (const auto& f : manifest.failures) std::cerr << "failure: " << f << "\n";
  return manifest.complete ? 0 : 3;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spin transport on a two-leg qubit ladder"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", version_string());

  GlobalFlags flags;
  app.add_option("--seed", flags.seed, "Root seed (overrides the config)");
  app.add_option("--threads", flags.threads, "Worker threads (default: OpenMP default)")->check(CLI::NonNegativeNumber);
  app.add_option("--out-dir", flags.out_dir, "Output directory (overrides the config)");
  app.add_option("--krylov-tol", flags.krylov_tol, "Krylov per-substep error bound");
  app.add_option("--krylov-mmax", flags.krylov_mmax, "Largest Krylov subspace");
  app.add_option("--substep-ns", flags.substep_ns, "Krylov substep in ns");
  app.add_option("--max-dim", flags.max_dim, "Largest state-vector dimension");

  auto* run_cmd = app.add_subcommand("run", "Run a scenario described by a config file");
  std::string config_path;
  run_cmd->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);

  auto* verify_cmd = app.add_subcommand("verify", "Check a run manifest and reproduce its outputs");
  std::string manifest_path, scratch_dir;
  verify_cmd->add_option("manifest", manifest_path, "manifest.json")->required()->check(CLI::ExistingFile);
  verify_cmd->add_option("--scratch-dir", scratch_dir, "Where to re-run (default: <run dir>/verify)");

  auto* haar_cmd = app.add_subcommand("haar-entropy", "Participation entropy of generated random states");
  int haar_n = 12, haar_seeds = 5;
  std::vector<double> haar_tr = {200.0};
  std::uint64_t haar_shots = 0;
  std::string haar_preset = "hardcore";
  bool wide_phase = false;
  haar_cmd->add_option("--n", haar_n, "Number of qubits")->check(CLI::Range(1, 40));
  haar_cmd->add_option("--tr", haar_tr, "Drive durations t_R in ns")->delimiter(',');
  haar_cmd->add_option("--seeds", haar_seeds, "Drive realizations per t_R")->check(CLI::PositiveNumber);
  haar_cmd->add_option("--shots", haar_shots, "Also report the sampled estimator with this many shots");
  haar_cmd->add_option("--preset", haar_preset, "Ladder preset");
  haar_cmd->add_flag("--wide-phase", wide_phase, "Draw drive phases from [-pi, pi]");

  auto* fit_cmd = app.add_subcommand("fit", "Power-law fit of an autocorrelation series");
  std::string fit_input, fit_window = "50:200";
  fit_cmd->add_option("--input", fit_input, "Series CSV (time_ns, c11[, c11_stderr])")->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("--window", fit_window, "Fit window lo:hi in ns");

  auto* calib_cmd = app.add_subcommand("calib", "Drive calibration fits");
  calib_cmd->require_subcommand(1);
  auto* rabi_cmd = calib_cmd->add_subcommand("rabi-fit", "Fit a Rabi trace (t_ns, p1)");
  std::string rabi_input;
  rabi_cmd->add_option("--input", rabi_input, "CSV with t_ns, p1")->required()->check(CLI::ExistingFile);
  auto* xt_cmd = calib_cmd->add_subcommand("crosstalk", "Extract crosstalk from a phase scan (phi_ii, omega_r)");
  std::string xt_input;
  double xt_delta = 0.0, xt_omega_i = 0.0, xt_omega_j = 0.0;
  xt_cmd->add_option("--input", xt_input, "CSV with phi_ii, omega_r")->required()->check(CLI::ExistingFile);
  xt_cmd->add_option("--delta", xt_delta, "Detuning in MHz");
  xt_cmd->add_option("--omega-i", xt_omega_i, "Rabi frequency of the target drive in MHz")->required();
  xt_cmd->add_option("--omega-j", xt_omega_j, "Rabi frequency of the source drive in MHz")->required();

  auto* deco_cmd = app.add_subcommand("decoherence-check", "Particle loss of a half-filled quench under T1");
  int deco_rungs = 8, deco_traj = 500;
  double deco_t1 = 32100.0, deco_tmax = 200.0, deco_dt = 20.0;
  deco_cmd->add_option("--rungs", deco_rungs, "Ladder rungs")->check(CLI::PositiveNumber);
  deco_cmd->add_option("--t1", deco_t1, "T1 in ns");
  deco_cmd->add_option("--n-traj", deco_traj, "Trajectories")->check(CLI::PositiveNumber);
  deco_cmd->add_option("--t-max", deco_tmax, "Final time in ns");
  deco_cmd->add_option("--dt", deco_dt, "Output spacing in ns");

  CLI11_PARSE(app, argc, argv);

  try {
    if (flags.max_dim) set_memory_budget(*flags.max_dim);

    if (*run_cmd) {
      ExperimentConfig cfg = load_experiment(config_path);
      flags.apply(cfg);
      cfg.validate();
      return finish_run(cfg, flags, "");
    }
    if (*verify_cmd) {
      const std::filesystem::path mp(manifest_path);
      const auto scratch = scratch_dir.empty() ? mp.parent_path() / "verify" : std::filesystem::path(scratch_dir);
      const auto report = verify_manifest(mp, scratch, flags.threads);
      for (const auto& m : report.messages) std::cout << m << "\n";
      return report.ok ? 0 : 3;
    }
    if (*haar_cmd) {
      ExperimentConfig cfg = scenario_defaults(Scenario::haar_entropy);
      cfg.n_qubits = haar_n;
      cfg.t_r_list_ns = haar_tr;
      cfg.haar_seeds = haar_seeds;
      cfg.n_shots = haar_shots;
      cfg.preset = haar_preset;
      cfg.wide_phase = wide_phase;
      cfg.out_dir = "spinflow-haar";
      flags.apply(cfg);
      cfg.validate();
      return finish_run(cfg, flags, "haar_entropy.csv");
    }
    if (*fit_cmd) {
      const auto series = read_series_csv(fit_input);
      const auto fit = fit_power_law(series, parse_window(fit_window));
      const auto text = fit_json(fit);
      std::cout << text;
      if (!flags.out_dir.empty()) io::write_file_atomic(std::filesystem::path(flags.out_dir) / "fit.json", text);
      return 0;
    }
    if (*rabi_cmd) {
      const auto csv = io::read_numeric_csv(rabi_input);
      const auto fit = calib::fit_rabi(csv.column("t_ns"), csv.column("p1"));
      nlohmann::ordered_json j{{"omega_mhz", fit.omega_mhz}, {"t1_ns", fit.t1_ns},
                               {"amplitude", fit.amplitude}, {"offset", fit.offset}};
      std::cout << j.dump(2) << "\n";
      return 0;
    }
    if (*xt_cmd) {
      const auto csv = io::read_numeric_csv(xt_input);
      const auto est = calib::extract_crosstalk(csv.column("phi_ii"), csv.column("omega_r"), xt_delta, xt_omega_i,
                                                xt_omega_j);
      nlohmann::ordered_json j{{"c_ij", est.c_ij}, {"phi_ij", est.phi_ij}, {"identifiable", est.identifiable},
                               {"residual_rms_mhz", est.residual_rms}};
      std::cout << j.dump(2) << "\n";
      return 0;
    }
    if (*deco_cmd) {
      ExperimentConfig cfg = scenario_defaults(Scenario::decoherence_check);
      cfg.rungs = deco_rungs;
      cfg.t1_ns = deco_t1;
      cfg.n_traj = deco_traj;
      cfg.t_max_ns = deco_tmax;
      cfg.dt_ns = deco_dt;
      cfg.out_dir = "spinflow-decoherence";
      flags.apply(cfg);
      cfg.validate();
      return finish_run(cfg, flags, "decoherence.csv");
    }
  } catch (const DimensionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
