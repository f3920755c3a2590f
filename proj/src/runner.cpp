#include "spinflow/runner.hpp"

#include <fmt/format.h>
#include <json.hpp>
#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <functional>
#include <numeric>
#include <random>

#include "spinflow/calib.hpp"
#include "spinflow/io.hpp"
#include "spinflow/opensys.hpp"
#include "spinflow/seed.hpp"

#ifndef SPINFLOW_VERSION
#define SPINFLOW_VERSION "0.0.0"
#endif

namespace spinflow {

using json = nlohmann::ordered_json;
using io::format_number;

const char* version_string() { return SPINFLOW_VERSION; }

// Seed-path tags; changing them changes every output.
namespace tag {
constexpr std::uint64_t haar = 1;
constexpr std::uint64_t disorder = 2;
constexpr std::uint64_t entropy = 3;
constexpr std::uint64_t trajectories = 4;
constexpr std::uint64_t calib = 5;
constexpr std::uint64_t shots = 6;
} // namespace tag

std::string RunManifest::to_json() const {
  json j;
  j["software_version"] = software_version;
  j["scenario"] = scenario;
  j["root_seed"] = root_seed;
  j["threads"] = threads;
  j["wall_time_s"] = wall_time_s;
  j["complete"] = complete;
  j["failures"] = failures;
  j["config"] = config_text;
  j["tasks"] = json::array();
  for (const auto& t : tasks) j["tasks"].push_back({{"index", t.index}, {"label", t.label}, {"seeds", t.seeds}});
  j["outputs"] = json::array();
  for (const auto& o : outputs) j["outputs"].push_back({{"file", o.file}, {"sha256", o.sha256}});
  return j.dump(2) + "\n";
}

RunManifest RunManifest::from_json(const std::string& text) {
  const json j = json::parse(text);
  RunManifest m;
  m.software_version = j.at("software_version").get<std::string>();
  m.scenario = j.at("scenario").get<std::string>();
  m.root_seed = j.at("root_seed").get<std::uint64_t>();
  m.threads = j.at("threads").get<int>();
  m.wall_time_s = j.at("wall_time_s").get<double>();
  m.complete = j.at("complete").get<bool>();
  m.failures = j.at("failures").get<std::vector<std::string>>();
  m.config_text = j.at("config").get<std::string>();
  for (const auto& t : j.at("tasks"))
    m.tasks.push_back({t.at("index").get<std::size_t>(), t.at("label").get<std::string>(),
                       t.at("seeds").get<std::vector<std::uint64_t>>()});
  for (const auto& o : j.at("outputs"))
    m.outputs.push_back({o.at("file").get<std::string>(), o.at("sha256").get<std::string>()});
  return m;
}

std::string series_csv(const CorrelationSeries& s) {
  io::CsvTable t;
  t.header = {"time_ns", "c_uu", "c_ud", "c_du", "c_dd", "c11", "c11_stderr"};
  for (std::size_t i = 0; i < s.size(); ++i)
    t.add_row({format_number(s.times_ns[i]), format_number(s.c[0][i]), format_number(s.c[1][i]),
               format_number(s.c[2][i]), format_number(s.c[3][i]), format_number(s.c11[i]),
               format_number(s.stderr_c11[i])});
  return t.to_string();
}

CorrelationSeries read_series_csv(const std::filesystem::path& path) {
  const auto csv = io::read_numeric_csv(path);
  CorrelationSeries s;
  s.times_ns = csv.column("time_ns");
  s.c11 = csv.column("c11");
  const char* names[] = {"c_uu", "c_ud", "c_du", "c_dd"};
  for (std::size_t c = 0; c < 4; ++c)
    s.c[c] = csv.has(names[c]) ? csv.column(names[c]) : std::vector<double>(s.times_ns.size(), 0.0);
  s.stderr_c11 = csv.has("c11_stderr") ? csv.column("c11_stderr") : std::vector<double>(s.times_ns.size(), 0.0);
  return s;
}

std::string fit_json(const PowerLawFit& fit, const ClassifyThresholds& th) {
  json j;
  j["alpha"] = fit.alpha;
  j["alpha_stderr"] = fit.alpha_stderr;
  j["window_lo_ns"] = fit.window_ns.first;
  j["window_hi_ns"] = fit.window_ns.second;
  j["r_squared"] = fit.r_squared;
  j["classification"] = to_string(classify_transport(fit, th));
  j["n_points"] = fit.n_points;
  return j.dump(2) + "\n";
}

namespace {

class Run {
public:
  Run(const ExperimentConfig& cfg, const RunOptions& opts) : cfg_(cfg), dir_(opts.out_dir) {
    manifest_.software_version = version_string();
    manifest_.scenario = to_string(cfg.scenario);
    manifest_.config_text = to_config(cfg).to_text();
    manifest_.root_seed = cfg.root_seed;
    manifest_.threads = omp_get_max_threads();
  }

  void emit(const std::string& name, const std::string& contents) {
    io::write_file_atomic(dir_ / name, contents);
    manifest_.outputs.push_back({name, io::sha256_hex(contents)});
  }

  std::size_t add_task(std::string label, std::vector<std::uint64_t> seeds) {
    const std::size_t index = manifest_.tasks.size();
    manifest_.tasks.push_back({index, std::move(label), std::move(seeds)});
    return index;
  }

  void fail(const std::string& what) {
    manifest_.complete = false;
    manifest_.failures.push_back(what);
  }

  // Runs `work(i)` for every task index; failures are recorded in index order.
  std::vector<bool> run_tasks(std::size_t n, const std::function<void(std::size_t)>& work) {
    std::vector<std::string> errors(n);
    std::vector<char> ok(n, 1);
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
      try {
        work(static_cast<std::size_t>(i));
      } catch (const std::exception& e) {
        ok[i] = 0;
        errors[i] = e.what();
      }
    }
    std::vector<bool> result(n);
    for (std::size_t i = 0; i < n; ++i) {
      result[i] = ok[i] != 0;
      if (!result[i]) fail(fmt::format("task {} ({}): {}", i, manifest_.tasks[i].label, errors[i]));
    }
    return result;
  }

  RunManifest& manifest() { return manifest_; }
  const ExperimentConfig& cfg() const { return cfg_; }

private:
  const ExperimentConfig& cfg_;
  std::filesystem::path dir_;
  RunManifest manifest_;
};

PotentialField zero_field(int n_sites) { return {std::vector<double>(static_cast<std::size_t>(n_sites), 0.0)}; }

TypicalityConfig typicality(const ExperimentConfig& cfg) {
  TypicalityConfig t;
  t.t_r_ns = cfg.t_r_ns;
  t.drive = cfg.drive_distribution();
  t.krylov = cfg.krylov;
  return t;
}

std::vector<std::uint64_t> haar_seed_list(const ExperimentConfig& cfg, std::uint64_t point, std::uint64_t rlz) {
  std::vector<std::uint64_t> seeds;
  for (int s = 0; s < cfg.haar_seeds; ++s)
    seeds.push_back(derive_seed(cfg.root_seed, {tag::haar, point, rlz, static_cast<std::uint64_t>(s)}));
  return seeds;
}

// Half filling with rung parity: (j, m) occupied when j + m is odd.
Basis checkerboard(int n_sites, int local_dim) {
  std::vector<int> occ(static_cast<std::size_t>(n_sites));
  for (int s = 0; s < n_sites; ++s) occ[s] = (s / 2 + s % 2) % 2;
  return product_state(occ, local_dim);
}

std::string fit_or_error(const CorrelationSeries& s, std::pair<double, double> window) {
  try {
    return fit_json(fit_power_law(s, window));
  } catch (const FitError& e) {
    json j;
    j["error"] = e.what();
    j["window_lo_ns"] = window.first;
    j["window_hi_ns"] = window.second;
    return j.dump(2) + "\n";
  }
}

void clean_diffusion(Run& run) {
  const auto& cfg = run.cfg();
  const LadderSpec spec = cfg.ladder_spec();
  const auto times = cfg.time_grid();
  const auto seeds = haar_seed_list(cfg, 0, 0);
  run.add_task("clean", seeds);
  CorrelationSeries series;
  const auto ok = run.run_tasks(1, [&](std::size_t) {
    series = measure_autocorrelation(spec, zero_field(spec.n_sites()), typicality(cfg), times, seeds);
  });
  if (!ok[0]) return;
  run.emit("c11_clean.csv", series_csv(series));
  run.emit("fit_clean.json", fit_or_error(series, cfg.fit_window_ns));
}

void sweep(Run& run, bool disorder) {
  const auto& cfg = run.cfg();
  const LadderSpec spec = cfg.ladder_spec();
  const auto times = cfg.time_grid();
  const std::size_t n_points = cfg.sweep_mhz.size();
  const auto n_rlz = static_cast<std::size_t>(disorder ? cfg.realizations : 1);
  const char* prefix = disorder ? "W" : "WS";

  // Realization r reuses the same unit disorder pattern and Haar seeds at
  // every sweep point, so the trend in W is measured on paired samples.
  std::vector<PotentialField> fields(n_points * n_rlz);
  std::vector<std::vector<std::uint64_t>> seeds(n_points * n_rlz);
  for (std::size_t p = 0; p < n_points; ++p) {
    for (std::size_t r = 0; r < n_rlz; ++r) {
      const std::size_t i = p * n_rlz + r;
      seeds[i] = haar_seed_list(cfg, 0, r);
      std::vector<std::uint64_t> recorded = seeds[i];
      if (disorder) {
        const auto ds = derive_seed(cfg.root_seed, {tag::disorder, r});
        fields[i] = sample_disorder(cfg.sweep_mhz[p], ds, spec.n_sites());
        recorded.insert(recorded.begin(), ds);
      } else {
        fields[i] = tilt_potential(cfg.sweep_mhz[p], spec.rungs);
      }
      run.add_task(fmt::format("{}={} realization={}", prefix, format_number(cfg.sweep_mhz[p]), r), recorded);
    }
  }

  std::vector<CorrelationSeries> results(fields.size());
  const auto ok = run.run_tasks(fields.size(), [&](std::size_t i) {
    results[i] = measure_autocorrelation(spec, fields[i], typicality(cfg), times, seeds[i]);
  });

  io::CsvTable summary;
  summary.header = {"sweep_mhz", "alpha", "alpha_stderr", "window_lo_ns", "window_hi_ns",
                    "r_squared", "classification", "alpha_realization_mean", "alpha_realization_sem"};
  for (std::size_t p = 0; p < n_points; ++p) {
    bool point_ok = true;
    for (std::size_t r = 0; r < n_rlz; ++r) point_ok = point_ok && ok[p * n_rlz + r];
    if (!point_ok) continue;
    const std::span<const CorrelationSeries> rlz(results.data() + p * n_rlz, n_rlz);
    const CorrelationSeries avg = average_series(rlz);
    const double value = cfg.sweep_mhz[p];
    const auto window = !disorder && value >= cfg.strong_threshold_mhz ? cfg.strong_window_ns : cfg.fit_window_ns;
    const std::string stem = fmt::format("{}{}", prefix, format_number(value));
    run.emit("c11_" + stem + ".csv", series_csv(avg));
    run.emit("fit_" + stem + ".json", fit_or_error(avg, window));

    std::vector<double> alphas;
    for (const auto& s : rlz) {
      try {
        alphas.push_back(fit_power_law(s, window).alpha);
      } catch (const FitError&) {
      }
    }
    double mean = NAN, sem = NAN;
    if (!alphas.empty()) {
      mean = std::accumulate(alphas.begin(), alphas.end(), 0.0) / static_cast<double>(alphas.size());
      if (alphas.size() > 1) {
        double ss = 0.0;
        for (double a : alphas) ss += (a - mean) * (a - mean);
        sem = std::sqrt(ss / static_cast<double>(alphas.size() - 1) / static_cast<double>(alphas.size()));
      }
    }
    try {
      const auto fit = fit_power_law(avg, window);
      summary.add_row({format_number(value), format_number(fit.alpha), format_number(fit.alpha_stderr),
                       format_number(window.first), format_number(window.second), format_number(fit.r_squared),
                       to_string(classify_transport(fit)), format_number(mean), format_number(sem)});
    } catch (const FitError& e) {
      run.fail(fmt::format("fit at {}={}: {}", prefix, format_number(value), e.what()));
    }
  }
  run.emit(disorder ? "disorder_summary.csv" : "stark_summary.csv", summary.to_string());
}

Lattice entropy_lattice(const ExperimentConfig& cfg) {
  const int rungs = (cfg.n_qubits + 1) / 2;
  Lattice lat = (cfg.preset == "inline" ? cfg.ladder_spec() : ladder_preset(cfg.preset, rungs, cfg.coupling_seed)).lattice();
  if (lat.n_sites != 2 * rungs) throw std::invalid_argument("haar-entropy: inline ladder does not match n_qubits");
  if (cfg.n_qubits % 2) lat = lat.without_site(0);
  return lat;
}

void haar_entropy(Run& run) {
  const auto& cfg = run.cfg();
  const Lattice lat = entropy_lattice(cfg);
  check_dimension(lat.dim(), "haar-entropy");
  const std::size_t n_tr = cfg.t_r_list_ns.size();
  const auto n_seeds = static_cast<std::size_t>(cfg.haar_seeds);
  std::vector<std::uint64_t> seeds;
  for (std::size_t s = 0; s < n_seeds; ++s) seeds.push_back(derive_seed(cfg.root_seed, {tag::entropy, s}));
  for (std::size_t i = 0; i < n_tr; ++i)
    for (std::size_t s = 0; s < n_seeds; ++s)
      run.add_task(fmt::format("t_R={} seed={}", format_number(cfg.t_r_list_ns[i]), s), {seeds[s]});

  struct Row {
    EntropyReport exact, sampled;
    double ks = 0.0;
    std::vector<HistogramBin> hist;
  };
  std::vector<Row> rows(n_tr * n_seeds);
  const auto ok = run.run_tasks(rows.size(), [&](std::size_t k) {
    const std::size_t i = k / n_seeds, s = k % n_seeds;
    const StateVector psi = generate_haar_state(lat, cfg.drive_distribution(), cfg.t_r_list_ns[i], seeds[s], cfg.krylov);
    rows[k].exact = participation_entropy(psi);
    rows[k].ks = porter_thomas_ks(psi.probabilities());
    if (cfg.n_shots > 0)
      rows[k].sampled = sampled_participation_entropy(psi, cfg.n_shots, derive_seed(seeds[s], {tag::shots, i}));
    if (i + 1 == n_tr && s == 0) rows[k].hist = porter_thomas_histogram(psi);
  });

  io::CsvTable t;
  t.header = {"t_R_ns", "seed", "s_pe", "s_target", "ks"};
  if (cfg.n_shots > 0) {
    t.header.push_back("s_pe_sampled");
    t.header.push_back("s_pe_miller_madow");
  }
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (!ok[k]) continue;
    const std::size_t i = k / n_seeds, s = k % n_seeds;
    std::vector<std::string> cells = {format_number(cfg.t_r_list_ns[i]), std::to_string(seeds[s]),
                                      format_number(rows[k].exact.s_pe), format_number(rows[k].exact.s_target),
                                      format_number(rows[k].ks)};
    if (cfg.n_shots > 0) {
      cells.push_back(format_number(rows[k].sampled.s_pe));
      cells.push_back(format_number(rows[k].sampled.s_pe_miller_madow));
    }
    t.add_row(std::move(cells));
  }
  run.emit("haar_entropy.csv", t.to_string());

  const std::size_t last = (n_tr - 1) * n_seeds;
  if (ok[last]) {
    io::CsvTable h;
    h.header = {"dp_lo", "dp_hi", "density", "porter_thomas"};
    for (const auto& b : rows[last].hist)
      h.add_row({format_number(b.lo), format_number(b.hi), format_number(b.density), format_number(b.expected)});
    run.emit("haar_histogram.csv", h.to_string());
  }
}

void leakage_check(Run& run) {
  const auto& cfg = run.cfg();
  const LadderSpec hard = cfg.ladder_spec();
  const LadderSpec spec = with_qutrits(hard, cfg.anharmonicity_mhz);
  const auto times = cfg.time_grid();
  const int n = spec.n_sites();
  run.add_task("leakage", {});
  io::CsvTable t;
  t.header = {"time_ns", "leakage", "n_over_2L", "hardcore_distance"};
  const auto ok = run.run_tasks(1, [&](std::size_t) {
    const SparseOperator h3 = build_bose_hubbard(spec);
    const SparseOperator h2 = build_interaction(hard);
    const auto number = number_observable(n, 3);
    std::vector<StateVector> hardcore(times.size());
    evolve_on_grid(h2, StateVector::basis(hard.dim(), checkerboard(n, 2)), times, cfg.krylov,
                   [&](std::size_t i, const StateVector& psi) { hardcore[i] = psi; });
    evolve_on_grid(h3, StateVector::basis(spec.dim(), checkerboard(n, 3)), times, cfg.krylov,
                   [&](std::size_t i, const StateVector& psi) {
                     const StateVector proj = project_hardcore(psi, n);
                     double dist = 0.0;
                     for (std::size_t k = 0; k < proj.dim(); ++k) dist += std::norm(proj[k] - hardcore[i][k]);
                     t.add_row({format_number(times[i]), format_number(leakage_probability(psi, spec)),
                                format_number(expect_diagonal(psi, number.diagonal) / n),
                                format_number(std::sqrt(dist))});
                   });
  });
  if (ok[0]) run.emit("leakage.csv", t.to_string());
}

void decoherence_check(Run& run) {
  const auto& cfg = run.cfg();
  const LadderSpec spec = cfg.ladder_spec();
  const auto times = cfg.time_grid();
  const int n = spec.n_sites();
  const auto seed = derive_seed(cfg.root_seed, {tag::trajectories});
  run.add_task("trajectories", {seed});
  const auto relax = RelaxationSpec::uniform(n, cfg.t1_ns);
  ObservableSeries traj;
  std::vector<double> c11;
  const auto ok = run.run_tasks(1, [&](std::size_t) {
    const SparseOperator h = build_interaction(spec);
    const std::vector<DiagonalObservable> obs = {number_observable(n)};
    traj = evolve_trajectories(h, relax, StateVector::basis(h.dim(), checkerboard(n, 2)), times, obs,
                               static_cast<std::size_t>(cfg.n_traj), seed, cfg.krylov);
    if (h.dim() <= 64) {
      // Heisenberg-picture correlator with dissipation:
      // c_{mu;nu} = <sigma^z_mu>[(1 + sigma^z_nu)/D] - <sigma^z_mu>[1/D].
      const auto d = static_cast<Eigen::Index>(h.dim());
      const std::vector<DiagonalObservable> z = {sigma_z_observable(n, 0), sigma_z_observable(n, 1)};
      const Eigen::MatrixXcd mixed = Eigen::MatrixXcd::Identity(d, d) / static_cast<double>(d);
      const auto base = dense_lindblad(h, relax, mixed, times, z);
      c11.assign(times.size(), 0.0);
      for (int nu = 0; nu < 2; ++nu) {
        Eigen::MatrixXcd rho = mixed;
        for (Eigen::Index k = 0; k < d; ++k) rho(k, k) *= 1.0 + z[nu].diagonal[k];
        const auto s = dense_lindblad(h, relax, rho, times, z);
        for (int mu = 0; mu < 2; ++mu)
          for (std::size_t i = 0; i < times.size(); ++i) c11[i] += 0.25 * (s.mean[mu][i] - base.mean[mu][i]);
      }
    }
  });
  if (!ok[0]) return;
  io::CsvTable t;
  t.header = {"time_ns", "n_over_2L", "stderr"};
  if (!c11.empty()) t.header.push_back("c11_lindblad");
  for (std::size_t i = 0; i < times.size(); ++i) {
    std::vector<std::string> cells = {format_number(times[i]), format_number(traj.mean[0][i] / n),
                                      format_number(traj.std_error[0][i] / n)};
    if (!c11.empty()) cells.push_back(format_number(c11[i]));
    t.add_row(std::move(cells));
  }
  run.emit("decoherence.csv", t.to_string());
}

void product_state_study(Run& run) {
  const auto& cfg = run.cfg();
  const LadderSpec spec = cfg.ladder_spec();
  const auto times = cfg.time_grid();
  const PotentialField field = tilt_potential(cfg.tilt_mhz, spec.rungs);
  std::vector<Basis> states;
  for (int w : cfg.walls) {
    states.push_back(domain_wall_state(spec.rungs, w));
    run.add_task(fmt::format("walls={}", w), {});
  }
  std::vector<std::vector<double>> values(states.size());
  const auto ok = run.run_tasks(states.size(), [&](std::size_t i) {
    values[i] = product_state_autocorrelation(spec, field, states[i], times, cfg.krylov);
  });
  io::CsvTable t;
  t.header = {"time_ns"};
  for (std::size_t i = 0; i < states.size(); ++i)
    if (ok[i]) t.header.push_back(fmt::format("c_dw{}", cfg.walls[i]));
  for (std::size_t k = 0; k < times.size(); ++k) {
    std::vector<std::string> cells = {format_number(times[k])};
    for (std::size_t i = 0; i < states.size(); ++i)
      if (ok[i]) cells.push_back(format_number(values[i][k]));
    t.add_row(std::move(cells));
  }
  run.emit("product_state.csv", t.to_string());
}

void calib_demo(Run& run) {
  const auto& cfg = run.cfg();
  const auto seed = derive_seed(cfg.root_seed, {tag::calib});
  run.add_task("calib", {seed});
  json report;
  io::CsvTable rabi_csv, xt_csv;
  const auto ok = run.run_tasks(1, [&](std::size_t) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);

    const calib::RabiFit truth{10.0, 30000.0, -0.5, 0.5};
    std::vector<double> t, p;
    rabi_csv.header = {"t_ns", "p1"};
    for (int i = 0; i <= 200; ++i) {
      t.push_back(5.0 * i);
      p.push_back(calib::rabi_probability(t.back(), truth) + 0.01 * noise(rng));
      rabi_csv.add_row({format_number(t.back()), format_number(p.back())});
    }
    const auto fit = calib::fit_rabi(t, p);
    report["rabi"] = {{"omega_true_mhz", truth.omega_mhz}, {"omega_fit_mhz", fit.omega_mhz},
                      {"t1_fit_ns", fit.t1_ns}, {"amplitude", fit.amplitude}, {"offset", fit.offset}};

    const double omega = 10.0, c_true = 0.05, phi_true = 0.7;
    std::vector<double> phis, rates;
    xt_csv.header = {"phi_ii", "omega_r"};
    for (int i = 0; i < 32; ++i) {
      phis.push_back(2.0 * std::numbers::pi * i / 32.0);
      rates.push_back(calib::effective_rabi(0.0, omega, c_true * omega, phi_true, phis.back()) + 1e-3 * noise(rng));
      xt_csv.add_row({format_number(phis.back()), format_number(rates.back())});
    }
    const auto xt = calib::extract_crosstalk(phis, rates, 0.0, omega, omega);
    report["crosstalk"] = {{"c_true", c_true}, {"phi_true", phi_true}, {"c_fit", xt.c_ij},
                           {"phi_fit", xt.phi_ij}, {"identifiable", xt.identifiable}};

    const calib::MixerMap map{20.0, 0.5, 15.0};
    double worst = 0.0;
    for (int i = 0; i <= 1000; ++i) {
      const double v = 2.0 * i / 1000.0;
      worst = std::max(worst, std::abs(calib::rabi_to_amp(calib::amp_to_rabi(v, map), map) - v));
    }
    report["mixer"] = {{"eta", map.eta}, {"v_sat", map.v_sat}, {"omega_max", map.omega_max},
                       {"max_roundtrip_error", worst}};

    const int n = 4;
    calib::CrosstalkMatrix m(n);
    std::uniform_real_distribution<double> mag(0.0, 0.03), ph(-std::numbers::pi, std::numbers::pi);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j) m.set(i, j, mag(rng), ph(rng));
    const std::vector<double> eta = {1.0, 1.1, 0.9, 1.05};
    Eigen::VectorXcd desired(n);
    for (int i = 0; i < n; ++i) desired(i) = std::polar(1.0 + 0.1 * i, 0.3 * i);
    const auto corr = calib::correct_crosstalk(m, eta, desired);
    const double resid = (calib::apply_crosstalk(m, eta, corr.drive) - desired).norm() / desired.norm();
    report["correction"] = {{"condition_number", corr.condition_number}, {"relative_residual", resid}};
  });
  if (!ok[0]) return;
  run.emit("rabi_scan.csv", rabi_csv.to_string());
  run.emit("crosstalk_scan.csv", xt_csv.to_string());
  run.emit("calib_demo.json", report.dump(2) + "\n");
}

} // namespace

RunManifest run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
  cfg.validate();
  if (opts.threads > 0) omp_set_num_threads(opts.threads);
  const auto start = std::chrono::steady_clock::now();
  Run run(cfg, opts);
  switch (cfg.scenario) {
  case Scenario::clean_diffusion: clean_diffusion(run); break;
  case Scenario::disorder_sweep: sweep(run, true); break;
  case Scenario::stark_sweep: sweep(run, false); break;
  case Scenario::haar_entropy: haar_entropy(run); break;
  case Scenario::leakage_check: leakage_check(run); break;
  case Scenario::decoherence_check: decoherence_check(run); break;
  case Scenario::product_state_study: product_state_study(run); break;
  case Scenario::calib_demo: calib_demo(run); break;
  }
  auto& m = run.manifest();
  m.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  io::write_file_atomic(opts.out_dir / "manifest.json", m.to_json());
  return m;
}

VerifyReport verify_manifest(const std::filesystem::path& manifest_path, const std::filesystem::path& scratch_dir,
                             int threads) {
  VerifyReport report;
  const RunManifest recorded = RunManifest::from_json(io::read_file(manifest_path));
  const auto dir = manifest_path.parent_path();
  for (const auto& o : recorded.outputs) {
    const auto path = dir / o.file;
    if (!std::filesystem::exists(path)) {
      report.ok = false;
      report.messages.push_back("missing: " + o.file);
    } else if (io::sha256_file(path) != o.sha256) {
      report.ok = false;
      report.messages.push_back("modified since run: " + o.file);
    }
  }
  if (recorded.software_version != version_string())
    report.messages.push_back(fmt::format("note: recorded with version {}, verifying with {}",
                                          recorded.software_version, version_string()));
  const ExperimentConfig cfg = parse_experiment(ConfigMap::parse(recorded.config_text));
  const RunManifest rerun = run_experiment(cfg, {scratch_dir, threads});
  if (rerun.outputs.size() != recorded.outputs.size()) {
    report.ok = false;
    report.messages.push_back(fmt::format("re-run produced {} outputs, manifest lists {}", rerun.outputs.size(),
                                          recorded.outputs.size()));
  }
  for (const auto& o : recorded.outputs) {
    const auto it = std::find_if(rerun.outputs.begin(), rerun.outputs.end(),
                                 [&](const OutputRecord& r) { return r.file == o.file; });
    if (it == rerun.outputs.end()) {
      report.ok = false;
      report.messages.push_back("not reproduced: " + o.file);
    } else if (it->sha256 != o.sha256) {
      report.ok = false;
      report.messages.push_back("checksum differs on re-run: " + o.file);
    }
  }
  if (report.ok) report.messages.push_back(fmt::format("verified {} outputs", recorded.outputs.size()));
  return report;
}

} // namespace spinflow
