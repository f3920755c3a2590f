#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "spinflow/config.hpp"
#include "spinflow/haar.hpp"
#include "spinflow/opensys.hpp"
#include "spinflow/runner.hpp"
#include "spinflow/seed.hpp"
#include "spinflow/transport.hpp"

namespace py = pybind11;
using namespace spinflow;

namespace {

using CArray = py::array_t<cplx, py::array::c_style | py::array::forcecast>;
using DArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

py::array_t<cplx> to_numpy(const StateVector& psi) {
  py::array_t<cplx> out(static_cast<py::ssize_t>(psi.dim()));
  std::copy(psi.amplitudes().begin(), psi.amplitudes().end(), out.mutable_data());
  return out;
}

StateVector from_numpy(const CArray& a) {
  if (a.ndim() != 1) throw std::invalid_argument("state must be one-dimensional");
  return StateVector(std::vector<cplx>(a.data(), a.data() + a.size()));
}

std::span<const double> as_span(const DArray& a) {
  return {a.data(), static_cast<std::size_t>(a.size())};
}

PotentialField field_of(const std::vector<double>& w) { return PotentialField{w}; }

py::dict series_dict(const CorrelationSeries& s) {
  py::dict d;
  d["times_ns"] = py::array(py::cast(s.times_ns));
  d["c11"] = py::array(py::cast(s.c11));
  d["c11_stderr"] = py::array(py::cast(s.stderr_c11));
  const char* names[] = {"c_uu", "c_ud", "c_du", "c_dd"};
  for (std::size_t i = 0; i < 4; ++i) d[names[i]] = py::array(py::cast(s.c[i]));
  return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Spin transport on a two-leg hard-core-boson ladder";
  m.attr("__version__") = version_string();

  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);
  py::register_exception<FitError>(m, "FitError", PyExc_ValueError);

  py::class_<LadderSpec>(m, "LadderSpec")
      .def_readonly("rungs", &LadderSpec::rungs)
      .def_readonly("parallel_up", &LadderSpec::parallel_up)
      .def_readonly("parallel_down", &LadderSpec::parallel_down)
      .def_readonly("rung", &LadderSpec::rung)
      .def_readonly("diag_down", &LadderSpec::diag_down)
      .def_readonly("diag_up", &LadderSpec::diag_up)
      .def_readonly("nnn_up", &LadderSpec::nnn_up)
      .def_readonly("nnn_down", &LadderSpec::nnn_down)
      .def_property_readonly("n_sites", &LadderSpec::n_sites)
      .def("__repr__", [](const LadderSpec& s) {
        return "<LadderSpec rungs=" + std::to_string(s.rungs) + ">";
      });

  m.def("uniform_ladder", &uniform_ladder, py::arg("rungs"), py::arg("j_parallel_mhz"), py::arg("j_rung_mhz"));
  m.def("device_ladder", &device_ladder, py::arg("rungs"), py::arg("seed") = 2024, py::arg("with_nnn") = false);
  m.def("ladder_preset", &ladder_preset, py::arg("name"), py::arg("rungs"), py::arg("seed") = 2024);
  m.def("sample_disorder", [](double w, std::uint64_t seed, int n) { return sample_disorder(w, seed, n).w_mhz; },
        py::arg("w_mhz"), py::arg("seed"), py::arg("n_sites"));
  m.def("tilt_potential", [](double ws, int rungs) { return tilt_potential(ws, rungs).w_mhz; },
        py::arg("ws_mhz"), py::arg("rungs"));

  m.def(
      "evolve",
      [](const LadderSpec& spec, const CArray& psi, double t_ns, const std::vector<double>& field) {
        const auto h = build_interaction(spec) + build_onsite(spec, field_of(field));
        const auto in = from_numpy(psi);
        StateVector out;
        {
          py::gil_scoped_release release;
          out = evolve(h, in, t_ns);
        }
        return to_numpy(out);
      },
      py::arg("spec"), py::arg("psi"), py::arg("t_ns"), py::arg("field") = std::vector<double>{},
      "exp(-i (H_I + H_Z) t) psi with H_Z built from the on-site field in MHz.");

  m.def(
      "exact_autocorrelation",
      [](const LadderSpec& spec, const DArray& times, const std::vector<double>& field) {
        CorrelationSeries s;
        {
          py::gil_scoped_release release;
          s = exact_autocorrelation(spec, field_of(field), as_span(times));
        }
        return series_dict(s);
      },
      py::arg("spec"), py::arg("times"), py::arg("field") = std::vector<double>{});

  m.def(
      "measure_autocorrelation",
      [](const LadderSpec& spec, const DArray& times, const std::vector<std::uint64_t>& seeds,
         const std::vector<double>& field, double t_r_ns) {
        TypicalityConfig cfg;
        cfg.t_r_ns = t_r_ns;
        CorrelationSeries s;
        {
          py::gil_scoped_release release;
          s = measure_autocorrelation(spec, field_of(field), cfg, as_span(times), seeds);
        }
        return series_dict(s);
      },
      py::arg("spec"), py::arg("times"), py::arg("seeds"), py::arg("field") = std::vector<double>{},
      py::arg("t_r_ns") = 200.0);

  m.def("domain_wall_state", &domain_wall_state, py::arg("rungs"), py::arg("walls"));

  py::class_<PowerLawFit>(m, "PowerLawFit")
      .def_readonly("alpha", &PowerLawFit::alpha)
      .def_readonly("alpha_stderr", &PowerLawFit::alpha_stderr)
      .def_readonly("window_ns", &PowerLawFit::window_ns)
      .def_readonly("r_squared", &PowerLawFit::r_squared)
      .def_readonly("n_points", &PowerLawFit::n_points)
      .def("__repr__", [](const PowerLawFit& f) {
        return "<PowerLawFit alpha=" + std::to_string(f.alpha) + " +- " + std::to_string(f.alpha_stderr) + ">";
      });

  m.def(
      "fit_power_law",
      [](const DArray& t, const DArray& c, std::pair<double, double> window, const std::optional<DArray>& se) {
        return fit_power_law(as_span(t), as_span(c), se ? as_span(*se) : std::span<const double>{}, window);
      },
      py::arg("times"), py::arg("values"), py::arg("window_ns"), py::arg("stderr") = py::none());
  m.def("classify_transport", [](const PowerLawFit& f) { return to_string(classify_transport(f)); });

  m.def("haar_entropy_target", &haar_entropy_target, py::arg("n_qubits"));
  m.def("participation_entropy", [](const CArray& psi) { return participation_entropy(from_numpy(psi)).s_pe; },
        py::arg("psi"));
  m.def("porter_thomas_ks", [](const CArray& psi) { return porter_thomas_ks(from_numpy(psi).probabilities()); },
        py::arg("psi"));
  m.def("ks_critical_value", &ks_critical_value, py::arg("n"), py::arg("alpha"));
  m.def(
      "generate_haar_state",
      [](const LadderSpec& spec, double t_r_ns, std::uint64_t seed, bool wide_phase) {
        const auto dist = wide_phase ? DriveDistribution::wide_phase() : DriveDistribution{};
        StateVector psi;
        {
          py::gil_scoped_release release;
          psi = generate_haar_state(spec.lattice(), dist, t_r_ns, seed);
        }
        return to_numpy(psi);
      },
      py::arg("spec"), py::arg("t_r_ns"), py::arg("seed"), py::arg("wide_phase") = false);
  m.def("haar_reference_state", [](std::size_t dim, std::uint64_t seed) { return to_numpy(haar_reference_state(dim, seed)); },
        py::arg("dim"), py::arg("seed"));

  m.def(
      "trajectory_particle_number",
      [](const LadderSpec& spec, const std::vector<int>& occupations, const DArray& times, double t1_ns,
         std::size_t n_traj, std::uint64_t seed) {
        const int n = spec.n_sites();
        if (static_cast<int>(occupations.size()) != n)
          throw std::invalid_argument("occupations must have one entry per site");
        const auto h = build_interaction(spec);
        const auto psi = StateVector::basis(h.dim(), product_state(occupations));
        const std::vector<DiagonalObservable> obs = {number_observable(n)};
        ObservableSeries s;
        {
          py::gil_scoped_release release;
          s = evolve_trajectories(h, RelaxationSpec::uniform(n, t1_ns), psi, as_span(times), obs, n_traj, seed);
        }
        return py::make_tuple(py::array(py::cast(s.mean[0])), py::array(py::cast(s.std_error[0])));
      },
      py::arg("spec"), py::arg("occupations"), py::arg("times"), py::arg("t1_ns"), py::arg("n_traj"),
      py::arg("seed"), "Mean and standard error of the total particle number under T1 decay.");

  m.def("derive_seed", [](std::uint64_t root, const std::vector<std::uint64_t>& path) { return derive_seed(root, path); },
        py::arg("root"), py::arg("path"));

  m.def(
      "run_experiment",
      [](const std::string& config_text, const std::filesystem::path& out_dir, int threads) {
        const auto cfg = parse_experiment(ConfigMap::parse(config_text));
        RunManifest man;
        {
          py::gil_scoped_release release;
          man = run_experiment(cfg, {out_dir, threads});
        }
        py::dict d;
        d["complete"] = man.complete;
        d["failures"] = man.failures;
        std::vector<std::string> files;
        for (const auto& o : man.outputs) files.push_back(o.file);
        d["outputs"] = files;
        d["wall_time_s"] = man.wall_time_s;
        return d;
      },
      py::arg("config_text"), py::arg("out_dir"), py::arg("threads") = 0,
      "Run a scenario from config text and write its outputs and manifest to out_dir.");
}
