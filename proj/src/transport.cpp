#include "spinflow/transport.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <bit>
#include <cmath>
#include <exception>
#include <map>
#include <numeric>
#include <stdexcept>

#include "spinflow/seed.hpp"

namespace spinflow {

namespace {

constexpr int kUp = 0;
constexpr int kDown = 1;

double z_sign(Basis k, int site) { return ((k >> site) & 1u) ? -1.0 : 1.0; }

CorrelationSeries empty_series(std::span<const double> times) {
  CorrelationSeries s;
  s.times_ns.assign(times.begin(), times.end());
  for (auto& c : s.c) c.assign(times.size(), 0.0);
  s.c11.assign(times.size(), 0.0);
  s.stderr_c11.assign(times.size(), 0.0);
  return s;
}

void fill_c11(CorrelationSeries& s) {
  for (std::size_t i = 0; i < s.size(); ++i)
    s.c11[i] = 0.25 * (s.c[0][i] + s.c[1][i] + s.c[2][i] + s.c[3][i]);
}

void check_times(std::span<const double> times) {
  double prev = 0.0;
  for (double t : times) {
    if (!(t >= prev) || !std::isfinite(t))
      throw std::invalid_argument("time grid must be finite, non-negative and non-decreasing");
    prev = t;
  }
}

SparseOperator quench_hamiltonian(const LadderSpec& spec, const PotentialField& field) {
  spec.validate();
  if (spec.local_dim != 2) throw std::invalid_argument("autocorrelation requires a hard-core ladder");
  return build_interaction(spec) + build_onsite(spec, field);
}

} // namespace

CorrelationSeries measure_autocorrelation(const LadderSpec& spec, const PotentialField& field,
                                          const TypicalityConfig& cfg, std::span<const double> times,
                                          std::span<const std::uint64_t> seeds) {
  if (seeds.empty()) throw std::invalid_argument("measure_autocorrelation: empty seed list");
  check_times(times);
  const SparseOperator h = quench_hamiltonian(spec, field);
  const Lattice full = spec.lattice();
  const int n = full.n_sites;

  const auto n_tasks = static_cast<std::int64_t>(seeds.size() * 2);
  std::vector<CorrelationSeries> per_seed(seeds.size(), empty_series(times));
  std::exception_ptr failure;

#pragma omp parallel for schedule(dynamic)
  for (std::int64_t task = 0; task < n_tasks; ++task) {
    try {
      const auto si = static_cast<std::size_t>(task / 2);
      const int nu = static_cast<int>(task % 2);
      const Lattice sub = full.without_site(nu);
      const StateVector psi_r = generate_haar_state(
          sub, cfg.drive, cfg.t_r_ns, derive_seed(seeds[si], {static_cast<std::uint64_t>(nu)}), cfg.krylov);
      auto& out = per_seed[si];
      evolve_on_grid(h, embed_vacancy(psi_r, nu, n), times, cfg.krylov,
                     [&](std::size_t i, const StateVector& psi) {
                       for (int mu : {kUp, kDown}) out.c[mu * 2 + nu][i] = expect_z(psi, mu);
                     });
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  for (auto& s : per_seed) fill_c11(s);
  return average_series(per_seed);
}

CorrelationSeries exact_autocorrelation(const LadderSpec& spec, const PotentialField& field,
                                        std::span<const double> times, const KrylovConfig&) {
  check_times(times);
  if (spec.dim() > 4096) throw DimensionError("exact_autocorrelation: dimension above 4096");
  const SparseOperator h = quench_hamiltonian(spec, field);
  const std::size_t dim = h.dim();

  // H conserves excitation number and sigma^z is diagonal, so the trace
  // splits into independent number sectors.
  std::map<int, std::vector<Basis>> sectors;
  for (Basis k = 0; k < dim; ++k) sectors[std::popcount(k)].push_back(k);

  CorrelationSeries out = empty_series(times);
  std::vector<std::int64_t> position(dim, -1);
  for (const auto& [count, states] : sectors) {
    const auto d = static_cast<Eigen::Index>(states.size());
    for (Eigen::Index a = 0; a < d; ++a) position[states[a]] = a;
    Eigen::MatrixXcd hs = Eigen::MatrixXcd::Zero(d, d);
    for (Eigen::Index a = 0; a < d; ++a) {
      const auto cols = h.row_columns(states[a]);
      const auto vals = h.row_values(states[a]);
      for (std::size_t e = 0; e < cols.size(); ++e) {
        const auto b = position[cols[e]];
        if (b < 0) throw std::logic_error("exact_autocorrelation: operator mixes number sectors");
        hs(a, b) = vals[e];
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(hs);
    const Eigen::MatrixXcd& v = es.eigenvectors();
    const Eigen::VectorXd& e = es.eigenvalues();

    std::array<Eigen::MatrixXcd, 2> z;
    for (int site : {kUp, kDown}) {
      Eigen::VectorXd s(d);
      for (Eigen::Index a = 0; a < d; ++a) s(a) = z_sign(states[a], site);
      z[site] = v.adjoint() * s.asDiagonal() * v;
    }
    std::array<Eigen::MatrixXcd, 4> w;
    for (int mu : {kUp, kDown})
      for (int nu : {kUp, kDown}) w[mu * 2 + nu] = z[mu].cwiseProduct(z[nu].conjugate());

    for (std::size_t i = 0; i < times.size(); ++i) {
      Eigen::VectorXcd u(d);
      for (Eigen::Index a = 0; a < d; ++a) u(a) = std::polar(1.0, e(a) * times[i]);
      for (std::size_t c = 0; c < 4; ++c) {
        const cplx tr = u.transpose() * w[c] * u.conjugate();
        out.c[c][i] += tr.real() / static_cast<double>(dim);
      }
    }
    for (Eigen::Index a = 0; a < d; ++a) position[states[a]] = -1;
  }
  fill_c11(out);
  return out;
}

std::vector<double> product_state_autocorrelation(const LadderSpec& spec, const PotentialField& field,
                                                  Basis psi0, std::span<const double> times,
                                                  const KrylovConfig& cfg) {
  check_times(times);
  const SparseOperator h = quench_hamiltonian(spec, field);
  if (psi0 >= h.dim()) throw std::invalid_argument("product_state_autocorrelation: basis index out of range");
  const double r0 = 0.5 * (z_sign(psi0, kUp) + z_sign(psi0, kDown));
  std::vector<double> out(times.size(), 0.0);
  if (r0 == 0.0) return out;
  evolve_on_grid(h, StateVector::basis(h.dim(), psi0), times, cfg,
                 [&](std::size_t i, const StateVector& psi) {
                   out[i] = r0 * 0.5 * (expect_z(psi, kUp) + expect_z(psi, kDown));
                 });
  return out;
}

namespace {

int leg_walls(unsigned pattern, int rungs) {
  int w = 0;
  for (int j = 0; j + 1 < rungs; ++j) w += ((pattern >> j) & 1u) != ((pattern >> (j + 1)) & 1u);
  return w;
}

} // namespace

Basis domain_wall_state(int rungs, int walls) {
  if (rungs < 1 || rungs > 20) throw std::invalid_argument("domain_wall_state: rungs out of range");
  if (walls < 0 || walls > 2 * (rungs - 1))
    throw std::invalid_argument("domain_wall_state: wall count out of range");
  // Leg patterns bucketed by (walls, ones).
  std::map<std::pair<int, int>, std::vector<unsigned>> buckets;
  for (unsigned p = 0; p < (1u << rungs); ++p) buckets[{leg_walls(p, rungs), std::popcount(p)}].push_back(p);
  auto first_wall = [&](unsigned p) {
    for (int j = 0; j + 1 < rungs; ++j)
      if (((p >> j) & 1u) != ((p >> (j + 1)) & 1u)) return j;
    return rungs;
  };

  // Among valid states, keep walls as far from rung 1 as possible; ties go
  // to the first candidate in enumeration order.
  bool found = false;
  int best_score = -1;
  Basis best = 0;
  const int first = (walls + 1) / 2;
  for (int w_up : {first, walls - first}) {
    const int w_down = walls - w_up;
    for (int ones_up = 0; ones_up <= rungs; ++ones_up) {
      const auto up_it = buckets.find({w_up, ones_up});
      const auto down_it = buckets.find({w_down, rungs - ones_up});
      if (up_it == buckets.end() || down_it == buckets.end()) continue;
      for (unsigned up : up_it->second) {
        for (unsigned down : down_it->second) {
          if ((up ^ down) & 1u) continue;
          const int score = std::min(first_wall(up), first_wall(down));
          if (found && score <= best_score) continue;
          found = true;
          best_score = score;
          best = 0;
          for (int j = 0; j < rungs; ++j) {
            best |= static_cast<Basis>((up >> j) & 1u) << (2 * j);
            best |= static_cast<Basis>((down >> j) & 1u) << (2 * j + 1);
          }
        }
      }
    }
  }
  if (!found) throw std::invalid_argument("domain_wall_state: no half-filled state with that many walls");
  return best;
}

int count_domain_walls(Basis state, int rungs) {
  int w = 0;
  for (int leg = 0; leg < 2; ++leg)
    for (int j = 0; j + 1 < rungs; ++j)
      w += ((state >> (2 * j + leg)) & 1u) != ((state >> (2 * (j + 1) + leg)) & 1u);
  return w;
}

CorrelationSeries average_series(std::span<const CorrelationSeries> realizations) {
  if (realizations.empty()) throw std::invalid_argument("average_series: no realizations");
  if (realizations.size() == 1) return realizations.front();
  CorrelationSeries out = empty_series(realizations.front().times_ns);
  const std::size_t m = realizations.size();
  for (const auto& r : realizations) {
    if (r.times_ns != out.times_ns) throw std::invalid_argument("average_series: time grids differ");
    for (std::size_t c = 0; c < 4; ++c)
      for (std::size_t i = 0; i < out.size(); ++i) out.c[c][i] += r.c[c][i] / static_cast<double>(m);
  }
  fill_c11(out);
  if (m > 1) {
    for (std::size_t i = 0; i < out.size(); ++i) {
      double ss = 0.0;
      for (const auto& r : realizations) ss += (r.c11[i] - out.c11[i]) * (r.c11[i] - out.c11[i]);
      out.stderr_c11[i] = std::sqrt(ss / static_cast<double>(m - 1) / static_cast<double>(m));
    }
  }
  out.n_realizations = m;
  return out;
}

PowerLawFit fit_power_law(std::span<const double> times, std::span<const double> values,
                          std::span<const double> stderr_values, std::pair<double, double> window_ns) {
  if (times.size() != values.size() || (!stderr_values.empty() && stderr_values.size() != values.size()))
    throw std::invalid_argument("fit_power_law: array lengths differ");
  if (!(window_ns.first < window_ns.second) || !(window_ns.first > 0.0))
    throw std::invalid_argument("fit_power_law: window must satisfy 0 < lo < hi");
  std::vector<double> x, y, sy;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < window_ns.first || times[i] > window_ns.second || !(values[i] > 0.0)) continue;
    x.push_back(std::log(times[i]));
    y.push_back(std::log(values[i]));
    sy.push_back(stderr_values.empty() ? 0.0 : stderr_values[i] / values[i]);
  }
  const std::size_t n = x.size();
  if (n < 4) throw FitError("fit_power_law: fewer than 4 positive points in the window");
  const double xm = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  const double ym = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - xm) * (x[i] - xm);
    sxy += (x[i] - xm) * (y[i] - ym);
    syy += (y[i] - ym) * (y[i] - ym);
  }
  if (sxx <= 0.0) throw FitError("fit_power_law: window contains a single distinct time");
  const double slope = sxy / sxx;
  const double intercept = ym - slope * xm;
  double ss_res = 0.0, var_prop = 0.0;
  bool have_errors = false;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (intercept + slope * x[i]);
    ss_res += r * r;
    const double wgt = (x[i] - xm) / sxx;
    var_prop += wgt * wgt * sy[i] * sy[i];
    have_errors = have_errors || sy[i] > 0.0;
  }
  PowerLawFit fit;
  fit.alpha = -slope;
  fit.alpha_stderr = have_errors ? std::sqrt(var_prop)
                                 : std::sqrt(ss_res / static_cast<double>(n - 2) / sxx);
  fit.window_ns = window_ns;
  fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  fit.n_points = n;
  return fit;
}

PowerLawFit fit_power_law(const CorrelationSeries& series, std::pair<double, double> window_ns) {
  return fit_power_law(series.times_ns, series.c11, series.stderr_c11, window_ns);
}

TransportClass classify_transport(const PowerLawFit& fit, const ClassifyThresholds& th) {
  if (fit.alpha < th.frozen_below) return TransportClass::frozen;
  if (std::abs(fit.alpha - th.diffusive_center) <= th.diffusive_halfwidth) return TransportClass::diffusive;
  return TransportClass::subdiffusive;
}

std::string to_string(TransportClass c) {
  switch (c) {
  case TransportClass::diffusive: return "diffusive";
  case TransportClass::subdiffusive: return "subdiffusive";
  case TransportClass::frozen: return "frozen";
  }
  return "unknown";
}

} // namespace spinflow
