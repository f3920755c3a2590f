#include "spinflow/haar.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <unordered_map>

namespace spinflow {

double haar_entropy_target(int n_qubits) {
  return n_qubits * std::numbers::ln2 - 1.0 + kEulerGamma;
}

namespace {

int qubit_count(std::size_t dim) {
  int n = 0;
  while ((std::size_t{1} << n) < dim) ++n;
  return n;
}

double shannon(std::span<const double> p) {
  double s = 0.0;
  for (double x : p)
    if (x > 0.0) s -= x * std::log(x);
  return s;
}

} // namespace

EntropyReport participation_entropy(const StateVector& psi) {
  auto p = psi.probabilities();
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  for (auto& x : p) x /= total;
  EntropyReport r;
  r.n_qubits = qubit_count(psi.dim());
  r.s_target = haar_entropy_target(r.n_qubits);
  r.s_pe = shannon(p);
  r.s_pe_miller_madow = r.s_pe;
  return r;
}

EntropyReport sampled_participation_entropy(const StateVector& psi, std::uint64_t n_shots,
                                            std::uint64_t seed) {
  if (n_shots == 0) throw std::invalid_argument("sampled_participation_entropy: n_shots must be >= 1");
  auto p = psi.probabilities();
  std::discrete_distribution<std::size_t> dist(p.begin(), p.end());
  std::mt19937_64 rng(seed);
  std::unordered_map<std::size_t, std::uint64_t> counts;
  for (std::uint64_t s = 0; s < n_shots; ++s) ++counts[dist(rng)];

  // Sum in basis order so the result does not depend on hash iteration order.
  std::vector<std::pair<std::size_t, std::uint64_t>> sorted(counts.begin(), counts.end());
  std::sort(sorted.begin(), sorted.end());
  double s_pe = 0.0;
  const double n = static_cast<double>(n_shots);
  for (const auto& [k, c] : sorted) {
    const double f = static_cast<double>(c) / n;
    s_pe -= f * std::log(f);
  }
  EntropyReport r;
  r.n_qubits = qubit_count(psi.dim());
  r.s_target = haar_entropy_target(r.n_qubits);
  r.s_pe = s_pe;
  r.estimator = EntropyEstimator::sampled;
  r.n_samples = n_shots;
  r.s_pe_miller_madow = s_pe + (static_cast<double>(sorted.size()) - 1.0) / (2.0 * n);
  return r;
}

double porter_thomas_ks(std::span<const double> probs) {
  if (probs.empty()) throw std::invalid_argument("porter_thomas_ks: empty input");
  const double d = static_cast<double>(probs.size());
  std::vector<double> x(probs.begin(), probs.end());
  for (auto& v : x) v *= d;
  std::sort(x.begin(), x.end());
  double ks = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double cdf = 1.0 - std::exp(-x[i]);
    ks = std::max({ks, (static_cast<double>(i) + 1.0) / d - cdf, cdf - static_cast<double>(i) / d});
  }
  return ks;
}

double ks_critical_value(std::size_t n, double alpha) {
  if (n == 0 || !(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("ks_critical_value: need n >= 1 and 0 < alpha < 1");
  return std::sqrt(-0.5 * std::log(alpha / 2.0)) / std::sqrt(static_cast<double>(n));
}

std::vector<double> scaled_probabilities(const StateVector& psi) {
  auto p = psi.probabilities();
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  const double d = static_cast<double>(p.size());
  for (auto& x : p) x *= d / total;
  return p;
}

std::vector<HistogramBin> porter_thomas_histogram(const StateVector& psi, int bins, double x_max) {
  if (bins < 1 || !(x_max > 0.0)) throw std::invalid_argument("porter_thomas_histogram: bad binning");
  const auto x = scaled_probabilities(psi);
  const double width = x_max / bins;
  std::vector<std::uint64_t> counts(static_cast<std::size_t>(bins), 0);
  for (double v : x) {
    if (v < x_max) ++counts[std::min(static_cast<std::size_t>(v / width), counts.size() - 1)];
  }
  std::vector<HistogramBin> out(counts.size());
  for (std::size_t b = 0; b < counts.size(); ++b) {
    out[b].lo = static_cast<double>(b) * width;
    out[b].hi = out[b].lo + width;
    out[b].density = static_cast<double>(counts[b]) / (static_cast<double>(x.size()) * width);
    out[b].expected = std::exp(-(out[b].lo + 0.5 * width));
  }
  return out;
}

DrivePlan sample_drive(int n_sites, double duration_ns, const DriveDistribution& dist,
                       std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> omega(dist.omega_mean_mhz, dist.omega_std_mhz);
  std::uniform_real_distribution<double> phase(-dist.phase_halfwidth, dist.phase_halfwidth);
  DrivePlan plan;
  plan.duration_ns = duration_ns;
  for (int s = 0; s < n_sites; ++s) {
    plan.omega_mhz.push_back(std::max(0.0, omega(rng)));
    double phi = phase(rng);
    if (phi <= -std::numbers::pi) phi = std::numbers::pi;
    plan.phi.push_back(phi);
  }
  return plan;
}

StateVector generate_haar_state(const Lattice& lattice, const DrivePlan& plan, const KrylovConfig& cfg) {
  plan.validate(lattice.n_sites);
  const SparseOperator h = build_interaction(lattice) + build_drive(lattice, plan);
  return evolve(h, StateVector::basis(lattice.dim(), 0), plan.duration_ns, cfg);
}

StateVector generate_haar_state(const LadderSpec& spec, const DrivePlan& plan, const KrylovConfig& cfg) {
  spec.validate();
  return generate_haar_state(spec.lattice(), plan, cfg);
}

StateVector generate_haar_state(const Lattice& lattice, const DriveDistribution& dist, double t_r_ns,
                                std::uint64_t seed, const KrylovConfig& cfg) {
  return generate_haar_state(lattice, sample_drive(lattice.n_sites, t_r_ns, dist, seed), cfg);
}

StateVector haar_reference_state(std::size_t dim, std::uint64_t seed) {
  check_dimension(dim, "haar_reference_state");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  StateVector psi(dim);
  for (std::size_t k = 0; k < dim; ++k) {
    const double re = g(rng);
    const double im = g(rng);
    psi[k] = {re, im};
  }
  psi.normalize();
  return psi;
}

} // namespace spinflow
