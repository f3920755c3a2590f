#pragma once

#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "spinflow/model.hpp"
#include "spinflow/propagator.hpp"
#include "spinflow/state.hpp"

namespace spinflow {

enum class EntropyEstimator { exact, sampled };

struct EntropyReport {
  double s_pe = 0.0;      // nats
  double s_target = 0.0;  // ln D - 1 + gamma
  int n_qubits = 0;
  EntropyEstimator estimator = EntropyEstimator::exact;
  std::uint64_t n_samples = 0;
  /// Miller-Madow corrected value; equals s_pe for the exact estimator.
  double s_pe_miller_madow = 0.0;
};

/// Participation entropy of a Haar-random state on n qubits: n ln2 - 1 + gamma.
double haar_entropy_target(int n_qubits);

EntropyReport participation_entropy(const StateVector& psi);

/// Plug-in entropy of the empirical distribution of `n_shots` basis samples.
EntropyReport sampled_participation_entropy(const StateVector& psi, std::uint64_t n_shots,
                                            std::uint64_t seed);

/// Kolmogorov-Smirnov distance between the empirical CDF of D p_k and Exp(1).
double porter_thomas_ks(std::span<const double> probs);

/// Asymptotic one-sample KS critical value at significance `alpha` for n points.
double ks_critical_value(std::size_t n, double alpha);

/// D p_k for every basis state; input for Porter-Thomas histograms.
std::vector<double> scaled_probabilities(const StateVector& psi);

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  double density = 0.0;  // empirical
  double expected = 0.0; // e^{-x} at the bin centre
};

/// Normalised histogram of D p_k on [0, x_max).
std::vector<HistogramBin> porter_thomas_histogram(const StateVector& psi, int bins = 40,
                                                  double x_max = 8.0);

/// Distribution of per-site drive parameters. Defaults reproduce the device:
/// Omega ~ N(10.4, 1.6) MHz, phi ~ U[-pi/10, pi/10].
struct DriveDistribution {
  double omega_mean_mhz = 10.4;
  double omega_std_mhz = 1.6;
  double phase_halfwidth = std::numbers::pi / 10.0;

  /// Robustness mode with phases over the full circle.
  static DriveDistribution wide_phase() {
    DriveDistribution d;
    d.phase_halfwidth = std::numbers::pi;
    return d;
  }
};

DrivePlan sample_drive(int n_sites, double duration_ns, const DriveDistribution& dist,
                       std::uint64_t seed);

/// exp(-i (H_I + H_d) t_R) |0...0> on `lattice`.
StateVector generate_haar_state(const Lattice& lattice, const DrivePlan& plan,
                                const KrylovConfig& cfg = {});
StateVector generate_haar_state(const LadderSpec& spec, const DrivePlan& plan,
                                const KrylovConfig& cfg = {});
/// Same, with the drive drawn from `dist` using `seed`.
StateVector generate_haar_state(const Lattice& lattice, const DriveDistribution& dist,
                                double t_r_ns, std::uint64_t seed, const KrylovConfig& cfg = {});

/// Exact Haar draw: i.i.d. complex Gaussian amplitudes, normalised.
StateVector haar_reference_state(std::size_t dim, std::uint64_t seed);

} // namespace spinflow
