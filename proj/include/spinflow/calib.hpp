#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

#include "spinflow/types.hpp"

namespace spinflow::calib {

/// Damped Rabi model A e^{-t/T1} cos(Omega t) + B. Omega is an ordinary
/// frequency in MHz, times are ns. The defaults give
/// P1(t) = [1 - e^{-t/T1} cos(Omega t)] / 2.
struct RabiFit {
  double omega_mhz = 0.0;
  double t1_ns = 1e12;
  double amplitude = -0.5;
  double offset = 0.5;
};

double rabi_probability(double t_ns, const RabiFit& fit);

/// Periodogram-seeded damped Gauss-Newton fit of a Rabi trace.
/// Throws FitError for flat data, too few samples, fewer than two periods
/// in the scan, or no convergence within 200 iterations.
RabiFit fit_rabi(std::span<const double> t_ns, std::span<const double> p1);

/// sqrt(Delta^2 + Omega_i^2 + Omega_ij^2 + 2 Omega_i Omega_ij cos(phi_ij - phi_ii)).
double effective_rabi(double delta_mhz, double omega_i_mhz, double omega_ij_mhz,
                      double phi_ij, double phi_ii);

struct CrosstalkEstimate {
  double c_ij = 0.0;
  double phi_ij = 0.0;
  /// False when the crosstalk amplitude is indistinguishable from zero;
  /// c_ij is then reported as 0.
  bool identifiable = true;
  double residual_rms = 0.0;
};

/// Fits the effective-Rabi model to a phase scan of Omega_R(phi_ii).
/// Requires at least 8 points covering a full 2 pi period.
CrosstalkEstimate extract_crosstalk(std::span<const double> phi_ii,
                                    std::span<const double> omega_r_mhz, double delta_mhz,
                                    double omega_i_mhz, double omega_j_mhz);

/// IQ-mixer saturation map: linear below v_sat, exponential approach to
/// omega_max above it, with matching value and slope at v_sat.
struct MixerMap {
  double eta = 1.0;       // MHz per unit amplitude
  double v_sat = 1.0;
  double omega_max = 2.0; // MHz

  void validate() const;
};

double amp_to_rabi(double v, const MixerMap& map);
/// Inverse of amp_to_rabi; std::domain_error when omega >= omega_max.
double rabi_to_amp(double omega_mhz, const MixerMap& map);

/// Complex crosstalk matrix with unit diagonal: entry (i, j) = c_ij e^{i phi_ij}.
class CrosstalkMatrix {
public:
  explicit CrosstalkMatrix(int n);
  explicit CrosstalkMatrix(Eigen::MatrixXcd m);

  int size() const { return static_cast<int>(m_.rows()); }
  void set(int i, int j, double c, double phi);
  const Eigen::MatrixXcd& matrix() const { return m_; }

private:
  Eigen::MatrixXcd m_;
};

/// M_V = diag(eta) M_Omega diag(eta)^{-1}.
Eigen::MatrixXcd signal_crosstalk(const CrosstalkMatrix& m_omega, std::span<const double> eta);

/// Drive seen by the qubits for a programmed drive vector.
Eigen::VectorXcd apply_crosstalk(const CrosstalkMatrix& m_omega, std::span<const double> eta,
                                 const Eigen::VectorXcd& programmed);

struct CrosstalkCorrection {
  Eigen::VectorXcd drive;
  double condition_number = 1.0;
};

/// Pre-compensated drive M_V^{-1} desired via LU. Throws std::domain_error
/// when the condition number exceeds 1e12.
CrosstalkCorrection correct_crosstalk(const CrosstalkMatrix& m_omega,
                                      std::span<const double> eta,
                                      const Eigen::VectorXcd& desired);

} // namespace spinflow::calib
