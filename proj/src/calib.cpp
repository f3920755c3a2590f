#include "spinflow/calib.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace spinflow::calib {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

using Residual = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct LmResult {
  Eigen::VectorXd theta;
  double cost = 0.0;
  bool converged = false;
};

// Damped Gauss-Newton (Levenberg-Marquardt) with a central-difference
// Jacobian. Converges when the relative parameter step falls below rel_tol.
LmResult levenberg_marquardt(const Residual& residual, Eigen::VectorXd theta, int max_iter, double rel_tol) {
  const auto p = theta.size();
  Eigen::VectorXd r = residual(theta);
  double cost = r.squaredNorm();
  double lambda = 1e-3;
  LmResult out{theta, cost, false};
  for (int iter = 0; iter < max_iter; ++iter) {
    Eigen::MatrixXd jac(r.size(), p);
    for (Eigen::Index k = 0; k < p; ++k) {
      const double h = 1e-6 * std::max(std::abs(theta(k)), 1e-6);
      Eigen::VectorXd tp = theta, tm = theta;
      tp(k) += h;
      tm(k) -= h;
      jac.col(k) = (residual(tp) - residual(tm)) / (2.0 * h);
    }
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd g = jac.transpose() * r;
    bool improved = false;
    Eigen::VectorXd step;
    while (lambda < 1e16) {
      Eigen::MatrixXd a = jtj;
      for (Eigen::Index k = 0; k < p; ++k) a(k, k) += lambda * std::max(jtj(k, k), 1e-300);
      step = a.ldlt().solve(-g);
      const Eigen::VectorXd trial = theta + step;
      const Eigen::VectorXd rt = residual(trial);
      const double ct = rt.squaredNorm();
      if (std::isfinite(ct) && ct <= cost) {
        theta = trial;
        r = rt;
        cost = ct;
        lambda = std::max(lambda * 0.3, 1e-12);
        improved = true;
        break;
      }
      lambda *= 10.0;
    }
    const double rel = step.norm() / std::max(theta.norm(), 1e-300);
    if (!improved || rel < rel_tol) {
      out = {theta, cost, true};
      return out;
    }
  }
  out = {theta, cost, false};
  return out;
}

} // namespace

double rabi_probability(double t_ns, const RabiFit& fit) {
  return fit.amplitude * std::exp(-t_ns / fit.t1_ns) * std::cos(to_angular(fit.omega_mhz) * t_ns) + fit.offset;
}

RabiFit fit_rabi(std::span<const double> t_ns, std::span<const double> p1) {
  if (t_ns.size() != p1.size()) throw std::invalid_argument("fit_rabi: array lengths differ");
  const std::size_t n = t_ns.size();
  if (n < 10) throw FitError("fit_rabi: need at least 10 samples");
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(t_ns[i]) || !std::isfinite(p1[i])) throw FitError("fit_rabi: non-finite sample");
  const auto [tmin_it, tmax_it] = std::minmax_element(t_ns.begin(), t_ns.end());
  const double t0 = *tmin_it;
  const double span = *tmax_it - t0;
  const auto [pmin_it, pmax_it] = std::minmax_element(p1.begin(), p1.end());
  const double mean = std::accumulate(p1.begin(), p1.end(), 0.0) / static_cast<double>(n);
  if (!(span > 0.0) || *pmax_it - *pmin_it < 1e-9) throw FitError("fit_rabi: no oscillation detectable");

  // Periodogram of the detrended data on a frequency grid oversampled 10x
  // relative to the 1/span resolution, up to the mean Nyquist frequency.
  const double f_res = 1.0 / span;
  const double f_nyq = 0.5 * static_cast<double>(n - 1) / span;
  double best_f = 0.0, best_power = -1.0, total_power = 0.0;
  std::size_t n_freq = 0;
  for (double f = f_res; f <= f_nyq; f += 0.1 * f_res) {
    cplx acc{0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) acc += (p1[i] - mean) * std::polar(1.0, -kTwoPi * f * (t_ns[i] - t0));
    const double power = std::norm(acc);
    total_power += power;
    ++n_freq;
    if (power > best_power) {
      best_power = power;
      best_f = f;
    }
  }
  if (n_freq == 0 || best_power <= 0.0) throw FitError("fit_rabi: no oscillation detectable");
  if (best_f * span < 2.0) throw FitError("fit_rabi: scan covers fewer than two oscillation periods");

  // Linear amplitude/offset seed at the peak frequency.
  Eigen::MatrixXd x(n, 2);
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x(i, 0) = std::cos(kTwoPi * best_f * t_ns[i]);
    x(i, 1) = 1.0;
    y(i) = p1[i];
  }
  const Eigen::Vector2d ab = x.colPivHouseholderQr().solve(y);

  // Parameters: amplitude, decay rate (1/ns), frequency (cycles/ns), offset.
  auto residual = [&](const Eigen::VectorXd& th) {
    Eigen::VectorXd r(n);
    for (std::size_t i = 0; i < n; ++i)
      r(i) = th(0) * std::exp(-th(1) * t_ns[i]) * std::cos(kTwoPi * th(2) * t_ns[i]) + th(3) - p1[i];
    return r;
  };
  Eigen::VectorXd theta(4);
  theta << ab(0), 0.1 / span, best_f, ab(1);
  const LmResult lm = levenberg_marquardt(residual, theta, 200, 1e-10);
  if (!lm.converged) throw FitError("fit_rabi: no convergence within 200 iterations");

  RabiFit fit;
  fit.amplitude = lm.theta(0);
  fit.t1_ns = lm.theta(1) > 1e-12 ? 1.0 / lm.theta(1) : 1e12;
  fit.omega_mhz = std::abs(lm.theta(2)) * 1e3;
  fit.offset = lm.theta(3);
  return fit;
}

double effective_rabi(double delta_mhz, double omega_i_mhz, double omega_ij_mhz, double phi_ij, double phi_ii) {
  const double sq = delta_mhz * delta_mhz + omega_i_mhz * omega_i_mhz + omega_ij_mhz * omega_ij_mhz +
                    2.0 * omega_i_mhz * omega_ij_mhz * std::cos(phi_ij - phi_ii);
  return std::sqrt(std::max(sq, 0.0));
}

CrosstalkEstimate extract_crosstalk(std::span<const double> phi_ii, std::span<const double> omega_r_mhz,
                                    double delta_mhz, double omega_i_mhz, double omega_j_mhz) {
  const std::size_t n = phi_ii.size();
  if (omega_r_mhz.size() != n) throw std::invalid_argument("extract_crosstalk: array lengths differ");
  if (n < 8) throw FitError("extract_crosstalk: need at least 8 scan points");
  if (!(omega_i_mhz > 0.0) || !(omega_j_mhz > 0.0))
    throw std::invalid_argument("extract_crosstalk: drive amplitudes must be > 0");

  // Full-period coverage: no circular gap between scan phases wider than pi/2.
  std::vector<double> wrapped(n);
  for (std::size_t i = 0; i < n; ++i) {
    wrapped[i] = std::fmod(phi_ii[i], kTwoPi);
    if (wrapped[i] < 0.0) wrapped[i] += kTwoPi;
  }
  std::sort(wrapped.begin(), wrapped.end());
  double gap = wrapped.front() + kTwoPi - wrapped.back();
  for (std::size_t i = 1; i < n; ++i) gap = std::max(gap, wrapped[i] - wrapped[i - 1]);
  if (gap > std::numbers::pi / 2.0) throw FitError("extract_crosstalk: scan does not cover a full period");

  // Omega_R^2 = a0 + a1 cos(phi_ii) + a2 sin(phi_ii) is linear in (a0, a1, a2).
  Eigen::MatrixXd x(n, 3);
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x(i, 0) = 1.0;
    x(i, 1) = std::cos(phi_ii[i]);
    x(i, 2) = std::sin(phi_ii[i]);
    y(i) = omega_r_mhz[i] * omega_r_mhz[i];
  }
  const Eigen::Vector3d a = x.colPivHouseholderQr().solve(y);
  const double amp = std::hypot(a(1), a(2));
  const double dof = static_cast<double>(n) - 3.0;
  const double s2 = (y - x * a).squaredNorm() / dof;
  const Eigen::Matrix3d cov = s2 * (x.transpose() * x).inverse();
  double amp_se = 0.0;
  if (amp > 0.0) {
    const Eigen::Vector2d grad(a(1) / amp, a(2) / amp);
    amp_se = std::sqrt(std::max(grad.dot(cov.bottomRightCorner<2, 2>() * grad), 0.0));
  }

  CrosstalkEstimate est;
  if (amp <= 3.0 * amp_se || amp <= 1e-12 * std::abs(a(0))) {
    est.identifiable = false;
    double rms = 0.0;
    const double base = effective_rabi(delta_mhz, omega_i_mhz, 0.0, 0.0, 0.0);
    for (std::size_t i = 0; i < n; ++i) rms += (omega_r_mhz[i] - base) * (omega_r_mhz[i] - base);
    est.residual_rms = std::sqrt(rms / static_cast<double>(n));
    return est;
  }

  auto residual = [&](const Eigen::VectorXd& th) {
    Eigen::VectorXd r(n);
    for (std::size_t i = 0; i < n; ++i)
      r(i) = effective_rabi(delta_mhz, omega_i_mhz, th(0), th(1), phi_ii[i]) - omega_r_mhz[i];
    return r;
  };
  Eigen::VectorXd theta(2);
  theta << amp / (2.0 * omega_i_mhz), std::atan2(a(2), a(1));
  const LmResult lm = levenberg_marquardt(residual, theta, 200, 1e-10);
  if (!lm.converged) throw FitError("extract_crosstalk: no convergence within 200 iterations");

  double omega_ij = lm.theta(0);
  double phi = lm.theta(1);
  if (omega_ij < 0.0) {
    omega_ij = -omega_ij;
    phi += std::numbers::pi;
  }
  phi = std::remainder(phi, kTwoPi);
  if (phi <= -std::numbers::pi) phi += kTwoPi;
  est.c_ij = omega_ij / omega_j_mhz;
  est.phi_ij = phi;
  est.residual_rms = std::sqrt(lm.cost / static_cast<double>(n));
  return est;
}

void MixerMap::validate() const {
  if (!(eta > 0.0)) throw std::invalid_argument("MixerMap: eta must be > 0");
  if (!(v_sat >= 0.0)) throw std::invalid_argument("MixerMap: v_sat must be >= 0");
  if (!(omega_max > eta * v_sat)) throw std::invalid_argument("MixerMap: omega_max must exceed eta * v_sat");
}

double amp_to_rabi(double v, const MixerMap& map) {
  map.validate();
  if (!(v >= 0.0)) throw std::invalid_argument("amp_to_rabi: amplitude must be >= 0");
  if (v <= map.v_sat) return map.eta * v;
  const double head = map.omega_max - map.eta * map.v_sat;
  return map.omega_max - head * std::exp(-map.eta * (v - map.v_sat) / head);
}

double rabi_to_amp(double omega_mhz, const MixerMap& map) {
  map.validate();
  if (!(omega_mhz >= 0.0)) throw std::invalid_argument("rabi_to_amp: Rabi frequency must be >= 0");
  if (omega_mhz >= map.omega_max) throw std::domain_error("rabi_to_amp: Rabi frequency at or above omega_max");
  if (omega_mhz <= map.eta * map.v_sat) return omega_mhz / map.eta;
  const double head = map.omega_max - map.eta * map.v_sat;
  return map.v_sat + head / map.eta * std::log(head / (map.omega_max - omega_mhz));
}

CrosstalkMatrix::CrosstalkMatrix(int n) {
  if (n < 1) throw std::invalid_argument("CrosstalkMatrix: size must be >= 1");
  m_ = Eigen::MatrixXcd::Identity(n, n);
}

CrosstalkMatrix::CrosstalkMatrix(Eigen::MatrixXcd m) : m_(std::move(m)) {
  if (m_.rows() < 1 || m_.rows() != m_.cols()) throw std::invalid_argument("CrosstalkMatrix: must be square");
  if (!m_.allFinite()) throw std::invalid_argument("CrosstalkMatrix: entries must be finite");
  for (Eigen::Index i = 0; i < m_.rows(); ++i)
    if (m_(i, i) != cplx(1.0, 0.0)) throw std::invalid_argument("CrosstalkMatrix: diagonal must be exactly 1");
}

void CrosstalkMatrix::set(int i, int j, double c, double phi) {
  if (i < 0 || j < 0 || i >= size() || j >= size()) throw std::out_of_range("CrosstalkMatrix::set: index");
  if (i == j) throw std::invalid_argument("CrosstalkMatrix::set: diagonal is fixed to 1");
  if (!std::isfinite(c) || !std::isfinite(phi)) throw std::invalid_argument("CrosstalkMatrix::set: non-finite");
  m_(i, j) = std::polar(c, phi);
}

Eigen::MatrixXcd signal_crosstalk(const CrosstalkMatrix& m_omega, std::span<const double> eta) {
  const int n = m_omega.size();
  if (static_cast<int>(eta.size()) != n) throw std::invalid_argument("signal_crosstalk: eta length mismatch");
  Eigen::MatrixXcd mv = m_omega.matrix();
  for (int i = 0; i < n; ++i) {
    if (!(eta[i] > 0.0)) throw std::invalid_argument("signal_crosstalk: eta must be > 0");
    for (int j = 0; j < n; ++j) mv(i, j) *= eta[i] / eta[j];
  }
  return mv;
}

Eigen::VectorXcd apply_crosstalk(const CrosstalkMatrix& m_omega, std::span<const double> eta,
                                 const Eigen::VectorXcd& programmed) {
  if (programmed.size() != m_omega.size()) throw std::invalid_argument("apply_crosstalk: vector length mismatch");
  return signal_crosstalk(m_omega, eta) * programmed;
}

CrosstalkCorrection correct_crosstalk(const CrosstalkMatrix& m_omega, std::span<const double> eta,
                                      const Eigen::VectorXcd& desired) {
  if (desired.size() != m_omega.size()) throw std::invalid_argument("correct_crosstalk: vector length mismatch");
  const Eigen::MatrixXcd mv = signal_crosstalk(m_omega, eta);
  const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(mv);
  const auto& sv = svd.singularValues();
  const double cond = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1) : INFINITY;
  if (!(cond <= 1e12)) throw std::domain_error("correct_crosstalk: crosstalk matrix is ill-conditioned");
  return {mv.partialPivLu().solve(desired), cond};
}

} // namespace spinflow::calib
