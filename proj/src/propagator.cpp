#include "spinflow/propagator.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace spinflow {

namespace {

void axpy(cplx a, std::span<const cplx> x, std::span<cplx> y) {
  const auto n = static_cast<std::int64_t>(y.size());
#pragma omp parallel for schedule(static) if (n > 65536)
  for (std::int64_t k = 0; k < n; ++k) y[k] += a * x[k];
}

void scale(cplx a, std::span<cplx> x) {
  for (auto& v : x) v *= a;
}

// exp(-i T dt) e_1 for the real symmetric tridiagonal Lanczos matrix,
// reusable for several dt once diagonalised.
class TridiagonalExp {
public:
  TridiagonalExp(const std::vector<double>& alpha, const std::vector<double>& beta, int m) {
    Eigen::VectorXd diag(m), sub(std::max(m - 1, 0));
    for (int i = 0; i < m; ++i) diag(i) = alpha[i];
    for (int i = 0; i + 1 < m; ++i) sub(i) = beta[i + 1];
    if (m == 1) {
      evals_ = diag;
      first_row_ = Eigen::VectorXd::Ones(1);
      evecs_ = Eigen::MatrixXd::Ones(1, 1);
    } else {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
      es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
      evals_ = es.eigenvalues();
      evecs_ = es.eigenvectors();
      first_row_ = evecs_.row(0).transpose();
    }
  }

  Eigen::VectorXcd apply(double dt) const {
    Eigen::VectorXcd w(evals_.size());
    for (Eigen::Index i = 0; i < evals_.size(); ++i)
      w(i) = std::polar(first_row_(i), -evals_(i) * dt);
    return evecs_.cast<cplx>() * w;
  }

private:
  Eigen::VectorXd evals_;
  Eigen::MatrixXd evecs_;
  Eigen::VectorXd first_row_;
};

void check_inputs(const SparseOperator& h, const StateVector& psi, double t_ns, const KrylovConfig& cfg) {
  cfg.validate();
  if (h.dim() != psi.dim()) throw std::invalid_argument("evolve: operator/state dimension mismatch");
  if (!(t_ns >= 0.0) || !std::isfinite(t_ns)) throw std::invalid_argument("evolve: time must be finite and >= 0");
}

} // namespace

void KrylovConfig::validate() const {
  if (m_min < 2 || m_min > m_max || m_max > 64)
    throw std::invalid_argument("KrylovConfig: need 2 <= m_min <= m_max <= 64");
  if (!(tol > 0.0)) throw std::invalid_argument("KrylovConfig: tol must be > 0");
  if (!(step_ns > 0.0) || !(min_step_ns > 0.0)) throw std::invalid_argument("KrylovConfig: steps must be > 0");
}

StateVector evolve(const SparseOperator& h, const StateVector& psi, double t_ns, const KrylovConfig& cfg,
                   PropagationStats* stats) {
  check_inputs(h, psi, t_ns, cfg);
  if (!h.hermitian()) throw std::invalid_argument("evolve: Hamiltonian is not flagged Hermitian");
  StateVector cur = psi;
  if (t_ns == 0.0) return cur;
  const double norm0 = cur.normalize();
  const std::size_t dim = cur.dim();
  const int m_max = static_cast<int>(std::min<std::size_t>(cfg.m_max, dim));
  const int m_min = std::min(cfg.m_min, m_max);

  std::vector<std::vector<cplx>> v(static_cast<std::size_t>(m_max) + 1);
  std::vector<cplx> w(dim);
  std::vector<double> alpha(m_max + 1), beta(m_max + 1);
  PropagationStats local;

  double remaining = t_ns;
  while (remaining > 0.0) {
    double dt = std::min(cfg.step_ns, remaining);
    v[0].assign(cur.amplitudes().begin(), cur.amplitudes().end());
    beta[0] = 0.0;
    Eigen::VectorXcd coeff;
    int m = 0;
    for (int j = 0; j < m_max; ++j) {
      h.apply(v[j], w);
      ++local.matvecs;
      alpha[j] = dot(v[j], w).real();
      axpy(-alpha[j], v[j], w);
      if (j > 0) axpy(-beta[j], v[j - 1], w);
      beta[j + 1] = std::sqrt(norm_squared(w));
      m = j + 1;
      const bool breakdown = beta[j + 1] < 1e-14;
      if (m < m_min && !breakdown) {
        v[j + 1].assign(w.begin(), w.end());
        scale(1.0 / beta[j + 1], v[j + 1]);
        continue;
      }
      TridiagonalExp texp(alpha, beta, m);
      coeff = texp.apply(dt);
      if (breakdown) break;
      double err = beta[j + 1] * std::abs(coeff(m - 1));
      if (err < cfg.tol) break;
      if (m == m_max) {
        while (err >= cfg.tol) {
          dt *= 0.5;
          ++local.halvings;
          if (dt < cfg.min_step_ns)
            throw ConvergenceError("evolve: Krylov error target not met at the minimum substep");
          coeff = texp.apply(dt);
          err = beta[j + 1] * std::abs(coeff(m - 1));
        }
        break;
      }
      v[j + 1].assign(w.begin(), w.end());
      scale(1.0 / beta[j + 1], v[j + 1]);
    }
    auto out = cur.amplitudes();
    std::fill(out.begin(), out.end(), cplx{0.0, 0.0});
    for (int i = 0; i < m; ++i) axpy(coeff(i), v[i], out);
    cur.normalize();
    remaining -= dt;
    ++local.substeps;
  }
  if (norm0 != 1.0) scale(norm0, cur.amplitudes());
  if (stats) *stats = local;
  return cur;
}

StateVector evolve_general(const SparseOperator& g, const StateVector& psi, double t_ns,
                           const KrylovConfig& cfg, PropagationStats* stats) {
  check_inputs(g, psi, t_ns, cfg);
  StateVector cur = psi;
  if (t_ns == 0.0) return cur;
  const std::size_t dim = cur.dim();
  const int m_max = static_cast<int>(std::min<std::size_t>(cfg.m_max, dim));
  const int m_min = std::min(cfg.m_min, m_max);

  std::vector<std::vector<cplx>> v(static_cast<std::size_t>(m_max) + 1);
  std::vector<cplx> w(dim);
  Eigen::MatrixXcd hess(m_max + 1, m_max);
  PropagationStats local;

  double remaining = t_ns;
  while (remaining > 0.0) {
    double dt = std::min(cfg.step_ns, remaining);
    const double s = cur.norm();
    if (s == 0.0) throw ConvergenceError("evolve_general: zero-norm state");
    v[0].assign(cur.amplitudes().begin(), cur.amplitudes().end());
    scale(1.0 / s, v[0]);
    hess.setZero();
    Eigen::VectorXcd coeff;
    int m = 0;
    auto small_exp = [&](int mm, double tau) -> Eigen::VectorXcd {
      Eigen::MatrixXcd a = hess.topLeftCorner(mm, mm) * cplx(0.0, -tau);
      Eigen::MatrixXcd e = a.exp();
      return e.col(0);
    };
    for (int j = 0; j < m_max; ++j) {
      g.apply(v[j], w);
      ++local.matvecs;
      for (int pass = 0; pass < 2; ++pass) {
        for (int i = 0; i <= j; ++i) {
          const cplx hij = dot(v[i], w);
          hess(i, j) += hij;
          axpy(-hij, v[i], w);
        }
      }
      const double hnext = std::sqrt(norm_squared(w));
      hess(j + 1, j) = hnext;
      m = j + 1;
      const bool breakdown = hnext < 1e-14;
      if (m < m_min && !breakdown) {
        v[j + 1].assign(w.begin(), w.end());
        scale(1.0 / hnext, v[j + 1]);
        continue;
      }
      coeff = small_exp(m, dt);
      if (breakdown) break;
      double err = hnext * std::abs(coeff(m - 1));
      if (err < cfg.tol) break;
      if (m == m_max) {
        while (err >= cfg.tol) {
          dt *= 0.5;
          ++local.halvings;
          if (dt < cfg.min_step_ns)
            throw ConvergenceError("evolve_general: Krylov error target not met at the minimum substep");
          coeff = small_exp(m, dt);
          err = hnext * std::abs(coeff(m - 1));
        }
        break;
      }
      v[j + 1].assign(w.begin(), w.end());
      scale(1.0 / hnext, v[j + 1]);
    }
    auto out = cur.amplitudes();
    std::fill(out.begin(), out.end(), cplx{0.0, 0.0});
    for (int i = 0; i < m; ++i) axpy(s * coeff(i), v[i], out);
    remaining -= dt;
    ++local.substeps;
  }
  if (stats) *stats = local;
  return cur;
}

StateVector dense_evolve(const SparseOperator& h, const StateVector& psi, double t_ns) {
  if (h.dim() > 4096) throw DimensionError("dense_evolve: dimension above 4096");
  if (h.dim() != psi.dim()) throw std::invalid_argument("dense_evolve: dimension mismatch");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h.to_dense());
  const auto n = static_cast<Eigen::Index>(psi.dim());
  Eigen::VectorXcd x(n);
  for (Eigen::Index k = 0; k < n; ++k) x(k) = psi[static_cast<std::size_t>(k)];
  Eigen::VectorXcd y = es.eigenvectors().adjoint() * x;
  for (Eigen::Index k = 0; k < n; ++k) y(k) *= std::polar(1.0, -es.eigenvalues()(k) * t_ns);
  Eigen::VectorXcd z = es.eigenvectors() * y;
  StateVector out(psi.dim());
  for (Eigen::Index k = 0; k < n; ++k) out[static_cast<std::size_t>(k)] = z(k);
  return out;
}

void evolve_on_grid(const SparseOperator& h, StateVector psi, std::span<const double> times,
                    const KrylovConfig& cfg,
                    const std::function<void(std::size_t, const StateVector&)>& visit) {
  double now = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < now) throw std::invalid_argument("evolve_on_grid: times must be non-decreasing and >= 0");
    psi = evolve(h, psi, times[i] - now, cfg);
    now = times[i];
    visit(i, psi);
  }
}

double expect_z(const StateVector& psi, int site) {
  if (site < 0 || (site < 63 && (std::size_t{1} << site) >= psi.dim() && psi.dim() > 1))
    throw std::out_of_range("expect_z: site outside the register");
  double acc = 0.0;
  for (Basis k = 0; k < psi.dim(); ++k) {
    const double p = std::norm(psi[k]);
    acc += ((k >> site) & 1u) ? -p : p;
  }
  return acc / psi.norm_squared();
}

} // namespace spinflow
