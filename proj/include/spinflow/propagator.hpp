#pragma once

#include <functional>
#include <span>

#include "spinflow/model.hpp"
#include "spinflow/sparse.hpp"
#include "spinflow/state.hpp"

namespace spinflow {

/// Adaptive Krylov settings. Within each substep the subspace grows from
/// m_min until the residual estimate drops below `tol` or m_max is hit;
/// in the latter case the substep is halved.
struct KrylovConfig {
  int m_min = 6;
  int m_max = 30;
  double step_ns = 5.0;
  double tol = 1e-12;
  double min_step_ns = 1e-7;

  void validate() const;
};

struct PropagationStats {
  std::size_t substeps = 0;
  std::size_t matvecs = 0;
  std::size_t halvings = 0;
};

/// e^{-iHt} psi by Lanczos. Renormalises after every substep.
/// Throws std::invalid_argument for a non-Hermitian H or mismatched
/// dimensions, ConvergenceError when the minimum substep is reached.
StateVector evolve(const SparseOperator& h, const StateVector& psi, double t_ns,
                   const KrylovConfig& cfg = {}, PropagationStats* stats = nullptr);

/// e^{-iGt} psi for a general (non-Hermitian) generator via Arnoldi.
/// The norm is not restored, so decay of <psi|psi> is observable.
StateVector evolve_general(const SparseOperator& g, const StateVector& psi, double t_ns,
                           const KrylovConfig& cfg = {}, PropagationStats* stats = nullptr);

/// Exact e^{-iHt} psi from a dense eigendecomposition. D <= 4096.
StateVector dense_evolve(const SparseOperator& h, const StateVector& psi, double t_ns);

/// Evolves through an increasing time grid, calling `visit(i, psi(t_i))`
/// at every grid point (t_0 may be 0).
void evolve_on_grid(const SparseOperator& h, StateVector psi, std::span<const double> times,
                    const KrylovConfig& cfg,
                    const std::function<void(std::size_t, const StateVector&)>& visit);

/// <psi| sigma^z_site |psi> with sigma^z|0> = +|0>, sigma^z|1> = -|1>.
double expect_z(const StateVector& psi, int site);
inline double expect_z(const StateVector& psi, Site site) { return expect_z(psi, site.index()); }

} // namespace spinflow
