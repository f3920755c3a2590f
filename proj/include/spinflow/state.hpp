#pragma once

#include <span>
#include <vector>

#include "spinflow/types.hpp"

namespace spinflow {

/// Complex amplitude vector over the computational basis.
class StateVector {
public:
  StateVector() = default;
  explicit StateVector(std::size_t dim) : amp_(dim) {}
  explicit StateVector(std::vector<cplx> amplitudes) : amp_(std::move(amplitudes)) {}

  static StateVector basis(std::size_t dim, Basis index);

  std::size_t dim() const { return amp_.size(); }
  std::span<cplx> amplitudes() { return amp_; }
  std::span<const cplx> amplitudes() const { return amp_; }
  cplx& operator[](std::size_t k) { return amp_[k]; }
  const cplx& operator[](std::size_t k) const { return amp_[k]; }

  double norm() const;
  double norm_squared() const;
  /// Scales to unit norm; returns the norm before scaling.
  double normalize();

  /// |psi_k|^2 for every k.
  std::vector<double> probabilities() const;

private:
  std::vector<cplx> amp_;
};

// Deterministic reductions: fixed-size blocks are summed independently and
// then combined in block order, so results never depend on thread count.
cplx dot(std::span<const cplx> a, std::span<const cplx> b);
double norm_squared(std::span<const cplx> a);

/// Inner product <a|b>.
inline cplx dot(const StateVector& a, const StateVector& b) {
  return dot(a.amplitudes(), b.amplitudes());
}

/// Expectation of a diagonal observable, normalised by <psi|psi>.
double expect_diagonal(const StateVector& psi, std::span<const double> diag);

/// Occupation digit of `site` in basis index `k` (little-endian base `local_dim`).
inline int occupation(Basis k, int site, int local_dim) {
  if (local_dim == 2) return static_cast<int>((k >> site) & 1u);
  for (int s = 0; s < site; ++s) k /= static_cast<Basis>(local_dim);
  return static_cast<int>(k % static_cast<Basis>(local_dim));
}

/// Inserts an empty site at position `site` into a state over `n_sites - 1`
/// sites, i.e. returns |0>_site (x) psi in the n_sites basis ordering.
StateVector embed_vacancy(const StateVector& psi, int site, int n_sites, int local_dim = 2);

} // namespace spinflow
