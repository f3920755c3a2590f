#include "spinflow/state.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace spinflow {

namespace {

constexpr std::size_t kBlock = 4096;

template <class T, class F>
T blocked_sum(std::size_t n, F&& term) {
  const std::size_t n_blocks = (n + kBlock - 1) / kBlock;
  std::vector<T> partial(n_blocks, T{});
  const auto nb = static_cast<std::int64_t>(n_blocks);
#pragma omp parallel for schedule(static) if (nb > 4)
  for (std::int64_t b = 0; b < nb; ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kBlock;
    const std::size_t hi = std::min(n, lo + kBlock);
    T acc{};
    for (std::size_t k = lo; k < hi; ++k) acc += term(k);
    partial[static_cast<std::size_t>(b)] = acc;
  }
  T total{};
  for (const T& p : partial) total += p;
  return total;
}

} // namespace

cplx dot(std::span<const cplx> a, std::span<const cplx> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: dimension mismatch");
  return blocked_sum<cplx>(a.size(), [&](std::size_t k) { return std::conj(a[k]) * b[k]; });
}

double norm_squared(std::span<const cplx> a) {
  return blocked_sum<double>(a.size(), [&](std::size_t k) { return std::norm(a[k]); });
}

StateVector StateVector::basis(std::size_t dim, Basis index) {
  if (index >= dim) throw std::out_of_range("StateVector::basis: index outside the space");
  StateVector s(dim);
  s[index] = 1.0;
  return s;
}

double StateVector::norm_squared() const { return spinflow::norm_squared(amp_); }
double StateVector::norm() const { return std::sqrt(norm_squared()); }

double StateVector::normalize() {
  const double n = norm();
  if (n == 0.0) throw std::domain_error("StateVector::normalize: zero vector");
  const double inv = 1.0 / n;
  for (auto& a : amp_) a *= inv;
  return n;
}

std::vector<double> StateVector::probabilities() const {
  std::vector<double> p(amp_.size());
  std::transform(amp_.begin(), amp_.end(), p.begin(), [](cplx a) { return std::norm(a); });
  return p;
}

double expect_diagonal(const StateVector& psi, std::span<const double> diag) {
  if (diag.size() != psi.dim()) throw std::invalid_argument("expect_diagonal: dimension mismatch");
  auto amp = psi.amplitudes();
  const double num = blocked_sum<double>(amp.size(), [&](std::size_t k) { return std::norm(amp[k]) * diag[k]; });
  return num / psi.norm_squared();
}

StateVector embed_vacancy(const StateVector& psi, int site, int n_sites, int local_dim) {
  if (site < 0 || site >= n_sites) throw std::out_of_range("embed_vacancy: site out of range");
  Basis low_span = 1;
  for (int s = 0; s < site; ++s) low_span *= static_cast<Basis>(local_dim);
  const std::size_t full_dim = psi.dim() * static_cast<std::size_t>(local_dim);
  StateVector out(full_dim);
  for (Basis k = 0; k < psi.dim(); ++k) {
    const Basis lo = k % low_span;
    const Basis hi = k / low_span;
    out[hi * low_span * static_cast<Basis>(local_dim) + lo] = psi[k];
  }
  return out;
}

} // namespace spinflow
