#include "spinflow/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace spinflow {

SparseOperator::Builder::Builder(std::size_t dim, bool hermitian) {
  op_.dim_ = dim;
  op_.hermitian_ = hermitian;
  op_.row_ptr_.reserve(dim + 1);
}

void SparseOperator::Builder::end_row() {
  std::sort(scratch_.begin(), scratch_.end(),
            [](const Entry& a, const Entry& b) { return a.column < b.column; });
  for (std::size_t i = 0; i < scratch_.size();) {
    std::size_t col = scratch_[i].column;
    cplx sum = 0.0;
    for (; i < scratch_.size() && scratch_[i].column == col; ++i) sum += scratch_[i].value;
    if (sum != cplx{0.0, 0.0}) {
      op_.columns_.push_back(static_cast<std::uint32_t>(col));
      op_.values_.push_back(sum);
    }
  }
  op_.row_ptr_.push_back(op_.values_.size());
  scratch_.clear();
  ++rows_done_;
}

SparseOperator SparseOperator::Builder::finish() && {
  while (rows_done_ < op_.dim_) end_row();
  return std::move(op_);
}

SparseOperator SparseOperator::zero(std::size_t dim, bool hermitian) {
  return Builder(dim, hermitian).finish();
}

SparseOperator SparseOperator::diagonal(std::span<const double> diag) {
  Builder b(diag.size());
  for (std::size_t r = 0; r < diag.size(); ++r) {
    b.add(r, diag[r]);
    b.end_row();
  }
  return std::move(b).finish();
}

cplx SparseOperator::element(std::size_t r, std::size_t c) const {
  auto cols = row_columns(r);
  auto it = std::lower_bound(cols.begin(), cols.end(), static_cast<std::uint32_t>(c));
  if (it == cols.end() || *it != c) return 0.0;
  return values_[row_ptr_[r] + static_cast<std::size_t>(it - cols.begin())];
}

void SparseOperator::apply(std::span<const cplx> in, std::span<cplx> out) const {
  const auto n = static_cast<std::int64_t>(dim_);
  const cplx* x = in.data();
  cplx* y = out.data();
#pragma omp parallel for schedule(static) if (n > 16384)
  for (std::int64_t r = 0; r < n; ++r) {
    cplx acc = 0.0;
    for (std::uint64_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) acc += values_[k] * x[columns_[k]];
    y[r] = acc;
  }
}

SparseOperator SparseOperator::operator+(const SparseOperator& other) const {
  if (other.dim_ != dim_) throw std::invalid_argument("SparseOperator: dimension mismatch in sum");
  Builder b(dim_, hermitian_ && other.hermitian_);
  for (std::size_t r = 0; r < dim_; ++r) {
    auto c1 = row_columns(r);
    auto v1 = row_values(r);
    for (std::size_t i = 0; i < c1.size(); ++i) b.add(c1[i], v1[i]);
    auto c2 = other.row_columns(r);
    auto v2 = other.row_values(r);
    for (std::size_t i = 0; i < c2.size(); ++i) b.add(c2[i], v2[i]);
    b.end_row();
  }
  return std::move(b).finish();
}

SparseOperator SparseOperator::scaled(cplx s) const {
  SparseOperator out = *this;
  if (s == cplx{0.0, 0.0}) return zero(dim_, hermitian_);
  for (auto& v : out.values_) v *= s;
  out.hermitian_ = hermitian_ && s.imag() == 0.0;
  return out;
}

SparseOperator SparseOperator::with_hermitian_flag(bool flag) const {
  SparseOperator out = *this;
  out.hermitian_ = flag;
  return out;
}

double SparseOperator::hermiticity_defect(std::size_t samples, std::uint64_t seed) const {
  double worst = 0.0;
  auto check_row = [&](std::size_t r) {
    auto cols = row_columns(r);
    auto vals = row_values(r);
    for (std::size_t i = 0; i < cols.size(); ++i) {
      worst = std::max(worst, std::abs(vals[i] - std::conj(element(cols[i], r))));
    }
  };
  if (dim_ <= samples) {
    for (std::size_t r = 0; r < dim_; ++r) check_row(r);
  } else {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, dim_ - 1);
    for (std::size_t s = 0; s < samples; ++s) check_row(pick(rng));
  }
  return worst;
}

Eigen::MatrixXcd SparseOperator::to_dense() const {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(dim_),
                                              static_cast<Eigen::Index>(dim_));
  for (std::size_t r = 0; r < dim_; ++r) {
    auto cols = row_columns(r);
    auto vals = row_values(r);
    for (std::size_t i = 0; i < cols.size(); ++i)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(cols[i])) = vals[i];
  }
  return m;
}

} // namespace spinflow
