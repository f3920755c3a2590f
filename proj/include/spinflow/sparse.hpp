#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

#include "spinflow/types.hpp"

namespace spinflow {

/// Immutable row-compressed complex operator on a D-dimensional basis.
///
/// Rows are sorted by column, carry no explicit zeros, and duplicate
/// entries pushed while building are summed. Instances are safe for
/// concurrent read-only use.
class SparseOperator {
public:
  class Builder;

  SparseOperator() = default;

  static SparseOperator zero(std::size_t dim, bool hermitian = true);
  static SparseOperator diagonal(std::span<const double> diag);

  std::size_t dim() const { return dim_; }
  std::size_t nnz() const { return values_.size(); }
  bool hermitian() const { return hermitian_; }

  std::span<const std::uint32_t> row_columns(std::size_t r) const {
    return {columns_.data() + row_ptr_[r], columns_.data() + row_ptr_[r + 1]};
  }
  std::span<const cplx> row_values(std::size_t r) const {
    return {values_.data() + row_ptr_[r], values_.data() + row_ptr_[r + 1]};
  }

  /// Matrix element (r, c); zero when not stored.
  cplx element(std::size_t r, std::size_t c) const;

  /// out = A * in. Rows are independent, so the result does not depend
  /// on the number of threads.
  void apply(std::span<const cplx> in, std::span<cplx> out) const;

  /// Sum of two operators of equal dimension. The result is flagged
  /// hermitian only if both operands are.
  SparseOperator operator+(const SparseOperator& other) const;

  /// Copy with every value multiplied by `s`; hermitian iff s is real and
  /// this operator is.
  SparseOperator scaled(cplx s) const;

  /// Marks the operator non-Hermitian, e.g. for effective generators.
  SparseOperator with_hermitian_flag(bool flag) const;

  /// max |A_rc - conj(A_cr)| over `samples` random rows (all rows when
  /// the dimension is at most `samples`).
  double hermiticity_defect(std::size_t samples = 256, std::uint64_t seed = 1) const;

  Eigen::MatrixXcd to_dense() const;

private:
  std::size_t dim_ = 0;
  bool hermitian_ = true;
  std::vector<std::uint64_t> row_ptr_{0};
  std::vector<std::uint32_t> columns_;
  std::vector<cplx> values_;
};

/// Row-at-a-time construction: push entries for the current row, then
/// call end_row(). Rows must be completed in increasing order.
class SparseOperator::Builder {
public:
  explicit Builder(std::size_t dim, bool hermitian = true);

  void add(std::size_t column, cplx value) { scratch_.push_back({column, value}); }
  void end_row();
  SparseOperator finish() &&;

private:
  struct Entry {
    std::size_t column;
    cplx value;
  };
  SparseOperator op_;
  std::vector<Entry> scratch_;
  std::size_t rows_done_ = 0;
};

} // namespace spinflow
