#pragma once

#include <algorithm>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/SparseCore>

#include "dmpfem/mesh.hpp"

namespace dmpfem {

/// Nodal values of a P1/Q1 function, one per mesh node.
using NodalField = std::vector<double>;

/// Compressed-row sparsity pattern with sorted column indices per row.
class SparsityPattern {
 public:
  SparsityPattern(std::vector<std::size_t> row_offsets, std::vector<int> cols);

  /// Entry (i, j) present iff j is in N_i.
  static std::shared_ptr<const SparsityPattern> adjacency(const Mesh2D& mesh);
  /// Entry (i, j) present iff j is reachable from i in at most two adjacency hops.
  static std::shared_ptr<const SparsityPattern> distance_two(const Mesh2D& mesh);

  std::size_t rows() const { return row_offsets_.size() - 1; }
  std::size_t nnz() const { return cols_.size(); }
  std::size_t row_begin(std::size_t i) const { return row_offsets_[i]; }
  std::size_t row_end(std::size_t i) const { return row_offsets_[i + 1]; }
  std::span<const int> row(std::size_t i) const {
    return {cols_.data() + row_offsets_[i], row_offsets_[i + 1] - row_offsets_[i]};
  }
  int col(std::size_t pos) const { return cols_[pos]; }
  /// Storage position of (i, j), or -1 when the entry is not in the pattern.
  std::ptrdiff_t find(std::size_t i, int j) const;

  bool operator==(const SparsityPattern& other) const {
    return row_offsets_ == other.row_offsets_ && cols_ == other.cols_;
  }

 private:
  std::vector<std::size_t> row_offsets_;
  std::vector<int> cols_;
};

/// Square sparse matrix on a fixed pattern. Copies share the pattern.
class SparseOperator {
 public:
  SparseOperator() = default;
  explicit SparseOperator(std::shared_ptr<const SparsityPattern> pattern)
      : pattern_(std::move(pattern)), values_(pattern_->nnz(), 0.0) {}

  const SparsityPattern& pattern() const { return *pattern_; }
  const std::shared_ptr<const SparsityPattern>& pattern_ptr() const { return pattern_; }
  std::size_t size() const { return pattern_ ? pattern_->rows() : 0; }

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }
  double value_at(std::size_t pos) const { return values_[pos]; }

  /// Zero when (i, j) is outside the pattern.
  double operator()(std::size_t i, int j) const;
  /// Throws std::out_of_range when (i, j) is outside the pattern.
  double& at(std::size_t i, int j);
  void add(std::size_t i, int j, double v) { at(i, j) += v; }

  void set_zero() { std::fill(values_.begin(), values_.end(), 0.0); }
  /// Replace row i by the identity row.
  void set_identity_row(std::size_t i);

  NodalField multiply(std::span<const double> x) const;
  double row_sum(std::size_t i) const;
  double max_abs() const;

  SparseOperator& operator+=(const SparseOperator& other);
  SparseOperator& operator*=(double s);

  Eigen::SparseMatrix<double, Eigen::RowMajor> to_eigen() const;

 private:
  std::shared_ptr<const SparsityPattern> pattern_;
  std::vector<double> values_;
};

}  // namespace dmpfem
