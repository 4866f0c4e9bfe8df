#include "dmpfem/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dmpfem {

SparsityPattern::SparsityPattern(std::vector<std::size_t> row_offsets, std::vector<int> cols)
    : row_offsets_(std::move(row_offsets)), cols_(std::move(cols)) {
  if (row_offsets_.empty() || row_offsets_.back() != cols_.size()) {
    throw std::invalid_argument("SparsityPattern: inconsistent row offsets");
  }
}

std::shared_ptr<const SparsityPattern> SparsityPattern::adjacency(const Mesh2D& mesh) {
  std::vector<std::size_t> offsets(mesh.num_nodes() + 1, 0);
  std::vector<int> cols;
  for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
    const auto nb = mesh.neighbors(static_cast<int>(i));
    cols.insert(cols.end(), nb.begin(), nb.end());
    offsets[i + 1] = cols.size();
  }
  return std::make_shared<const SparsityPattern>(std::move(offsets), std::move(cols));
}

std::shared_ptr<const SparsityPattern> SparsityPattern::distance_two(const Mesh2D& mesh) {
  std::vector<std::size_t> offsets(mesh.num_nodes() + 1, 0);
  std::vector<int> cols;
  std::vector<int> row;
  for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
    row.clear();
    for (int j : mesh.neighbors(static_cast<int>(i))) {
      const auto nj = mesh.neighbors(j);
      row.insert(row.end(), nj.begin(), nj.end());
    }
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    cols.insert(cols.end(), row.begin(), row.end());
    offsets[i + 1] = cols.size();
  }
  return std::make_shared<const SparsityPattern>(std::move(offsets), std::move(cols));
}

std::ptrdiff_t SparsityPattern::find(std::size_t i, int j) const {
  const auto first = cols_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i]);
  const auto last = cols_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i + 1]);
  const auto it = std::lower_bound(first, last, j);
  if (it == last || *it != j) return -1;
  return it - cols_.begin();
}

double SparseOperator::operator()(std::size_t i, int j) const {
  const auto pos = pattern_->find(i, j);
  return pos < 0 ? 0.0 : values_[static_cast<std::size_t>(pos)];
}

double& SparseOperator::at(std::size_t i, int j) {
  const auto pos = pattern_->find(i, j);
  if (pos < 0) {
    throw std::out_of_range("SparseOperator: entry (" + std::to_string(i) + ", " +
                            std::to_string(j) + ") outside the sparsity pattern");
  }
  return values_[static_cast<std::size_t>(pos)];
}

void SparseOperator::set_identity_row(std::size_t i) {
  for (std::size_t p = pattern_->row_begin(i); p < pattern_->row_end(i); ++p) {
    values_[p] = pattern_->col(p) == static_cast<int>(i) ? 1.0 : 0.0;
  }
}

NodalField SparseOperator::multiply(std::span<const double> x) const {
  if (x.size() != size()) throw std::invalid_argument("SparseOperator::multiply: size mismatch");
  NodalField y(size(), 0.0);
  for (std::size_t i = 0; i < size(); ++i) {
    double s = 0.0;
    for (std::size_t p = pattern_->row_begin(i); p < pattern_->row_end(i); ++p) {
      s += values_[p] * x[pattern_->col(p)];
    }
    y[i] = s;
  }
  return y;
}

double SparseOperator::row_sum(std::size_t i) const {
  double s = 0.0;
  for (std::size_t p = pattern_->row_begin(i); p < pattern_->row_end(i); ++p) s += values_[p];
  return s;
}

double SparseOperator::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

SparseOperator& SparseOperator::operator+=(const SparseOperator& other) {
  if (pattern_ == other.pattern_ || *pattern_ == *other.pattern_) {
    for (std::size_t p = 0; p < values_.size(); ++p) values_[p] += other.values_[p];
    return *this;
  }
  for (std::size_t i = 0; i < other.size(); ++i) {
    for (std::size_t p = other.pattern().row_begin(i); p < other.pattern().row_end(i); ++p) {
      if (other.values_[p] != 0.0) add(i, other.pattern().col(p), other.values_[p]);
    }
  }
  return *this;
}

SparseOperator& SparseOperator::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

Eigen::SparseMatrix<double, Eigen::RowMajor> SparseOperator::to_eigen() const {
  const auto n = static_cast<Eigen::Index>(size());
  Eigen::SparseMatrix<double, Eigen::RowMajor> m(n, n);
  m.reserve(static_cast<Eigen::Index>(values_.size()));
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(values_.size());
  for (std::size_t i = 0; i < size(); ++i) {
    for (std::size_t p = pattern_->row_begin(i); p < pattern_->row_end(i); ++p) {
      trip.emplace_back(static_cast<int>(i), pattern_->col(p), values_[p]);
    }
  }
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

}  // namespace dmpfem
