#ifndef DPMOM_CORE_HPP
#define DPMOM_CORE_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dpmom/error.hpp"
#include "dpmom/rng.hpp"

namespace dpmom {

// n x p observations, row major. Immutable after construction.
class DataMatrix {
 public:
  DataMatrix() = default;

  DataMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
      : rows_(rows), cols_(cols), values_(std::move(values)) {
    check_contract(rows_ >= 1 && cols_ >= 1,
                   "DataMatrix: need at least one row and one column");
    check_contract(values_.size() == rows_ * cols_,
                   "DataMatrix: value count does not match shape");
    for (double v : values_) {
      check(std::isfinite(v), ErrorCode::NumericFault,
            "DataMatrix: non-finite entry");
    }
  }

  static DataMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    check_contract(!rows.empty(), "DataMatrix: no rows");
    const std::size_t cols = rows.front().size();
    std::vector<double> values;
    values.reserve(rows.size() * cols);
    for (const auto& r : rows) {
      check_contract(r.size() == cols, "DataMatrix: ragged rows");
      values.insert(values.end(), r.begin(), r.end());
    }
    return {rows.size(), cols, std::move(values)};
  }

  [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t cols() const noexcept { return cols_; }

  [[nodiscard]] std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * cols_, cols_};
  }

  [[nodiscard]] const std::vector<double>& values() const noexcept {
    return values_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

// Ordered list of k centroids in R^p.
class CentroidSet {
 public:
  explicit CentroidSet(std::size_t dim = 0) : dim_(dim) {}

  static CentroidSet from_rows(const std::vector<std::vector<double>>& rows) {
    check_contract(!rows.empty(), "CentroidSet: need at least one centroid");
    CentroidSet c(rows.front().size());
    for (const auto& r : rows) c.push_back(r);
    return c;
  }

  [[nodiscard]] std::size_t k() const noexcept {
    return dim_ == 0 ? 0 : values_.size() / dim_;
  }
  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }

  [[nodiscard]] std::span<const double> row(std::size_t j) const {
    return {values_.data() + j * dim_, dim_};
  }
  [[nodiscard]] std::span<double> mutable_row(std::size_t j) {
    return {values_.data() + j * dim_, dim_};
  }

  void push_back(std::span<const double> point) {
    check_contract(point.size() == dim_,
                   "CentroidSet: centroid dimension mismatch");
    values_.insert(values_.end(), point.begin(), point.end());
  }

  // drop all centroids not listed in keep (indices in increasing order)
  void keep_only(const std::vector<std::size_t>& keep) {
    std::vector<double> next;
    next.reserve(keep.size() * dim_);
    for (std::size_t j : keep) {
      auto r = row(j);
      next.insert(next.end(), r.begin(), r.end());
    }
    values_ = std::move(next);
  }

  [[nodiscard]] bool all_finite() const {
    for (double v : values_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  [[nodiscard]] std::vector<std::vector<double>> to_rows() const {
    std::vector<std::vector<double>> out(k());
    for (std::size_t j = 0; j < k(); ++j) {
      auto r = row(j);
      out[j].assign(r.begin(), r.end());
    }
    return out;
  }

 private:
  std::size_t dim_;
  std::vector<double> values_;
};

// Cluster label per observation, 0-based. File formats use 1-based ids with
// 0 reserved for the outlier sentinel; the conversion happens at the I/O
// boundary.
using Assignment = std::vector<std::uint32_t>;

struct PointLoss {
  double loss;
  std::size_t index;  // argmin centroid, ties broken by lowest index
};

inline double sq_euclidean(std::span<const double> x,
                           std::span<const double> y) {
  check_contract(x.size() == y.size(), "sq_euclidean: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    s += d * d;
  }
  return s;
}

inline PointLoss point_loss(std::span<const double> x, const CentroidSet& c) {
  check_contract(c.k() >= 1, "point_loss: empty centroid set");
  PointLoss best{sq_euclidean(x, c.row(0)), 0};
  for (std::size_t j = 1; j < c.k(); ++j) {
    const double l = sq_euclidean(x, c.row(j));
    if (l < best.loss) best = {l, j};
  }
  return best;
}

inline double empirical_objective(const DataMatrix& data,
                                  const CentroidSet& centroids) {
  check_contract(data.rows() >= 1, "empirical_objective: empty data");
  double s = 0.0;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    s += point_loss(data.row(i), centroids).loss;
  }
  return s / static_cast<double>(data.rows());
}

inline std::vector<double> grand_mean(const DataMatrix& data) {
  std::vector<double> m(data.cols(), 0.0);
  for (std::size_t i = 0; i < data.rows(); ++i) {
    auto r = data.row(i);
    for (std::size_t j = 0; j < data.cols(); ++j) m[j] += r[j];
  }
  for (double& v : m) v /= static_cast<double>(data.rows());
  return m;
}

}  // namespace dpmom

#endif  // DPMOM_CORE_HPP
