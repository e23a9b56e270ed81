#ifndef DPMOM_MOM_HPP
#define DPMOM_MOM_HPP

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "dpmom/core.hpp"
#include "dpmom/error.hpp"
#include "dpmom/rng.hpp"

namespace dpmom {

// L disjoint index blocks over {0..n-1}, sizes differing by at most one.
struct BucketPartition {
  std::vector<std::vector<std::size_t>> blocks;

  [[nodiscard]] std::size_t bucket_count() const { return blocks.size(); }

  [[nodiscard]] std::size_t total() const {
    std::size_t n = 0;
    for (const auto& b : blocks) n += b.size();
    return n;
  }

  static BucketPartition from_blocks(
      std::vector<std::vector<std::size_t>> blocks, std::size_t n) {
    check_contract(!blocks.empty(), "BucketPartition: no blocks");
    std::vector<char> seen(n, 0);
    std::size_t lo = n + 1, hi = 0, covered = 0;
    for (const auto& b : blocks) {
      check_contract(!b.empty(), "BucketPartition: empty block");
      lo = std::min(lo, b.size());
      hi = std::max(hi, b.size());
      for (std::size_t i : b) {
        check_contract(i < n, "BucketPartition: index out of range");
        check_contract(!seen[i], "BucketPartition: blocks not disjoint");
        seen[i] = 1;
        ++covered;
      }
    }
    check_contract(covered == n, "BucketPartition: blocks do not cover 0..n-1");
    check_contract(hi - lo <= 1, "BucketPartition: block sizes differ by > 1");
    return {std::move(blocks)};
  }

  static BucketPartition single_block(std::size_t n) {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    return {{std::move(all)}};
  }
};

// first (n mod L) blocks take one extra point
inline std::vector<std::size_t> near_equal_sizes(std::size_t n,
                                                 std::size_t buckets) {
  check_contract(buckets >= 1 && buckets <= n,
                 "near_equal_sizes: need 1 <= L <= n");
  const std::size_t base = n / buckets;
  const std::size_t extra = n % buckets;
  std::vector<std::size_t> sizes(buckets, base);
  for (std::size_t j = 0; j < extra; ++j) ++sizes[j];
  return sizes;
}

// lower-middle order statistic: the exact median for odd counts, the smaller
// of the two middle values for even counts
inline double lower_middle(std::vector<double> v) {
  check_contract(!v.empty(), "lower_middle: empty input");
  const std::size_t pos = (v.size() - 1) / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(pos),
                   v.end());
  return v[pos];
}

inline double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// MoM of a scalar sample with a caller-pinned partition.
inline double mom_estimate(std::span<const double> values,
                           const BucketPartition& part) {
  check_contract(part.total() == values.size(),
                 "mom_estimate: partition does not cover the sample");
  std::vector<double> means;
  means.reserve(part.bucket_count());
  for (const auto& block : part.blocks) {
    double s = 0.0;
    for (std::size_t i : block) s += values[i];
    means.push_back(s / static_cast<double>(block.size()));
  }
  return lower_middle(std::move(means));
}

// MoM of a scalar sample: random near-equal blocks, block means, lower-middle
// median of the means.
inline double mom_estimate(std::span<const double> values, std::size_t buckets,
                           Rng& rng) {
  check_contract(!values.empty(), "mom_estimate: empty sample");
  check_contract(buckets >= 1 && buckets <= values.size(),
                 "mom_estimate: need 1 <= L <= n");
  std::vector<std::size_t> perm(values.size());
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm);
  const auto sizes = near_equal_sizes(values.size(), buckets);
  std::vector<double> means;
  means.reserve(buckets);
  std::size_t at = 0;
  for (std::size_t sz : sizes) {
    double s = 0.0;
    for (std::size_t t = 0; t < sz; ++t) s += values[perm[at + t]];
    at += sz;
    means.push_back(s / static_cast<double>(sz));
  }
  return lower_middle(std::move(means));
}

// element j = mean point loss over block j at the given centroids
inline std::vector<double> bucket_objective_means(
    const DataMatrix& data, const BucketPartition& part,
    const CentroidSet& centroids) {
  check_contract(part.total() == data.rows(),
                 "bucket_objective_means: partition does not cover the data");
  std::vector<double> means;
  means.reserve(part.bucket_count());
  for (const auto& block : part.blocks) {
    check_contract(!block.empty(), "bucket_objective_means: empty block");
    double s = 0.0;
    for (std::size_t i : block) s += point_loss(data.row(i), centroids).loss;
    means.push_back(s / static_cast<double>(block.size()));
  }
  return means;
}

// Index of the bucket whose mean is the lower-middle order statistic.
// Ties on the median value go to the lowest bucket index, so the choice is
// deterministic given the partition.
inline std::size_t select_median_bucket(const std::vector<double>& means) {
  check_contract(!means.empty(), "select_median_bucket: empty input");
  const double median = lower_middle(means);
  for (std::size_t j = 0; j < means.size(); ++j) {
    if (means[j] == median) return j;
  }
  return 0;  // unreachable: median is one of the values
}

// h(centroids) = median bucket mean + lambda * k
inline double mom_objective(const DataMatrix& data, const BucketPartition& part,
                            const CentroidSet& centroids, double lambda) {
  check_contract(lambda >= 0.0, "mom_objective: lambda must be nonnegative");
  const auto means = bucket_objective_means(data, part, centroids);
  return means[select_median_bucket(means)] +
         lambda * static_cast<double>(centroids.k());
}

}  // namespace dpmom

#endif  // DPMOM_MOM_HPP
