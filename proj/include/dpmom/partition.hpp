#ifndef DPMOM_PARTITION_HPP
#define DPMOM_PARTITION_HPP

#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

#include "dpmom/core.hpp"
#include "dpmom/error.hpp"
#include "dpmom/mom.hpp"
#include "dpmom/rng.hpp"

namespace dpmom {

namespace detail {

// permutation cut into near-equal blocks; accepts any 1 <= L <= n
inline BucketPartition permutation_fill(std::size_t n, std::size_t buckets,
                                        Rng& rng) {
  check_contract(buckets >= 1 && buckets <= n,
                 "permutation_fill: need 1 <= L <= n");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm);
  const auto sizes = near_equal_sizes(n, buckets);
  std::vector<std::vector<std::size_t>> blocks;
  blocks.reserve(buckets);
  std::size_t at = 0;
  for (std::size_t sz : sizes) {
    blocks.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(at),
                        perm.begin() + static_cast<std::ptrdiff_t>(at + sz));
    at += sz;
  }
  return {std::move(blocks)};
}

// Fill buckets one at a time. Within a bucket the first member is uniform
// over the remaining pool and each later member is drawn with probability
// proportional to its squared distance to the nearest member already chosen
// for that bucket; chosen points leave the pool before the next bucket
// starts. If every remaining point coincides with a chosen one (zero total
// weight) the draw falls back to uniform.
inline BucketPartition kmeanspp_fill(const DataMatrix& data,
                                     std::size_t buckets, Rng& rng) {
  const std::size_t n = data.rows();
  check_contract(buckets >= 1 && buckets <= n,
                 "kmeanspp_fill: need 1 <= L <= n");
  const auto sizes = near_equal_sizes(n, buckets);

  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  std::vector<double> mind2(n, 0.0);  // indexed parallel to pool

  std::vector<std::vector<std::size_t>> blocks;
  blocks.reserve(buckets);
  for (std::size_t sz : sizes) {
    std::vector<std::size_t> block;
    block.reserve(sz);
    for (std::size_t m = 0; m < sz; ++m) {
      std::size_t pick_pos;
      if (m == 0) {
        pick_pos = rng.below(pool.size());
      } else {
        double total = 0.0;
        for (std::size_t t = 0; t < pool.size(); ++t) total += mind2[t];
        if (total > 0.0) {
          pick_pos = rng.weighted_index(
              std::span<const double>(mind2.data(), pool.size()), total);
        } else {
          pick_pos = rng.below(pool.size());
        }
      }
      const std::size_t chosen = pool[pick_pos];
      block.push_back(chosen);
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick_pos));
      mind2.erase(mind2.begin() + static_cast<std::ptrdiff_t>(pick_pos));
      if (m == 0) {
        for (std::size_t t = 0; t < pool.size(); ++t) {
          mind2[t] = sq_euclidean(data.row(pool[t]), data.row(chosen));
        }
      } else {
        for (std::size_t t = 0; t < pool.size(); ++t) {
          const double d = sq_euclidean(data.row(pool[t]), data.row(chosen));
          if (d < mind2[t]) mind2[t] = d;
        }
      }
    }
    blocks.push_back(std::move(block));
  }
  return {std::move(blocks)};
}

}  // namespace detail

// Uniform random permutation of {0..n-1} cut into L near-equal blocks.
inline BucketPartition random_buckets(std::size_t n, std::size_t buckets,
                                      Rng& rng) {
  check_contract(buckets > 2 && buckets <= n,
                 "random_buckets: need 2 < L <= n");
  return detail::permutation_fill(n, buckets, rng);
}

// Representative buckets via k-means++-style filling (squared-distance
// weights against the picks already in the current bucket).
inline BucketPartition kmeanspp_buckets(const DataMatrix& data,
                                        std::size_t buckets, Rng& rng) {
  check_contract(buckets > 2 && buckets <= data.rows(),
                 "kmeanspp_buckets: need 2 < L <= n");
  return detail::kmeanspp_fill(data, buckets, rng);
}

}  // namespace dpmom

#endif  // DPMOM_PARTITION_HPP
