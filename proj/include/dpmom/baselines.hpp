#ifndef DPMOM_BASELINES_HPP
#define DPMOM_BASELINES_HPP

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "dpmom/core.hpp"
#include "dpmom/dp_mom.hpp"
#include "dpmom/error.hpp"
#include "dpmom/rng.hpp"

namespace dpmom {

namespace detail {

// recompute each centroid as the mean of its members; empty clusters are
// dropped and labels compacted
inline void mean_update(const DataMatrix& data, CentroidSet& centroids,
                        Assignment& labels) {
  const std::size_t k = centroids.k();
  const std::size_t p = centroids.dim();
  std::vector<double> sums(k * p, 0.0);
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < data.rows(); ++i) {
    auto x = data.row(i);
    double* s = sums.data() + labels[i] * p;
    for (std::size_t d = 0; d < p; ++d) s[d] += x[d];
    ++counts[labels[i]];
  }
  std::vector<std::size_t> keep;
  std::vector<std::uint32_t> remap(k, 0);
  for (std::size_t j = 0; j < k; ++j) {
    if (counts[j] == 0) continue;
    remap[j] = static_cast<std::uint32_t>(keep.size());
    keep.push_back(j);
    auto theta = centroids.mutable_row(j);
    for (std::size_t d = 0; d < p; ++d) {
      theta[d] = sums[j * p + d] / static_cast<double>(counts[j]);
    }
  }
  if (keep.size() != k) {
    centroids.keep_only(keep);
    for (auto& l : labels) l = remap[l];
  }
}

inline double sum_objective(const DataMatrix& data,
                            const CentroidSet& centroids) {
  double s = 0.0;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    s += point_loss(data.row(i), centroids).loss;
  }
  return s;
}

}  // namespace detail

// Hard-clustering sweep with spawn threshold lambda on the squared distance,
// followed by a mean update; iterates until the penalized sum objective
// stabilizes. The objective here sums distances (it is not averaged), so
// lambda values are not on the same scale as the MoM objective's.
inline ClusteringResult dp_means(const DataMatrix& data, double lambda,
                                 std::size_t t_max = 200, double delta = 1e-4) {
  check_contract(lambda >= 0.0, "dp_means: lambda must be >= 0");
  check_contract(t_max >= 1, "dp_means: t_max must be >= 1");

  CentroidSet centroids(data.cols());
  centroids.push_back(grand_mean(data));
  Assignment labels(data.rows(), 0);

  ClusteringResult result;
  result.algorithm = "dpmeans";
  result.config = {{"lambda", lambda},
                   {"t_max", static_cast<double>(t_max)},
                   {"delta", delta}};

  double prev = 0.0;
  for (std::size_t t = 1; t <= t_max; ++t) {
    auto [swept, grown] = assign_and_spawn(data, std::move(centroids), lambda);
    labels = std::move(swept);
    centroids = std::move(grown);
    detail::mean_update(data, centroids, labels);
    const double obj = detail::sum_objective(data, centroids) +
                       lambda * static_cast<double>(centroids.k());
    result.objective_trace.push_back(obj);
    result.iterations = t;
    if (obj == 0.0 || (t > 1 && std::abs(obj / prev - 1.0) <= delta)) {
      result.converged = true;
      break;
    }
    prev = obj;
  }

  result.labels = assign_only(data, centroids);
  result.centroids = std::move(centroids);
  result.k = result.centroids.k();
  return result;
}

// k seeds: first uniform, the rest weighted by the squared distance to the
// nearest seed so far
inline CentroidSet kmeans_pp_seed(const DataMatrix& data, std::size_t k,
                                  Rng& rng) {
  const std::size_t n = data.rows();
  check_contract(k >= 1 && k <= n, "kmeans_pp_seed: need 1 <= k <= n");
  CentroidSet seeds(data.cols());
  std::vector<char> chosen(n, 0);
  std::vector<double> mind2(n, 0.0);

  const std::size_t first = rng.below(n);
  seeds.push_back(data.row(first));
  chosen[first] = 1;
  for (std::size_t i = 0; i < n; ++i) {
    mind2[i] = sq_euclidean(data.row(i), data.row(first));
  }

  while (seeds.k() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += mind2[i];
    std::size_t pick;
    if (total > 0.0) {
      pick = rng.weighted_index(mind2, total);
    } else {
      // all remaining points coincide with a seed: uniform over the unchosen
      std::vector<std::size_t> open;
      for (std::size_t i = 0; i < n; ++i) {
        if (!chosen[i]) open.push_back(i);
      }
      pick = open[rng.below(open.size())];
    }
    seeds.push_back(data.row(pick));
    chosen[pick] = 1;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = sq_euclidean(data.row(i), data.row(pick));
      if (d < mind2[i]) mind2[i] = d;
    }
  }
  return seeds;
}

// Classic alternating assignment / mean update from the given seeds. An
// emptied cluster is reseeded to the point farthest from its assigned
// centroid.
inline ClusteringResult lloyd(const DataMatrix& data, const CentroidSet& seeds,
                              std::size_t t_max = 200, double delta = 1e-4) {
  check_contract(seeds.k() >= 1, "lloyd: empty seed set");
  check_contract(seeds.dim() == data.cols(), "lloyd: dimension mismatch");
  const std::size_t n = data.rows();
  const std::size_t k = seeds.k();
  const std::size_t p = seeds.dim();

  CentroidSet centroids = seeds;
  Assignment labels = assign_only(data, centroids);

  ClusteringResult result;
  result.algorithm = "kmeans";
  result.config = {{"k", static_cast<double>(k)},
                   {"t_max", static_cast<double>(t_max)},
                   {"delta", delta}};

  double prev = 0.0;
  for (std::size_t t = 1; t <= t_max; ++t) {
    // mean update with farthest-point reseeding for empty clusters
    std::vector<double> sums(k * p, 0.0);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto x = data.row(i);
      double* s = sums.data() + labels[i] * p;
      for (std::size_t d = 0; d < p; ++d) s[d] += x[d];
      ++counts[labels[i]];
    }
    for (std::size_t j = 0; j < k; ++j) {
      auto theta = centroids.mutable_row(j);
      if (counts[j] > 0) {
        for (std::size_t d = 0; d < p; ++d) {
          theta[d] = sums[j * p + d] / static_cast<double>(counts[j]);
        }
      } else {
        std::size_t far_i = 0;
        double far_d = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double d = sq_euclidean(data.row(i), centroids.row(labels[i]));
          if (d > far_d) {
            far_d = d;
            far_i = i;
          }
        }
        auto x = data.row(far_i);
        for (std::size_t d = 0; d < p; ++d) theta[d] = x[d];
      }
    }

    Assignment next = assign_only(data, centroids);
    const double obj = detail::sum_objective(data, centroids);
    result.objective_trace.push_back(obj);
    result.iterations = t;
    const bool fixpoint = (next == labels);
    labels = std::move(next);
    if (fixpoint || obj == 0.0 ||
        (t > 1 && std::abs(obj / prev - 1.0) <= delta)) {
      result.converged = true;
      break;
    }
    prev = obj;
  }

  result.labels = std::move(labels);
  result.centroids = std::move(centroids);
  result.k = result.centroids.k();
  return result;
}

}  // namespace dpmom

#endif  // DPMOM_BASELINES_HPP
