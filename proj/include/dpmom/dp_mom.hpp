#ifndef DPMOM_DP_MOM_HPP
#define DPMOM_DP_MOM_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "dpmom/core.hpp"
#include "dpmom/error.hpp"
#include "dpmom/mom.hpp"
#include "dpmom/partition.hpp"
#include "dpmom/rng.hpp"

namespace dpmom {

enum class BucketScheme { kmeanspp, random };

struct DpMomConfig {
  double lambda = 1.0;     // per-cluster penalty
  double eta = 1.0;        // learning rate
  double epsilon = 1.0;    // AdaGrad stabilizer
  double delta = 1e-4;     // relative-objective convergence tolerance
  std::size_t t_max = 200;            // iteration cap
  std::size_t buckets = 0;            // L, required
  std::size_t max_clusters = 0;       // 0 means n
  std::uint64_t seed = 0;
  BucketScheme scheme = BucketScheme::kmeanspp;

  void validate(std::size_t n) const {
    check_contract(lambda >= 0.0, "DpMomConfig: lambda must be >= 0");
    check_contract(eta > 0.0, "DpMomConfig: eta must be > 0");
    check_contract(epsilon > 0.0, "DpMomConfig: epsilon must be > 0");
    check_contract(delta > 0.0 && delta < 1.0,
                   "DpMomConfig: delta must be in (0, 1)");
    check_contract(t_max >= 1, "DpMomConfig: t_max must be >= 1");
    check_contract(buckets >= 1 && buckets <= n,
                   "DpMomConfig: need 1 <= L <= n");
    check_contract(max_clusters <= n,
                   "DpMomConfig: max_clusters cannot exceed n");
  }
};

// Per-centroid accumulated squared gradient norms. Accumulators never
// decrease; a freshly spawned centroid starts at zero.
struct OptimizerState {
  std::vector<double> grad_sq_accum;
  std::size_t iteration = 0;
};

struct ClusteringResult {
  Assignment labels;
  CentroidSet centroids;
  std::size_t k = 0;
  std::vector<double> objective_trace;  // one h value per iteration
  bool converged = false;
  std::size_t iterations = 0;
  std::uint64_t seed = 0;
  std::string algorithm;
  std::map<std::string, double> config;  // echo of the numeric settings
};

// One pass of Algorithm steps 2-9: scan observations in row order against
// the current (possibly just grown) centroid set; a point farther than
// lambda from every centroid becomes a new centroid and its own label.
inline std::pair<Assignment, CentroidSet> assign_and_spawn(
    const DataMatrix& data, CentroidSet centroids, double lambda,
    std::size_t max_clusters = 0) {
  check_contract(lambda >= 0.0, "assign_and_spawn: lambda must be >= 0");
  check_contract(centroids.k() >= 1, "assign_and_spawn: empty centroid set");
  check_contract(centroids.dim() == data.cols(),
                 "assign_and_spawn: dimension mismatch");
  // auto guard leaves room for the root centroid plus one spawn per point
  if (max_clusters == 0) max_clusters = data.rows() + 1;
  Assignment labels(data.rows(), 0);
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const PointLoss a = point_loss(data.row(i), centroids);
    if (a.loss > lambda) {
      check(centroids.k() < max_clusters, ErrorCode::SpawnOverflow,
            "assign_and_spawn: cluster count would exceed the guard; "
            "increase lambda");
      centroids.push_back(data.row(i));
      labels[i] = static_cast<std::uint32_t>(centroids.k() - 1);
    } else {
      labels[i] = static_cast<std::uint32_t>(a.index);
    }
  }
  return {std::move(labels), std::move(centroids)};
}

// nearest-centroid labels, no spawning
inline Assignment assign_only(const DataMatrix& data,
                              const CentroidSet& centroids) {
  Assignment labels(data.rows(), 0);
  for (std::size_t i = 0; i < data.rows(); ++i) {
    labels[i] = static_cast<std::uint32_t>(point_loss(data.row(i), centroids).index);
  }
  return labels;
}

// g_j = (1/|block|) * sum over block members assigned to j of 2(theta_j - x_i);
// clusters with no member in the block get the zero vector. Returned flat,
// k rows of dim() entries.
inline std::vector<double> gradient(const DataMatrix& data,
                                    const std::vector<std::size_t>& block,
                                    const CentroidSet& centroids,
                                    const Assignment& assignment) {
  check_contract(!block.empty(), "gradient: empty block");
  check_contract(assignment.size() == data.rows(),
                 "gradient: assignment length mismatch");
  const std::size_t k = centroids.k();
  const std::size_t p = centroids.dim();
  std::vector<double> grads(k * p, 0.0);
  const double scale = 2.0 / static_cast<double>(block.size());
  for (std::size_t i : block) {
    const std::uint32_t j = assignment[i];
    check_contract(j < k, "gradient: label references a missing centroid");
    auto x = data.row(i);
    auto theta = centroids.row(j);
    double* g = grads.data() + j * p;
    for (std::size_t d = 0; d < p; ++d) g[d] += scale * (theta[d] - x[d]);
  }
  return grads;
}

// theta_j <- theta_j - eta / sqrt(epsilon + accum_j) * g_j, where accum_j
// already includes this step's ||g_j||^2 (the accumulator sum runs through
// the current iteration).
inline void adagrad_step(CentroidSet& centroids, OptimizerState& state,
                         const std::vector<double>& grads, double eta,
                         double epsilon) {
  const std::size_t k = centroids.k();
  const std::size_t p = centroids.dim();
  check_contract(grads.size() == k * p, "adagrad_step: gradient shape mismatch");
  check_contract(state.grad_sq_accum.size() == k,
                 "adagrad_step: state shape mismatch");
  for (std::size_t j = 0; j < k; ++j) {
    const double* g = grads.data() + j * p;
    double norm_sq = 0.0;
    for (std::size_t d = 0; d < p; ++d) norm_sq += g[d] * g[d];
    check(std::isfinite(norm_sq), ErrorCode::NumericFault,
          "adagrad_step: non-finite gradient");
    if (norm_sq == 0.0) continue;
    state.grad_sq_accum[j] += norm_sq;
    const double step = eta / std::sqrt(epsilon + state.grad_sq_accum[j]);
    auto theta = centroids.mutable_row(j);
    for (std::size_t d = 0; d < p; ++d) theta[d] -= step * g[d];
  }
  ++state.iteration;
}

namespace detail {

inline BucketPartition build_partition(const DataMatrix& data,
                                       const DpMomConfig& config, Rng& rng) {
  if (config.buckets <= 2 || config.scheme == BucketScheme::random) {
    return detail::permutation_fill(data.rows(), config.buckets, rng);
  }
  return detail::kmeanspp_fill(data, config.buckets, rng);
}

inline double dist_sq(const double* __restrict x, const double* __restrict c,
                      std::size_t p) {
  double s = 0.0;
  for (std::size_t d = 0; d < p; ++d) {
    const double diff = x[d] - c[d];
    s += diff * diff;
  }
  return s;
}

// Incremental nearest-centroid bookkeeping for fit. Only the clusters that
// received a gradient step move between sweeps, so each point's cached
// nearest distance stays exact as long as the cache is patched for moved and
// freshly spawned centroids. Produces bit-identical values to the plain
// assign_and_spawn / bucket_objective_means composition.
class FitEngine {
 public:
  FitEngine(const DataMatrix& data, const DpMomConfig& config)
      : data_(data),
        config_(config),
        n_(data.rows()),
        p_(data.cols()),
        guard_(config.max_clusters == 0 ? data.rows() + 1
                                        : config.max_clusters) {
    centroids_ = grand_mean(data);
    k_ = 1;
    accum_.assign(1, 0.0);
    nearest_.resize(n_);
    nearest_arg_.assign(n_, 0);
    sweep_labels_.assign(n_, 0);
    const double* x = data_.values().data();
    for (std::size_t i = 0; i < n_; ++i) {
      nearest_[i] = dist_sq(x + i * p_, centroids_.data(), p_);
    }
  }

  // one spawn-or-assign sweep; leaves nearest_/nearest_arg_ exact w.r.t. the
  // post-sweep centroid set
  void sweep() {
    const double* x = data_.values().data();
    const std::size_t k_before = k_;
    for (std::size_t i = 0; i < n_; ++i) {
      double best = nearest_[i];
      std::uint32_t arg = nearest_arg_[i];
      // spawns from this sweep are not in the cache yet; their indices are
      // all larger, so strict < keeps the lowest-index tie rule
      for (std::size_t j = k_before; j < k_; ++j) {
        const double d = dist_sq(x + i * p_, centroids_.data() + j * p_, p_);
        if (d < best) {
          best = d;
          arg = static_cast<std::uint32_t>(j);
        }
      }
      if (best > config_.lambda) {
        check(k_ < guard_, ErrorCode::SpawnOverflow,
              "assign_and_spawn: cluster count would exceed the guard; "
              "increase lambda");
        centroids_.insert(centroids_.end(), x + i * p_, x + (i + 1) * p_);
        accum_.push_back(0.0);
        sweep_labels_[i] = static_cast<std::uint32_t>(k_);
        ++k_;
      } else {
        sweep_labels_[i] = arg;
      }
    }
    // fold this sweep's spawns into the cache
    if (k_ != k_before) {
      for (std::size_t i = 0; i < n_; ++i) {
        double best = nearest_[i];
        std::uint32_t arg = nearest_arg_[i];
        for (std::size_t j = k_before; j < k_; ++j) {
          const double d = dist_sq(x + i * p_, centroids_.data() + j * p_, p_);
          if (d < best) {
            best = d;
            arg = static_cast<std::uint32_t>(j);
          }
        }
        nearest_[i] = best;
        nearest_arg_[i] = arg;
      }
    }
  }

  // mean of cached losses per block, then the median bucket
  double bucket_mean(const std::vector<std::size_t>& block) const {
    double s = 0.0;
    for (std::size_t i : block) s += nearest_[i];
    return s / static_cast<double>(block.size());
  }

  // gradient over the block at the sweep labels, AdaGrad update, cache patch
  void descend(const std::vector<std::size_t>& block) {
    grads_.assign(k_ * p_, 0.0);
    const double scale = 2.0 / static_cast<double>(block.size());
    const double* x = data_.values().data();
    for (std::size_t i : block) {
      const std::uint32_t j = sweep_labels_[i];
      double* g = grads_.data() + j * p_;
      const double* theta = centroids_.data() + j * p_;
      const double* xi = x + i * p_;
      for (std::size_t d = 0; d < p_; ++d) g[d] += scale * (theta[d] - xi[d]);
    }

    moved_.clear();
    for (std::size_t j = 0; j < k_; ++j) {
      const double* g = grads_.data() + j * p_;
      double norm_sq = 0.0;
      for (std::size_t d = 0; d < p_; ++d) norm_sq += g[d] * g[d];
      check(std::isfinite(norm_sq), ErrorCode::NumericFault,
            "adagrad_step: non-finite gradient");
      if (norm_sq == 0.0) continue;
      accum_[j] += norm_sq;
      const double step = config_.eta / std::sqrt(config_.epsilon + accum_[j]);
      double* theta = centroids_.data() + j * p_;
      for (std::size_t d = 0; d < p_; ++d) theta[d] -= step * g[d];
      moved_.push_back(static_cast<std::uint32_t>(j));
    }
    if (moved_.empty()) return;

    // points whose cached nearest centroid moved need a full rescan; others
    // only need the moved centroids as candidates
    std::vector<char> did_move(k_, 0);
    for (std::uint32_t j : moved_) did_move[j] = 1;
    for (std::size_t i = 0; i < n_; ++i) {
      const double* xi = x + i * p_;
      if (did_move[nearest_arg_[i]]) {
        double best = dist_sq(xi, centroids_.data(), p_);
        std::uint32_t arg = 0;
        for (std::size_t j = 1; j < k_; ++j) {
          const double d = dist_sq(xi, centroids_.data() + j * p_, p_);
          if (d < best) {
            best = d;
            arg = static_cast<std::uint32_t>(j);
          }
        }
        nearest_[i] = best;
        nearest_arg_[i] = arg;
      } else {
        for (std::uint32_t j : moved_) {
          const double d = dist_sq(xi, centroids_.data() + j * p_, p_);
          if (d < nearest_[i] ||
              (d == nearest_[i] && j < nearest_arg_[i])) {
            nearest_[i] = d;
            nearest_arg_[i] = j;
          }
        }
      }
    }
  }

  [[nodiscard]] std::size_t k() const { return k_; }
  [[nodiscard]] const Assignment& final_labels() const { return nearest_arg_; }

  [[nodiscard]] CentroidSet take_centroids() {
    CentroidSet out(p_);
    for (std::size_t j = 0; j < k_; ++j) {
      out.push_back({centroids_.data() + j * p_, p_});
    }
    return out;
  }

 private:
  const DataMatrix& data_;
  const DpMomConfig& config_;
  std::size_t n_;
  std::size_t p_;
  std::size_t guard_;
  std::vector<double> centroids_;  // k * p
  std::size_t k_ = 0;
  std::vector<double> accum_;
  std::vector<double> nearest_;          // exact min distance per point
  std::vector<std::uint32_t> nearest_arg_;
  Assignment sweep_labels_;
  std::vector<double> grads_;
  std::vector<std::uint32_t> moved_;
};

}  // namespace detail

// Full fitting loop: spawn-or-assign sweep, median-bucket gradient, AdaGrad
// update, relative-objective stopping rule, final no-spawn labeling pass.
inline ClusteringResult fit(const DataMatrix& data, const DpMomConfig& config) {
  config.validate(data.rows());
  Rng rng(config.seed);
  const BucketPartition part = detail::build_partition(data, config, rng);

  detail::FitEngine engine(data, config);

  ClusteringResult result;
  result.seed = config.seed;
  result.algorithm = "dpmom";
  result.config = {{"lambda", config.lambda},
                   {"eta", config.eta},
                   {"epsilon", config.epsilon},
                   {"delta", config.delta},
                   {"t_max", static_cast<double>(config.t_max)},
                   {"L", static_cast<double>(config.buckets)},
                   {"scheme", config.scheme == BucketScheme::kmeanspp ? 1.0 : 0.0}};

  std::vector<double> means(part.bucket_count());
  double prev_h = 0.0;
  for (std::size_t t = 1; t <= config.t_max; ++t) {
    engine.sweep();
    for (std::size_t b = 0; b < part.bucket_count(); ++b) {
      means[b] = engine.bucket_mean(part.blocks[b]);
    }
    const std::size_t median_bucket = select_median_bucket(means);
    const double h = means[median_bucket] +
                     config.lambda * static_cast<double>(engine.k());
    result.objective_trace.push_back(h);
    result.iterations = t;

    if (h == 0.0) {  // perfect fit; the ratio test would divide by zero
      result.converged = true;
      break;
    }
    if (t > 1 && std::abs(h / prev_h - 1.0) <= config.delta) {
      result.converged = true;
      break;
    }
    prev_h = h;
    if (t == config.t_max) break;

    engine.descend(part.blocks[median_bucket]);
  }

  result.labels = engine.final_labels();
  CentroidSet centroids = engine.take_centroids();

  // clusters emptied by the final pass (typically the stale root centroid)
  // are dropped, so reported k never counts a dead centroid
  std::vector<std::size_t> counts(centroids.k(), 0);
  for (std::uint32_t l : result.labels) ++counts[l];
  std::vector<std::size_t> keep;
  std::vector<std::uint32_t> remap(centroids.k(), 0);
  for (std::size_t j = 0; j < centroids.k(); ++j) {
    if (counts[j] == 0) continue;
    remap[j] = static_cast<std::uint32_t>(keep.size());
    keep.push_back(j);
  }
  if (keep.size() != centroids.k()) {
    centroids.keep_only(keep);
    for (auto& l : result.labels) l = remap[l];
  }

  result.centroids = std::move(centroids);
  result.k = result.centroids.k();
  return result;
}

// Reassign members of clusters smaller than min_size to the nearest cluster
// that has at least min_size members, then drop the emptied centroids.
inline ClusteringResult merge_small_clusters(const ClusteringResult& result,
                                             const DataMatrix& data,
                                             std::size_t min_size = 3) {
  check_contract(result.k == result.centroids.k(),
                 "merge_small_clusters: inconsistent result");
  std::vector<std::size_t> sizes(result.k, 0);
  for (std::uint32_t l : result.labels) ++sizes[l];

  std::vector<std::size_t> eligible;
  for (std::size_t j = 0; j < result.k; ++j) {
    if (sizes[j] >= min_size) eligible.push_back(j);
  }
  check(!eligible.empty(), ErrorCode::MergeImpossible,
        "merge_small_clusters: no cluster reaches min_size");
  if (eligible.size() == result.k) return result;

  ClusteringResult merged = result;
  std::vector<std::uint32_t> remap(result.k, 0);
  for (std::size_t r = 0; r < eligible.size(); ++r) {
    remap[eligible[r]] = static_cast<std::uint32_t>(r);
  }
  for (std::size_t i = 0; i < merged.labels.size(); ++i) {
    const std::uint32_t old = merged.labels[i];
    if (sizes[old] >= min_size) {
      merged.labels[i] = remap[old];
      continue;
    }
    double best = 0.0;
    std::size_t best_j = 0;
    for (std::size_t r = 0; r < eligible.size(); ++r) {
      const double d = sq_euclidean(data.row(i), result.centroids.row(eligible[r]));
      if (r == 0 || d < best) {
        best = d;
        best_j = r;
      }
    }
    merged.labels[i] = static_cast<std::uint32_t>(best_j);
  }
  merged.centroids.keep_only(eligible);
  merged.k = merged.centroids.k();
  return merged;
}

struct EtaCandidates {
  double high;  // 10^(ceil(2 log10 D) / 2)
  double low;   // one order of magnitude lower
};

// D is the maximum pairwise squared separation in the data.
inline EtaCandidates default_learning_rate(const DataMatrix& data) {
  check_contract(data.rows() >= 2, "default_learning_rate: need n >= 2");
  double d_max = 0.0;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    for (std::size_t j = i + 1; j < data.rows(); ++j) {
      d_max = std::max(d_max, sq_euclidean(data.row(i), data.row(j)));
    }
  }
  check(d_max > 0.0, ErrorCode::DegenerateData,
        "default_learning_rate: all points identical");
  const double exponent = std::ceil(2.0 * std::log10(d_max)) / 2.0;
  return {std::pow(10.0, exponent), std::pow(10.0, exponent - 1.0)};
}

}  // namespace dpmom

#endif  // DPMOM_DP_MOM_HPP
