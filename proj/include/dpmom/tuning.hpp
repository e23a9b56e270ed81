#ifndef DPMOM_TUNING_HPP
#define DPMOM_TUNING_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dpmom/core.hpp"
#include "dpmom/csvio.hpp"
#include "dpmom/data.hpp"
#include "dpmom/dp_mom.hpp"
#include "dpmom/error.hpp"
#include "dpmom/metrics.hpp"
#include "dpmom/rng.hpp"

namespace dpmom {

struct TuningConfig {
  std::size_t repeats = 35;
  bool full_l_sweep = false;     // sweep every admissible L regardless of n
  std::size_t l_subsample = 30;  // log-spaced L count used when n > 300
  std::size_t t_max = 200;
  double delta = 1e-4;
  double epsilon = 1.0;
  std::size_t min_cluster_size = 3;
  BucketScheme scheme = BucketScheme::kmeanspp;
};

struct TrialRecord {
  std::size_t stage = 0;   // 1..3
  std::size_t repeat = 0;
  double lambda = 0.0;
  std::size_t buckets = 0;
  double eta = 0.0;
  double ari = 0.0;        // NaN in proxy mode, -inf for overflowed cells
  std::size_t k = 0;
  double runtime_ms = 0.0;
};

struct RepeatOptimum {
  double lambda = 0.0;
  std::size_t buckets = 0;
  double eta = 0.0;
  double ari = 0.0;
  std::size_t k = 0;
};

struct TuningResult {
  double lambda_opt = 0.0;
  std::size_t l_opt = 0;
  double eta_opt = 0.0;
  std::pair<double, double> lambda_range{0.0, 0.0};
  std::pair<std::size_t, std::size_t> l_range{0, 0};
  double median_ari = 0.0;  // NaN in proxy mode
  bool proxy = false;
  std::vector<RepeatOptimum> per_repeat;
  std::vector<TrialRecord> trials;
};

// min and max pairwise squared distance; zero distances from duplicate rows
// are excluded so the grid cannot degenerate
inline std::pair<double, double> lambda_bounds(const DataMatrix& data) {
  check_contract(data.rows() >= 2, "lambda_bounds: need n >= 2");
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    for (std::size_t j = i + 1; j < data.rows(); ++j) {
      const double d = sq_euclidean(data.row(i), data.row(j));
      if (d > 0.0) lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
  }
  check(hi > 0.0, ErrorCode::DegenerateData,
        "lambda_bounds: all points identical");
  return {lo, hi};
}

// arithmetic progression from lo to hi inclusive
inline std::vector<double> grid_stage(std::pair<double, double> bounds,
                                      std::size_t points) {
  check_contract(bounds.first <= bounds.second, "grid_stage: lo > hi");
  check_contract(points >= 2, "grid_stage: need at least two points");
  std::vector<double> grid(points);
  const double step =
      (bounds.second - bounds.first) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) {
    grid[i] = bounds.first + step * static_cast<double>(i);
  }
  grid.back() = bounds.second;
  return grid;
}

// every integer L with 2 < L < n/3; above n = 300 the sweep thins to about
// l_subsample log-spaced values unless full_l_sweep is set
inline std::vector<std::size_t> admissible_buckets(std::size_t n,
                                                   const TuningConfig& cfg) {
  std::vector<std::size_t> all;
  for (std::size_t buckets = 3;
       static_cast<double>(buckets) < static_cast<double>(n) / 3.0; ++buckets) {
    all.push_back(buckets);
  }
  check(!all.empty(), ErrorCode::ContractViolation,
        "admissible_buckets: no L satisfies 2 < L < n/3 (data too small)");
  if (cfg.full_l_sweep || n <= 300 || all.size() <= cfg.l_subsample) {
    return all;
  }
  std::vector<std::size_t> thinned;
  const double lo = std::log(static_cast<double>(all.front()));
  const double hi = std::log(static_cast<double>(all.back()));
  for (std::size_t i = 0; i < cfg.l_subsample; ++i) {
    const double t = static_cast<double>(i) /
                     static_cast<double>(cfg.l_subsample - 1);
    const auto value = static_cast<std::size_t>(
        std::llround(std::exp(lo + t * (hi - lo))));
    if (thinned.empty() || value > thinned.back()) thinned.push_back(value);
  }
  return thinned;
}

namespace detail {

struct CellScore {
  double ari = -std::numeric_limits<double>::infinity();
  double proxy_score = std::numeric_limits<double>::infinity();
  double lambda = 0.0;
  std::size_t buckets = 0;
  double eta = 0.0;
  std::size_t k = 0;
  bool valid = false;
};

// supervised comparator: max ARI, ties to smaller lambda, then L, then eta
inline bool better_supervised(const CellScore& a, const CellScore& b) {
  if (!b.valid) return a.valid;
  if (!a.valid) return false;
  if (a.ari != b.ari) return a.ari > b.ari;
  if (a.lambda != b.lambda) return a.lambda < b.lambda;
  if (a.buckets != b.buckets) return a.buckets < b.buckets;
  return a.eta < b.eta;
}

// proxy comparator: min reference-penalized objective, same tie order
inline bool better_proxy(const CellScore& a, const CellScore& b) {
  if (!b.valid) return a.valid;
  if (!a.valid) return false;
  if (a.proxy_score != b.proxy_score) return a.proxy_score < b.proxy_score;
  if (a.lambda != b.lambda) return a.lambda < b.lambda;
  if (a.buckets != b.buckets) return a.buckets < b.buckets;
  return a.eta < b.eta;
}

}  // namespace detail

namespace detail {

class GridSearch {
 public:
  GridSearch(const DataMatrix& data, const Assignment* truth,
             const TuningConfig& cfg, std::uint64_t seed)
      : data_(data), truth_(truth), cfg_(cfg), seed_(seed) {
    bounds_ = lambda_bounds(data);
    buckets_ = admissible_buckets(data.rows(), cfg);
    etas_ = default_learning_rate(data);
    // Proxy scoring needs one common penalty so that solutions of different
    // k are comparable. One stage-1 grid step above lambda_min is well below
    // the gross separation scale but far above the within-cluster scale on
    // separation-dominated data.
    lambda_ref_ = bounds_.first + (bounds_.second - bounds_.first) / 10.0;
  }

  TuningResult run() {
    TuningResult result;
    result.proxy = truth_ == nullptr;
    for (std::size_t repeat = 0; repeat < cfg_.repeats; ++repeat) {
      result.per_repeat.push_back(run_repeat(repeat, result.trials));
    }

    const auto& reps = result.per_repeat;
    auto best = std::max_element(
        reps.begin(), reps.end(), [&](const auto& a, const auto& b) {
          if (a.ari != b.ari) return a.ari < b.ari;
          if (a.lambda != b.lambda) return a.lambda > b.lambda;
          return a.buckets > b.buckets;
        });
    result.lambda_opt = best->lambda;
    result.l_opt = best->buckets;
    result.eta_opt = best->eta;

    auto [lambda_lo, lambda_hi] = std::minmax_element(
        reps.begin(), reps.end(),
        [](const auto& a, const auto& b) { return a.lambda < b.lambda; });
    result.lambda_range = {lambda_lo->lambda, lambda_hi->lambda};
    auto [l_lo, l_hi] = std::minmax_element(
        reps.begin(), reps.end(),
        [](const auto& a, const auto& b) { return a.buckets < b.buckets; });
    result.l_range = {l_lo->buckets, l_hi->buckets};

    if (result.proxy) {
      result.median_ari = std::numeric_limits<double>::quiet_NaN();
    } else {
      std::vector<double> aris;
      aris.reserve(reps.size());
      for (const auto& r : reps) aris.push_back(r.ari);
      std::sort(aris.begin(), aris.end());
      const std::size_t m = aris.size();
      result.median_ari = (m % 2 == 1)
                              ? aris[m / 2]
                              : 0.5 * (aris[m / 2 - 1] + aris[m / 2]);
    }
    return result;
  }

 private:
  CellScore evaluate_cell(std::size_t repeat, std::size_t stage,
                          std::size_t lambda_idx, double lambda,
                          std::size_t buckets, std::size_t eta_idx, double eta,
                          std::vector<TrialRecord>& trials) {
    DpMomConfig config;
    config.lambda = lambda;
    config.eta = eta;
    config.epsilon = cfg_.epsilon;
    config.delta = cfg_.delta;
    config.t_max = cfg_.t_max;
    config.buckets = buckets;
    config.scheme = cfg_.scheme;
    config.seed =
        derive_rng(seed_, repeat, stage, lambda_idx, buckets, eta_idx)
            .next_u64();

    CellScore score;
    score.lambda = lambda;
    score.buckets = buckets;
    score.eta = eta;

    TrialRecord record;
    record.stage = stage;
    record.repeat = repeat;
    record.lambda = lambda;
    record.buckets = buckets;
    record.eta = eta;

    const auto t0 = std::chrono::steady_clock::now();
    try {
      auto fitted = fit(data_, config);
      ClusteringResult reported = fitted;
      try {
        reported = merge_small_clusters(fitted, data_, cfg_.min_cluster_size);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::MergeImpossible) throw;
      }
      score.k = reported.k;
      if (truth_ != nullptr) {
        auto [t, p] = mask_outliers(*truth_, reported.labels);
        score.ari = ari(t, p);
      } else {
        score.ari = std::numeric_limits<double>::quiet_NaN();
        // reference-penalized objective of the reported solution, on the
        // same partition the fit used
        Rng part_rng(config.seed);
        const auto part = build_partition(data_, config, part_rng);
        score.proxy_score =
            mom_objective(data_, part, reported.centroids, lambda_ref_);
      }
      score.valid = true;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SpawnOverflow) throw;
      // overflowed cells score -inf and the sweep continues
      score.valid = false;
      score.ari = -std::numeric_limits<double>::infinity();
    }
    const auto t1 = std::chrono::steady_clock::now();

    record.ari = score.ari;
    record.k = score.k;
    record.runtime_ms =
        std::chrono::duration<double, std::milli>(t1 - t0).count();
    trials.push_back(record);
    return score;
  }

  // evaluate one lambda grid at a fixed eta set; returns the best cell per
  // lambda (supervised: best over L and eta by ARI; proxy: by objective)
  std::vector<CellScore> sweep_stage(std::size_t repeat, std::size_t stage,
                                     const std::vector<double>& lambdas,
                                     const std::vector<double>& stage_etas,
                                     std::vector<TrialRecord>& trials) {
    std::vector<CellScore> per_lambda(lambdas.size());
    for (std::size_t li = 0; li < lambdas.size(); ++li) {
      for (std::size_t bi = 0; bi < buckets_.size(); ++bi) {
        for (std::size_t ei = 0; ei < stage_etas.size(); ++ei) {
          auto cell = evaluate_cell(repeat, stage, li, lambdas[li],
                                    buckets_[bi], ei, stage_etas[ei], trials);
          const bool better = truth_ != nullptr
                                  ? better_supervised(cell, per_lambda[li])
                                  : better_proxy(cell, per_lambda[li]);
          if (better) per_lambda[li] = cell;
        }
      }
    }
    return per_lambda;
  }

  // pick the winning lambda index of a stage
  std::size_t stage_winner(const std::vector<CellScore>& per_lambda) const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < per_lambda.size(); ++i) {
      const bool better = truth_ != nullptr
                              ? better_supervised(per_lambda[i], per_lambda[best])
                              : better_proxy(per_lambda[i], per_lambda[best]);
      if (better) best = i;
    }
    return best;
  }

  RepeatOptimum run_repeat(std::size_t repeat,
                           std::vector<TrialRecord>& trials) {
    const std::vector<double> both_etas{etas_.high, etas_.low};

    // stage 1: 11 points across the full bounds, both learning rates
    auto grid1 = grid_stage(bounds_, 11);
    auto stage1 = sweep_stage(repeat, 1, grid1, both_etas, trials);
    std::size_t win1 = stage_winner(stage1);
    const double frozen_eta = stage1[win1].valid ? stage1[win1].eta
                                                 : etas_.low;
    const std::vector<double> eta_only{frozen_eta};

    // stage 2: the winner's neighborhood refined into 20 divisions
    auto grid2 = grid_stage(bracket(grid1, win1), 21);
    auto stage2 = sweep_stage(repeat, 2, grid2, eta_only, trials);
    std::size_t win2 = stage_winner(stage2);

    // stage 3: one more refinement
    auto grid3 = grid_stage(bracket(grid2, win2), 21);
    auto stage3 = sweep_stage(repeat, 3, grid3, eta_only, trials);
    std::size_t win3 = stage_winner(stage3);

    // the repeat's optimum is the best cell seen across all stages
    (void)win3;
    CellScore best = stage1[win1];
    auto consider = [&](const CellScore& c) {
      const bool better = truth_ != nullptr ? better_supervised(c, best)
                                            : better_proxy(c, best);
      if (better) best = c;
    };
    for (const auto& c : stage1) consider(c);
    for (const auto& c : stage2) consider(c);
    for (const auto& c : stage3) consider(c);
    check(best.valid, ErrorCode::DegenerateData,
          "tuning: every grid cell overflowed; widen the lambda range");
    return {best.lambda, best.buckets, best.eta, best.ari, best.k};
  }

  // neighborhood [grid[i-1], grid[i+1]]; a winning endpoint refines its one
  // adjacent interval
  static std::pair<double, double> bracket(const std::vector<double>& grid,
                                           std::size_t winner) {
    if (winner == 0) return {grid[0], grid[1]};
    if (winner + 1 == grid.size()) {
      return {grid[grid.size() - 2], grid.back()};
    }
    return {grid[winner - 1], grid[winner + 1]};
  }

  const DataMatrix& data_;
  const Assignment* truth_;
  TuningConfig cfg_;
  std::uint64_t seed_;
  std::pair<double, double> bounds_;
  std::vector<std::size_t> buckets_;
  EtaCandidates etas_{1.0, 0.1};
  double lambda_ref_ = 1.0;
};

}  // namespace detail

// The full supervised protocol: three-stage lambda refinement crossed with
// the admissible L sweep, repeated; per-repeat optima aggregate into ranges
// and a median ARI.
inline TuningResult search(const DataMatrix& data, const Assignment& truth,
                           const TuningConfig& cfg, std::uint64_t seed) {
  check_contract(truth.size() == data.rows(),
                 "search: ground truth length mismatch");
  check_contract(cfg.repeats >= 1, "search: need at least one repeat");
  detail::GridSearch gs(data, &truth, cfg, seed);
  return gs.run();
}

// Label-free fallback. Each cell is scored by the fitted penalized objective;
// across lambda values the widest log-scale plateau of constant cluster count
// is selected. Output is marked as a proxy.
inline TuningResult unsupervised_proxy_search(const DataMatrix& data,
                                              const TuningConfig& cfg,
                                              std::uint64_t seed) {
  check_contract(data.rows() >= 10, "unsupervised_proxy_search: need n >= 10");
  check_contract(cfg.repeats >= 1, "search: need at least one repeat");
  detail::GridSearch gs(data, nullptr, cfg, seed);
  return gs.run();
}

// stage, repeat, lambda, L, eta, ari, k, runtime_ms
inline void write_tuning_trace(const TuningResult& result,
                               const std::string& path) {
  std::ofstream out(path);
  check(out.good(), ErrorCode::IoError, "cannot write file: " + path);
  out << "stage,repeat,lambda,L,eta,ari,k,runtime_ms\n";
  for (const auto& t : result.trials) {
    out << t.stage << ',' << t.repeat << ',' << format_double(t.lambda) << ','
        << t.buckets << ',' << format_double(t.eta) << ','
        << format_double(t.ari) << ',' << t.k << ','
        << format_double(t.runtime_ms) << '\n';
  }
}

}  // namespace dpmom

#endif  // DPMOM_TUNING_HPP
