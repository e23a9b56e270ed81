#include <doctest.h>

#include <chrono>
#include <cmath>
#include <vector>

#include "dpmom/data.hpp"
#include "dpmom/dp_mom.hpp"
#include "dpmom/metrics.hpp"

using namespace dpmom;

namespace {

// mean point loss over a block at a fixed assignment (members contribute the
// distance to their assigned centroid, not the min)
double block_assigned_objective(const DataMatrix& data,
                                const std::vector<std::size_t>& block,
                                const CentroidSet& centroids,
                                const Assignment& labels) {
  double s = 0.0;
  for (std::size_t i : block) {
    s += sq_euclidean(data.row(i), centroids.row(labels[i]));
  }
  return s / static_cast<double>(block.size());
}

LabeledData two_blobs(std::size_t per_blob, double separation, Rng& rng) {
  return gen_gaussian_blobs({{0.0, 0.0}, {separation, 0.0}}, 1.0, per_blob,
                            rng);
}

bool result_equal(const ClusteringResult& a, const ClusteringResult& b) {
  return a.labels == b.labels && a.k == b.k &&
         a.centroids.to_rows() == b.centroids.to_rows() &&
         a.objective_trace == b.objective_trace &&
         a.converged == b.converged && a.iterations == b.iterations;
}

}  // namespace

TEST_SUITE("dpmom") {

TEST_CASE("assign_and_spawn hand examples") {
  auto data = DataMatrix::from_rows({{0.0, 0.0}, {10.0, 0.0}});
  auto start = CentroidSet::from_rows({{0.0, 0.0}});

  SUBCASE("spawn when the loss exceeds lambda") {
    auto [labels, grown] = assign_and_spawn(data, start, 25.0);
    REQUIRE(grown.k() == 2);
    CHECK(labels == Assignment{0, 1});
    CHECK(grown.row(1)[0] == 10.0);
  }

  SUBCASE("large lambda means pure nearest-centroid assignment") {
    auto wide = CentroidSet::from_rows({{0.0, 0.0}, {9.0, 0.0}});
    auto [labels, grown] = assign_and_spawn(data, wide, 1000.0);
    CHECK(grown.k() == 2);
    CHECK(labels == Assignment{0, 1});
  }

  SUBCASE("zero lambda spawns every off-centroid point") {
    auto far = CentroidSet::from_rows({{100.0, 100.0}});
    auto [labels, grown] = assign_and_spawn(data, far, 0.0);
    CHECK(grown.k() == 3);
    CHECK(labels == Assignment{1, 2});
  }

  SUBCASE("guard overflow advises a larger lambda") {
    auto far = CentroidSet::from_rows({{100.0, 100.0}});
    CHECK_THROWS_AS((void)assign_and_spawn(data, far, 0.0, 2), Error);
    try {
      (void)assign_and_spawn(data, far, 0.0, 2);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::SpawnOverflow);
      CHECK(std::string(e.what()).find("lambda") != std::string::npos);
    }
  }
}

TEST_CASE("after a sweep every point is within lambda or sits on its spawn") {
  Rng rng(7);
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t n = 5 + rng.below(40);
    std::vector<double> v(n * 2);
    for (auto& x : v) x = 6.0 * rng.next_double();
    DataMatrix data(n, 2, std::move(v));
    CentroidSet start(2);
    start.push_back(grand_mean(data));
    const double lambda = rng.next_double() * 5.0;
    auto [labels, grown] = assign_and_spawn(data, start, lambda);
    for (std::size_t i = 0; i < n; ++i) {
      const double d = sq_euclidean(data.row(i), grown.row(labels[i]));
      CHECK((d <= lambda || d == 0.0));
    }
  }
}

TEST_CASE("gradient hand examples") {
  SUBCASE("stationary point") {
    auto data = DataMatrix::from_rows({{1.0, 2.0}});
    auto c = CentroidSet::from_rows({{1.0, 2.0}});
    auto g = gradient(data, {0}, c, {0});
    CHECK(g == std::vector<double>{0.0, 0.0});
  }

  SUBCASE("two points, one centroid") {
    auto data = DataMatrix::from_rows({{0.0, 0.0}, {2.0, 0.0}});
    auto c = CentroidSet::from_rows({{0.0, 0.0}});
    auto g = gradient(data, {0, 1}, c, {0, 0});
    CHECK(g[0] == doctest::Approx(-2.0));
    CHECK(g[1] == doctest::Approx(0.0));
  }

  SUBCASE("cluster with no block member gets the zero vector") {
    auto data = DataMatrix::from_rows({{0.0, 0.0}, {5.0, 5.0}});
    auto c = CentroidSet::from_rows({{0.0, 0.0}, {5.0, 5.0}});
    auto g = gradient(data, {0}, c, {0, 1});
    CHECK(g[2] == 0.0);
    CHECK(g[3] == 0.0);
  }
}

TEST_CASE("gradient matches central finite differences") {
  Rng rng(11);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 4 + rng.below(20);
    const std::size_t p = 1 + rng.below(3);
    const std::size_t k = 1 + rng.below(4);
    std::vector<double> dv(n * p), cv(k * p);
    for (auto& x : dv) x = 4.0 * rng.next_double() - 2.0;
    for (auto& x : cv) x = 4.0 * rng.next_double() - 2.0;
    DataMatrix data(n, p, std::move(dv));
    CentroidSet centroids(p);
    {
      DataMatrix cm(k, p, std::move(cv));
      for (std::size_t j = 0; j < k; ++j) centroids.push_back(cm.row(j));
    }
    Assignment labels(n);
    for (auto& l : labels) l = static_cast<std::uint32_t>(rng.below(k));
    std::vector<std::size_t> block;
    for (std::size_t i = 0; i < n; ++i) {
      if (rng.below(2)) block.push_back(i);
    }
    if (block.empty()) block.push_back(0);

    const auto g = gradient(data, block, centroids, labels);
    const double step = 1e-6;
    for (std::size_t j = 0; j < k; ++j) {
      for (std::size_t d = 0; d < p; ++d) {
        CentroidSet plus = centroids, minus = centroids;
        plus.mutable_row(j)[d] += step;
        minus.mutable_row(j)[d] -= step;
        const double fd = (block_assigned_objective(data, block, plus, labels) -
                           block_assigned_objective(data, block, minus, labels)) /
                          (2.0 * step);
        const double scale = std::max(1.0, std::abs(fd));
        CHECK(std::abs(g[j * p + d] - fd) / scale <= 1e-5);
      }
    }
  }
}

TEST_CASE("adagrad step hand example and damping") {
  auto centroids = CentroidSet::from_rows({{0.0, 0.0}});
  OptimizerState state;
  state.grad_sq_accum = {0.0};

  SUBCASE("zero gradient is a fixed point") {
    adagrad_step(centroids, state, {0.0, 0.0}, 1.0, 1.0);
    CHECK(centroids.row(0)[0] == 0.0);
    CHECK(state.grad_sq_accum[0] == 0.0);
  }

  SUBCASE("accumulator includes the current gradient") {
    adagrad_step(centroids, state, {-2.0, 0.0}, 1.0, 1.0);
    CHECK(state.grad_sq_accum[0] == doctest::Approx(4.0));
    CHECK(centroids.row(0)[0] == doctest::Approx(2.0 / std::sqrt(5.0)));
    CHECK(centroids.row(0)[1] == 0.0);
  }

  SUBCASE("repeated identical gradients take shrinking steps") {
    adagrad_step(centroids, state, {-2.0, 0.0}, 1.0, 1.0);
    const double first = centroids.row(0)[0];
    adagrad_step(centroids, state, {-2.0, 0.0}, 1.0, 1.0);
    const double second = centroids.row(0)[0] - first;
    CHECK(second > 0.0);
    CHECK(second < first);
  }

  SUBCASE("non-finite gradient is a numeric fault") {
    CHECK_THROWS_AS(
        adagrad_step(centroids, state, {std::nan(""), 0.0}, 1.0, 1.0), Error);
  }
}

TEST_CASE("fit separates two blobs and is deterministic") {
  Rng gen(101);
  auto blobs = two_blobs(20, 12.0, gen);

  DpMomConfig config;
  config.lambda = 30.0;  // between within-blob and between-blob square scales
  config.eta = 1.0;
  config.buckets = 4;
  config.seed = 5;

  auto fitted = fit(blobs.points, config);
  CHECK(fitted.k == 2);
  auto [truth, predicted] = mask_outliers(*blobs.labels, fitted.labels);
  CHECK(ari(truth, predicted) == doctest::Approx(1.0));

  // brute-force geometry oracle: every point nearer its own blob mean
  auto own_mean_nearest = [&](std::size_t i) {
    const auto truth_label = (*blobs.labels)[i];
    std::vector<double> m0{0.0, 0.0}, m1{12.0, 0.0};
    const double d0 = sq_euclidean(blobs.points.row(i), m0);
    const double d1 = sq_euclidean(blobs.points.row(i), m1);
    return truth_label == 1 ? d0 < d1 : d1 < d0;
  };
  for (std::size_t i = 0; i < blobs.points.rows(); ++i) {
    CHECK(own_mean_nearest(i));
  }

  auto again = fit(blobs.points, config);
  CHECK(result_equal(fitted, again));
}

TEST_CASE("fit with lambda above the max pairwise distance keeps one cluster") {
  Rng gen(23);
  auto blobs = two_blobs(10, 6.0, gen);
  double d_max = 0.0;
  for (std::size_t i = 0; i < blobs.points.rows(); ++i) {
    for (std::size_t j = i + 1; j < blobs.points.rows(); ++j) {
      d_max = std::max(d_max,
                       sq_euclidean(blobs.points.row(i), blobs.points.row(j)));
    }
  }
  DpMomConfig config;
  config.lambda = d_max;
  config.buckets = 4;
  config.seed = 9;
  auto fitted = fit(blobs.points, config);
  CHECK(fitted.k == 1);
}

TEST_CASE("fit records a trace entry per iteration and echoes the config") {
  Rng gen(3);
  auto blobs = two_blobs(15, 10.0, gen);
  DpMomConfig config;
  config.lambda = 25.0;
  config.buckets = 5;
  config.seed = 77;
  auto fitted = fit(blobs.points, config);
  CHECK(fitted.objective_trace.size() == fitted.iterations);
  CHECK(fitted.seed == 77);
  CHECK(fitted.config.at("lambda") == 25.0);
  CHECK(fitted.config.at("L") == 5.0);
  CHECK(fitted.k == fitted.centroids.k());
  for (auto l : fitted.labels) CHECK(l < fitted.k);
}

TEST_CASE("fit config validation") {
  auto data = DataMatrix::from_rows({{0.0}, {1.0}, {2.0}, {3.0}});
  DpMomConfig config;
  config.buckets = 0;
  CHECK_THROWS_AS((void)fit(data, config), Error);
  config.buckets = 5;
  CHECK_THROWS_AS((void)fit(data, config), Error);
  config.buckets = 2;
  config.eta = 0.0;
  CHECK_THROWS_AS((void)fit(data, config), Error);
  config.eta = 1.0;
  config.delta = 1.0;
  CHECK_THROWS_AS((void)fit(data, config), Error);
}

TEST_CASE("merge_small_clusters behavior") {
  // clusters of sizes {4, 4, 1}; the singleton is nearest cluster 0
  auto data = DataMatrix::from_rows({{0.0, 0.0},
                                     {0.5, 0.0},
                                     {0.0, 0.5},
                                     {0.5, 0.5},
                                     {10.0, 0.0},
                                     {10.5, 0.0},
                                     {10.0, 0.5},
                                     {10.5, 0.5},
                                     {2.0, 0.0}});
  ClusteringResult result;
  result.labels = {0, 0, 0, 0, 1, 1, 1, 1, 2};
  result.centroids =
      CentroidSet::from_rows({{0.25, 0.25}, {10.25, 0.25}, {2.0, 0.0}});
  result.k = 3;

  auto merged = merge_small_clusters(result, data, 3);
  CHECK(merged.k == 2);
  CHECK(merged.labels[8] == 0);
  std::vector<std::size_t> sizes(2, 0);
  for (auto l : merged.labels) ++sizes[l];
  CHECK(sizes == std::vector<std::size_t>{5, 4});

  SUBCASE("no-op when everything is large enough") {
    ClusteringResult big = merged;
    auto same = merge_small_clusters(big, data, 3);
    CHECK(same.labels == big.labels);
    CHECK(same.k == big.k);
  }

  SUBCASE("two singletons collapse into the only big cluster") {
    ClusteringResult tiny;
    tiny.labels = {0, 0, 0, 0, 1, 1, 1, 1, 2};
    tiny.labels[0] = 1;  // sizes {3, 5, 1}
    tiny.centroids = result.centroids;
    tiny.k = 3;
    auto out = merge_small_clusters(tiny, data, 5);
    CHECK(out.k == 1);
    for (auto l : out.labels) CHECK(l == 0);
  }

  SUBCASE("impossible when no cluster reaches min_size") {
    ClusteringResult sparse;
    sparse.labels = {0, 1, 2, 0, 1, 2, 0, 1, 2};
    sparse.centroids = result.centroids;
    sparse.k = 3;
    CHECK_THROWS_AS((void)merge_small_clusters(sparse, data, 4), Error);
  }
}

TEST_CASE("default_learning_rate formula") {
  // D = 100: candidates (100, 10)
  auto d100 = DataMatrix::from_rows({{0.0, 0.0}, {6.0, 8.0}});
  auto c = default_learning_rate(d100);
  CHECK(c.high == doctest::Approx(100.0));
  CHECK(c.low == doctest::Approx(10.0));

  // D = 1: candidates (1, 0.1)
  auto d1 = DataMatrix::from_rows({{0.0}, {1.0}});
  c = default_learning_rate(d1);
  CHECK(c.high == doctest::Approx(1.0));
  CHECK(c.low == doctest::Approx(0.1));

  // D = 50: ceil(2 log10 50) = 4, candidates (100, 10)
  auto d50 = DataMatrix::from_rows({{0.0}, {std::sqrt(50.0)}});
  c = default_learning_rate(d50);
  CHECK(c.high == doctest::Approx(100.0));
  CHECK(c.low == doctest::Approx(10.0));

  auto flat = DataMatrix::from_rows({{2.0}, {2.0}});
  CHECK_THROWS_AS((void)default_learning_rate(flat), Error);
}

TEST_CASE("zero-penalty degeneracy stays bounded") {
  auto data = DataMatrix::from_rows(
      {{0.0, 0.0}, {1.0, 0.0}, {2.0, 0.0}, {3.0, 0.0}, {4.0, 0.0}});
  DpMomConfig config;
  config.lambda = 0.0;
  config.buckets = 2;
  config.seed = 1;
  auto fitted = fit(data, config);
  CHECK(fitted.k <= data.rows());
  CHECK(fitted.converged);  // perfect fit short-circuits the ratio test
}

TEST_CASE("fit matches a naive reference loop built from the public ops") {
  // same loop as fit, written with the simple one-shot operations; the
  // incremental engine must reproduce it bitwise, duplicates included
  auto reference_fit = [](const DataMatrix& data, const DpMomConfig& config) {
    Rng rng(config.seed);
    const BucketPartition part = detail::build_partition(data, config, rng);
    CentroidSet centroids(data.cols());
    centroids.push_back(grand_mean(data));
    OptimizerState state;
    state.grad_sq_accum.assign(1, 0.0);
    ClusteringResult result;
    Assignment labels(data.rows(), 0);
    double prev_h = 0.0;
    for (std::size_t t = 1; t <= config.t_max; ++t) {
      auto [swept, grown] = assign_and_spawn(data, std::move(centroids),
                                             config.lambda,
                                             config.max_clusters);
      labels = std::move(swept);
      centroids = std::move(grown);
      state.grad_sq_accum.resize(centroids.k(), 0.0);
      const auto means = bucket_objective_means(data, part, centroids);
      const std::size_t mb = select_median_bucket(means);
      const double h =
          means[mb] + config.lambda * static_cast<double>(centroids.k());
      result.objective_trace.push_back(h);
      result.iterations = t;
      if (h == 0.0) { result.converged = true; break; }
      if (t > 1 && std::abs(h / prev_h - 1.0) <= config.delta) {
        result.converged = true;
        break;
      }
      prev_h = h;
      if (t == config.t_max) break;
      const auto grads = gradient(data, part.blocks[mb], centroids, labels);
      adagrad_step(centroids, state, grads, config.eta, config.epsilon);
    }
    result.labels = assign_only(data, centroids);
    result.centroids = std::move(centroids);
    result.k = result.centroids.k();
    return result;
  };

  Rng rng(303);
  int compared = 0;
  for (int rep = 0; rep < 25; ++rep) {
    const std::size_t n = 6 + rng.below(40);
    const std::size_t p = 1 + rng.below(3);
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> x(p);
      // coarse grid coordinates force duplicates and exact distance ties
      for (auto& v : x) v = std::floor(rng.next_double() * 5.0);
      rows.push_back(std::move(x));
    }
    DataMatrix data = DataMatrix::from_rows(rows);

    DpMomConfig config;
    config.lambda = rng.next_double() * 12.0;
    config.eta = std::pow(10.0, rng.next_double() * 2.0 - 1.0);
    config.buckets = 1 + rng.below(std::min<std::size_t>(n, 9));
    config.t_max = 40;
    config.seed = rng.next_u64();

    ClusteringResult fast, slow;
    bool fast_threw = false, slow_threw = false;
    try { fast = fit(data, config); } catch (const Error&) { fast_threw = true; }
    try { slow = reference_fit(data, config); } catch (const Error&) { slow_threw = true; }
    REQUIRE(fast_threw == slow_threw);
    if (fast_threw) continue;
    ++compared;
    CHECK(fast.objective_trace == slow.objective_trace);
    CHECK(fast.iterations == slow.iterations);
    CHECK(fast.converged == slow.converged);
    CHECK(fast.k <= slow.k);  // fit additionally drops emptied centroids
    // labels agree after compacting the reference's empty clusters
    std::vector<std::size_t> counts(slow.k, 0);
    for (auto l : slow.labels) ++counts[l];
    std::vector<std::uint32_t> remap(slow.k, 0);
    std::uint32_t next = 0;
    for (std::size_t j = 0; j < slow.k; ++j) {
      if (counts[j] > 0) remap[j] = next++;
    }
    REQUIRE(fast.k == static_cast<std::size_t>(next));
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(fast.labels[i] == remap[slow.labels[i]]);
    }
  }
  CHECK(compared >= 10);
}

TEST_CASE("per-iteration cost scales about linearly in n") {
  // median wall time of one sweep + bucket means for doubling n; the log-log
  // slope between consecutive sizes should be near 1
  const std::size_t p = 3;
  std::vector<std::size_t> sizes{4000, 8000, 16000};
  std::vector<double> times;
  for (std::size_t n : sizes) {
    Rng rng(n);
    std::vector<double> v(n * p);
    for (auto& x : v) x = rng.next_double();
    DataMatrix data(n, p, std::move(v));
    CentroidSet centroids(p);
    for (int j = 0; j < 8; ++j) {
      centroids.push_back(data.row(rng.below(n)));
    }
    Rng part_rng(1);
    auto part = detail::permutation_fill(n, 10, part_rng);

    std::vector<double> samples;
    for (int rep = 0; rep < 7; ++rep) {
      const auto t0 = std::chrono::steady_clock::now();
      auto [labels, grown] = assign_and_spawn(data, centroids, 1e12);
      auto means = bucket_objective_means(data, part, grown);
      const auto t1 = std::chrono::steady_clock::now();
      samples.push_back(std::chrono::duration<double>(t1 - t0).count() +
                        means[0] * 0.0 + static_cast<double>(labels[0]) * 0.0);
    }
    std::nth_element(samples.begin(), samples.begin() + 3, samples.end());
    times.push_back(samples[3]);
  }
  for (std::size_t i = 0; i + 1 < times.size(); ++i) {
    const double slope = std::log(times[i + 1] / times[i]) / std::log(2.0);
    CHECK(slope > 0.7);
    CHECK(slope < 1.3);
  }
}

}  // TEST_SUITE
