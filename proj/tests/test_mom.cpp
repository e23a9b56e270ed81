#include <doctest.h>

#include <cmath>
#include <vector>

#include "dpmom/core.hpp"
#include "dpmom/mom.hpp"
#include "dpmom/partition.hpp"

using namespace dpmom;

TEST_SUITE("mom") {

TEST_CASE("mom_estimate with a pinned partition") {
  std::vector<double> v{1, 2, 3, 4, 5, 6};
  auto part = BucketPartition::from_blocks({{0, 1}, {2, 3}, {4, 5}}, 6);
  CHECK(mom_estimate(v, part) == 3.5);

  std::vector<double> contaminated{1, 1, 1, 1, 1, 1000};
  CHECK(mom_estimate(contaminated, part) == 1.0);
}

TEST_CASE("mom_estimate of a constant sample is the constant") {
  Rng rng(3);
  std::vector<double> v(17, 4.25);
  for (std::size_t buckets : {1u, 2u, 3u, 5u, 17u}) {
    Rng r = rng.split(buckets);
    CHECK(mom_estimate(v, buckets, r) == 4.25);
  }
}

TEST_CASE("mom_estimate contract checks") {
  Rng rng(1);
  std::vector<double> v{1, 2, 3};
  CHECK_THROWS_AS((void)mom_estimate(v, 4, rng), Error);
  std::vector<double> empty;
  CHECK_THROWS_AS((void)mom_estimate(empty, 1, rng), Error);
}

TEST_CASE("bucket_objective_means hand values") {
  auto data =
      DataMatrix::from_rows({{0.0, 0.0}, {2.0, 0.0}, {4.0, 0.0}, {6.0, 0.0}});
  auto part = BucketPartition::from_blocks({{0, 1}, {2, 3}}, 4);
  auto centroids = CentroidSet::from_rows({{0.0, 0.0}});
  auto means = bucket_objective_means(data, part, centroids);
  REQUIRE(means.size() == 2);
  CHECK(means[0] == 2.0);
  CHECK(means[1] == 26.0);

  // one block reduces to the empirical objective
  auto whole = BucketPartition::single_block(4);
  auto single = bucket_objective_means(data, whole, centroids);
  REQUIRE(single.size() == 1);
  CHECK(single[0] == empirical_objective(data, centroids));

  // centroid set covering every point gives all zeros
  auto exact = CentroidSet::from_rows(
      {{0.0, 0.0}, {2.0, 0.0}, {4.0, 0.0}, {6.0, 0.0}});
  for (double m : bucket_objective_means(data, part, exact)) CHECK(m == 0.0);
}

TEST_CASE("select_median_bucket conventions") {
  CHECK(select_median_bucket({5.0}) == 0);
  CHECK(select_median_bucket({1.0, 5.0, 3.0}) == 2);
  CHECK(select_median_bucket({4.0, 1.0, 9.0, 6.0}) == 0);  // lower-middle
  CHECK(select_median_bucket({3.0, 3.0, 5.0}) == 0);       // tie, lowest index
}

TEST_CASE("select_median_bucket order statistic property for odd L") {
  Rng rng(21);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t buckets = 2 * rng.below(6) + 1;
    std::vector<double> means(buckets);
    for (auto& m : means) m = rng.next_double();
    const std::size_t j = select_median_bucket(means);
    std::size_t at_most = 0, at_least = 0;
    for (double m : means) {
      if (m <= means[j]) ++at_most;
      if (m >= means[j]) ++at_least;
    }
    const std::size_t half = (buckets + 1) / 2;
    CHECK(at_most >= half);
    CHECK(at_least >= half);
  }
}

TEST_CASE("bucket permutation moves the selected index consistently") {
  Rng rng(31);
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t buckets = 1 + rng.below(9);
    std::vector<double> means(buckets);
    for (auto& m : means) m = rng.next_double();
    const double value = means[select_median_bucket(means)];

    std::vector<double> shuffled = means;
    rng.shuffle(shuffled);
    CHECK(shuffled[select_median_bucket(shuffled)] == value);
  }
}

TEST_CASE("mom_objective hand value and lambda linearity") {
  auto data =
      DataMatrix::from_rows({{0.0, 0.0}, {2.0, 0.0}, {4.0, 0.0}, {6.0, 0.0}});
  auto part = BucketPartition::from_blocks({{0, 1}, {2, 3}}, 4);
  auto centroids = CentroidSet::from_rows({{0.0, 0.0}});
  CHECK(mom_objective(data, part, centroids, 1.0) == 3.0);

  const double at1 = mom_objective(data, part, centroids, 1.0);
  const double at2 = mom_objective(data, part, centroids, 2.0);
  CHECK(at2 - at1 == doctest::Approx(1.0 * centroids.k()));
}

TEST_CASE("L=1 reduction to the empirical objective") {
  Rng rng(41);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 2 + rng.below(30);
    const std::size_t p = 1 + rng.below(4);
    const std::size_t k = 1 + rng.below(4);
    std::vector<double> dv(n * p), cv(k * p);
    for (auto& x : dv) x = rng.next_double() * 8.0 - 4.0;
    for (auto& x : cv) x = rng.next_double() * 8.0 - 4.0;
    DataMatrix data(n, p, std::move(dv));
    CentroidSet centroids(p);
    DataMatrix cm(k, p, std::move(cv));
    for (std::size_t j = 0; j < k; ++j) centroids.push_back(cm.row(j));
    const double lambda = rng.next_double() * 3.0;
    const auto part = BucketPartition::single_block(n);
    const double lhs = mom_objective(data, part, centroids, lambda);
    const double rhs = empirical_objective(data, centroids) +
                       lambda * static_cast<double>(k);
    CHECK(std::abs(lhs - rhs) <= 1e-12);
  }
}

TEST_CASE("breakdown: a few huge outliers do not move the estimate") {
  // unit-variance sample, fewer than floor((L-1)/2) corrupted values
  const std::size_t n = 1000;
  const std::size_t buckets = 51;
  const std::size_t corrupt = 24;  // < floor(50/2) = 25
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    std::vector<double> v(n);
    for (auto& x : v) x = rng.normal();
    for (std::size_t i = 0; i < corrupt; ++i) v[rng.below(n)] = 1e6;
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(n);
    Rng part_rng = rng.split(7);
    const double mom = mom_estimate(v, buckets, part_rng);
    CHECK(std::abs(mom) < 0.5);
    CHECK(std::abs(mean) > 100.0);
  }
}

TEST_CASE("partition invariants from_blocks") {
  CHECK_THROWS_AS(BucketPartition::from_blocks({{0, 1}, {1, 2}}, 3), Error);
  CHECK_THROWS_AS(BucketPartition::from_blocks({{0}, {2}}, 3), Error);
  CHECK_THROWS_AS(BucketPartition::from_blocks({{0, 1, 2}, {3}}, 4), Error);
  auto ok = BucketPartition::from_blocks({{0, 2}, {1, 3}}, 4);
  CHECK(ok.bucket_count() == 2);
}

}  // TEST_SUITE
