#include <gtest/gtest.h>

#include <random>

#include "filterlens/cluster.hpp"
#include "filterlens/errors.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace filterlens;

namespace {

std::vector<Cluster> clusters_of(std::initializer_list<std::vector<std::size_t>> lists) {
  std::vector<Cluster> out;
  for (const auto& l : lists) out.push_back(Cluster{l});
  return out;
}

void expect_valid(const BooleanMatrix& bits, const std::vector<Cluster>& clusters) {
  std::vector<int> seen(bits.side(), 0);
  for (const Cluster& c : clusters) {
    ASSERT_FALSE(c.labels.empty());
    EXPECT_TRUE(oracle::full_block(bits, c.labels));
    for (std::size_t l : c.labels) ++seen[l];
  }
  for (std::size_t i = 0; i < bits.side(); ++i) EXPECT_EQ(seen[i], bits(i, i) ? 1 : 0) << "label " << i;
  std::size_t elements = 0;
  for (const Cluster& c : clusters) elements += c.element_count();
  EXPECT_EQ(external_noise(bits, clusters) + elements, bits.count_ones());
  EXPECT_EQ(external_noise(bits, clusters), oracle::noise_by_cells(bits, clusters));
}

FilterAnalysis blank(std::size_t labels) {
  FilterAnalysis a;
  a.normalized = FieldMatrix(labels);
  a.clipped = BooleanMatrix(labels);
  return a;
}

}  // namespace

TEST(Normalize, DividesByMax) {
  EXPECT_EQ(normalize(FieldMatrix::from_rows({{2, 1}, {0, -1}})), FieldMatrix::from_rows({{1, 0.5}, {0, -0.5}}));
}

TEST(Normalize, MaxOneUnchanged) {
  const auto m = FieldMatrix::from_rows({{1, 0.25}, {-3, 0.5}});
  EXPECT_EQ(normalize(m), m);
}

TEST(Normalize, PositiveScaleCancels) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int t = 0; t < 200; ++t) {
    FieldMatrix m(6);
    for (double& v : m.values()) v = u(rng);
    m(rng() % 6, rng() % 6) = 0.9;
    for (double c : {0.5, 2.0, 4.0, 1024.0}) EXPECT_EQ(normalize(c * m), normalize(m));
  }
}

TEST(Normalize, NonPositiveMaxIsDegenerate) {
  const auto m = FieldMatrix::from_rows({{-1, -2}, {-3, -0.5}});
  EXPECT_TRUE(is_degenerate(m));
  EXPECT_EQ(normalize(m), FieldMatrix(2));
}

TEST(Clip, StrictAtBoundary) {
  EXPECT_EQ(clip(FieldMatrix::from_rows({{1, 0.3}, {0.31, -0.5}}), 0.3), BooleanMatrix::from_rows({{1, 0}, {1, 0}}));
}

TEST(Clip, AllBelowThresholdIsEmpty) {
  EXPECT_EQ(clip(FieldMatrix::from_rows({{0.3, 0.1}, {0.2, -1}}), 0.3).count_ones(), 0u);
}

TEST(Clip, DefaultThreshold) { EXPECT_EQ(kDefaultThreshold, 0.3); }

TEST(Clip, RaisingThresholdNeverAddsOnes) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int t = 0; t < 100; ++t) {
    FieldMatrix m(7);
    for (double& v : m.values()) v = u(rng);
    std::size_t prev = clip(m, -1.0).count_ones();
    for (double th = -0.9; th <= 1.0; th += 0.1) {
      const std::size_t ones = clip(m, th).count_ones();
      EXPECT_LE(ones, prev);
      prev = ones;
    }
  }
}

TEST(FindClusters, IdentityGivesSingletons) {
  const auto bits = BooleanMatrix::from_rows({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
  const auto c = find_clusters(bits);
  EXPECT_EQ(c, clusters_of({{0}, {1}, {2}}));
  EXPECT_EQ(external_noise(bits, c), 0u);
}

TEST(FindClusters, AllOnesIsOneCluster) {
  const auto bits = BooleanMatrix::from_rows({{1, 1, 1}, {1, 1, 1}, {1, 1, 1}});
  const auto c = find_clusters(bits);
  EXPECT_EQ(c, clusters_of({{0, 1, 2}}));
  EXPECT_EQ(external_noise(bits, c), 0u);
}

TEST(FindClusters, FourByFourExample) {
  const auto bits = BooleanMatrix::from_rows({{1, 1, 0, 1}, {1, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 0}});
  const auto c = find_clusters(bits);
  EXPECT_EQ(c, clusters_of({{0, 1}, {2}}));
  EXPECT_EQ(external_noise(bits, c), 1u);
  const auto maximal = oracle::maximal_block_partitions(bits);
  ASSERT_EQ(maximal.size(), 1u);
  EXPECT_EQ(maximal.front(), oracle::as_partition(c));
}

TEST(FindClusters, EarliestCreatedClusterWins) {
  // Label 2 could complete either {0} or {1}; 0 and 1 are incompatible with each other.
  const auto bits = BooleanMatrix::from_rows({{1, 0, 1}, {0, 1, 1}, {1, 1, 1}});
  EXPECT_EQ(find_clusters(bits, ScanOrder::Forward), clusters_of({{0, 2}, {1}}));
  // Reverse scan seeds {2} first, then 1 joins it.
  EXPECT_EQ(oracle::as_partition(find_clusters(bits, ScanOrder::Reverse)), (oracle::Partition{{0}, {1, 2}}));
}

TEST(FindClusters, AsymmetricPairDoesNotJoin) {
  const auto bits = BooleanMatrix::from_rows({{1, 1}, {0, 1}});
  EXPECT_EQ(find_clusters(bits), clusters_of({{0}, {1}}));
}

TEST(FindClusters, OffDiagonalOnesAloneCreateNothing) {
  const auto bits = BooleanMatrix::from_rows({{0, 1, 1}, {1, 0, 1}, {1, 1, 0}});
  EXPECT_TRUE(find_clusters(bits).empty());
  EXPECT_EQ(external_noise(bits, {}), 6u);
}

TEST(FindClusters, ExhaustiveSideUpToThreeBothOrders) {
  for (std::size_t side = 1; side <= 3; ++side) {
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << (side * side)); ++mask) {
      const auto bits = oracle::from_mask(side, mask);
      for (ScanOrder o : {ScanOrder::Forward, ScanOrder::Reverse}) {
        const auto c = find_clusters(bits, o);
        expect_valid(bits, c);
        const auto maximal = oracle::maximal_block_partitions(bits);
        EXPECT_NE(std::find(maximal.begin(), maximal.end(), oracle::as_partition(c)), maximal.end());
        if (maximal.size() == 1) {
          EXPECT_EQ(oracle::as_partition(c), maximal.front());
        }
      }
    }
  }
}

TEST(ExternalNoise, RejectsInconsistentClusters) {
  const auto bits = BooleanMatrix::from_rows({{1, 1, 0}, {0, 1, 0}, {0, 0, 1}});
  EXPECT_THROW(external_noise(bits, clusters_of({{0, 1}})), IntegrityError);       // block not full
  EXPECT_THROW(external_noise(bits, clusters_of({{0}, {0}})), IntegrityError);     // overlap
  EXPECT_THROW(external_noise(bits, clusters_of({{3}})), IntegrityError);          // out of range
  EXPECT_THROW(external_noise(bits, std::vector<Cluster>{Cluster{}}), IntegrityError);  // empty
  EXPECT_EQ(external_noise(bits, clusters_of({{0}, {1}, {2}})), 1u);
}

TEST(AnalyzeFilter, ZeroMatrixIsDegenerate) {
  const auto a = analyze_filter(FieldMatrix(4));
  EXPECT_TRUE(a.degenerate);
  EXPECT_TRUE(a.clusters.empty());
  EXPECT_EQ(a.noise, 0u);
}

TEST(AnalyzeFilter, SingleEntry) {
  FieldMatrix m(8);
  m(5, 5) = 1.0;
  const auto a = analyze_filter(m);
  EXPECT_EQ(a.clusters, clusters_of({{5}}));
  EXPECT_EQ(a.noise, 0u);
  EXPECT_EQ(a.ones_total, 1u);
}

TEST(AnalyzeFilter, ScaleInvariance) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-0.5, 1.0);
  for (int t = 0; t < 200; ++t) {
    FieldMatrix m(6);
    for (double& v : m.values()) v = u(rng);
    const auto base = analyze_filter(m, 0.3, ScanOrder::Forward, 2);
    for (double c : {0.25, 64.0}) EXPECT_EQ(analyze_filter(c * m, 0.3, ScanOrder::Forward, 2), base);
    const auto scaled = analyze_filter(3.0 * m, 0.3, ScanOrder::Forward, 2);
    EXPECT_EQ(scaled.clipped, base.clipped);
    EXPECT_EQ(scaled.clusters, base.clusters);
    EXPECT_EQ(scaled.noise, base.noise);
  }
}

TEST(AnalyzeLayer, ParallelMatchesSerial) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-0.3, 1.0);
  FieldBundle b{"l", 12, 97, 4, {}};
  for (std::size_t f = 0; f < b.filters; ++f) {
    FieldMatrix m(b.labels);
    for (double& v : m.values()) v = u(rng);
    b.matrices.push_back(std::move(m));
  }
  for (ScanOrder o : {ScanOrder::Forward, ScanOrder::Reverse}) {
    EXPECT_EQ(analyze_layer(b, 0.45, o), analyze_layer_serial(b, 0.45, o));
  }
}

TEST(AnalyzeLayer, RejectsInvalidInputBeforeWork) {
  FieldBundle b{"bad", 3, 2, 1, {FieldMatrix(3)}};
  EXPECT_THROW(analyze_layer(b), std::invalid_argument);
  FieldBundle ok{"ok", 3, 1, 1, {FieldMatrix(3)}};
  EXPECT_THROW(analyze_layer(ok, std::nan("")), std::invalid_argument);
}

TEST(AggregateLayer, MeanNoise) {
  FilterAnalysis a = blank(5), b = blank(5);
  a.noise = 2;
  b.noise = 4;
  const std::vector<FilterAnalysis> v{a, b};
  EXPECT_EQ(aggregate_layer(v, 5).mean_noise, 3.0);
}

TEST(AggregateLayer, PooledClusterSize) {
  FilterAnalysis a = blank(8), b = blank(8);
  a.clusters = clusters_of({{0, 1}, {2, 3}});
  b.clusters = clusters_of({{4, 5, 6}});
  const std::vector<FilterAnalysis> v{a, b};
  const LayerStats s = aggregate_layer(v, 8);
  EXPECT_EQ(s.mean_clusters_per_filter, 1.5);
  ASSERT_TRUE(s.pooled_mean_cluster_size.has_value());
  EXPECT_DOUBLE_EQ(*s.pooled_mean_cluster_size, 7.0 / 3.0);
  EXPECT_EQ(s.total_clusters, 3u);
}

TEST(AggregateLayer, FiltersWithoutClustersCountOnlyTowardNc) {
  FilterAnalysis a = blank(3), b = blank(3);
  a.clusters = clusters_of({{0, 1}});
  const std::vector<FilterAnalysis> v{a, b};
  const LayerStats s = aggregate_layer(v, 3);
  EXPECT_EQ(s.mean_clusters_per_filter, 0.5);
  EXPECT_EQ(*s.pooled_mean_cluster_size, 2.0);
  const std::vector<FilterAnalysis> none{b, b};
  EXPECT_FALSE(aggregate_layer(none, 3).pooled_mean_cluster_size.has_value());
}

TEST(AggregateLayer, EmptyInputThrows) {
  EXPECT_THROW(aggregate_layer(std::vector<FilterAnalysis>{}, 3), std::invalid_argument);
}

TEST(AggregateLayer, DuplicatingFiltersLeavesStatsUnchanged) {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> u(-0.3, 1.0);
  std::vector<FilterAnalysis> v;
  for (std::size_t f = 0; f < 20; ++f) {
    FieldMatrix m(9);
    for (double& x : m.values()) x = u(rng);
    v.push_back(analyze_filter(m, 0.5, ScanOrder::Forward, f));
  }
  std::vector<FilterAnalysis> twice = v;
  twice.insert(twice.end(), v.begin(), v.end());
  const LayerStats a = aggregate_layer(v, 9), b = aggregate_layer(twice, 9);
  EXPECT_DOUBLE_EQ(a.mean_noise, b.mean_noise);
  EXPECT_DOUBLE_EQ(a.mean_clusters_per_filter, b.mean_clusters_per_filter);
  EXPECT_DOUBLE_EQ(*a.pooled_mean_cluster_size, *b.pooled_mean_cluster_size);
}

TEST(AggregateLayer, LayerTenFixture) {
  const auto analyses = analyze_layer(fixture::layer_ten());
  std::size_t noise = 0;
  for (const auto& a : analyses) {
    noise += a.noise;
    for (const auto& c : a.clusters) ASSERT_EQ(c.size(), 2u);
  }
  EXPECT_EQ(noise, 8346u);
  const LayerStats s = aggregate_layer(analyses, 100);
  EXPECT_NEAR(s.mean_noise, 16.3, 0.01);
  EXPECT_NEAR(s.mean_clusters_per_filter, 2.6, 0.001);
  EXPECT_EQ(*s.pooled_mean_cluster_size, 2.0);
  EXPECT_EQ(s.total_clusters, 1331u);
}

TEST(ScanOrderText, RoundTrip) {
  for (ScanOrder o : {ScanOrder::Forward, ScanOrder::Reverse}) EXPECT_EQ(parse_scan_order(to_string(o)), o);
  EXPECT_FALSE(parse_scan_order("sideways").has_value());
}
