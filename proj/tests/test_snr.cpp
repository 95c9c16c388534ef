#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "filterlens/errors.hpp"
#include "filterlens/snr.hpp"
#include "oracles.hpp"

using namespace filterlens;

TEST(Estimators, LayerTenRow) {
  const SnrEstimate e = estimate_snr(2.0, 2.6, 512, 100, 16.3);
  EXPECT_NEAR(e.signal, 26.624, 1e-9);
  EXPECT_NEAR(e.noise_internal, 26.624 / 99.0, 1e-12);
  EXPECT_NEAR(e.noise_external, 0.83456, 1e-12);
  EXPECT_NEAR(e.snr_external.value, 2.0 * 2.6 * 100 / 16.3, 1e-12);
  EXPECT_FALSE(e.snr_external.unbounded);
}

TEST(Estimators, SecondRow) {
  EXPECT_NEAR(signal_estimate(2.8, 5.1, 128, 100), 18.2784, 1e-9);
  EXPECT_NEAR(internal_noise_estimate(3.0, 64.0, 100), 128.0 / 99.0, 1e-12);
  EXPECT_NEAR(external_noise_estimate(552.4, 128, 100), 7.07072, 1e-9);
}

TEST(Estimators, SingletonClustersHaveNoInternalNoise) {
  EXPECT_EQ(internal_noise_estimate(1.0, 17.0, 10), 0.0);
}

TEST(Estimators, ZeroNoiseIsUnboundedNotSentinel) {
  const SnrValue v = snr_external(2.0, 2.0, 10, 0.0);
  EXPECT_TRUE(v.unbounded);
  EXPECT_TRUE(estimate_snr(2.0, 2.0, 4, 10, 0.0).snr_external.unbounded);
}

TEST(Estimators, InvalidArguments) {
  EXPECT_THROW(internal_noise_estimate(2.0, 1.0, 1), std::invalid_argument);
  EXPECT_THROW(signal_estimate(2.0, 1.0, 4, 0), std::invalid_argument);
  EXPECT_THROW(signal_estimate(-1.0, 1.0, 4, 4), std::invalid_argument);
  EXPECT_THROW(snr_external(1.0, 1.0, 4, -1.0), std::invalid_argument);
}

TEST(Estimators, ExternalRatioIdentity) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> cs(1.0, 12.0), nc(0.01, 20.0), n(0.001, 1000.0);
  std::uniform_int_distribution<std::size_t> nf(1, 4096), nl(2, 1000);
  for (int t = 0; t < 10000; ++t) {
    const double c = cs(rng), k = nc(rng), noise = n(rng);
    const std::size_t f = nf(rng), l = nl(rng);
    const long double expected = (static_cast<long double>(c) * k * f / l) / (static_cast<long double>(noise) * f / (static_cast<long double>(l) * l));
    const double got = snr_external(c, k, l, noise).value;
    EXPECT_LE(std::abs(got - static_cast<double>(expected)) / static_cast<double>(expected), 1e-12);
  }
}

TEST(Estimators, FromLayerStats) {
  LayerStats s;
  s.filters = 512;
  s.labels = 100;
  s.mean_noise = 16.3;
  s.mean_clusters_per_filter = 2.6;
  s.pooled_mean_cluster_size = 2.0;
  EXPECT_NEAR(estimate_snr(s).signal, 26.624, 1e-9);
  s.pooled_mean_cluster_size.reset();
  EXPECT_EQ(estimate_snr(s).signal, 0.0);
}

namespace {

std::vector<FilterAnalysis> random_layer(std::uint64_t seed, std::size_t filters, std::size_t labels, double threshold) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.4, 1.0);
  std::vector<FilterAnalysis> out;
  for (std::size_t f = 0; f < filters; ++f) {
    FieldMatrix m(labels);
    for (double& v : m.values()) v = u(rng);
    out.push_back(analyze_filter(m, threshold, ScanOrder::Forward, f));
  }
  return out;
}

double sum(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s;
}

}  // namespace

TEST(Breakdown, SingleFilterExample) {
  const auto a = analyze_filter(FieldMatrix::from_rows({{1, 0.9, 0.5}, {0.8, 1, 0}, {0, 0.4, 0.6}}));
  ASSERT_EQ(a.clusters.size(), 2u);  // {0,1}, {2}
  const std::vector<FilterAnalysis> v{a};
  const LabelBreakdown b = per_label_breakdown(v, BreakdownMode::Boolean);
  EXPECT_EQ(b.signal, (std::vector<double>{1, 1, 1}));
  EXPECT_EQ(b.noise_internal, (std::vector<double>{1, 1, 0}));
  EXPECT_EQ(b.noise_external, (std::vector<double>{1, 0, 1}));

  const LabelBreakdown f = per_label_breakdown(v, BreakdownMode::Field);
  EXPECT_DOUBLE_EQ(f.signal[2], 0.6);
  EXPECT_DOUBLE_EQ(f.noise_internal[0], 0.9);
  EXPECT_DOUBLE_EQ(f.noise_external[2], 0.4);
  EXPECT_DOUBLE_EQ(f.noise_external[1], 0.0);

  const LabelBreakdown all = per_label_breakdown(v, BreakdownMode::FieldAllElements);
  EXPECT_DOUBLE_EQ(all.noise_external[1], 0.0);
  EXPECT_DOUBLE_EQ(all.noise_external[2], 0.4);
}

TEST(Breakdown, BooleanTotalsMatchClusterCounts) {
  const auto layer = random_layer(29, 40, 12, 0.5);
  const LabelBreakdown b = per_label_breakdown(layer, BreakdownMode::Boolean);
  double sizes = 0, internal = 0, noise = 0, ones = 0;
  for (const auto& a : layer) {
    for (const auto& c : a.clusters) {
      sizes += static_cast<double>(c.size());
      internal += static_cast<double>(c.element_count() - c.size());
    }
    noise += static_cast<double>(a.noise);
    ones += static_cast<double>(a.ones_total);
  }
  EXPECT_EQ(sum(b.signal), sizes);
  EXPECT_EQ(sum(b.noise_internal), internal);
  EXPECT_EQ(sum(b.noise_external), noise);
  EXPECT_EQ(sum(b.signal) + sum(b.noise_internal) + sum(b.noise_external), ones);
}

TEST(Breakdown, MeanSignalEqualsEstimate) {
  const auto layer = random_layer(31, 64, 10, 0.4);
  const LayerStats s = aggregate_layer(layer, 10);
  const LabelBreakdown b = per_label_breakdown(layer, BreakdownMode::Boolean);
  EXPECT_NEAR(b.mean_signal(), estimate_snr(s).signal, 1e-12);
  EXPECT_NEAR(b.mean_noise_external(), s.mean_noise * 64 / 10.0, 1e-12);
}

TEST(Breakdown, FieldNeverExceedsBoolean) {
  const auto layer = random_layer(37, 16, 8, 0.3);
  const LabelBreakdown b = per_label_breakdown(layer, BreakdownMode::Boolean);
  const LabelBreakdown f = per_label_breakdown(layer, BreakdownMode::Field);
  for (std::size_t i = 0; i < 8; ++i) {
    EXPECT_LE(f.signal[i], b.signal[i]);
    EXPECT_LE(f.noise_internal[i], b.noise_internal[i]);
    EXPECT_LE(f.noise_external[i], b.noise_external[i]);
    EXPECT_GE(f.signal[i], 0.3 * b.signal[i]);
  }
}

TEST(Breakdown, CsvLayout) {
  LabelBreakdown b;
  b.signal = {1, 2};
  b.noise_internal = {0, 0.5};
  b.noise_external = {3, 4};
  std::ostringstream os;
  write_breakdown_csv(b, os);
  EXPECT_EQ(os.str(), "label,signal,noise_I,noise_E\n0,1,0,3\n1,2,0.5,4\n");
}

TEST(Breakdown, ModeText) {
  for (auto m : {BreakdownMode::Boolean, BreakdownMode::Field, BreakdownMode::FieldAllElements})
    EXPECT_EQ(parse_breakdown_mode(to_string(m)), m);
  EXPECT_FALSE(parse_breakdown_mode("fields").has_value());
}

TEST(Fit, EfficientNetStageNine) {
  const std::vector<ErrorPoint> pts{{10, 0.014}, {20, 0.027}, {40, 0.065}, {60, 0.085}, {100, 0.133}};
  const LinearFit f = fit_error_vs_k(pts);
  const oracle::Line o = oracle::least_squares(pts);
  EXPECT_NEAR(f.slope, static_cast<double>(o.slope), 1e-12);
  EXPECT_NEAR(f.intercept, static_cast<double>(o.intercept), 1e-12);
  EXPECT_NEAR(f.slope, 0.0013, 1e-4);
  EXPECT_GT(f.r_squared, 0.98);
}

TEST(Fit, VggLayerTen) {
  const std::vector<ErrorPoint> pts{{10, 0.069}, {20, 0.0885}, {40, 0.1433}, {60, 0.1725}, {100, 0.248}};
  const LinearFit f = fit_error_vs_k(pts);
  const oracle::Line o = oracle::least_squares(pts);
  EXPECT_NEAR(f.slope, static_cast<double>(o.slope), 1e-12);
  EXPECT_NEAR(f.intercept, static_cast<double>(o.intercept), 1e-12);
}

TEST(Fit, TwoPointsExact) {
  const std::vector<ErrorPoint> pts{{2, 0.1}, {4, 0.3}};
  const LinearFit f = fit_error_vs_k(pts);
  EXPECT_NEAR(f.slope, 0.1, 1e-15);
  EXPECT_NEAR(f.intercept, -0.1, 1e-15);
  EXPECT_EQ(f.r_squared, 1.0);
}

TEST(Fit, PermutationInvariant) {
  std::vector<ErrorPoint> pts{{10, 0.069}, {20, 0.0885}, {40, 0.1433}, {60, 0.1725}, {100, 0.248}, {20, 0.09}};
  const LinearFit base = fit_error_vs_k(pts);
  std::mt19937_64 rng(41);
  for (int t = 0; t < 20; ++t) {
    std::shuffle(pts.begin(), pts.end(), rng);
    const LinearFit f = fit_error_vs_k(pts);
    EXPECT_EQ(f.slope, base.slope);
    EXPECT_EQ(f.intercept, base.intercept);
  }
}

TEST(Fit, NeedsTwoDistinctK) {
  const std::vector<ErrorPoint> one{{10, 0.1}};
  const std::vector<ErrorPoint> same{{10, 0.1}, {10, 0.2}};
  EXPECT_THROW(fit_error_vs_k(one), std::invalid_argument);
  EXPECT_THROW(fit_error_vs_k(same), std::invalid_argument);
}

TEST(Fit, ReadsCsvWithOptionalHeader) {
  std::istringstream with("K,error\n10,0.014\n20,0.027\n");
  std::istringstream without("10, 0.014\r\n\n20,0.027\n");
  const auto a = read_error_points_csv(with), b = read_error_points_csv(without);
  ASSERT_EQ(a.size(), 2u);
  ASSERT_EQ(b.size(), 2u);
  EXPECT_EQ(a[1].labels, 20);
  EXPECT_EQ(b[0].error, 0.014);
}

TEST(Fit, CsvErrors) {
  std::istringstream bad("10,0.1\nx,y\n");
  EXPECT_THROW(read_error_points_csv(bad), CsvError);
  std::istringstream range("10,1.5\n");
  EXPECT_THROW(read_error_points_csv(range), CsvError);
}
