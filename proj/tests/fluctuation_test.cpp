#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numbers>

#include "fpp/fluctuation.hpp"
#include "oracle.hpp"

using namespace fpp;

namespace {

// Weights given edge by edge; doubles only.
struct TableField {
  std::map<std::pair<Vertex, int>, double> w;
  std::optional<Quantization> q;

  double weight(EdgeId e) const { return w.at({e.base, static_cast<int>(e.axis)}); }
  double weight(Vertex a, Vertex b) const { return weight(edge_between(a, b)); }
  std::int64_t ticks(EdgeId) const { return 0; }
  const std::optional<Quantization>& quantization() const { return q; }
  double min_weight() const { return 0.0; }
};

std::vector<FluctuationSample> synthetic(const std::vector<int>& ns, auto&& h) {
  std::vector<FluctuationSample> out;
  for (int n : ns) {
    for (int r = 0; r < 3; ++r) out.push_back({n, h(n), r, 0});
  }
  return out;
}

}  // namespace

TEST(Transversal, DistanceExamples) {
  OptimalVertexSet on_axis;
  on_axis.members = {{0, 0}, {1, 0}, {2, 0}};
  EXPECT_EQ(transversal_fluctuation(on_axis, {1.0, 0.0}), 0.0);
  OptimalVertexSet diag;
  diag.members = {{0, 0}, {1, 1}};
  EXPECT_DOUBLE_EQ(transversal_fluctuation(diag, {1.0, 0.0}), 1.0);
  EXPECT_THROW(transversal_fluctuation(OptimalVertexSet{}, {1.0, 0.0}), std::invalid_argument);
}

TEST(Transversal, MatchesEnumeratedOptimalPaths) {
  const Region box{0, 4, 0, 4};
  for (int seed = 0; seed < 10; ++seed) {
    const WeightField f(DistributionSpec::durrett_liggett(0.6, 5.0), seed, 0);
    const auto m = optimal_vertex_set(f, box, {0, 0}, {4, 4});
    double want = 0.0;
    for (const Vertex v : oracle::optimal_path_union(f, box, {0, 0}, {4, 4})) {
      want = std::max(want, std::abs(v.x - v.y) / std::numbers::sqrt2);
    }
    EXPECT_NEAR(transversal_fluctuation(m, {1.0, std::numbers::pi / 4}), want, 1e-12);
  }
}

TEST(SampleFluctuations, ConstantAxisIsZero) {
  const std::vector<int> ns{8, 16, 32};
  const auto s = sample_fluctuations(DistributionSpec::constant(1.0), {1.0, 0.0}, ns, 2, 5);
  ASSERT_EQ(s.size(), 6u);
  for (const auto& x : s) EXPECT_EQ(x.hn, 0.0);
  EXPECT_THROW(estimate_xi(s), DegenerateFit);
}

TEST(SampleFluctuations, RejectsBadArguments) {
  const std::vector<int> ns{8, 16};
  EXPECT_THROW(sample_fluctuations(DistributionSpec::constant(1.0), {1.0, 0.0}, ns, 0, 5), std::invalid_argument);
  const std::vector<int> unsorted{16, 8};
  EXPECT_THROW(sample_fluctuations(DistributionSpec::constant(1.0), {1.0, 0.0}, unsorted, 1, 5),
               std::invalid_argument);
  EXPECT_THROW(sample_fluctuations(DistributionSpec::constant(1.0), {1.0, 2.0}, ns, 1, 5), std::invalid_argument);
}

TEST(SampleFluctuations, ReproducibleAndThreadInvariant) {
  const std::vector<int> ns{64, 128};
  const auto spec = DistributionSpec::durrett_liggett(0.8, 5.0);
  const Direction dir{1.0, std::numbers::pi / 4};
  const auto a = sample_fluctuations(spec, dir, ns, 5, 99);
  const auto b = sample_fluctuations(spec, dir, ns, 5, 99);
  const auto c = sample_fluctuations(spec, dir, ns, 5, 99, {4, {}});
  ASSERT_EQ(a.size(), 10u);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, c);
  const auto d = sample_fluctuations(spec, dir, ns, 5, 100);
  EXPECT_NE(a, d);
  for (const auto& s : a) {
    EXPECT_GE(s.hn, 0.0);
    EXPECT_LE(s.hn, 1.0 + 2.0 * s.n);
  }
}

TEST(EstimateXi, ExactPowerLaws) {
  const std::vector<int> ns{10, 100, 1000};
  EXPECT_NEAR(estimate_xi(synthetic(ns, [](int n) { return double(n); })).exponent, 1.0, 1e-12);
  EXPECT_NEAR(estimate_xi(synthetic(ns, [](int n) { return std::sqrt(n); })).exponent, 0.5, 1e-12);
}

TEST(EstimateXi, NoisyPowerLaw) {
  const std::vector<int> ns{16, 32, 64, 128, 256, 512, 1024};
  int k = 0;
  const auto s = synthetic(ns, [&](int n) { return std::sqrt(n) * (1.0 + 0.1 * ((k++ / 3) % 2 ? 1 : -1)); });
  EXPECT_NEAR(estimate_xi(s).exponent, 0.5, 0.05);
}

TEST(EstimateXi, ScaleChangesInterceptOnly) {
  const std::vector<int> ns{10, 30, 90, 270};
  const auto a = estimate_xi(synthetic(ns, [](int n) { return std::pow(n, 0.7); }));
  const auto b = estimate_xi(synthetic(ns, [](int n) { return 5.0 * std::pow(n, 0.7); }));
  EXPECT_NEAR(a.exponent, b.exponent, 1e-12);
  EXPECT_NEAR(b.intercept - a.intercept, std::log(5.0), 1e-12);
}

TEST(EstimateXi, NeedsThreePositiveMedians) {
  const std::vector<int> ns{10, 100};
  EXPECT_THROW(estimate_xi(synthetic(ns, [](int n) { return double(n); })), DegenerateFit);
}

TEST(VarianceScan, ZeroForDegenerateLaws) {
  const std::vector<int> ns{8, 16, 32};
  for (const auto& spec : {DistributionSpec::constant(1.0), DistributionSpec::durrett_liggett(1.0, 5.0)}) {
    for (const auto& v : variance_scan(spec, {1.0, 0.3}, ns, 30, 1)) EXPECT_EQ(v.variance, 0.0);
  }
  EXPECT_THROW(variance_scan(DistributionSpec::constant(1.0), {1.0, 0.3}, ns, 29, 1), std::invalid_argument);
}

TEST(VarianceScan, MonteCarloMatchesFullEnumeration) {
  // T((0,0),(2,2)) inside [0,2]^2 under DURRETT_LIGGETT(0.9, 5): all 2^12 configurations.
  const Region box{0, 2, 0, 2};
  std::vector<std::pair<Vertex, int>> edges;
  for (int x = 0; x <= 2; ++x) {
    for (int y = 0; y <= 2; ++y) {
      if (x < 2) edges.push_back({{x, y}, 0});
      if (y < 2) edges.push_back({{x, y}, 1});
    }
  }
  ASSERT_EQ(edges.size(), 12u);
  const double p = 0.9;
  double m1 = 0.0, m2 = 0.0;
  std::vector<std::pair<double, double>> dist;  // (T, probability)
  for (unsigned mask = 0; mask < (1u << 12); ++mask) {
    TableField f;
    double prob = 1.0;
    for (std::size_t i = 0; i < edges.size(); ++i) {
      const bool low = (mask >> i) & 1u;
      f.w[edges[i]] = low ? 1.0 : 5.0;
      prob *= low ? p : 1.0 - p;
    }
    const double t = oracle::passage_times(f, box, {0, 0})[box.index({2, 2})];
    dist.emplace_back(t, prob);
    m1 += prob * t;
    m2 += prob * t * t;
  }
  const double var = m2 - m1 * m1;
  double m4 = 0.0;
  for (const auto& [t, prob] : dist) m4 += prob * std::pow(t - m1, 4);

  const int reps = 20000;
  std::vector<double> ts;
  for (int r = 0; r < reps; ++r) {
    const WeightField f(DistributionSpec::durrett_liggett(p, 5.0), derive_seed(7, "enum", 2, r), r);
    ts.push_back(passage_time(f, box, {0, 0}, {2, 2}));
  }
  const auto pt = summarize(2, ts);
  const double se = std::sqrt((m4 - var * var) / reps);
  EXPECT_NEAR(pt.variance, var, 3.0 * se);
  EXPECT_NEAR(pt.mean, m1, 3.0 * std::sqrt(var / reps));
}

TEST(EstimateChi, SyntheticVariances) {
  auto scan = [](auto&& v) {
    std::vector<VariancePoint> out;
    for (int n : {16, 64, 256, 1024}) out.push_back({n, 0.0, v(n), 100});
    return out;
  };
  EXPECT_NEAR(estimate_chi(scan([](int n) { return double(n); })).exponent, 0.5, 1e-12);
  EXPECT_NEAR(estimate_chi(scan([](int) { return 3.0; })).exponent, 0.0, 1e-12);
  EXPECT_NEAR(estimate_chi(scan([](int n) { return std::pow(n, 2.0 / 3.0); })).exponent, 1.0 / 3.0, 0.02);
}
