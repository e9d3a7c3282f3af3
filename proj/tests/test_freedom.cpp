#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "liberum/freedom.hpp"
#include "liberum/random.hpp"

using namespace liberum;

namespace {

constexpr int kCases = 1000;

std::vector<double> random_values(Rng& rng, std::size_t n, double scale) {
  std::vector<double> v(n);
  for (double& x : v) x = scale * (2.0 * uniform01(rng) - 1.0);
  return v;
}

std::size_t random_size(Rng& rng) { return 1 + uniform_index(rng, 12); }

std::size_t argmax_of(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

// --- normalize -------------------------------------------------------------

TEST(Normalize, EqualValuesAreUniform) {
  const auto p = normalize(ActionValues({0.0, 0.0}), 1.0);
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_DOUBLE_EQ(p[1], 0.5);

  const auto q = normalize(ActionValues({5, 5, 5, 5}), 0.1);
  for (double x : q.probs()) EXPECT_DOUBLE_EQ(x, 0.25);
}

TEST(Normalize, MatchesHighPrecisionReference) {
  // Reference values evaluated at 40 significant digits.
  const auto p = normalize(ActionValues({1, 2, 3}), 1.0);
  EXPECT_NEAR(p[0], 0.09003057317038046, 1e-12);
  EXPECT_NEAR(p[1], 0.24472847105479767, 1e-12);
  EXPECT_NEAR(p[2], 0.6652409557748219, 1e-12);
}

TEST(Normalize, SurvivesHugeValues) {
  const auto p = normalize(ActionValues({1e300, 1e300 - 1e285, -1e300}), 1.0);
  double s = 0.0;
  for (double x : p.probs()) {
    EXPECT_TRUE(std::isfinite(x));
    s += x;
  }
  EXPECT_NEAR(s, 1.0, 1e-12);
}

TEST(Normalize, RejectsBadInput) {
  EXPECT_THROW(ActionValues({}), InvalidInput);
  EXPECT_THROW(ActionValues({0.0, std::nan("")}), InvalidInput);
  EXPECT_THROW(ActionValues({0.0, INFINITY}), InvalidInput);
  EXPECT_THROW(ActionValues({0.0, 1.0}, {3, 3}), InvalidInput);
  EXPECT_THROW(normalize(ActionValues({0.0}), 0.0), InvalidInput);
  EXPECT_THROW(normalize(ActionValues({0.0}), -1.0), InvalidInput);
}

TEST(Normalize, KeepsActionIdsAndTemperature) {
  const auto p = normalize(ActionValues({1.0, 0.0}, {7, 9}), 2.5);
  EXPECT_EQ(p.action_ids(), (std::vector<ActionId>{7, 9}));
  EXPECT_DOUBLE_EQ(p.temperature(), 2.5);
}

TEST(ActionDistribution, Validates) {
  EXPECT_NO_THROW(ActionDistribution({0.3, 0.7}));
  EXPECT_THROW(ActionDistribution({0.3, 0.6}), InvalidInput);
  EXPECT_THROW(ActionDistribution({-0.1, 1.1}), InvalidInput);
  EXPECT_THROW(ActionDistribution({1.0}, 0.0), InvalidInput);
  EXPECT_THROW(ActionDistribution({}), InvalidInput);
}

// --- entropy ---------------------------------------------------------------

TEST(Entropy, Examples) {
  EXPECT_DOUBLE_EQ(entropy_bits(ActionDistribution({0.5, 0.5})), 1.0);
  EXPECT_NEAR(entropy_bits(ActionDistribution({0.99, 0.01})), 0.08079313589591118, 1e-12);
  EXPECT_NEAR(entropy_bits(ActionDistribution({0.99, 0.01})), 0.0808, 5e-4);
  EXPECT_DOUBLE_EQ(entropy_bits(ActionDistribution({1.0, 0.0})), 0.0);
  EXPECT_DOUBLE_EQ(entropy_bits(ActionDistribution({0.25, 0.25, 0.25, 0.25})), 2.0);
}

TEST(ValueFreedom, Examples) {
  EXPECT_DOUBLE_EQ(value_freedom(ActionValues({0, 0}), 1.0), 1.0);
  EXPECT_DOUBLE_EQ(value_freedom(ActionValues({7}), 1.0), 0.0);
  const auto q = values_for_distribution(ActionDistribution({0.99, 0.01}), 1.0);
  EXPECT_NEAR(q[0], 0.0, 1e-15);
  EXPECT_NEAR(q[1], -4.59511985013459, 1e-12);
  EXPECT_NEAR(value_freedom(q, 1.0), 0.08079313589591118, 1e-12);
  // softmax([0, 5]) and softmax([10, -10]), reference entropies.
  EXPECT_NEAR(value_freedom(ActionValues({0, 5}), 1.0), 0.05796691415246621, 1e-12);
  EXPECT_NEAR(value_freedom(ActionValues({10, -10}), 1.0), 6.2446e-8, 1e-11);
  EXPECT_NEAR(value_freedom(ActionValues({0, 10}), 1.0), 7.2045e-4, 1e-7);
}

TEST(ValueFreedom, InverseRejectsZeroProbability) {
  EXPECT_THROW(values_for_distribution(ActionDistribution({1.0, 0.0})), InvalidInput);
}

// --- historic freedom --------------------------------------------------------

TEST(HistoricFreedom, Examples) {
  EXPECT_DOUBLE_EQ(historic_freedom(std::vector<double>{1.0, 0.0, 0.5}), 0.5);
  EXPECT_DOUBLE_EQ(historic_freedom(std::vector<double>{0.8}, std::vector<double>{4.0}), 0.8);
  EXPECT_DOUBLE_EQ(historic_freedom(std::vector<double>{1.0, 0.0}, std::vector<double>{3.0, 1.0}), 0.75);
}

TEST(HistoricFreedom, Errors) {
  EXPECT_THROW(historic_freedom(std::vector<double>{1.0}, std::vector<double>{1.0, 1.0}), InvalidInput);
  EXPECT_THROW(historic_freedom(std::vector<double>{1.0, 2.0}, std::vector<double>{0.0, 0.0}), InvalidInput);
  EXPECT_THROW(historic_freedom(std::vector<double>{1.0}, std::vector<double>{-1.0}), InvalidInput);
  EXPECT_THROW(historic_freedom(std::vector<double>{}), InvalidInput);
}

TEST(HistoricFreedom, RecencyWeights) {
  EXPECT_EQ(recency_weights(3, 1.0), (std::vector<double>{1, 1, 1}));
  EXPECT_EQ(recency_weights(3, 0.5), (std::vector<double>{0.25, 0.5, 1}));
  EXPECT_THROW(recency_weights(2, 0.0), InvalidInput);
  EXPECT_THROW(recency_weights(2, 1.5), InvalidInput);
}

// --- effective freedom ---------------------------------------------------------

TEST(EffectiveFreedom, Examples) {
  const std::vector<std::vector<double>> two_same_one_other = {{1, 0}, {1, 0}, {0, 1}};
  EXPECT_NEAR(effective_freedom(ActionValues({0, 0, 0}), two_same_one_other, 1.0, 0.0), 0.9182958340544896,
              1e-12);
  EXPECT_NEAR(value_freedom(ActionValues({0, 0, 0})), std::log2(3.0), 1e-12);

  EXPECT_DOUBLE_EQ(effective_freedom(ActionValues({0, 0}), {{0.5, 0.5}, {0.5, 0.5}}, 1.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(effective_freedom(ActionValues({0, 0}), {{1, 0}, {0, 1}}, 1.0, 0.0), 1.0);
}

TEST(EffectiveFreedom, EpsilonControlsMerging) {
  // Distance 0.125 is exact in binary.
  const std::vector<std::vector<double>> d = {{0.5, 0.5}, {0.625, 0.375}};
  EXPECT_DOUBLE_EQ(effective_freedom(ActionValues({0, 0}), d, 1.0, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(effective_freedom(ActionValues({0, 0}), d, 1.0, 0.0625), 1.0);
  EXPECT_DOUBLE_EQ(effective_freedom(ActionValues({0, 0}), d, 1.0, 0.125), 0.0);
}

TEST(EffectiveFreedom, GroupingIsCompleteLinkageInActionOrder) {
  // 0~1 and 1~2 within 0.1, but 0 and 2 are 0.16 apart: {0,1}, {2}.
  const std::vector<std::vector<double>> d = {{0.5, 0.5}, {0.58, 0.42}, {0.66, 0.34}};
  const auto groups = group_by_outcome(d, 0.1);
  ASSERT_EQ(groups.size(), 2u);
  EXPECT_EQ(groups[0], (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(groups[1], (std::vector<std::size_t>{2}));
}

TEST(EffectiveFreedom, Errors) {
  EXPECT_THROW(effective_freedom(ActionValues({0, 0}), {{0.5, 0.4}, {1, 0}}, 1.0, 0.0), InvalidInput);
  EXPECT_THROW(effective_freedom(ActionValues({0, 0}), {{1, 0}}, 1.0, 0.0), InvalidInput);
  EXPECT_THROW(effective_freedom(ActionValues({0, 0}), {{1, 0}, {1}}, 1.0, 0.0), InvalidInput);
  EXPECT_THROW(effective_freedom(ActionValues({0, 0}), {{1, 0}, {0, 1}}, 1.0, 1.5), InvalidInput);
}

// --- estimate quality ---------------------------------------------------------

TEST(EstimateQuality, Examples) {
  EXPECT_DOUBLE_EQ(estimate_quality(ActionValues({1, 2, 3}), ActionValues({10, 20, 30})), 1.0);
  EXPECT_DOUBLE_EQ(estimate_quality(ActionValues({3, 2, 1}), ActionValues({1, 2, 3})), -1.0);
  EXPECT_NEAR(estimate_quality(ActionValues({1, 2, 3, 4}), ActionValues({1, 2, 4, 3})), 4.0 / 6.0, 1e-12);
}

TEST(EstimateQuality, Errors) {
  EXPECT_THROW(estimate_quality(ActionValues({1}), ActionValues({1})), InvalidInput);
  EXPECT_THROW(estimate_quality(ActionValues({1, 2}), ActionValues({1, 2, 3})), InvalidInput);
}

TEST(FreedomReport, Consistency) {
  EXPECT_TRUE((FreedomReport{1.0, 0.5, 1.0, 1.0, 2}.consistent()));
  EXPECT_FALSE((FreedomReport{1.2, 0.5, 1.0, 1.0, 2}.consistent()));
  EXPECT_FALSE((FreedomReport{0.5, 0.5, 0.9, 1.0, 2}.consistent()));
}

// --- properties (1000 random cases each) -----------------------------------------

TEST(Properties, Normalization) {
  Rng rng(101);
  for (int i = 0; i < kCases; ++i) {
    const auto q = random_values(rng, random_size(rng), 50.0);
    const double T = 0.01 + 10.0 * uniform01(rng);
    const auto p = normalize(ActionValues(q), T);
    double s = 0.0;
    for (double x : p.probs()) {
      ASSERT_GE(x, 0.0);
      s += x;
    }
    ASSERT_NEAR(s, 1.0, 1e-9);
    // Monotone in the values.
    for (std::size_t a = 0; a < q.size(); ++a)
      for (std::size_t b = 0; b < q.size(); ++b)
        if (q[a] < q[b]) {
          ASSERT_LE(p[a], p[b]);
        }
  }
}

TEST(Properties, EntropyBounds) {
  Rng rng(202);
  for (int i = 0; i < kCases; ++i) {
    const std::size_t n = random_size(rng);
    const auto q = random_values(rng, n, 5.0);
    const double h = value_freedom(ActionValues(q), 0.1 + 3.0 * uniform01(rng));
    ASSERT_GE(h, 0.0);
    ASSERT_LE(h, std::log2(static_cast<double>(n)) + 1e-9);
    const double uniform = value_freedom(ActionValues(std::vector<double>(n, q[0])), 1.0);
    ASSERT_NEAR(uniform, std::log2(static_cast<double>(n)), 1e-9);
  }
}

TEST(Properties, ShiftInvariance) {
  Rng rng(303);
  for (int i = 0; i < kCases; ++i) {
    const auto q = random_values(rng, random_size(rng), 20.0);
    const double b = 100.0 * (2.0 * uniform01(rng) - 1.0);
    const double T = 0.1 + 5.0 * uniform01(rng);
    auto shifted = q;
    for (double& x : shifted) x += b;
    const auto p = normalize(ActionValues(q), T);
    const auto ps = normalize(ActionValues(shifted), T);
    for (std::size_t k = 0; k < q.size(); ++k) ASSERT_NEAR(p[k], ps[k], 1e-12);
  }
}

TEST(Properties, ArgmaxInvariantEntropyNot) {
  Rng rng(404);
  int checked_decrease = 0;
  for (int i = 0; i < kCases; ++i) {
    const std::size_t n = 2 + uniform_index(rng, 10);
    const auto q = random_values(rng, n, 3.0);
    const double a = 1.0 + 1e-3 + 5.0 * uniform01(rng);
    const double b = 10.0 * (2.0 * uniform01(rng) - 1.0);
    std::vector<double> affine(n), scaled(n);
    for (std::size_t k = 0; k < n; ++k) affine[k] = a * q[k] + b, scaled[k] = a * q[k];
    const auto p = normalize(ActionValues(q));
    const auto pa = normalize(ActionValues(affine));
    ASSERT_EQ(argmax_of(p.probs()), argmax_of(pa.probs()));
    // Scaling up a non-uniform row sharpens the distribution.
    if (*std::max_element(q.begin(), q.end()) - *std::min_element(q.begin(), q.end()) > 1e-6) {
      ASSERT_LT(value_freedom(ActionValues(scaled)), value_freedom(ActionValues(q)));
      ++checked_decrease;
    }
  }
  EXPECT_GE(checked_decrease, kCases - 1);
}

TEST(Properties, TemperatureLimits) {
  Rng rng(505);
  for (int i = 0; i < kCases; ++i) {
    const std::size_t n = 2 + uniform_index(rng, 10);
    auto q = random_values(rng, n, 1.0);
    // Unique maximum with a clear gap.
    q[uniform_index(rng, n)] = 1.5;
    ASSERT_NEAR(value_freedom(ActionValues(q), 1e3), std::log2(static_cast<double>(n)), 1e-3);
    ASSERT_NEAR(value_freedom(ActionValues(q), 1e-3), 0.0, 1e-3);
  }
}

TEST(Properties, MergingNeverRaisesFreedom) {
  Rng rng(606);
  for (int i = 0; i < kCases; ++i) {
    const std::size_t n = 1 + uniform_index(rng, 8);
    const std::size_t S = 1 + uniform_index(rng, 4);
    const auto q = random_values(rng, n, 4.0);
    std::vector<std::vector<double>> dists(n, std::vector<double>(S));
    for (auto& d : dists) {
      // Either a point mass (collisions are common) or a random distribution.
      if (uniform01(rng) < 0.5) {
        d[uniform_index(rng, S)] = 1.0;
      } else {
        double s = 0.0;
        for (double& x : d) s += (x = uniform01(rng));
        for (double& x : d) x /= s;
      }
    }
    const double eps = uniform01(rng);
    const double T = 0.2 + 3.0 * uniform01(rng);
    const double eff = effective_freedom(ActionValues(q), dists, T, eps);
    const double raw = value_freedom(ActionValues(q), T);
    ASSERT_LE(eff, raw + 1e-9);
    ASSERT_GE(eff, 0.0);
  }
}

TEST(Properties, EffectiveEqualsValueFreedomWhenOutcomesDistinct) {
  Rng rng(707);
  for (int i = 0; i < kCases; ++i) {
    const std::size_t n = 1 + uniform_index(rng, 8);
    const auto q = random_values(rng, n, 4.0);
    std::vector<std::vector<double>> dists(n, std::vector<double>(n, 0.0));
    for (std::size_t a = 0; a < n; ++a) dists[a][a] = 1.0;
    ASSERT_NEAR(effective_freedom(ActionValues(q), dists, 1.0, 0.0), value_freedom(ActionValues(q)), 1e-12);
  }
}

TEST(Properties, HistoricFreedomWithinRange) {
  Rng rng(808);
  for (int i = 0; i < kCases; ++i) {
    const std::size_t n = random_size(rng);
    std::vector<double> h(n), w(n);
    for (std::size_t k = 0; k < n; ++k) h[k] = 3.0 * uniform01(rng), w[k] = uniform01(rng);
    w[uniform_index(rng, n)] += 0.1;
    const double v = historic_freedom(h, w);
    ASSERT_GE(v, *std::min_element(h.begin(), h.end()) - 1e-12);
    ASSERT_LE(v, *std::max_element(h.begin(), h.end()) + 1e-12);
  }
}

TEST(Properties, InverseSoftmaxRoundTrip) {
  Rng rng(909);
  for (int i = 0; i < kCases; ++i) {
    const std::size_t n = random_size(rng);
    std::vector<double> p(n);
    double s = 0.0;
    for (double& x : p) s += (x = 0.01 + uniform01(rng));
    for (double& x : p) x /= s;
    const double T = 0.1 + 3.0 * uniform01(rng);
    const auto q = values_for_distribution(ActionDistribution(p, T), T);
    const auto back = normalize(q, T);
    for (std::size_t k = 0; k < n; ++k) ASSERT_NEAR(back[k], p[k], 1e-12);
  }
}

TEST(Properties, KendallTauBounds) {
  Rng rng(1010);
  for (int i = 0; i < kCases; ++i) {
    const std::size_t n = 2 + uniform_index(rng, 10);
    auto a = random_values(rng, n, 2.0), b = random_values(rng, n, 2.0);
    // Rounded values create ties.
    for (double& x : a) x = std::round(x);
    const double tau = estimate_quality(ActionValues(a), ActionValues(b));
    ASSERT_GE(tau, -1.0 - 1e-12);
    ASSERT_LE(tau, 1.0 + 1e-12);
    ASSERT_NEAR(estimate_quality(ActionValues(b), ActionValues(b)), 1.0, 1e-12);
  }
}
