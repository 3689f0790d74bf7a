#include "glancelab/explain.hpp"
#include "glancelab/features.hpp"

#include <random>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace glancelab {
namespace {

Explanation make(double base, std::vector<double> phi, std::vector<double> x) {
  Explanation e{base, std::move(phi), 0.0, std::move(x)};
  e.model_output = e.reconstructed();
  return e;
}

TEST(ForceData, TopTwoOfThree) {
  const auto e = make(0.3, {0.2, -0.05, 0.01}, {4, 1, 7});
  const auto f = force_data(e, 2);
  ASSERT_EQ(f.positive.size(), 1u);
  ASSERT_EQ(f.negative.size(), 1u);
  EXPECT_EQ(f.positive[0].feature, 0u);
  EXPECT_EQ(f.positive[0].value, 4);
  EXPECT_EQ(f.negative[0].feature, 1u);
  EXPECT_NEAR(f.residual, 0.01, 1e-15);
  EXPECT_NEAR(f.total(), 0.46, 1e-15);
}

TEST(ForceData, IdentityHoldsForRandomExplanations) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0, 1);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> phi(25), x(25, 0.0);
    for (auto& p : phi) p = rng() % 4 == 0 ? 0.0 : g(rng);
    auto e = make(g(rng), phi, x);
    e.model_output += 1e-13;
    const auto f = force_data(e, rng() % 30);
    ASSERT_NEAR(f.total(), e.model_output, 1e-12);
    for (std::size_t i = 1; i < f.positive.size(); ++i) ASSERT_GE(f.positive[i - 1].phi, f.positive[i].phi);
    for (std::size_t i = 1; i < f.negative.size(); ++i) ASSERT_LE(f.negative[i - 1].phi, f.negative[i].phi);
  }
}

TEST(Summarize, RankingByMeanAbsPhi) {
  const std::vector<Explanation> ex{make(0, {1, -3, 0}, {0, 0, 0}), make(0, {-1, 1, 0.5}, {0, 0, 0})};
  const auto s = summarize(ex, {"a", "b", "c"});
  EXPECT_EQ(s.importance, (std::vector<double>{1, 2, 0.25}));
  EXPECT_EQ(s.ranking, (std::vector<std::size_t>{1, 0, 2}));
  EXPECT_THROW(summarize({}, {}), Error);
  EXPECT_THROW(summarize(ex, {"a"}), Error);
}

TEST(Summarize, EqualImportanceKeepsIndexOrder) {
  std::vector<Explanation> ex;
  for (int i = 0; i < 5; ++i) ex.push_back(make(0, {0.5, -0.5, 0.5, 0.5}, {1, 2, 3, 4}));
  const auto s = summarize(ex, {"a", "b", "c", "d"});
  EXPECT_EQ(s.ranking, (std::vector<std::size_t>{0, 1, 2, 3}));
}

TEST(Beeswarm, TopKAndRemainder) {
  std::mt19937_64 rng(8);
  std::vector<Explanation> ex;
  for (int i = 0; i < 30; ++i) {
    std::vector<double> phi(25), x(25);
    for (std::size_t f = 0; f < 25; ++f) {
      phi[f] = static_cast<double>(25 - f) * (rng() % 2 ? 1 : -1);
      x[f] = static_cast<double>(rng() % 10);
    }
    ex.push_back(make(0, phi, x));
  }
  const auto s = summarize(ex, feature_name_list());
  const auto b = beeswarm_data(s);
  ASSERT_EQ(b.rows.size(), 19u);
  EXPECT_EQ(b.remainder_features, 6u);
  for (std::size_t k = 0; k < 19; ++k) EXPECT_EQ(b.rows[k].feature, k);
  for (std::size_t i = 0; i < 30; ++i) {
    double want = 0;
    for (std::size_t f = 19; f < 25; ++f) want += ex[i].phi[f];
    EXPECT_EQ(b.remainder_phi[i], want);
  }
  EXPECT_TRUE(beeswarm_data(s, 25).remainder_phi.empty());
}

// phi of feature 0 rises with x0 only when x2 is high; the coloring feature
// must be 2.
TEST(Dependence, PlantedInteraction) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<Explanation> ex;
  for (int i = 0; i < 400; ++i) {
    std::vector<double> x{u(rng), u(rng), u(rng), u(rng)};
    ex.push_back(make(0, {x[0] * (x[2] > 0.5 ? 2.0 : -2.0), 0.1 * x[1], 0.0, 0.2 * x[3]}, x));
  }
  const auto s = summarize(ex, {"a", "b", "c", "d"});
  const auto d = dependence_data(s, 0);
  EXPECT_EQ(d.color_feature, 2u);
  EXPECT_EQ(d.interaction_scores[0], 0.0);
  EXPECT_EQ(d.values.size(), 400u);
  EXPECT_EQ(d.color_values[7], ex[7].instance[2]);

  std::vector<Explanation> few(ex.begin(), ex.begin() + 19);
  EXPECT_THROW(dependence_data(summarize(few, {"a", "b", "c", "d"}), 0), Error);
  EXPECT_THROW(dependence_data(s, 4), Error);
}

TEST(Dependence, NoSignalTiesToLowestIndex) {
  std::vector<Explanation> ex;
  for (int i = 0; i < 40; ++i) ex.push_back(make(0, {0.3, 0, 0}, {double(i), double(i % 3), double(i % 5)}));
  EXPECT_EQ(dependence_data(summarize(ex, {"a", "b", "c"}), 0).color_feature, 1u);
  EXPECT_EQ(dependence_data(summarize(ex, {"a", "b", "c"}), 1).color_feature, 0u);
}

TEST(ExplanationJson, RoundTrip) {
  const auto e = make(0.125, {0.5, -0.25}, {3, 4});
  const std::vector<std::string> names{"x", "y"};
  EXPECT_EQ(explanation_from_json(explanation_to_json(e, names)), e);
  const auto j = force_to_json(force_data(e, 1), names);
  EXPECT_EQ(j["positive"][0]["feature"], "x");
  EXPECT_EQ(j["residual"], -0.25);
}

}  // namespace
}  // namespace glancelab
