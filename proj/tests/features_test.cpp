#include "glancelab/features.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace glancelab {
namespace {

TouchEvent tap(Millis t, ElementType type, double x, double y) {
  return {t, "e", type, {{{x, y}, {x, y}}}};
}

Engagement engagement(std::vector<TouchEvent> events, double speed, bool acc) {
  Engagement e;
  e.trip_id = "t";
  e.interactions.interactions = std::move(events);
  for (int i = 0; i < 12; ++i) e.driving.samples.push_back({250 * i, speed, 0.5});
  e.driving.acc_active = acc;
  e.glances.glances.push_back({0, 1000, GlanceTarget::kCenterStack});
  return e;
}

TEST(ClassifyGesture, Rules) {
  TouchEvent two{0, "e", ElementType::kMap, {{{0, 0}, {0, 0}}, {{5, 5}, {5, 5}}}};
  EXPECT_EQ(classify_gesture(two), Gesture::kMultitouch);
  EXPECT_EQ(classify_gesture(tap(0, ElementType::kMap, 3, 3)), Gesture::kTap);
  TouchEvent drag{0, "e", ElementType::kSlider, {{{0, 0}, {30, 40}}}};
  EXPECT_EQ(classify_gesture(drag, 10.0), Gesture::kDrag);
  EXPECT_EQ(classify_gesture(drag, 60.0), Gesture::kTap);
}

TEST(ExtractFeatures, FourInteractionsMostlyList) {
  // Collinear points 397.288 px apart, so each consecutive distance is exact.
  std::vector<TouchEvent> ev;
  for (int i = 0; i < 4; ++i) {
    ev.push_back(tap(1000 * i, i < 3 ? ElementType::kList : ElementType::kButton, 100 + 397.288 * i, 200));
  }
  const auto fv = extract_features(engagement(ev, 119.641, false));
  EXPECT_EQ(fv.n, 4);
  EXPECT_EQ(fv.count(ElementType::kList), 3);
  EXPECT_NEAR(fv.d_avg, 397.288, 1e-9);
  EXPECT_NEAR(fv.v_avg, 119.641, 1e-9);
  EXPECT_FALSE(fv.a_acc);
  EXPECT_TRUE(validate_features(fv.to_array()).empty());
}

TEST(ExtractFeatures, ThirteenHomebarTaps) {
  std::vector<TouchEvent> ev;
  for (int i = 0; i < 13; ++i) ev.push_back(tap(500 * i, ElementType::kHomebar, 50 + 18.224 * i, 700));
  const auto fv = extract_features(engagement(ev, 80, true));
  EXPECT_EQ(fv.n, 13);
  EXPECT_EQ(fv.n_tap, 13);
  EXPECT_EQ(fv.count(ElementType::kHomebar), 13);
  EXPECT_EQ(fv.count(ElementType::kList), 0);
  EXPECT_EQ(fv.count(ElementType::kButton), 0);
  EXPECT_NEAR(fv.d_avg, 18.224, 1e-9);
  EXPECT_TRUE(fv.a_acc);
}

TEST(ExtractFeatures, SingleInteraction) {
  const auto fv = extract_features(engagement({tap(0, ElementType::kTab, 1, 1)}, 50, false));
  EXPECT_EQ(fv.n, 1);
  EXPECT_EQ(fv.d_avg, 0.0);
}

TEST(ExtractFeatures, DistanceMatchesIndependentSum) {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> u(0, 1000);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<TouchEvent> ev;
    const int n = 2 + static_cast<int>(rng() % 20);
    for (int i = 0; i < n; ++i) {
      TouchEvent e{i, "e", ElementType::kButton, {}};
      const int fingers = 1 + static_cast<int>(rng() % 2);
      for (int f = 0; f < fingers; ++f) e.fingers.push_back({{u(rng), u(rng)}, {u(rng), u(rng)}});
      ev.push_back(e);
    }
    double total = 0.0;
    for (int i = 1; i < n; ++i) {
      double ax = 0, ay = 0, bx = 0, by = 0;
      for (const auto& f : ev[i - 1].fingers) ax += f.start.x / ev[i - 1].fingers.size(), ay += f.start.y / ev[i - 1].fingers.size();
      for (const auto& f : ev[i].fingers) bx += f.start.x / ev[i].fingers.size(), by += f.start.y / ev[i].fingers.size();
      total += std::sqrt((ax - bx) * (ax - bx) + (ay - by) * (ay - by));
    }
    const auto fv = extract_features(engagement(ev, 30, false));
    ASSERT_NEAR(fv.d_avg, total / (n - 1), 1e-9);
    ASSERT_EQ(fv.n_tap + fv.n_drag + fv.n_multitouch, n);
  }
}

TEST(ValidateFeatures, RejectsBrokenVectors) {
  FeatureVector fv;
  fv.element_counts[feature::element(ElementType::kList)] = 2;
  fv.n = 2;
  fv.n_tap = 2;
  fv.v_avg = 40;
  auto v = fv.to_array();
  EXPECT_TRUE(validate_features(v).empty());

  auto bad = v;
  bad[feature::element(ElementType::kList)] = -1;
  ASSERT_FALSE(validate_features(bad).empty());
  EXPECT_EQ(validate_features(bad).front().field, "n_List");

  bad = v;
  bad[feature::kCount] = 3;
  EXPECT_FALSE(validate_features(bad).empty());
  bad = v;
  bad[feature::kAcc] = 2;
  EXPECT_FALSE(validate_features(bad).empty());
  bad = v;
  bad[feature::kSpeed] = 251;
  EXPECT_FALSE(validate_features(bad).empty());
  bad = v;
  bad[feature::kDistance] = std::nan("");
  EXPECT_FALSE(validate_features(bad).empty());
  bad = v;
  bad[feature::kTap] = 1.5;
  EXPECT_FALSE(validate_features(bad).empty());
  EXPECT_FALSE(validate_features(std::vector<double>(3, 0.0)).empty());
}

TEST(FeatureVector, ArrayRoundTrip) {
  FeatureVector fv;
  fv.element_counts[3] = 4;
  fv.n = 4;
  fv.n_drag = 4;
  fv.d_avg = 12.5;
  fv.v_avg = 99.25;
  fv.theta_avg = -3.5;
  fv.a_sa = true;
  EXPECT_EQ(FeatureVector::from_array(fv.to_array()), fv);
  EXPECT_THROW(FeatureVector::from_array(std::vector<double>(24, 0.0)), Error);
  EXPECT_EQ(feature_name_list().size(), kFeatureCount);
  EXPECT_EQ(*feature_index("N"), feature::kCount);
  EXPECT_FALSE(feature_index("n_Sky"));
}

LabeledEngagement row(int n, bool passenger, double min_speed, bool long_glance = false) {
  LabeledEngagement r;
  r.features.n = n;
  r.passenger_present = passenger;
  r.min_speed_kmh = min_speed;
  r.long_glance = long_glance;
  return r;
}

TEST(FilterDataset, Rules) {
  const auto ds = filter_dataset({row(42, false, 30), row(10, false, 0), row(41, false, 5), row(3, true, 5),
                                  row(50, true, 0)});
  ASSERT_EQ(ds.size(), 1u);
  EXPECT_EQ(ds.rows[0].features.n, 41);
  EXPECT_EQ(ds.provenance.input_rows, 5u);
  EXPECT_EQ(ds.provenance.dropped_too_many_interactions, 2u);
  EXPECT_EQ(ds.provenance.dropped_passenger, 1u);
  EXPECT_EQ(ds.provenance.dropped_full_stop, 1u);
}

TEST(BalanceUndersample, Counts) {
  Dataset ds;
  for (int i = 0; i < 50; ++i) ds.rows.push_back(row(i + 1, false, 10, i < 10));
  const auto b = balance_undersample(ds, 4);
  std::size_t pos = 0;
  for (const auto& r : b.rows) pos += r.long_glance;
  EXPECT_EQ(pos, 10u);
  EXPECT_EQ(b.size(), 20u);
  EXPECT_EQ(b.provenance.dropped_by_balancing, 30u);
  EXPECT_EQ(balance_undersample(ds, 4), b);
  for (std::size_t i = 1; i < b.size(); ++i) EXPECT_LT(b.rows[i - 1].features.n, b.rows[i].features.n);

  Dataset even;
  for (int i = 0; i < 8; ++i) even.rows.push_back(row(i + 1, false, 10, i % 2));
  EXPECT_EQ(balance_undersample(even, 1).rows, even.rows);

  Dataset one;
  one.rows.push_back(row(1, false, 10, true));
  EXPECT_THROW(balance_undersample(one, 0), Error);
}

TEST(SummaryStats, ColumnExamples) {
  const std::vector<double> v{1, 2, 3, 4, 5};
  const auto s = column_stats("x", v);
  EXPECT_EQ(s.median, 3);
  EXPECT_EQ(s.q1, 2);
  EXPECT_EQ(s.q3, 4);
  EXPECT_DOUBLE_EQ(s.std, std::sqrt(2.5));
  EXPECT_EQ(column_stats("c", std::vector<double>(7, 2.0)).std, 0.0);
  EXPECT_THROW(column_stats("e", std::vector<double>{}), Error);
}

TEST(DatasetJson, RoundTrip) {
  Dataset ds;
  std::mt19937_64 rng(2);
  for (int i = 0; i < 30; ++i) {
    auto r = row(1 + i % 5, false, 1.5 * i, i % 3 == 0);
    r.trip_id = "trip" + std::to_string(i % 4);
    r.first_interaction_ms = 1000 * i;
    r.tgd_ms = 100 * i;
    r.glance.tgd_center_ms = r.tgd_ms;
    r.features.d_avg = 0.1 * static_cast<double>(rng() % 1000);
    r.features.v_avg = 33.3 + i;
    r.glance.n_glances_center = i % 4;
    r.glance.n_long_glances = i % 3 == 0;
    r.glance.has_long_glance = r.long_glance;
    r.glance.avg_glance_ms = 12.75 * i;
    ds.rows.push_back(r);
  }
  ds.provenance.input_rows = 44;
  ds.provenance.assembly.sequences = 50;
  EXPECT_EQ(dataset_from_json(dataset_to_json(ds)), ds);
  const auto dir = testing::temp_dir("dataset");
  save_dataset(dir / "d.json", ds);
  EXPECT_EQ(load_dataset(dir / "d.json"), ds);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace glancelab
