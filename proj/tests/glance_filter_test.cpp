#include "glancelab/glance_filter.hpp"

#include <random>

#include <gtest/gtest.h>

namespace glancelab {
namespace {

using G = GlanceTarget;

std::vector<RawGlanceSegment> stream(std::initializer_list<std::pair<G, Millis>> parts, Millis t = 0) {
  std::vector<RawGlanceSegment> out;
  for (const auto& [target, d] : parts) {
    out.push_back({t, t + d, target});
    t += d;
  }
  return out;
}

std::vector<RawGlanceSegment> random_stream(std::mt19937_64& rng, int n) {
  std::vector<RawGlanceSegment> out;
  Millis t = static_cast<Millis>(rng() % 1000);
  for (int i = 0; i < n; ++i) {
    const auto target = static_cast<G>(rng() % 5);
    const Millis d = 1 + static_cast<Millis>(rng() % (rng() % 2 ? 600 : 2500));
    out.push_back({t, t + d, target});
    t += d;
  }
  return out;
}

TEST(Aggregate, MapsRawTargets) {
  EXPECT_EQ(aggregate_target(G::kRearViewMirror), G::kOffRoad);
  EXPECT_EQ(aggregate_target(G::kInstrumentCluster), G::kOffRoad);
  EXPECT_EQ(aggregate_target(G::kCenterStack), G::kCenterStack);
  EXPECT_EQ(aggregate_target(G::kOnRoad), G::kOnRoad);
}

TEST(FilterGlances, ShortSameAoiTrackingLoss) {
  EXPECT_EQ(filter_glances(stream({{G::kCenterStack, 1000}, {G::kTrackingLoss, 200}, {G::kCenterStack, 800}})),
            stream({{G::kCenterStack, 2000}}));
}

TEST(FilterGlances, MicroGlanceAbsorbed) {
  EXPECT_EQ(filter_glances(stream({{G::kOnRoad, 1000}, {G::kCenterStack, 100}, {G::kOnRoad, 500}})),
            stream({{G::kOnRoad, 1600}}));
}

TEST(FilterGlances, BlinkRemoved) {
  EXPECT_EQ(filter_glances(stream({{G::kOnRoad, 800}, {G::kEyesClosed, 400}, {G::kOnRoad, 300}})),
            stream({{G::kOnRoad, 1500}}));
}

TEST(FilterGlances, LongTrackingLossKept) {
  const auto s = stream({{G::kOnRoad, 800}, {G::kTrackingLoss, 300}, {G::kOnRoad, 300}});
  EXPECT_EQ(filter_glances(s), s);
}

TEST(FilterGlances, CrossAoiTrackingLossSplitAtMidpoint) {
  EXPECT_EQ(filter_glances(stream({{G::kOnRoad, 800}, {G::kTrackingLoss, 101}, {G::kCenterStack, 500}})),
            stream({{G::kOnRoad, 850}, {G::kCenterStack, 551}}));
}

TEST(FilterGlances, EmptyAndSingle) {
  EXPECT_TRUE(filter_glances({}).empty());
  const auto one = stream({{G::kCenterStack, 50}});
  EXPECT_EQ(filter_glances(one), one);
}

// Post-conditions checked independently of the implementation.
void expect_postconditions(const std::vector<RawGlanceSegment>& in, const std::vector<RawGlanceSegment>& out,
                           const GlanceFilterConfig& c) {
  ASSERT_FALSE(out.empty());
  EXPECT_EQ(out.front().start_ms, in.front().start_ms);
  EXPECT_EQ(out.back().end_ms, in.back().end_ms);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (i > 0) {
      ASSERT_EQ(out[i].start_ms, out[i - 1].end_ms);
      ASSERT_NE(out[i].target, out[i - 1].target);
    }
    const Millis d = out[i].duration();
    ASSERT_GT(d, 0);
    if (out.size() > 1) {
      if (out[i].target != G::kTrackingLoss && out[i].target != G::kEyesClosed) {
        ASSERT_GE(d, c.min_glance_ms);
      }
      if (out[i].target == G::kEyesClosed) {
        ASSERT_GE(d, c.blink_ms);
      }
      if (out[i].target == G::kTrackingLoss) {
        ASSERT_GE(d, c.tracking_loss_cross_aoi_ms);
        if (i > 0 && i + 1 < out.size() && out[i - 1].target == out[i + 1].target) {
          ASSERT_GE(d, c.tracking_loss_same_aoi_ms);
        }
      }
    }
  }
}

TEST(FilterGlances, RandomStreamsSatisfyPostconditions) {
  std::mt19937_64 rng(23);
  const GlanceFilterConfig c;
  for (int trial = 0; trial < 2000; ++trial) {
    const auto in = random_stream(rng, 2 + static_cast<int>(rng() % 40));
    const auto out = filter_glances(in, c);
    expect_postconditions(in, out, c);
    ASSERT_EQ(filter_glances(out, c), out) << "not idempotent, trial " << trial;
  }
}

TEST(FilterGlances, CleanStreamsPassUnchanged) {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<RawGlanceSegment> s;
    Millis t = 0;
    for (int i = 0; i < 30; ++i) {
      const G target = i % 2 ? G::kCenterStack : (rng() % 3 ? G::kOnRoad : G::kOffRoad);
      const Millis d = 500 + static_cast<Millis>(rng() % 3000);
      if (!s.empty() && s.back().target == target) continue;
      s.push_back({t, t + d, target});
      t += d;
    }
    EXPECT_EQ(filter_glances(s), s);
  }
}

TEST(GlanceMetrics, Examples) {
  auto m = glance_metrics(stream({{G::kCenterStack, 1200}, {G::kOnRoad, 500}, {G::kCenterStack, 800}}));
  EXPECT_EQ(m.tgd_center_ms, 2000);
  EXPECT_EQ(m.n_glances_center, 2);
  EXPECT_EQ(m.n_long_glances, 0);
  EXPECT_DOUBLE_EQ(m.avg_glance_ms, 1000.0);
  EXPECT_TRUE(glance_metrics(stream({{G::kCenterStack, 2500}})).has_long_glance);
  EXPECT_FALSE(glance_metrics(stream({{G::kCenterStack, 2000}})).has_long_glance);
  EXPECT_TRUE(glance_metrics(stream({{G::kCenterStack, 2001}})).has_long_glance);
}

}  // namespace
}  // namespace glancelab
