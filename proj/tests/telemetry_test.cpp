#include "glancelab/telemetry.hpp"

#include <random>
#include <string>

#include <gtest/gtest.h>

namespace glancelab {
namespace {

const char* kSmallTrip =
    R"({"kind":"header","trip_id":"t1","screen":{"width":1920,"height":720},"t0":1000}
{"kind":"touch","t":2000,"element_id":"List_1","element_type":"List","fingers":[{"start":[10,10],"end":[10,10]}]}
{"kind":"touch","t":2500,"element_id":"b","element_type":"Button","fingers":[{"start":[10,10],"end":[60,10]}]}
{"kind":"touch","t":3000,"element_id":"x","element_type":"SomethingNew","fingers":[{"start":[1,1],"end":[1,1]},{"start":[5,5],"end":[6,6]}]}
{"kind":"glance","start":1000,"end":1500,"target":"OnRoad"}
{"kind":"glance","start":1500,"end":1900,"target":"CenterStack"}
{"kind":"glance","start":1900,"end":2600,"target":"OnRoad"}
{"kind":"glance","start":2600,"end":2700,"target":"TrackingLoss"}
{"kind":"glance","start":2700,"end":4000,"target":"OnRoad"}
)";

std::string with_driving(std::string text, int samples, int t0 = 1000) {
  for (int i = 0; i < samples; ++i) {
    text += R"({"kind":"driving","t":)" + std::to_string(t0 + 250 * i) + R"(,"speed":50.5,"steering":-1.25})" "\n";
  }
  return text;
}

ErrorCode code_of(const std::string& text, LogFormat format = LogFormat::kJsonl) {
  try {
    parse_trip(text, format);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::kIo;
}

std::optional<std::size_t> line_of(const std::string& text) {
  try {
    parse_trip(text, LogFormat::kJsonl);
  } catch (const Error& e) {
    return e.line();
  }
  return std::nullopt;
}

TEST(ParseTrip, CountsMatchRecords) {
  const auto trip = parse_trip(with_driving(kSmallTrip, 40), LogFormat::kJsonl);
  EXPECT_EQ(trip.trip_id, "t1");
  EXPECT_EQ(trip.touch.size(), 3u);
  EXPECT_EQ(trip.glances.size(), 5u);
  EXPECT_EQ(trip.driving.size(), 40u);
  EXPECT_EQ(trip.screen, (ScreenSize{1920, 720}));
}

TEST(ParseTrip, TimestampsAreRelativeToHeader) {
  const auto trip = parse_trip(with_driving(kSmallTrip, 4), LogFormat::kJsonl);
  EXPECT_EQ(trip.touch.front().timestamp, 1000);
  EXPECT_EQ(trip.glances.front().start_ms, 0);
  EXPECT_EQ(trip.driving.front().timestamp, 0);
}

TEST(ParseTrip, UnknownElementTypeMapsToUnknown) {
  const auto trip = parse_trip(with_driving(kSmallTrip, 4), LogFormat::kJsonl);
  EXPECT_EQ(trip.touch[0].element_type, ElementType::kList);
  EXPECT_EQ(trip.touch[2].element_type, ElementType::kUnknown);
  EXPECT_EQ(trip.touch[2].fingers.size(), 2u);
}

TEST(ParseTrip, ContiguousGlancesAccepted) {
  const std::string text = R"({"kind":"header","trip_id":"c","screen":{"width":10,"height":10},"t0":0}
{"kind":"glance","start":0,"end":500,"target":"OnRoad"}
{"kind":"glance","start":500,"end":900,"target":"CenterStack"}
)";
  EXPECT_EQ(parse_trip(text, LogFormat::kJsonl).glances.size(), 2u);
}

TEST(ParseTrip, GlanceGapRejected) {
  const std::string text = R"({"kind":"header","trip_id":"c","screen":{"width":10,"height":10},"t0":0}
{"kind":"glance","start":0,"end":500,"target":"OnRoad"}
{"kind":"glance","start":600,"end":900,"target":"OnRoad"}
)";
  EXPECT_EQ(code_of(text), ErrorCode::kUnsortedTimestamps);
}

TEST(ParseTrip, UnsortedTouchReportsLine) {
  std::string text = R"({"kind":"header","trip_id":"u","screen":{"width":100,"height":100},"t0":0}
{"kind":"touch","t":500,"element_id":"a","element_type":"Tab","fingers":[{"start":[1,1],"end":[1,1]}]}
{"kind":"touch","t":400,"element_id":"a","element_type":"Tab","fingers":[{"start":[1,1],"end":[1,1]}]}
)";
  EXPECT_EQ(code_of(text), ErrorCode::kUnsortedTimestamps);
  EXPECT_EQ(line_of(text), std::optional<std::size_t>(3));
}

TEST(ParseTrip, MalformedRecordsCarryLineNumbers) {
  const std::string header = R"({"kind":"header","trip_id":"m","screen":{"width":100,"height":100},"t0":0})" "\n";
  EXPECT_EQ(code_of(header + "{not json\n"), ErrorCode::kMalformedRecord);
  EXPECT_EQ(line_of(header + "{not json\n"), std::optional<std::size_t>(2));
  EXPECT_EQ(code_of(header + R"({"kind":"touch","t":1,"element_id":"a","element_type":"Tab","fingers":[]})" "\n"),
            ErrorCode::kMalformedRecord);
  EXPECT_EQ(code_of(header + R"({"kind":"glance","start":5,"end":5,"target":"OnRoad"})" "\n"),
            ErrorCode::kMalformedRecord);
  EXPECT_EQ(code_of(header + R"({"kind":"glance","start":0,"end":5,"target":"Sky"})" "\n"),
            ErrorCode::kMalformedRecord);
  EXPECT_EQ(code_of(header + R"({"kind":"driving","t":0,"speed":-3,"steering":0})" "\n"),
            ErrorCode::kMalformedRecord);
  EXPECT_EQ(code_of(header + R"({"kind":"touch","t":1,"element_id":"a","element_type":"Tab","fingers":[{"start":[500,1],"end":[1,1]}]})" "\n"),
            ErrorCode::kMalformedRecord);
  EXPECT_EQ(code_of(header + R"({"kind":"mystery","t":0})" "\n"), ErrorCode::kMalformedRecord);
  EXPECT_EQ(code_of(R"({"kind":"touch","t":1})" "\n"), ErrorCode::kMalformedRecord);
}

TEST(ParseTrip, CsvAndJsonlAgree) {
  const auto trip = parse_trip(with_driving(kSmallTrip, 12), LogFormat::kJsonl);
  const auto csv = serialize_trip(trip, LogFormat::kCsv);
  EXPECT_EQ(parse_trip(csv, LogFormat::kCsv), trip);
  EXPECT_EQ(parse_trip(serialize_trip(trip, LogFormat::kJsonl), LogFormat::kJsonl), trip);
}

TEST(ParseTrip, RandomTripsRoundTrip) {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 50; ++trial) {
    TripLog trip;
    trip.trip_id = "r" + std::to_string(trial);
    trip.screen = {800, 480};
    Millis t = 0;
    for (int i = 0; i < 20; ++i) {
      t += 1 + static_cast<Millis>(rng() % 5000);
      TouchEvent e{t, "e" + std::to_string(i), static_cast<ElementType>(rng() % kElementTypeCount), {}};
      const int fingers = 1 + static_cast<int>(rng() % 3);
      for (int f = 0; f < fingers; ++f) {
        e.fingers.push_back({{static_cast<double>(rng() % 800), static_cast<double>(rng() % 480)},
                             {static_cast<double>(rng() % 800), 0.25 * static_cast<double>(rng() % 1920)}});
      }
      trip.touch.push_back(e);
    }
    Millis g = 0;
    for (int i = 0; i < 30; ++i) {
      const Millis d = 1 + static_cast<Millis>(rng() % 3000);
      trip.glances.push_back({g, g + d, static_cast<GlanceTarget>(rng() % kGlanceTargetCount)});
      g += d;
    }
    for (int i = 0; i < 50; ++i) {
      trip.driving.push_back({250 * i, static_cast<double>(rng() % 20000) / 100.0,
                              static_cast<double>(static_cast<int>(rng() % 2000) - 1000) / 100.0});
    }
    trip.states.push_back({100, StateKind::kAccActive});
    trip.states.push_back({900, StateKind::kPassengerBeltOn});
    for (auto format : {LogFormat::kJsonl, LogFormat::kCsv}) {
      EXPECT_EQ(parse_trip(serialize_trip(trip, format), format), trip);
    }
  }
}

TEST(ValidateSampling, Examples) {
  std::vector<DrivingSample> exact;
  for (int i = 0; i < 10; ++i) exact.push_back({250 * i, 10, 0});
  EXPECT_TRUE(validate_sampling(exact, 50));

  auto gap = exact;
  for (std::size_t i = 5; i < gap.size(); ++i) gap[i].timestamp += 750;
  EXPECT_FALSE(validate_sampling(gap, 50));

  std::mt19937_64 rng(1);
  std::vector<DrivingSample> jitter;
  Millis t = 0;
  for (int i = 0; i < 200; ++i) {
    jitter.push_back({t, 10, 0});
    t += 240 + static_cast<Millis>(rng() % 21);
  }
  bool all_within = true;
  for (std::size_t i = 1; i < jitter.size(); ++i) {
    const Millis d = jitter[i].timestamp - jitter[i - 1].timestamp;
    all_within = all_within && d >= 225 && d <= 275;
  }
  EXPECT_EQ(validate_sampling(jitter, 25), all_within);
  EXPECT_TRUE(validate_sampling(jitter, 25));
}

TEST(Ingest, SpeedAboveSystemLimitIsAWarning) {
  const std::string text = R"({"kind":"header","trip_id":"w","screen":{"width":10,"height":10},"t0":0}
{"kind":"driving","t":0,"speed":215,"steering":0}
{"kind":"driving","t":250,"speed":200,"steering":0}
)";
  IngestDiagnostics diag;
  const auto trip = parse_trip(text, LogFormat::kJsonl, &diag);
  EXPECT_EQ(trip.driving.size(), 2u);
  EXPECT_EQ(diag.warnings.size(), 1u);
}

}  // namespace
}  // namespace glancelab
