#pragma once

// Raw per-trip telemetry: touch events, gaze segments, 4 Hz driving samples
// and automation / seat-belt state changes, plus the line-delimited trip log
// format (two dialects, see docs/trip_log_format.md).

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "glancelab/error.hpp"

namespace glancelab {

using Millis = std::int64_t;

inline constexpr Millis kNominalSamplePeriodMs = 250;
inline constexpr double kMaxPlausibleSpeedKmh = 250.0;
inline constexpr double kSystemSpeedLimitKmh = 210.0;

enum class ElementType : std::uint8_t {
  kButton,
  kList,
  kMap,
  kSlider,
  kHomebar,
  kCoverFlow,
  kAppIcon,
  kTab,
  kKeyboard,
  kBrowser,
  kRemoteUI,
  kControlBar,
  kPopUp,
  kClickGuard,
  kOther,
  kUnknown,
};
inline constexpr std::size_t kElementTypeCount = 16;

inline constexpr std::array<std::string_view, kElementTypeCount> kElementTypeNames = {
    "Button",   "List",    "Map",      "Slider",     "Homebar", "CoverFlow",
    "AppIcon",  "Tab",     "Keyboard", "Browser",    "RemoteUI", "ControlBar",
    "PopUp",    "ClickGuard", "Other", "Unknown"};

inline std::string_view element_type_name(ElementType type) {
  return kElementTypeNames[static_cast<std::size_t>(type)];
}

// Unrecognised element identifiers are not an error; they land in kUnknown.
inline ElementType parse_element_type(std::string_view name) {
  for (std::size_t i = 0; i < kElementTypeCount; ++i) {
    if (kElementTypeNames[i] == name) return static_cast<ElementType>(i);
  }
  return ElementType::kUnknown;
}

struct Point {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point&) const = default;
};

struct FingerTrace {
  Point start;
  Point end;
  bool operator==(const FingerTrace&) const = default;
};

struct TouchEvent {
  Millis timestamp = 0;
  std::string element_id;
  ElementType element_type = ElementType::kUnknown;
  std::vector<FingerTrace> fingers;
  bool operator==(const TouchEvent&) const = default;
};

// Raw gaze targets as reported by the eye tracker. Only the first five
// survive AOI aggregation; the rest are off-road regions.
enum class GlanceTarget : std::uint8_t {
  kOnRoad,
  kOffRoad,
  kCenterStack,
  kTrackingLoss,
  kEyesClosed,
  kRearViewMirror,
  kLeftMirror,
  kRightMirror,
  kLeftWindow,
  kRightWindow,
  kInstrumentCluster,
};
inline constexpr std::size_t kGlanceTargetCount = 11;

inline constexpr std::array<std::string_view, kGlanceTargetCount> kGlanceTargetNames = {
    "OnRoad",         "OffRoad",    "CenterStack", "TrackingLoss",
    "EyesClosed",     "RearViewMirror", "LeftMirror", "RightMirror",
    "LeftWindow",     "RightWindow", "InstrumentCluster"};

inline std::string_view glance_target_name(GlanceTarget target) {
  return kGlanceTargetNames[static_cast<std::size_t>(target)];
}

inline std::optional<GlanceTarget> parse_glance_target(std::string_view name) {
  for (std::size_t i = 0; i < kGlanceTargetCount; ++i) {
    if (kGlanceTargetNames[i] == name) return static_cast<GlanceTarget>(i);
  }
  return std::nullopt;
}

struct RawGlanceSegment {
  Millis start_ms = 0;
  Millis end_ms = 0;
  GlanceTarget target = GlanceTarget::kOnRoad;

  Millis duration() const { return end_ms - start_ms; }
  bool operator==(const RawGlanceSegment&) const = default;
};

struct DrivingSample {
  Millis timestamp = 0;
  double speed_kmh = 0.0;
  double steering_deg = 0.0;
  bool operator==(const DrivingSample&) const = default;
};

enum class StateKind : std::uint8_t {
  kAccActive,
  kAccInactive,
  kSaActive,
  kSaInactive,
  kPassengerBeltOn,
  kPassengerBeltOff,
};
inline constexpr std::array<std::string_view, 6> kStateKindNames = {
    "AccActive", "AccInactive", "SaActive", "SaInactive", "PassengerBeltOn",
    "PassengerBeltOff"};

inline std::string_view state_kind_name(StateKind kind) {
  return kStateKindNames[static_cast<std::size_t>(kind)];
}

inline std::optional<StateKind> parse_state_kind(std::string_view name) {
  for (std::size_t i = 0; i < kStateKindNames.size(); ++i) {
    if (kStateKindNames[i] == name) return static_cast<StateKind>(i);
  }
  return std::nullopt;
}

struct StateEvent {
  Millis timestamp = 0;
  StateKind kind = StateKind::kAccActive;
  bool operator==(const StateEvent&) const = default;
};

struct ScreenSize {
  int width_px = 0;
  int height_px = 0;
  bool operator==(const ScreenSize&) const = default;
};

struct TripLog {
  std::string trip_id;
  ScreenSize screen;
  std::vector<TouchEvent> touch;
  std::vector<RawGlanceSegment> glances;
  std::vector<DrivingSample> driving;
  std::vector<StateEvent> states;

  bool operator==(const TripLog&) const = default;
};

enum class LogFormat { kJsonl, kCsv };

inline std::optional<LogFormat> parse_log_format(std::string_view name) {
  if (name == "jsonl") return LogFormat::kJsonl;
  if (name == "csv") return LogFormat::kCsv;
  return std::nullopt;
}

// Non-fatal findings collected while ingesting (e.g. speeds above the
// system operating limit).
struct IngestDiagnostics {
  std::vector<std::string> warnings;
};

// True iff every successive gap lies within kNominalSamplePeriodMs +- tolerance.
inline bool validate_sampling(std::span<const DrivingSample> driving,
                              Millis tolerance_ms = 50) {
  for (std::size_t i = 1; i < driving.size(); ++i) {
    const Millis gap = driving[i].timestamp - driving[i - 1].timestamp;
    if (gap < kNominalSamplePeriodMs - tolerance_ms ||
        gap > kNominalSamplePeriodMs + tolerance_ms) {
      return false;
    }
  }
  return true;
}

inline Millis trip_duration(const TripLog& trip) {
  Millis end = 0;
  if (!trip.touch.empty()) end = std::max(end, trip.touch.back().timestamp);
  if (!trip.glances.empty()) end = std::max(end, trip.glances.back().end_ms);
  if (!trip.driving.empty()) end = std::max(end, trip.driving.back().timestamp);
  if (!trip.states.empty()) end = std::max(end, trip.states.back().timestamp);
  return end;
}

namespace detail {

inline bool within_screen(const Point& p, const ScreenSize& screen) {
  return p.x >= 0.0 && p.y >= 0.0 && p.x <= screen.width_px && p.y <= screen.height_px;
}

// Per-record checks. `line` is the 1-based source line, or 0 when the record
// did not come from a file.
inline void check_touch(const TouchEvent& e, const ScreenSize& screen, std::size_t line) {
  const auto where = line ? std::optional<std::size_t>(line) : std::nullopt;
  if (e.timestamp < 0) throw Error(ErrorCode::kMalformedRecord, "negative touch timestamp", where);
  if (e.fingers.empty()) throw Error(ErrorCode::kMalformedRecord, "touch without fingers", where);
  for (const auto& f : e.fingers) {
    if (!within_screen(f.start, screen) || !within_screen(f.end, screen)) {
      throw Error(ErrorCode::kMalformedRecord, "finger coordinate outside screen bounds", where);
    }
  }
}

inline void check_glance(const RawGlanceSegment& g, std::size_t line) {
  const auto where = line ? std::optional<std::size_t>(line) : std::nullopt;
  if (g.start_ms < 0) throw Error(ErrorCode::kMalformedRecord, "negative glance start", where);
  if (g.end_ms <= g.start_ms) {
    throw Error(ErrorCode::kMalformedRecord, "glance end must be after start", where);
  }
}

inline void check_driving(const DrivingSample& d, std::size_t line, IngestDiagnostics* diag) {
  const auto where = line ? std::optional<std::size_t>(line) : std::nullopt;
  if (d.timestamp < 0) throw Error(ErrorCode::kMalformedRecord, "negative sample timestamp", where);
  if (!(d.speed_kmh >= 0.0 && d.speed_kmh <= kMaxPlausibleSpeedKmh)) {
    throw Error(ErrorCode::kMalformedRecord, "speed outside [0, 250] km/h", where);
  }
  if (diag && d.speed_kmh > kSystemSpeedLimitKmh) {
    diag->warnings.push_back("line " + std::to_string(line) + ": speed " +
                             std::to_string(d.speed_kmh) + " km/h above 210 km/h");
  }
}

inline void check_state(const StateEvent& s, std::size_t line) {
  if (s.timestamp < 0) {
    throw Error(ErrorCode::kMalformedRecord, "negative state timestamp",
                line ? std::optional<std::size_t>(line) : std::nullopt);
  }
}

// Ordering and contiguity checks across records of one kind. `lines` maps
// record index to source line (may be empty).
template <class T, class Key>
void check_sorted(const std::vector<T>& items, const std::vector<std::size_t>& lines, Key key,
                  std::string_view what) {
  for (std::size_t i = 1; i < items.size(); ++i) {
    if (key(items[i]) < key(items[i - 1])) {
      std::optional<std::size_t> where;
      if (i < lines.size()) where = lines[i];
      throw Error(ErrorCode::kUnsortedTimestamps, std::string(what) + " records out of order",
                  where);
    }
  }
}

inline void check_contiguous(const std::vector<RawGlanceSegment>& glances,
                             const std::vector<std::size_t>& lines) {
  for (std::size_t i = 1; i < glances.size(); ++i) {
    if (glances[i].start_ms != glances[i - 1].end_ms) {
      std::optional<std::size_t> where;
      if (i < lines.size()) where = lines[i];
      throw Error(ErrorCode::kUnsortedTimestamps,
                  "glance stream not contiguous: previous segment ends at " +
                      std::to_string(glances[i - 1].end_ms) + " ms, next starts at " +
                      std::to_string(glances[i].start_ms) + " ms",
                  where);
    }
  }
}

inline void check_trip(const TripLog& trip, const std::vector<std::size_t>& touch_lines,
                       const std::vector<std::size_t>& glance_lines,
                       const std::vector<std::size_t>& driving_lines,
                       const std::vector<std::size_t>& state_lines) {
  if (trip.screen.width_px <= 0 || trip.screen.height_px <= 0) {
    throw Error(ErrorCode::kMalformedRecord, "screen size must be positive");
  }
  check_sorted(trip.touch, touch_lines, [](const TouchEvent& e) { return e.timestamp; }, "touch");
  check_contiguous(trip.glances, glance_lines);
  check_sorted(trip.driving, driving_lines, [](const DrivingSample& d) { return d.timestamp; },
               "driving");
  check_sorted(trip.states, state_lines, [](const StateEvent& s) { return s.timestamp; }, "state");
  if (trip_duration(trip) <= 0) {
    throw Error(ErrorCode::kMalformedRecord, "trip has no events (duration must be > 0)");
  }
}

inline std::string format_double(double value) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  (void)ec;
  return std::string(buf.data(), ptr);
}

inline std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto next = text.find(sep, pos);
    if (next == std::string_view::npos) {
      out.push_back(text.substr(pos));
      return out;
    }
    out.push_back(text.substr(pos, next - pos));
    pos = next + 1;
  }
}

template <class T>
T parse_number(std::string_view text, std::size_t line, std::string_view field) {
  T value{};
  const auto* begin = text.data();
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw Error(ErrorCode::kMalformedRecord,
                "field '" + std::string(field) + "' is not a valid number: '" +
                    std::string(text) + "'",
                line);
  }
  return value;
}

inline Millis json_millis(const nlohmann::json& rec, const char* key, std::size_t line) {
  const auto it = rec.find(key);
  if (it == rec.end() || !it->is_number_integer()) {
    throw Error(ErrorCode::kMalformedRecord,
                std::string("missing or non-integer field '") + key + "'", line);
  }
  return it->get<Millis>();
}

inline double json_double(const nlohmann::json& rec, const char* key, std::size_t line) {
  const auto it = rec.find(key);
  if (it == rec.end() || !it->is_number()) {
    throw Error(ErrorCode::kMalformedRecord,
                std::string("missing or non-numeric field '") + key + "'", line);
  }
  return it->get<double>();
}

inline std::string json_string(const nlohmann::json& rec, const char* key, std::size_t line) {
  const auto it = rec.find(key);
  if (it == rec.end() || !it->is_string()) {
    throw Error(ErrorCode::kMalformedRecord,
                std::string("missing or non-string field '") + key + "'", line);
  }
  return it->get<std::string>();
}

inline Point json_point(const nlohmann::json& value, std::size_t line) {
  if (!value.is_array() || value.size() != 2 || !value[0].is_number() || !value[1].is_number()) {
    throw Error(ErrorCode::kMalformedRecord, "finger point must be [x, y]", line);
  }
  return {value[0].get<double>(), value[1].get<double>()};
}

}  // namespace detail

// Parses one trip log. Throws Error(kMalformedRecord, line) for per-record
// schema violations and Error(kUnsortedTimestamps) for ordering or glance
// contiguity violations. Timestamps are shifted by the header's t0 so the
// returned trip is in milliseconds since trip start.
inline TripLog parse_trip(std::istream& in, LogFormat format,
                          IngestDiagnostics* diagnostics = nullptr) {
  TripLog trip;
  bool have_header = false;
  Millis t0 = 0;
  std::vector<std::size_t> touch_lines, glance_lines, driving_lines, state_lines;

  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (raw.empty() || raw.front() == '#') continue;

    if (format == LogFormat::kJsonl) {
      nlohmann::json rec;
      try {
        rec = nlohmann::json::parse(raw);
      } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::kMalformedRecord, std::string("invalid JSON: ") + e.what(), line);
      }
      if (!rec.is_object()) throw Error(ErrorCode::kMalformedRecord, "record is not an object", line);
      const std::string kind = detail::json_string(rec, "kind", line);
      if (!have_header && kind != "header") {
        throw Error(ErrorCode::kMalformedRecord, "first record must be the trip header", line);
      }
      if (kind == "header") {
        if (have_header) throw Error(ErrorCode::kMalformedRecord, "duplicate header", line);
        have_header = true;
        trip.trip_id = detail::json_string(rec, "trip_id", line);
        const auto screen = rec.find("screen");
        if (screen == rec.end() || !screen->is_object()) {
          throw Error(ErrorCode::kMalformedRecord, "header lacks 'screen'", line);
        }
        trip.screen.width_px = static_cast<int>(detail::json_millis(*screen, "width", line));
        trip.screen.height_px = static_cast<int>(detail::json_millis(*screen, "height", line));
        if (rec.contains("t0")) t0 = detail::json_millis(rec, "t0", line);
      } else if (kind == "touch") {
        TouchEvent e;
        e.timestamp = detail::json_millis(rec, "t", line) - t0;
        e.element_id = detail::json_string(rec, "element_id", line);
        e.element_type = parse_element_type(detail::json_string(rec, "element_type", line));
        const auto fingers = rec.find("fingers");
        if (fingers == rec.end() || !fingers->is_array()) {
          throw Error(ErrorCode::kMalformedRecord, "touch lacks 'fingers' array", line);
        }
        for (const auto& f : *fingers) {
          if (!f.is_object() || !f.contains("start") || !f.contains("end")) {
            throw Error(ErrorCode::kMalformedRecord, "finger must have 'start' and 'end'", line);
          }
          e.fingers.push_back({detail::json_point(f["start"], line), detail::json_point(f["end"], line)});
        }
        detail::check_touch(e, trip.screen, line);
        trip.touch.push_back(std::move(e));
        touch_lines.push_back(line);
      } else if (kind == "glance") {
        RawGlanceSegment g;
        g.start_ms = detail::json_millis(rec, "start", line) - t0;
        g.end_ms = detail::json_millis(rec, "end", line) - t0;
        const auto target = parse_glance_target(detail::json_string(rec, "target", line));
        if (!target) throw Error(ErrorCode::kMalformedRecord, "unknown glance target", line);
        g.target = *target;
        detail::check_glance(g, line);
        trip.glances.push_back(g);
        glance_lines.push_back(line);
      } else if (kind == "driving") {
        DrivingSample d;
        d.timestamp = detail::json_millis(rec, "t", line) - t0;
        d.speed_kmh = detail::json_double(rec, "speed", line);
        d.steering_deg = detail::json_double(rec, "steering", line);
        detail::check_driving(d, line, diagnostics);
        trip.driving.push_back(d);
        driving_lines.push_back(line);
      } else if (kind == "state") {
        StateEvent s;
        s.timestamp = detail::json_millis(rec, "t", line) - t0;
        const auto state = parse_state_kind(detail::json_string(rec, "state", line));
        if (!state) throw Error(ErrorCode::kMalformedRecord, "unknown state kind", line);
        s.kind = *state;
        detail::check_state(s, line);
        trip.states.push_back(s);
        state_lines.push_back(line);
      } else {
        throw Error(ErrorCode::kMalformedRecord, "unknown record kind '" + kind + "'", line);
      }
      continue;
    }

    // CSV dialect.
    const auto fields = detail::split(raw, ',');
    const std::string_view kind = fields[0];
    auto need = [&](std::size_t lo, std::size_t hi) {
      if (fields.size() < lo || fields.size() > hi) {
        throw Error(ErrorCode::kMalformedRecord,
                    "wrong field count for '" + std::string(kind) + "' record", line);
      }
    };
    if (!have_header && kind != "header") {
      throw Error(ErrorCode::kMalformedRecord, "first record must be the trip header", line);
    }
    if (kind == "header") {
      need(4, 5);
      if (have_header) throw Error(ErrorCode::kMalformedRecord, "duplicate header", line);
      have_header = true;
      trip.trip_id = std::string(fields[1]);
      trip.screen.width_px = detail::parse_number<int>(fields[2], line, "width");
      trip.screen.height_px = detail::parse_number<int>(fields[3], line, "height");
      if (fields.size() == 5) t0 = detail::parse_number<Millis>(fields[4], line, "t0");
    } else if (kind == "touch") {
      need(5, 5);
      TouchEvent e;
      e.timestamp = detail::parse_number<Millis>(fields[1], line, "t") - t0;
      e.element_id = std::string(fields[2]);
      e.element_type = parse_element_type(fields[3]);
      if (!fields[4].empty()) {
        for (const auto finger : detail::split(fields[4], '|')) {
          const auto coords = detail::split(finger, ' ');
          if (coords.size() != 4) {
            throw Error(ErrorCode::kMalformedRecord, "finger must be 'x0 y0 x1 y1'", line);
          }
          e.fingers.push_back({{detail::parse_number<double>(coords[0], line, "x0"),
                                detail::parse_number<double>(coords[1], line, "y0")},
                               {detail::parse_number<double>(coords[2], line, "x1"),
                                detail::parse_number<double>(coords[3], line, "y1")}});
        }
      }
      detail::check_touch(e, trip.screen, line);
      trip.touch.push_back(std::move(e));
      touch_lines.push_back(line);
    } else if (kind == "glance") {
      need(4, 4);
      RawGlanceSegment g;
      g.start_ms = detail::parse_number<Millis>(fields[1], line, "start") - t0;
      g.end_ms = detail::parse_number<Millis>(fields[2], line, "end") - t0;
      const auto target = parse_glance_target(fields[3]);
      if (!target) throw Error(ErrorCode::kMalformedRecord, "unknown glance target", line);
      g.target = *target;
      detail::check_glance(g, line);
      trip.glances.push_back(g);
      glance_lines.push_back(line);
    } else if (kind == "driving") {
      need(4, 4);
      DrivingSample d;
      d.timestamp = detail::parse_number<Millis>(fields[1], line, "t") - t0;
      d.speed_kmh = detail::parse_number<double>(fields[2], line, "speed");
      d.steering_deg = detail::parse_number<double>(fields[3], line, "steering");
      detail::check_driving(d, line, diagnostics);
      trip.driving.push_back(d);
      driving_lines.push_back(line);
    } else if (kind == "state") {
      need(3, 3);
      StateEvent s;
      s.timestamp = detail::parse_number<Millis>(fields[1], line, "t") - t0;
      const auto state = parse_state_kind(fields[2]);
      if (!state) throw Error(ErrorCode::kMalformedRecord, "unknown state kind", line);
      s.kind = *state;
      detail::check_state(s, line);
      trip.states.push_back(s);
      state_lines.push_back(line);
    } else {
      throw Error(ErrorCode::kMalformedRecord, "unknown record kind '" + std::string(kind) + "'",
                  line);
    }
  }
  if (!have_header) throw Error(ErrorCode::kMalformedRecord, "missing trip header");
  detail::check_trip(trip, touch_lines, glance_lines, driving_lines, state_lines);
  return trip;
}

inline TripLog parse_trip(std::string_view text, LogFormat format,
                          IngestDiagnostics* diagnostics = nullptr) {
  std::istringstream in{std::string(text)};
  return parse_trip(in, format, diagnostics);
}

inline TripLog ingest_trip(const std::filesystem::path& path, LogFormat format,
                           IngestDiagnostics* diagnostics = nullptr) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open trip log " + path.string());
  return parse_trip(in, format, diagnostics);
}

// Validates an in-memory trip against the same invariants ingestion enforces.
inline void validate_trip(const TripLog& trip) {
  for (const auto& e : trip.touch) detail::check_touch(e, trip.screen, 0);
  for (const auto& g : trip.glances) detail::check_glance(g, 0);
  for (const auto& d : trip.driving) detail::check_driving(d, 0, nullptr);
  for (const auto& s : trip.states) detail::check_state(s, 0);
  detail::check_trip(trip, {}, {}, {}, {});
}

// Writes the trip in the requested dialect. Records are grouped by kind in
// the order header, touch, glance, driving, state. Doubles use the shortest
// representation that round-trips, so parse(serialize(t)) == t.
inline std::string serialize_trip(const TripLog& trip, LogFormat format) {
  std::string out;
  if (format == LogFormat::kJsonl) {
    using nlohmann::json;
    json header = {{"kind", "header"},
                   {"trip_id", trip.trip_id},
                   {"screen", {{"width", trip.screen.width_px}, {"height", trip.screen.height_px}}},
                   {"t0", 0}};
    out += header.dump() + "\n";
    for (const auto& e : trip.touch) {
      json fingers = json::array();
      for (const auto& f : e.fingers) {
        fingers.push_back({{"start", {f.start.x, f.start.y}}, {"end", {f.end.x, f.end.y}}});
      }
      json rec = {{"kind", "touch"},
                  {"t", e.timestamp},
                  {"element_id", e.element_id},
                  {"element_type", element_type_name(e.element_type)},
                  {"fingers", fingers}};
      out += rec.dump() + "\n";
    }
    for (const auto& g : trip.glances) {
      json rec = {{"kind", "glance"},
                  {"start", g.start_ms},
                  {"end", g.end_ms},
                  {"target", glance_target_name(g.target)}};
      out += rec.dump() + "\n";
    }
    for (const auto& d : trip.driving) {
      json rec = {{"kind", "driving"}, {"t", d.timestamp}, {"speed", d.speed_kmh},
                  {"steering", d.steering_deg}};
      out += rec.dump() + "\n";
    }
    for (const auto& s : trip.states) {
      json rec = {{"kind", "state"}, {"t", s.timestamp}, {"state", state_kind_name(s.kind)}};
      out += rec.dump() + "\n";
    }
    return out;
  }

  auto check_field = [](const std::string& value) {
    if (value.find_first_of(",|\n") != std::string::npos) {
      throw Error(ErrorCode::kInvalidArgument,
                  "value '" + value + "' contains a CSV delimiter; use the jsonl dialect");
    }
  };
  check_field(trip.trip_id);
  out += "header," + trip.trip_id + "," + std::to_string(trip.screen.width_px) + "," +
         std::to_string(trip.screen.height_px) + ",0\n";
  for (const auto& e : trip.touch) {
    check_field(e.element_id);
    out += "touch," + std::to_string(e.timestamp) + "," + e.element_id + "," +
           std::string(element_type_name(e.element_type)) + ",";
    for (std::size_t i = 0; i < e.fingers.size(); ++i) {
      const auto& f = e.fingers[i];
      if (i) out += "|";
      out += detail::format_double(f.start.x) + " " + detail::format_double(f.start.y) + " " +
             detail::format_double(f.end.x) + " " + detail::format_double(f.end.y);
    }
    out += "\n";
  }
  for (const auto& g : trip.glances) {
    out += "glance," + std::to_string(g.start_ms) + "," + std::to_string(g.end_ms) + "," +
           std::string(glance_target_name(g.target)) + "\n";
  }
  for (const auto& d : trip.driving) {
    out += "driving," + std::to_string(d.timestamp) + "," + detail::format_double(d.speed_kmh) +
           "," + detail::format_double(d.steering_deg) + "\n";
  }
  for (const auto& s : trip.states) {
    out += "state," + std::to_string(s.timestamp) + "," + std::string(state_kind_name(s.kind)) +
           "\n";
  }
  return out;
}

inline void write_trip(const std::filesystem::path& path, const TripLog& trip, LogFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write trip log " + path.string());
  out << serialize_trip(trip, format);
}

}  // namespace glancelab
