#pragma once

// Per-engagement feature extraction (25 input features plus glance labels)
// and dataset-level filtering, balancing, summary statistics and storage.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "glancelab/error.hpp"
#include "glancelab/glance_filter.hpp"
#include "glancelab/matrix.hpp"
#include "glancelab/segmentation.hpp"
#include "glancelab/telemetry.hpp"

namespace glancelab {

inline constexpr std::size_t kFeatureCount = 25;

// Column order of every feature matrix, dataset file and HTTP payload.
inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "n_Button",   "n_List",     "n_Map",   "n_Slider",   "n_Homebar", "n_CoverFlow",
    "n_AppIcon",  "n_Tab",      "n_Keyboard", "n_Browser", "n_RemoteUI", "n_ControlBar",
    "n_PopUp",    "n_ClickGuard", "n_Other", "n_Unknown", "n_Tap",   "n_Drag",
    "n_Multitouch", "d_avg",    "N",       "v_avg",      "theta_avg", "a_acc",
    "a_sa"};

namespace feature {
inline constexpr std::size_t kTap = 16;
inline constexpr std::size_t kDrag = 17;
inline constexpr std::size_t kMultitouch = 18;
inline constexpr std::size_t kDistance = 19;
inline constexpr std::size_t kCount = 20;
inline constexpr std::size_t kSpeed = 21;
inline constexpr std::size_t kSteering = 22;
inline constexpr std::size_t kAcc = 23;
inline constexpr std::size_t kSa = 24;
inline constexpr std::size_t element(ElementType t) { return static_cast<std::size_t>(t); }
}  // namespace feature

inline std::vector<std::string> feature_name_list() {
  return {kFeatureNames.begin(), kFeatureNames.end()};
}

inline std::optional<std::size_t> feature_index(std::string_view name) {
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    if (kFeatureNames[i] == name) return i;
  }
  return std::nullopt;
}

inline bool is_count_feature(std::size_t index) {
  return index < feature::kDistance || index == feature::kCount || index == feature::kAcc ||
         index == feature::kSa;
}

struct FeatureVector {
  std::array<int, kElementTypeCount> element_counts{};
  int n_tap = 0;
  int n_drag = 0;
  int n_multitouch = 0;
  double d_avg = 0.0;
  int n = 0;
  double v_avg = 0.0;
  double theta_avg = 0.0;
  bool a_acc = false;
  bool a_sa = false;

  int count(ElementType t) const { return element_counts[feature::element(t)]; }

  std::array<double, kFeatureCount> to_array() const {
    std::array<double, kFeatureCount> out{};
    for (std::size_t i = 0; i < kElementTypeCount; ++i) out[i] = element_counts[i];
    out[feature::kTap] = n_tap;
    out[feature::kDrag] = n_drag;
    out[feature::kMultitouch] = n_multitouch;
    out[feature::kDistance] = d_avg;
    out[feature::kCount] = n;
    out[feature::kSpeed] = v_avg;
    out[feature::kSteering] = theta_avg;
    out[feature::kAcc] = a_acc ? 1.0 : 0.0;
    out[feature::kSa] = a_sa ? 1.0 : 0.0;
    return out;
  }

  // Inverse of to_array(). Count fields are rounded; use validate_features()
  // first when the values come from an untrusted source.
  static FeatureVector from_array(std::span<const double> values) {
    if (values.size() != kFeatureCount) {
      throw Error(ErrorCode::kDimensionMismatch, "feature vector needs 25 values");
    }
    FeatureVector fv;
    for (std::size_t i = 0; i < kElementTypeCount; ++i) {
      fv.element_counts[i] = static_cast<int>(std::lround(values[i]));
    }
    fv.n_tap = static_cast<int>(std::lround(values[feature::kTap]));
    fv.n_drag = static_cast<int>(std::lround(values[feature::kDrag]));
    fv.n_multitouch = static_cast<int>(std::lround(values[feature::kMultitouch]));
    fv.d_avg = values[feature::kDistance];
    fv.n = static_cast<int>(std::lround(values[feature::kCount]));
    fv.v_avg = values[feature::kSpeed];
    fv.theta_avg = values[feature::kSteering];
    fv.a_acc = values[feature::kAcc] != 0.0;
    fv.a_sa = values[feature::kSa] != 0.0;
    return fv;
  }

  bool operator==(const FeatureVector&) const = default;
};

struct FieldError {
  std::string field;
  std::string message;
};

// Checks a raw 25-value vector against the FeatureVector invariants. Returns
// one entry per violated field; empty means valid.
inline std::vector<FieldError> validate_features(std::span<const double> values) {
  std::vector<FieldError> errors;
  if (values.size() != kFeatureCount) {
    errors.push_back({"*", "expected 25 feature values"});
    return errors;
  }
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    const double v = values[i];
    const std::string name(kFeatureNames[i]);
    if (!std::isfinite(v)) {
      errors.push_back({name, "must be a finite number"});
      continue;
    }
    if (is_count_feature(i)) {
      if (v < 0.0) errors.push_back({name, "must be >= 0"});
      else if (v != std::floor(v)) errors.push_back({name, "must be an integer"});
      else if ((i == feature::kAcc || i == feature::kSa) && v > 1.0) {
        errors.push_back({name, "must be 0 or 1"});
      }
    }
  }
  if (!errors.empty()) return errors;

  double element_sum = 0.0;
  for (std::size_t i = 0; i < kElementTypeCount; ++i) element_sum += values[i];
  const double n = values[feature::kCount];
  if (n < 1.0) errors.push_back({"N", "must be >= 1"});
  if (element_sum != n) errors.push_back({"N", "must equal the sum of element-type counts"});
  if (values[feature::kTap] + values[feature::kDrag] + values[feature::kMultitouch] != n) {
    errors.push_back({"N", "must equal n_Tap + n_Drag + n_Multitouch"});
  }
  if (values[feature::kDistance] < 0.0) errors.push_back({"d_avg", "must be >= 0"});
  if (values[feature::kSpeed] < 0.0 || values[feature::kSpeed] > kMaxPlausibleSpeedKmh) {
    errors.push_back({"v_avg", "must lie in [0, 250]"});
  }
  return errors;
}

enum class Gesture { kTap, kDrag, kMultitouch };

struct FeatureConfig {
  double drag_threshold_px = 10.0;
};

inline Gesture classify_gesture(const TouchEvent& e, double drag_threshold_px = 10.0) {
  if (e.fingers.size() >= 2) return Gesture::kMultitouch;
  const auto& f = e.fingers.front();
  const double displacement = std::hypot(f.end.x - f.start.x, f.end.y - f.start.y);
  return displacement >= drag_threshold_px ? Gesture::kDrag : Gesture::kTap;
}

// Interaction location: mean of the finger start positions.
inline Point interaction_centroid(const TouchEvent& e) {
  Point c;
  for (const auto& f : e.fingers) {
    c.x += f.start.x;
    c.y += f.start.y;
  }
  c.x /= static_cast<double>(e.fingers.size());
  c.y /= static_cast<double>(e.fingers.size());
  return c;
}

inline double mean_consecutive_distance(std::span<const TouchEvent> events) {
  if (events.size() < 2) return 0.0;
  double total = 0.0;
  for (std::size_t i = 1; i < events.size(); ++i) {
    const Point a = interaction_centroid(events[i - 1]);
    const Point b = interaction_centroid(events[i]);
    total += std::hypot(b.x - a.x, b.y - a.y);
  }
  return total / static_cast<double>(events.size() - 1);
}

// Driving-window mean, accumulated in sample order.
inline double mean_speed(std::span<const DrivingSample> samples) {
  double sum = 0.0;
  for (const auto& s : samples) sum += s.speed_kmh;
  return samples.empty() ? 0.0 : sum / static_cast<double>(samples.size());
}

inline FeatureVector extract_features(const Engagement& s, const FeatureConfig& config = {}) {
  FeatureVector fv;
  const auto& events = s.interactions.interactions;
  for (const auto& e : events) {
    ++fv.element_counts[feature::element(e.element_type)];
    switch (classify_gesture(e, config.drag_threshold_px)) {
      case Gesture::kTap: ++fv.n_tap; break;
      case Gesture::kDrag: ++fv.n_drag; break;
      case Gesture::kMultitouch: ++fv.n_multitouch; break;
    }
  }
  fv.n = static_cast<int>(events.size());
  fv.d_avg = mean_consecutive_distance(events);
  fv.v_avg = mean_speed(s.driving.samples);
  double steering = 0.0;
  for (const auto& d : s.driving.samples) steering += d.steering_deg;
  fv.theta_avg = s.driving.samples.empty()
                     ? 0.0
                     : steering / static_cast<double>(s.driving.samples.size());
  fv.a_acc = s.driving.acc_active;
  fv.a_sa = s.driving.sa_active;
  return fv;
}

struct LabeledEngagement {
  std::string trip_id;
  Millis first_interaction_ms = 0;
  FeatureVector features;
  bool long_glance = false;
  Millis tgd_ms = 0;
  GlanceMetrics glance;
  bool passenger_present = false;
  double min_speed_kmh = 0.0;

  bool operator==(const LabeledEngagement&) const = default;
};

inline LabeledEngagement label_engagement(const Engagement& s, const FeatureConfig& config = {},
                                          Millis long_threshold_ms = 2000) {
  LabeledEngagement row;
  row.trip_id = s.trip_id;
  row.first_interaction_ms = s.interactions.first_ms();
  row.features = extract_features(s, config);
  row.glance = glance_metrics(s.glances.glances, long_threshold_ms);
  row.long_glance = row.glance.has_long_glance;
  row.tgd_ms = row.glance.tgd_center_ms;
  row.passenger_present = s.driving.passenger_present;
  row.min_speed_kmh = s.driving.samples.empty() ? 0.0 : s.driving.samples.front().speed_kmh;
  for (const auto& d : s.driving.samples) row.min_speed_kmh = std::min(row.min_speed_kmh, d.speed_kmh);
  return row;
}

struct PipelineConfig {
  SegmentationConfig segmentation;
  GlanceFilterConfig glance_filter;
  FeatureConfig features;
  Millis long_glance_threshold_ms = 2000;
};

struct TripRows {
  std::vector<LabeledEngagement> rows;
  DropStats drops;
};

// Trip -> labeled engagements: the glance stream is aggregated and filtered
// first, then engagements are assembled and featurized.
inline TripRows process_trip(const TripLog& trip, const PipelineConfig& config = {}) {
  TripLog cleaned = trip;
  cleaned.glances = preprocess_glances(trip.glances, config.glance_filter);
  auto assembled = assemble_engagements(cleaned, config.segmentation);
  TripRows out;
  out.drops = assembled.drops;
  out.rows.reserve(assembled.engagements.size());
  for (const auto& e : assembled.engagements) {
    out.rows.push_back(label_engagement(e, config.features, config.long_glance_threshold_ms));
  }
  return out;
}

struct DatasetProvenance {
  std::size_t input_rows = 0;
  std::size_t dropped_too_many_interactions = 0;
  std::size_t dropped_passenger = 0;
  std::size_t dropped_full_stop = 0;
  std::size_t dropped_by_balancing = 0;
  DropStats assembly;

  bool operator==(const DatasetProvenance&) const = default;
};

struct Dataset {
  std::vector<LabeledEngagement> rows;
  DatasetProvenance provenance;

  std::size_t size() const { return rows.size(); }
  bool empty() const { return rows.empty(); }

  FeatureMatrix features() const {
    FeatureMatrix x(kFeatureCount);
    for (const auto& r : rows) {
      const auto values = r.features.to_array();
      x.push_row(values);
    }
    return x;
  }
  std::vector<double> tgd_targets() const {
    std::vector<double> y;
    y.reserve(rows.size());
    for (const auto& r : rows) y.push_back(static_cast<double>(r.tgd_ms));
    return y;
  }
  std::vector<double> long_glance_targets() const {
    std::vector<double> y;
    y.reserve(rows.size());
    for (const auto& r : rows) y.push_back(r.long_glance ? 1.0 : 0.0);
    return y;
  }
  bool operator==(const Dataset&) const = default;
};

struct DatasetFilterConfig {
  int max_interactions = 41;
  double full_stop_kmh = 0.1;
};

// Drops outliers with more than max_interactions interactions, engagements
// with a passenger present and engagements where the car came to a full
// stop. Each dropped row is counted under the first rule it violates.
inline Dataset filter_dataset(std::vector<LabeledEngagement> rows,
                              const DatasetFilterConfig& config = {}) {
  Dataset ds;
  ds.provenance.input_rows = rows.size();
  for (auto& r : rows) {
    if (r.features.n > config.max_interactions) {
      ++ds.provenance.dropped_too_many_interactions;
    } else if (r.passenger_present) {
      ++ds.provenance.dropped_passenger;
    } else if (r.min_speed_kmh <= config.full_stop_kmh) {
      ++ds.provenance.dropped_full_stop;
    } else {
      ds.rows.push_back(std::move(r));
    }
  }
  return ds;
}

// Random undersampling of the majority long-glance class down to the
// minority count. Surviving rows keep their original order.
inline Dataset balance_undersample(const Dataset& ds, std::uint64_t seed) {
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < ds.rows.size(); ++i) {
    (ds.rows[i].long_glance ? pos : neg).push_back(i);
  }
  if (pos.empty() || neg.empty()) {
    throw Error(ErrorCode::kOneClassOnly, "balancing needs both long-glance classes");
  }
  auto& majority = pos.size() > neg.size() ? pos : neg;
  const std::size_t keep = std::min(pos.size(), neg.size());
  std::mt19937_64 rng(seed);
  std::shuffle(majority.begin(), majority.end(), rng);
  majority.resize(keep);

  std::vector<std::size_t> chosen(pos);
  chosen.insert(chosen.end(), neg.begin(), neg.end());
  std::sort(chosen.begin(), chosen.end());

  Dataset out;
  out.provenance = ds.provenance;
  out.provenance.dropped_by_balancing += ds.rows.size() - chosen.size();
  out.rows.reserve(chosen.size());
  for (auto i : chosen) out.rows.push_back(ds.rows[i]);
  return out;
}

struct ColumnStats {
  std::string name;
  double mean = 0.0;
  double std = 0.0;
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};

struct SummaryTable {
  std::vector<ColumnStats> columns;
  bool sample_std = true;  // n-1 denominator
};

// Quantile by linear interpolation between order statistics at q * (n - 1).
inline double quantile_sorted(std::span<const double> sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline ColumnStats column_stats(std::string name, std::span<const double> values,
                                bool sample_std = true) {
  if (values.empty()) throw Error(ErrorCode::kEmptyDataset, "no values for column " + name);
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  ColumnStats s;
  s.name = std::move(name);
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  const double denom = sample_std ? static_cast<double>(values.size()) - 1.0
                                  : static_cast<double>(values.size());
  s.std = denom > 0.0 ? std::sqrt(ss / denom) : 0.0;
  s.min = sorted.front();
  s.max = sorted.back();
  s.q1 = quantile_sorted(sorted, 0.25);
  s.median = quantile_sorted(sorted, 0.5);
  s.q3 = quantile_sorted(sorted, 0.75);
  return s;
}

// Per-column statistics for the 25 features and the glance labels.
inline SummaryTable summary_stats(const Dataset& ds, bool sample_std = true) {
  if (ds.empty()) throw Error(ErrorCode::kEmptyDataset, "summary of an empty dataset");
  SummaryTable table;
  table.sample_std = sample_std;
  const auto x = ds.features();
  std::vector<double> column(ds.size());
  for (std::size_t c = 0; c < kFeatureCount; ++c) {
    for (std::size_t r = 0; r < ds.size(); ++r) column[r] = x(r, c);
    table.columns.push_back(column_stats(std::string(kFeatureNames[c]), column, sample_std));
  }
  auto add = [&](const char* name, auto get) {
    for (std::size_t r = 0; r < ds.size(); ++r) column[r] = get(ds.rows[r]);
    table.columns.push_back(column_stats(name, column, sample_std));
  };
  add("tgd_ms", [](const LabeledEngagement& r) { return static_cast<double>(r.tgd_ms); });
  add("long_glance", [](const LabeledEngagement& r) { return r.long_glance ? 1.0 : 0.0; });
  add("n_glances_center",
      [](const LabeledEngagement& r) { return static_cast<double>(r.glance.n_glances_center); });
  add("n_long_glances",
      [](const LabeledEngagement& r) { return static_cast<double>(r.glance.n_long_glances); });
  add("avg_glance_ms", [](const LabeledEngagement& r) { return r.glance.avg_glance_ms; });
  return table;
}

inline nlohmann::json summary_to_json(const SummaryTable& table) {
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& c : table.columns) {
    cols.push_back({{"name", c.name}, {"mean", c.mean}, {"std", c.std}, {"min", c.min},
                    {"q1", c.q1}, {"median", c.median}, {"q3", c.q3}, {"max", c.max}});
  }
  return {{"std_kind", table.sample_std ? "sample" : "population"}, {"columns", cols}};
}

// ---------------------------------------------------------------------------
// Columnar dataset file.

inline constexpr std::string_view kDatasetFormat = "glancelab-dataset";
inline constexpr int kDatasetVersion = 1;

inline nlohmann::json drops_to_json(const DropStats& d) {
  return {{"sequences", d.sequences}, {"missing_driving", d.missing_driving},
          {"bad_sampling", d.bad_sampling}, {"missing_glances", d.missing_glances},
          {"state_toggle_warnings", d.state_toggle_warnings}};
}

inline DropStats drops_from_json(const nlohmann::json& j) {
  DropStats d;
  d.sequences = j.at("sequences").get<std::size_t>();
  d.missing_driving = j.at("missing_driving").get<std::size_t>();
  d.bad_sampling = j.at("bad_sampling").get<std::size_t>();
  d.missing_glances = j.at("missing_glances").get<std::size_t>();
  d.state_toggle_warnings = j.at("state_toggle_warnings").get<std::size_t>();
  return d;
}

inline nlohmann::json dataset_to_json(const Dataset& ds) {
  using nlohmann::json;
  json columns = json::array();
  json data = json::object();
  for (std::size_t c = 0; c < kFeatureCount; ++c) {
    const std::string name(kFeatureNames[c]);
    json col = json::array();
    for (const auto& r : ds.rows) {
      const double v = r.features.to_array()[c];
      if (is_count_feature(c)) col.push_back(static_cast<std::int64_t>(v));
      else col.push_back(v);
    }
    columns.push_back(name);
    data[name] = std::move(col);
  }
  auto add = [&](const char* name, auto get) {
    json col = json::array();
    for (const auto& r : ds.rows) col.push_back(get(r));
    columns.push_back(name);
    data[name] = std::move(col);
  };
  add("long_glance", [](const LabeledEngagement& r) { return r.long_glance ? 1 : 0; });
  add("tgd_ms", [](const LabeledEngagement& r) { return r.tgd_ms; });
  add("n_glances_center", [](const LabeledEngagement& r) { return r.glance.n_glances_center; });
  add("n_long_glances", [](const LabeledEngagement& r) { return r.glance.n_long_glances; });
  add("avg_glance_ms", [](const LabeledEngagement& r) { return r.glance.avg_glance_ms; });
  add("passenger_present", [](const LabeledEngagement& r) { return r.passenger_present ? 1 : 0; });
  add("min_speed_kmh", [](const LabeledEngagement& r) { return r.min_speed_kmh; });
  add("trip_id", [](const LabeledEngagement& r) { return r.trip_id; });
  add("first_interaction_ms", [](const LabeledEngagement& r) { return r.first_interaction_ms; });

  const auto& p = ds.provenance;
  json provenance = {{"input_rows", p.input_rows},
                     {"dropped_too_many_interactions", p.dropped_too_many_interactions},
                     {"dropped_passenger", p.dropped_passenger},
                     {"dropped_full_stop", p.dropped_full_stop},
                     {"dropped_by_balancing", p.dropped_by_balancing},
                     {"assembly", drops_to_json(p.assembly)}};
  return {{"format", kDatasetFormat}, {"version", kDatasetVersion}, {"rows", ds.rows.size()},
          {"columns", columns},       {"provenance", provenance},   {"data", data}};
}

inline Dataset dataset_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != kDatasetFormat || j.value("version", 0) != kDatasetVersion) {
    throw Error(ErrorCode::kMalformedRecord, "not a glancelab dataset (format/version mismatch)");
  }
  try {
    const auto n = j.at("rows").get<std::size_t>();
    const auto& data = j.at("data");
    auto column = [&](std::string_view name) -> const nlohmann::json& {
      const auto& col = data.at(std::string(name));
      if (!col.is_array() || col.size() != n) {
        throw Error(ErrorCode::kMalformedRecord, "column " + std::string(name) + " has wrong length");
      }
      return col;
    };
    Dataset ds;
    ds.rows.resize(n);
    for (std::size_t c = 0; c < kFeatureCount; ++c) {
      const auto& col = column(kFeatureNames[c]);
      for (std::size_t r = 0; r < n; ++r) {
        auto values = ds.rows[r].features.to_array();
        values[c] = col[r].get<double>();
        ds.rows[r].features = FeatureVector::from_array(values);
      }
    }
    const auto& lg = column("long_glance");
    const auto& tgd = column("tgd_ms");
    const auto& ng = column("n_glances_center");
    const auto& nl = column("n_long_glances");
    const auto& avg = column("avg_glance_ms");
    const auto& pp = column("passenger_present");
    const auto& ms = column("min_speed_kmh");
    const auto& trip = column("trip_id");
    const auto& first = column("first_interaction_ms");
    for (std::size_t r = 0; r < n; ++r) {
      auto& row = ds.rows[r];
      row.long_glance = lg[r].get<int>() != 0;
      row.tgd_ms = tgd[r].get<Millis>();
      row.glance.tgd_center_ms = row.tgd_ms;
      row.glance.n_glances_center = ng[r].get<int>();
      row.glance.n_long_glances = nl[r].get<int>();
      row.glance.avg_glance_ms = avg[r].get<double>();
      row.glance.has_long_glance = row.glance.n_long_glances > 0;
      row.passenger_present = pp[r].get<int>() != 0;
      row.min_speed_kmh = ms[r].get<double>();
      row.trip_id = trip[r].get<std::string>();
      row.first_interaction_ms = first[r].get<Millis>();
    }
    const auto& p = j.at("provenance");
    ds.provenance.input_rows = p.at("input_rows").get<std::size_t>();
    ds.provenance.dropped_too_many_interactions =
        p.at("dropped_too_many_interactions").get<std::size_t>();
    ds.provenance.dropped_passenger = p.at("dropped_passenger").get<std::size_t>();
    ds.provenance.dropped_full_stop = p.at("dropped_full_stop").get<std::size_t>();
    ds.provenance.dropped_by_balancing = p.at("dropped_by_balancing").get<std::size_t>();
    ds.provenance.assembly = drops_from_json(p.at("assembly"));
    return ds;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedRecord, std::string("dataset file: ") + e.what());
  }
}

inline void save_dataset(const std::filesystem::path& path, const Dataset& ds) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write dataset " + path.string());
  out << dataset_to_json(ds).dump() << "\n";
}

inline Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open dataset " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedRecord, std::string("dataset file: ") + e.what());
  }
  return dataset_from_json(j);
}

}  // namespace glancelab
