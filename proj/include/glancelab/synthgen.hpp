#pragma once

// Synthetic trips with planted feature -> glance relationships, and artifact
// injection for exercising the glance filter.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "glancelab/error.hpp"
#include "glancelab/features.hpp"
#include "glancelab/forest.hpp"
#include "glancelab/segmentation.hpp"
#include "glancelab/telemetry.hpp"

namespace glancelab {

struct PlantedEffects {
  double intercept_ms = 0.0;
  double alpha_n = 800.0;     // ms per interaction
  double beta_v = 10.0;       // ms per km/h of window mean speed
  double gamma_list = 600.0;  // ms per list interaction
  double delta_home = -400.0; // ms per homebar interaction
  double sigma_ms = 500.0;    // Gaussian noise
  Millis min_tgd_ms = 300;    // planted TGD is clipped from below
};

// P(long glance) = sigmoid(bias + n * N + list * n_List + home * n_Homebar).
struct LongGlanceLogit {
  double bias = -2.0;
  double n = 0.35;
  double list = 0.5;
  double home = -0.6;
};

struct GeneratorSpec {
  int trips = 10;
  int sessions_per_trip = 20;
  double n_geometric_p = 0.25;  // N = 1 + Geometric(p), capped
  int n_cap = 41;
  // Element-type weights in feature order; the defaults are the per-engagement
  // means of the fleet summary statistics.
  std::array<double, kElementTypeCount> element_mix{0.640, 0.518, 0.508, 0.015, 0.892, 0.038,
                                                    0.196, 0.385, 0.184, 0.002, 0.173, 0.012,
                                                    0.030, 0.058, 0.731, 0.049};
  std::array<double, 3> gesture_mix{3.814, 0.363, 0.240};  // tap, drag, multitouch
  Millis min_interaction_gap_ms = 600;
  Millis max_interaction_gap_ms = 3500;
  Millis min_idle_ms = 12'000;       // between the end of one session and the next
  double mean_extra_idle_ms = 15'000;
  double speed_mean_kmh = 70.0;
  double speed_sd_kmh = 30.0;
  double speed_reversion_s = 60.0;
  double steering_sd_deg = 4.0;
  double acc_rate = 0.2;
  double sa_rate = 0.1;
  double passenger_rate = 0.0;
  double glance_median_ms = 1200.0;
  ScreenSize screen{1920, 720};
  PlantedEffects effects;
  LongGlanceLogit long_glance;

  void validate() const {
    auto fail = [](const std::string& what) { throw Error(ErrorCode::kInfeasibleSpec, what); };
    if (trips < 1 || sessions_per_trip < 1) fail("trips and sessions_per_trip must be >= 1");
    if (!(n_geometric_p > 0.0 && n_geometric_p <= 1.0)) fail("n_geometric_p must lie in (0, 1]");
    if (n_cap < 1) fail("n_cap must be >= 1");
    const auto non_negative_sum = [](const auto& w) {
      double s = 0.0;
      for (double v : w) {
        if (!(v >= 0.0)) return -1.0;
        s += v;
      }
      return s;
    };
    if (!(non_negative_sum(element_mix) > 0.0)) fail("element_mix needs non-negative weights");
    if (!(non_negative_sum(gesture_mix) > 0.0)) fail("gesture_mix needs non-negative weights");
    if (min_interaction_gap_ms < 1 || max_interaction_gap_ms < min_interaction_gap_ms) {
      fail("interaction gaps must satisfy 1 <= min <= max");
    }
    if (max_interaction_gap_ms > SegmentationConfig{}.max_gap_ms) {
      fail("max_interaction_gap_ms exceeds the segmentation gap; sessions would split");
    }
    if (min_idle_ms < 12'000) fail("min_idle_ms must be >= 12000 so sessions stay separate");
    if (!(effects.sigma_ms >= 0.0)) fail("sigma must be >= 0");
    if (effects.min_tgd_ms < 300) fail("min_tgd_ms must be >= 300");
    for (double r : {acc_rate, sa_rate, passenger_rate}) {
      if (!(r >= 0.0 && r <= 1.0)) fail("state rates must lie in [0, 1]");
    }
    if (!(speed_mean_kmh >= 0.0 && speed_mean_kmh <= kSystemSpeedLimitKmh)) {
      fail("speed_mean_kmh must lie in [0, 210]");
    }
    if (!(speed_sd_kmh >= 0.0 && speed_reversion_s > 0.0 && steering_sd_deg >= 0.0)) {
      fail("speed/steering process parameters must be non-negative");
    }
    if (screen.width_px <= 0 || screen.height_px <= 0) fail("screen must be positive");
    if (!(glance_median_ms >= 300.0)) fail("glance_median_ms must be >= 300");
  }
};

// Per-session ground truth. `planted_tgd_ms` is the closed-form value before
// noise; `tgd_ms` is what the glance stream realizes.
struct SessionTruth {
  std::string trip_id;
  Millis first_ms = 0;
  Millis last_ms = 0;
  int n = 0;
  int n_list = 0;
  int n_homebar = 0;
  double v_window_kmh = 0.0;
  double planted_tgd_ms = 0.0;
  double noise_ms = 0.0;
  Millis tgd_ms = 0;
  bool clipped = false;
  double long_probability = 0.0;
  bool long_planted = false;
  bool long_realized = false;
  int n_center_glances = 0;
  int n_long_glances = 0;
  bool acc_active = false;
  bool sa_active = false;
  bool passenger = false;
};

struct SyntheticTrip {
  TripLog trip;
  std::vector<SessionTruth> truth;
};

namespace detail {

// Integers in [lo, hi] proportional to `weights` that sum to `total`.
// Requires lo * k <= total <= hi * k.
inline std::vector<Millis> distribute(Millis total, std::span<const double> weights, Millis lo,
                                      Millis hi) {
  const auto k = static_cast<Millis>(weights.size());
  std::vector<Millis> out(weights.size(), lo);
  Millis left = total - lo * k;
  std::vector<bool> open(weights.size(), true);
  while (left > 0) {
    double wsum = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (open[i]) wsum += weights[i];
    }
    Millis given = 0;
    for (std::size_t i = 0; i < out.size() && wsum > 0.0; ++i) {
      if (!open[i]) continue;
      const auto share = static_cast<Millis>(std::floor(static_cast<double>(left) * weights[i] / wsum));
      const Millis add = std::min(share, hi - out[i]);
      out[i] += add;
      given += add;
      if (out[i] == hi) open[i] = false;
    }
    left -= given;
    if (given == 0) {
      // Rounding leftovers, one ms at a time.
      for (std::size_t i = 0; i < out.size() && left > 0; ++i) {
        if (out[i] < hi) {
          ++out[i];
          --left;
        }
      }
    }
  }
  return out;
}

struct GlancePlan {
  std::vector<Millis> durations;  // placement order
  bool long_glance = false;
};

// Splits TGD `total` into center glances of at least 300 ms. Every glance must
// keep an endpoint inside the interaction span, so the middle glances plus the
// 300 ms on-road gaps have to fit into `span`. The first glance is never long;
// a long glance is placed last where it can extend past the span.
inline GlancePlan plan_glances(Millis total, Millis span, bool want_long, double typical_ms,
                               std::mt19937_64& rng) {
  constexpr Millis kMin = 300, kLongLimit = 2000, kGap = 300;
  std::lognormal_distribution<double> weight(0.0, 0.35);
  const auto k_typical = std::max<Millis>(1, std::llround(static_cast<double>(total) / typical_ms));

  auto attempt = [&](bool is_long, Millis k) -> std::optional<GlancePlan> {
    if (k < 1 || total < kMin * k) return std::nullopt;
    std::vector<double> w(static_cast<std::size_t>(k));
    for (auto& v : w) v = weight(rng);
    GlancePlan plan{{}, is_long};
    if (is_long) {
      if (total <= kLongLimit + kMin * (k - 1)) return std::nullopt;
      // Others share what is left after a 2001 ms long glance, down to 300 each.
      const Millis room = total - (kLongLimit + 1);
      const Millis others_target =
          std::min<Millis>(room, std::llround(typical_ms * static_cast<double>(k - 1)));
      const Millis others_total = std::max<Millis>(kMin * (k - 1), others_target);
      if (others_total > kLongLimit * (k - 1)) return std::nullopt;
      plan.durations = distribute(others_total, std::span(w).first(static_cast<std::size_t>(k - 1)),
                                  kMin, kLongLimit);
      std::sort(plan.durations.begin(), plan.durations.end(), std::greater<>());
      plan.durations.push_back(total - others_total);
    } else {
      if (total > kLongLimit * k) return std::nullopt;
      plan.durations = distribute(total, w, kMin, kLongLimit);
      std::sort(plan.durations.begin(), plan.durations.end(), std::greater<>());
      // The two largest go to the ends, the rest stay in the middle.
      if (plan.durations.size() >= 2) std::rotate(plan.durations.begin() + 1, plan.durations.begin() + 2, plan.durations.end());
    }
    if (k >= 2) {
      Millis middle = kGap * (k - 1);
      for (std::size_t i = 1; i + 1 < plan.durations.size(); ++i) middle += plan.durations[i];
      if (middle > span) return std::nullopt;
    }
    return plan;
  };

  for (bool is_long : {want_long, !want_long}) {
    const Millis k_start = is_long ? k_typical : std::max(k_typical, (total + kLongLimit - 1) / kLongLimit);
    for (Millis k = k_start; k >= 1; --k) {
      if (auto plan = attempt(is_long, k)) return *plan;
    }
  }
  throw Error(ErrorCode::kInfeasibleSpec, "cannot lay out " + std::to_string(total) + " ms of glances");
}

inline std::size_t draw_index(std::span<const double> weights, std::mt19937_64& rng) {
  std::discrete_distribution<std::size_t> d(weights.begin(), weights.end());
  return d(rng);
}

class TripBuilder {
 public:
  TripBuilder(const GeneratorSpec& spec, std::string trip_id, std::uint64_t seed)
      : spec_(spec), rng_(seed) {
    out_.trip.trip_id = std::move(trip_id);
    out_.trip.screen = spec.screen;
    speed_ = std::clamp(spec.speed_mean_kmh, 0.0, kSystemSpeedLimitKmh);
  }

  SyntheticTrip build() {
    Millis cursor = 0;
    for (int s = 0; s < spec_.sessions_per_trip; ++s) cursor = add_session(cursor);
    const Millis end = cursor + spec_.min_idle_ms;
    extend_driving(end);
    filler(gaze_end(), end);
    return std::move(out_);
  }

 private:
  Millis gaze_end() const {
    return out_.trip.glances.empty() ? 0 : out_.trip.glances.back().end_ms;
  }

  // Mean-reverting (Ornstein-Uhlenbeck style) speed and steering at 4 Hz,
  // clipped to [0, 210] km/h, generated up to and including `t`.
  void extend_driving(Millis t) {
    const double dt = kNominalSamplePeriodMs / 1000.0;
    const double theta = dt / spec_.speed_reversion_s;
    const double steer_theta = dt / 3.0;
    std::normal_distribution<double> z(0.0, 1.0);
    while (next_sample_ <= t) {
      speed_ += theta * (spec_.speed_mean_kmh - speed_) +
                spec_.speed_sd_kmh * std::sqrt(2.0 * theta) * z(rng_);
      speed_ = std::clamp(speed_, 0.0, kSystemSpeedLimitKmh);
      steering_ += -steer_theta * steering_ + spec_.steering_sd_deg * std::sqrt(2.0 * steer_theta) * z(rng_);
      out_.trip.driving.push_back({next_sample_, std::round(speed_ * 100.0) / 100.0,
                                   std::round(steering_ * 100.0) / 100.0});
      next_sample_ += kNominalSamplePeriodMs;
    }
  }

  // Alternating on-road and off-road (raw target) segments filling [from, to),
  // starting and ending on-road, every segment >= 300 ms.
  void filler(Millis from, Millis to) {
    static constexpr std::array<GlanceTarget, 7> kOffRoad = {
        GlanceTarget::kOffRoad,   GlanceTarget::kRearViewMirror, GlanceTarget::kLeftMirror,
        GlanceTarget::kRightMirror, GlanceTarget::kLeftWindow,   GlanceTarget::kRightWindow,
        GlanceTarget::kInstrumentCluster};
    std::lognormal_distribution<double> on(std::log(4000.0), 0.5);
    std::lognormal_distribution<double> off(std::log(700.0), 0.4);
    std::uniform_int_distribution<std::size_t> pick(0, kOffRoad.size() - 1);
    Millis pos = from;
    while (pos < to) {
      const Millis on_ms = std::max<Millis>(300, std::llround(on(rng_)));
      const Millis off_ms = std::clamp<Millis>(std::llround(off(rng_)), 300, 1500);
      if (pos + on_ms + off_ms + 300 > to) {
        push_glance(pos, to, GlanceTarget::kOnRoad);
        break;
      }
      push_glance(pos, pos + on_ms, GlanceTarget::kOnRoad);
      push_glance(pos + on_ms, pos + on_ms + off_ms, kOffRoad[pick(rng_)]);
      pos += on_ms + off_ms;
    }
  }

  void push_glance(Millis start, Millis end, GlanceTarget target) {
    out_.trip.glances.push_back({start, end, target});
  }

  void set_state(Millis t, bool& current, bool wanted, StateKind on, StateKind off) {
    if (current == wanted) return;
    out_.trip.states.push_back({t, wanted ? on : off});
    current = wanted;
  }

  TouchEvent make_touch(Millis t, ElementType type, int gesture, const Point& anchor) {
    const double w = spec_.screen.width_px, h = spec_.screen.height_px;
    auto clamp_point = [&](Point p) {
      return Point{std::clamp(std::round(p.x), 0.0, w), std::clamp(std::round(p.y), 0.0, h)};
    };
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::acos(-1.0));
    TouchEvent e;
    e.timestamp = t;
    e.element_type = type;
    e.element_id = std::string(element_type_name(type)) + "_" + std::to_string(rng_() % 8);
    const Point start = clamp_point(anchor);
    if (gesture == 0) {
      e.fingers.push_back({start, start});
    } else if (gesture == 1) {
      const double len = std::uniform_real_distribution<double>(40.0, 300.0)(rng_);
      const double a = angle(rng_);
      Point end = clamp_point({start.x + len * std::cos(a), start.y + len * std::sin(a)});
      if (std::hypot(end.x - start.x, end.y - start.y) < 10.0) {
        end = clamp_point({start.x < w / 2 ? start.x + 50 : start.x - 50, start.y});
      }
      e.fingers.push_back({start, end});
    } else {
      const Point second = clamp_point({start.x + 80.0, start.y + 20.0});
      e.fingers.push_back({start, clamp_point({start.x - 30.0, start.y})});
      e.fingers.push_back({second, clamp_point({second.x + 30.0, second.y})});
    }
    return e;
  }

  Millis add_session(Millis cursor) {
    const auto& eff = spec_.effects;
    std::exponential_distribution<double> extra_idle(1.0 / std::max(1.0, spec_.mean_extra_idle_ms));
    const Millis t1 = cursor + spec_.min_idle_ms + std::llround(extra_idle(rng_));

    // Interactions.
    std::geometric_distribution<int> geo(spec_.n_geometric_p);
    const int n = std::min(spec_.n_cap, 1 + geo(rng_));
    std::uniform_int_distribution<Millis> gap(spec_.min_interaction_gap_ms, spec_.max_interaction_gap_ms);
    std::uniform_real_distribution<double> ux(0.0, spec_.screen.width_px);
    std::uniform_real_distribution<double> uy(0.0, spec_.screen.height_px);
    std::normal_distribution<double> jitter(0.0, 60.0);
    SessionTruth truth;
    truth.trip_id = out_.trip.trip_id;
    truth.n = n;
    Millis t = t1;
    Point anchor{ux(rng_), uy(rng_)};
    std::vector<TouchEvent> events;
    for (int i = 0; i < n; ++i) {
      if (i > 0) t += gap(rng_);
      const auto type = static_cast<ElementType>(draw_index(spec_.element_mix, rng_));
      const auto gesture = static_cast<int>(draw_index(spec_.gesture_mix, rng_));
      if (std::bernoulli_distribution(0.3)(rng_)) anchor = {ux(rng_), uy(rng_)};
      events.push_back(make_touch(t, type, gesture, {anchor.x + jitter(rng_), anchor.y + jitter(rng_)}));
      if (type == ElementType::kList) ++truth.n_list;
      if (type == ElementType::kHomebar) ++truth.n_homebar;
    }
    const Millis tn = t;
    truth.first_ms = t1;
    truth.last_ms = tn;

    // States, set before the driving window opens.
    const Millis state_time = t1 - SegmentationConfig{}.buffer_ms - 1000;
    truth.acc_active = std::bernoulli_distribution(spec_.acc_rate)(rng_);
    truth.sa_active = std::bernoulli_distribution(spec_.sa_rate)(rng_);
    truth.passenger = std::bernoulli_distribution(spec_.passenger_rate)(rng_);
    set_state(state_time, acc_, truth.acc_active, StateKind::kAccActive, StateKind::kAccInactive);
    set_state(state_time + 1, sa_, truth.sa_active, StateKind::kSaActive, StateKind::kSaInactive);
    set_state(state_time + 2, belt_, truth.passenger, StateKind::kPassengerBeltOn,
              StateKind::kPassengerBeltOff);

    // Driving through the window; v is the exact pipeline window mean.
    const Millis buffer = SegmentationConfig{}.buffer_ms;
    extend_driving(tn + buffer + kNominalSamplePeriodMs);
    std::vector<DrivingSample> window;
    for (const auto& d : out_.trip.driving) {
      if (d.timestamp > t1 - buffer && d.timestamp < tn + buffer) window.push_back(d);
    }
    truth.v_window_kmh = mean_speed(window);

    // Planted TGD.
    truth.planted_tgd_ms = eff.intercept_ms + eff.alpha_n * n + eff.beta_v * truth.v_window_kmh +
                           eff.gamma_list * truth.n_list + eff.delta_home * truth.n_homebar;
    truth.noise_ms = eff.sigma_ms > 0.0 ? std::normal_distribution<double>(0.0, eff.sigma_ms)(rng_) : 0.0;
    Millis tgd = std::llround(truth.planted_tgd_ms + truth.noise_ms);
    if (tgd < eff.min_tgd_ms) {
      tgd = eff.min_tgd_ms;
      truth.clipped = true;
    }
    const auto& lg = spec_.long_glance;
    const double logit = lg.bias + lg.n * n + lg.list * truth.n_list + lg.home * truth.n_homebar;
    truth.long_probability = 1.0 / (1.0 + std::exp(-logit));
    truth.long_planted = std::bernoulli_distribution(truth.long_probability)(rng_);

    // Center glances, separated by on-road gaps, each with an endpoint in [t1, tn].
    std::lognormal_distribution<double> typical(std::log(spec_.glance_median_ms), 0.3);
    const auto plan = plan_glances(tgd, tn - t1, truth.long_planted, std::max(300.0, typical(rng_)), rng_);
    const auto k = static_cast<Millis>(plan.durations.size());
    std::vector<std::pair<Millis, Millis>> center;
    if (k == 1) {
      const Millis start = t1 + std::uniform_int_distribution<Millis>(0, tn - t1)(rng_);
      center.emplace_back(start, start + plan.durations[0]);
    } else {
      Millis fixed = 300 * (k - 1);
      for (Millis i = 1; i + 1 < k; ++i) fixed += plan.durations[static_cast<std::size_t>(i)];
      const Millis free = tn - t1 - fixed;
      const Millis lead = std::uniform_int_distribution<Millis>(0, free / 2)(rng_);
      std::vector<double> w(static_cast<std::size_t>(k - 1));
      for (auto& v : w) v = std::uniform_real_distribution<double>(0.05, 1.0)(rng_);
      const double wsum = std::accumulate(w.begin(), w.end(), 0.0);
      const Millis spare = (free - lead) / 2;
      Millis end = t1 + lead;
      center.emplace_back(end - plan.durations[0], end);
      for (Millis i = 1; i < k; ++i) {
        const auto extra = static_cast<Millis>(std::floor(static_cast<double>(spare) * w[static_cast<std::size_t>(i - 1)] / wsum));
        const Millis start = end + 300 + extra;
        end = start + plan.durations[static_cast<std::size_t>(i)];
        center.emplace_back(start, end);
      }
    }
    filler(gaze_end(), center.front().first);
    for (std::size_t i = 0; i < center.size(); ++i) {
      if (i > 0) push_glance(center[i - 1].second, center[i].first, GlanceTarget::kOnRoad);
      push_glance(center[i].first, center[i].second, GlanceTarget::kCenterStack);
    }

    truth.tgd_ms = tgd;
    truth.n_center_glances = static_cast<int>(k);
    for (auto d : plan.durations) truth.n_long_glances += d > 2000 ? 1 : 0;
    truth.long_realized = truth.n_long_glances > 0;
    for (auto& e : events) out_.trip.touch.push_back(std::move(e));
    out_.truth.push_back(truth);
    return std::max(tn + buffer + kNominalSamplePeriodMs, center.back().second);
  }

  const GeneratorSpec& spec_;
  std::mt19937_64 rng_;
  SyntheticTrip out_;
  Millis next_sample_ = 0;
  double speed_ = 0.0;
  double steering_ = 0.0;
  bool acc_ = false;
  bool sa_ = false;
  bool belt_ = false;
};

}  // namespace detail

inline SyntheticTrip generate_trip(const GeneratorSpec& spec, std::uint64_t seed,
                                   std::string trip_id = "synth-0") {
  spec.validate();
  return detail::TripBuilder(spec, std::move(trip_id), seed).build();
}

// spec.trips trips; trip i uses a seed derived from (seed, i).
inline std::vector<SyntheticTrip> generate_corpus(const GeneratorSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::vector<SyntheticTrip> out;
  out.reserve(static_cast<std::size_t>(spec.trips));
  for (int i = 0; i < spec.trips; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "synth-%04d", i);
    out.push_back(generate_trip(spec, detail::derive_seed(seed, static_cast<std::uint64_t>(i)), id));
  }
  return out;
}

// Runs the standard pipeline on every generated trip.
inline Dataset synthesize_dataset(const GeneratorSpec& spec, std::uint64_t seed,
                                  const PipelineConfig& pipeline = {},
                                  const DatasetFilterConfig& filter = {}) {
  std::vector<LabeledEngagement> rows;
  DropStats drops;
  for (const auto& t : generate_corpus(spec, seed)) {
    auto result = process_trip(t.trip, pipeline);
    drops += result.drops;
    for (auto& r : result.rows) rows.push_back(std::move(r));
  }
  auto ds = filter_dataset(std::move(rows), filter);
  ds.provenance.assembly = drops;
  return ds;
}

struct ArtifactSpec {
  int tracking_losses = 0;  // same-AOI tracking loss, < 300 ms
  int micro_glances = 0;    // different-AOI fixation, < 120 ms
  int blinks = 0;           // eyes closed, < 500 ms
};

struct ArtifactCounts {
  int tracking_losses = 0;
  int micro_glances = 0;
  int blinks = 0;
  bool operator==(const ArtifactCounts&) const = default;
};

struct InjectedTrip {
  TripLog trip;
  ArtifactCounts counts;
};

// Splits random host glances around short artifacts. Each host piece keeps at
// least 150 ms, so the glance filter restores the pristine stream. Injection
// stops early for a kind only when no host segment is long enough.
inline InjectedTrip inject_artifacts(const TripLog& trip, const ArtifactSpec& spec, std::uint64_t seed) {
  constexpr Millis kPiece = 150;
  std::mt19937_64 rng(seed);
  InjectedTrip out{trip, {}};
  auto& g = out.trip.glances;

  auto insert = [&](GlanceTarget kind, Millis lo, Millis hi) -> bool {
    std::uniform_int_distribution<Millis> len_dist(lo, hi);
    const Millis len = len_dist(rng);
    std::vector<std::size_t> hosts;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (is_gaze_target(g[i].target) && g[i].duration() >= 2 * kPiece + len) hosts.push_back(i);
    }
    if (hosts.empty()) return false;
    const std::size_t h = hosts[std::uniform_int_distribution<std::size_t>(0, hosts.size() - 1)(rng)];
    const RawGlanceSegment host = g[h];
    const Millis at = std::uniform_int_distribution<Millis>(host.start_ms + kPiece,
                                                            host.end_ms - kPiece - len)(rng);
    GlanceTarget artifact = kind;
    if (kind == GlanceTarget::kOnRoad) {
      // A micro-glance elsewhere: center stack from the road, road otherwise.
      artifact = aggregate_target(host.target) == GlanceTarget::kOnRoad ? GlanceTarget::kCenterStack
                                                                       : GlanceTarget::kOnRoad;
    }
    const std::vector<RawGlanceSegment> pieces = {
        {host.start_ms, at, host.target}, {at, at + len, artifact}, {at + len, host.end_ms, host.target}};
    g.erase(g.begin() + static_cast<std::ptrdiff_t>(h));
    g.insert(g.begin() + static_cast<std::ptrdiff_t>(h), pieces.begin(), pieces.end());
    return true;
  };

  for (int i = 0; i < spec.tracking_losses && insert(GlanceTarget::kTrackingLoss, 20, 299); ++i) {
    ++out.counts.tracking_losses;
  }
  for (int i = 0; i < spec.micro_glances && insert(GlanceTarget::kOnRoad, 10, 119); ++i) {
    ++out.counts.micro_glances;
  }
  for (int i = 0; i < spec.blinks && insert(GlanceTarget::kEyesClosed, 50, 499); ++i) {
    ++out.counts.blinks;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Spec and ground-truth documents.

inline GeneratorSpec generator_spec_from_json(const nlohmann::json& j) {
  GeneratorSpec s;
  try {
    s.trips = j.value("trips", s.trips);
    s.sessions_per_trip = j.value("sessions_per_trip", s.sessions_per_trip);
    s.n_geometric_p = j.value("n_geometric_p", s.n_geometric_p);
    s.n_cap = j.value("n_cap", s.n_cap);
    if (j.contains("element_mix")) {
      const auto& mix = j.at("element_mix");
      if (mix.is_object()) {
        s.element_mix.fill(0.0);
        for (const auto& [name, w] : mix.items()) {
          const auto type = parse_element_type(name);
          if (type == ElementType::kUnknown && name != "Unknown") {
            throw Error(ErrorCode::kInfeasibleSpec, "unknown element type '" + name + "'");
          }
          s.element_mix[feature::element(type)] = w.get<double>();
        }
      } else {
        s.element_mix = mix.get<std::array<double, kElementTypeCount>>();
      }
    }
    if (j.contains("gesture_mix")) s.gesture_mix = j.at("gesture_mix").get<std::array<double, 3>>();
    s.min_interaction_gap_ms = j.value("min_interaction_gap_ms", s.min_interaction_gap_ms);
    s.max_interaction_gap_ms = j.value("max_interaction_gap_ms", s.max_interaction_gap_ms);
    s.min_idle_ms = j.value("min_idle_ms", s.min_idle_ms);
    s.mean_extra_idle_ms = j.value("mean_extra_idle_ms", s.mean_extra_idle_ms);
    s.speed_mean_kmh = j.value("speed_mean_kmh", s.speed_mean_kmh);
    s.speed_sd_kmh = j.value("speed_sd_kmh", s.speed_sd_kmh);
    s.speed_reversion_s = j.value("speed_reversion_s", s.speed_reversion_s);
    s.steering_sd_deg = j.value("steering_sd_deg", s.steering_sd_deg);
    s.acc_rate = j.value("acc_rate", s.acc_rate);
    s.sa_rate = j.value("sa_rate", s.sa_rate);
    s.passenger_rate = j.value("passenger_rate", s.passenger_rate);
    s.glance_median_ms = j.value("glance_median_ms", s.glance_median_ms);
    if (j.contains("screen")) {
      s.screen.width_px = j.at("screen").at("width").get<int>();
      s.screen.height_px = j.at("screen").at("height").get<int>();
    }
    if (j.contains("effects")) {
      const auto& e = j.at("effects");
      auto& p = s.effects;
      p.intercept_ms = e.value("intercept_ms", p.intercept_ms);
      p.alpha_n = e.value("alpha_n", p.alpha_n);
      p.beta_v = e.value("beta_v", p.beta_v);
      p.gamma_list = e.value("gamma_list", p.gamma_list);
      p.delta_home = e.value("delta_home", p.delta_home);
      p.sigma_ms = e.value("sigma_ms", p.sigma_ms);
      p.min_tgd_ms = e.value("min_tgd_ms", p.min_tgd_ms);
    }
    if (j.contains("long_glance")) {
      const auto& l = j.at("long_glance");
      auto& p = s.long_glance;
      p.bias = l.value("bias", p.bias);
      p.n = l.value("n", p.n);
      p.list = l.value("list", p.list);
      p.home = l.value("home", p.home);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInfeasibleSpec, std::string("generator spec: ") + e.what());
  }
  s.validate();
  return s;
}

inline nlohmann::json generator_spec_to_json(const GeneratorSpec& s) {
  nlohmann::json mix = nlohmann::json::object();
  for (std::size_t i = 0; i < kElementTypeCount; ++i) mix[std::string(kElementTypeNames[i])] = s.element_mix[i];
  const auto& e = s.effects;
  const auto& l = s.long_glance;
  return {{"trips", s.trips},
          {"sessions_per_trip", s.sessions_per_trip},
          {"n_geometric_p", s.n_geometric_p},
          {"n_cap", s.n_cap},
          {"element_mix", mix},
          {"gesture_mix", s.gesture_mix},
          {"min_interaction_gap_ms", s.min_interaction_gap_ms},
          {"max_interaction_gap_ms", s.max_interaction_gap_ms},
          {"min_idle_ms", s.min_idle_ms},
          {"mean_extra_idle_ms", s.mean_extra_idle_ms},
          {"speed_mean_kmh", s.speed_mean_kmh},
          {"speed_sd_kmh", s.speed_sd_kmh},
          {"speed_reversion_s", s.speed_reversion_s},
          {"steering_sd_deg", s.steering_sd_deg},
          {"acc_rate", s.acc_rate},
          {"sa_rate", s.sa_rate},
          {"passenger_rate", s.passenger_rate},
          {"glance_median_ms", s.glance_median_ms},
          {"screen", {{"width", s.screen.width_px}, {"height", s.screen.height_px}}},
          {"effects",
           {{"intercept_ms", e.intercept_ms}, {"alpha_n", e.alpha_n}, {"beta_v", e.beta_v},
            {"gamma_list", e.gamma_list}, {"delta_home", e.delta_home}, {"sigma_ms", e.sigma_ms},
            {"min_tgd_ms", e.min_tgd_ms}}},
          {"long_glance", {{"bias", l.bias}, {"n", l.n}, {"list", l.list}, {"home", l.home}}}};
}

inline nlohmann::json truth_to_json(const SessionTruth& t) {
  return {{"trip_id", t.trip_id},
          {"first_ms", t.first_ms},
          {"last_ms", t.last_ms},
          {"n", t.n},
          {"n_list", t.n_list},
          {"n_homebar", t.n_homebar},
          {"v_window_kmh", t.v_window_kmh},
          {"planted_tgd_ms", t.planted_tgd_ms},
          {"noise_ms", t.noise_ms},
          {"tgd_ms", t.tgd_ms},
          {"clipped", t.clipped},
          {"long_probability", t.long_probability},
          {"long_planted", t.long_planted},
          {"long_realized", t.long_realized},
          {"n_center_glances", t.n_center_glances},
          {"n_long_glances", t.n_long_glances},
          {"acc_active", t.acc_active},
          {"sa_active", t.sa_active},
          {"passenger", t.passenger}};
}

}  // namespace glancelab
