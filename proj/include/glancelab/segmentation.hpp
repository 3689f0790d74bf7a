#pragma once

// Secondary task engagements: interaction sequences split by inactivity,
// with the glances and driving samples that belong to them.

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "glancelab/error.hpp"
#include "glancelab/telemetry.hpp"

namespace glancelab {

struct SegmentationConfig {
  Millis max_gap_ms = 10'000;  // longest pause inside one interaction sequence
  Millis buffer_ms = 2'000;    // driving window extension on both sides
  Millis sampling_tolerance_ms = 50;
};

struct InteractionSequence {
  std::vector<TouchEvent> interactions;

  std::size_t size() const { return interactions.size(); }
  Millis first_ms() const { return interactions.front().timestamp; }
  Millis last_ms() const { return interactions.back().timestamp; }
  bool operator==(const InteractionSequence&) const = default;
};

struct DrivingSequence {
  std::vector<DrivingSample> samples;
  bool acc_active = false;
  bool sa_active = false;
  bool passenger_present = false;
  // An ACC/SA change happened inside the window; the flags keep the value at
  // the first interaction.
  bool state_toggled = false;
};

struct GlanceSequence {
  std::vector<RawGlanceSegment> glances;
};

struct Engagement {
  std::string trip_id;
  InteractionSequence interactions;
  GlanceSequence glances;
  DrivingSequence driving;
};

// Splits a time-sorted touch stream into maximal runs whose successive gaps
// are <= max_gap_ms.
inline std::vector<InteractionSequence> segment_interactions(std::span<const TouchEvent> touch,
                                                             Millis max_gap_ms = 10'000) {
  std::vector<InteractionSequence> out;
  for (std::size_t i = 0; i < touch.size(); ++i) {
    if (i == 0 || touch[i].timestamp - touch[i - 1].timestamp > max_gap_ms) {
      out.emplace_back();
    }
    out.back().interactions.push_back(touch[i]);
  }
  return out;
}

// Samples strictly inside (first - buffer, last + buffer). ACC/SA flags come
// from the latest state event at or before the first interaction (off when
// none). Throws Error(kEmptyWindow) when no sample falls in the window.
inline DrivingSequence window_driving(std::span<const DrivingSample> driving,
                                      std::span<const StateEvent> states,
                                      const InteractionSequence& seq, Millis buffer_ms = 2'000) {
  const Millis lo = seq.first_ms() - buffer_ms;
  const Millis hi = seq.last_ms() + buffer_ms;

  DrivingSequence out;
  auto begin = std::upper_bound(driving.begin(), driving.end(), lo,
                                [](Millis t, const DrivingSample& d) { return t < d.timestamp; });
  for (auto it = begin; it != driving.end() && it->timestamp < hi; ++it) {
    out.samples.push_back(*it);
  }
  if (out.samples.empty()) {
    throw Error(ErrorCode::kEmptyWindow,
                "no driving sample in (" + std::to_string(lo) + ", " + std::to_string(hi) + ")");
  }

  bool passenger_at_start = false;
  for (const auto& s : states) {
    if (s.timestamp <= seq.first_ms()) {
      switch (s.kind) {
        case StateKind::kAccActive: out.acc_active = true; break;
        case StateKind::kAccInactive: out.acc_active = false; break;
        case StateKind::kSaActive: out.sa_active = true; break;
        case StateKind::kSaInactive: out.sa_active = false; break;
        default: break;
      }
    } else if (s.timestamp < hi) {
      if (s.kind == StateKind::kAccActive || s.kind == StateKind::kAccInactive ||
          s.kind == StateKind::kSaActive || s.kind == StateKind::kSaInactive) {
        out.state_toggled = true;
      }
    }
    // Passenger presence: belt fastened at window start, or fastened at any
    // point inside the window.
    if (s.timestamp <= lo) {
      if (s.kind == StateKind::kPassengerBeltOn) passenger_at_start = true;
      if (s.kind == StateKind::kPassengerBeltOff) passenger_at_start = false;
    } else if (s.timestamp < hi && s.kind == StateKind::kPassengerBeltOn) {
      out.passenger_present = true;
    }
  }
  out.passenger_present = out.passenger_present || passenger_at_start;
  return out;
}

// The attachment predicate: a glance belongs to the sequence when its start
// or its end lies in [first, last] (endpoints inclusive), or when it is a
// fragment on both sides, covering the whole sequence.
inline bool glance_belongs(const RawGlanceSegment& g, Millis first_ms, Millis last_ms) {
  return g.start_ms <= last_ms && g.end_ms >= first_ms;
}

// Glances are kept whole even when they begin before the first or end after
// the last interaction.
inline GlanceSequence attach_glances(std::span<const RawGlanceSegment> glances,
                                     const InteractionSequence& seq) {
  GlanceSequence out;
  const Millis first = seq.first_ms();
  const Millis last = seq.last_ms();
  // Contiguity makes end times sorted; skip everything that ends before first.
  auto it = std::lower_bound(glances.begin(), glances.end(), first,
                             [](const RawGlanceSegment& g, Millis t) { return g.end_ms < t; });
  for (; it != glances.end() && it->start_ms <= last; ++it) {
    if (glance_belongs(*it, first, last)) out.glances.push_back(*it);
  }
  return out;
}

struct DropStats {
  std::size_t sequences = 0;
  std::size_t missing_driving = 0;
  std::size_t bad_sampling = 0;
  std::size_t missing_glances = 0;
  std::size_t state_toggle_warnings = 0;

  DropStats& operator+=(const DropStats& o) {
    sequences += o.sequences;
    missing_driving += o.missing_driving;
    bad_sampling += o.bad_sampling;
    missing_glances += o.missing_glances;
    state_toggle_warnings += o.state_toggle_warnings;
    return *this;
  }
  bool operator==(const DropStats&) const = default;
};

struct AssemblyResult {
  std::vector<Engagement> engagements;
  DropStats drops;
};

// True when the window has regular 4 Hz samples that reach both window edges.
inline bool driving_window_complete(const DrivingSequence& window, const InteractionSequence& seq,
                                    const SegmentationConfig& config) {
  if (!validate_sampling(window.samples, config.sampling_tolerance_ms)) return false;
  const Millis reach = kNominalSamplePeriodMs + config.sampling_tolerance_ms;
  const Millis lo = seq.first_ms() - config.buffer_ms;
  const Millis hi = seq.last_ms() + config.buffer_ms;
  return window.samples.front().timestamp - lo <= reach &&
         hi - window.samples.back().timestamp <= reach;
}

// One engagement per interaction sequence that has a complete driving window
// and at least one attached glance; the rest are counted in `drops`.
inline AssemblyResult assemble_engagements(const TripLog& trip,
                                           const SegmentationConfig& config = {}) {
  AssemblyResult result;
  for (auto& seq : segment_interactions(trip.touch, config.max_gap_ms)) {
    ++result.drops.sequences;
    DrivingSequence driving;
    try {
      driving = window_driving(trip.driving, trip.states, seq, config.buffer_ms);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kEmptyWindow) throw;
      ++result.drops.missing_driving;
      continue;
    }
    if (!driving_window_complete(driving, seq, config)) {
      ++result.drops.bad_sampling;
      continue;
    }
    auto glances = attach_glances(trip.glances, seq);
    if (glances.glances.empty()) {
      ++result.drops.missing_glances;
      continue;
    }
    if (driving.state_toggled) ++result.drops.state_toggle_warnings;
    result.engagements.push_back(
        {trip.trip_id, std::move(seq), std::move(glances), std::move(driving)});
  }
  return result;
}

}  // namespace glancelab
