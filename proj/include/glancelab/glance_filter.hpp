#pragma once

#include <span>
#include <vector>

#include "glancelab/telemetry.hpp"

namespace glancelab {

// Thresholds for the interpolation rules. Defaults follow ISO 15007-style
// glance preprocessing.
struct GlanceFilterConfig {
  Millis tracking_loss_same_aoi_ms = 300;   // tracking loss between equal AOIs
  Millis min_glance_ms = 120;               // physically impossible fixations
  Millis tracking_loss_cross_aoi_ms = 120;  // tracking loss between different AOIs
  Millis blink_ms = 500;                    // eye-lid closures
};

struct GlanceMetrics {
  Millis tgd_center_ms = 0;
  int n_glances_center = 0;
  int n_long_glances = 0;
  double avg_glance_ms = 0.0;
  bool has_long_glance = false;

  bool operator==(const GlanceMetrics&) const = default;
};

// Maps raw eye-tracker targets onto {OnRoad, OffRoad, CenterStack} plus the
// two pseudo-targets TrackingLoss and EyesClosed. Everything that is not the
// road or the center stack (mirrors, windows, cluster) counts as off-road.
inline GlanceTarget aggregate_target(GlanceTarget target) {
  switch (target) {
    case GlanceTarget::kOnRoad:
    case GlanceTarget::kCenterStack:
    case GlanceTarget::kTrackingLoss:
    case GlanceTarget::kEyesClosed:
    case GlanceTarget::kOffRoad:
      return target;
    case GlanceTarget::kRearViewMirror:
    case GlanceTarget::kLeftMirror:
    case GlanceTarget::kRightMirror:
    case GlanceTarget::kLeftWindow:
    case GlanceTarget::kRightWindow:
    case GlanceTarget::kInstrumentCluster:
      return GlanceTarget::kOffRoad;
  }
  return GlanceTarget::kOffRoad;
}

inline RawGlanceSegment aggregate_aoi(RawGlanceSegment raw) {
  raw.target = aggregate_target(raw.target);
  return raw;
}

inline std::vector<RawGlanceSegment> aggregate_aois(std::span<const RawGlanceSegment> raw) {
  std::vector<RawGlanceSegment> out;
  out.reserve(raw.size());
  for (const auto& g : raw) out.push_back(aggregate_aoi(g));
  return out;
}

inline bool is_gaze_target(GlanceTarget target) {
  return target != GlanceTarget::kTrackingLoss && target != GlanceTarget::kEyesClosed;
}

namespace detail {

inline bool merge_equal_neighbors(std::vector<RawGlanceSegment>& segs) {
  if (segs.size() < 2) return false;
  bool changed = false;
  std::size_t out = 0;
  for (std::size_t i = 1; i < segs.size(); ++i) {
    if (segs[i].target == segs[out].target) {
      segs[out].end_ms = segs[i].end_ms;
      changed = true;
    } else {
      segs[++out] = segs[i];
    }
  }
  segs.resize(out + 1);
  return changed;
}

// Removes segs[i] by handing its time to the neighbours. Equal neighbours
// absorb it whole and fuse; unequal neighbours split it at the midpoint (the
// left neighbour takes the floor half); a lone neighbour takes all of it.
// Returns the index at which scanning should resume.
inline std::size_t interpolate(std::vector<RawGlanceSegment>& segs, std::size_t i) {
  const bool has_prev = i > 0;
  const bool has_next = i + 1 < segs.size();
  if (has_prev && has_next) {
    auto& prev = segs[i - 1];
    auto& next = segs[i + 1];
    if (prev.target == next.target) {
      prev.end_ms = next.end_ms;
      segs.erase(segs.begin() + static_cast<std::ptrdiff_t>(i),
                 segs.begin() + static_cast<std::ptrdiff_t>(i) + 2);
      return i;
    }
    const Millis split = segs[i].start_ms + segs[i].duration() / 2;
    prev.end_ms = split;
    next.start_ms = split;
  } else if (has_prev) {
    segs[i - 1].end_ms = segs[i].end_ms;
  } else if (has_next) {
    segs[i + 1].start_ms = segs[i].start_ms;
  } else {
    return i + 1;  // nothing to interpolate into
  }
  segs.erase(segs.begin() + static_cast<std::ptrdiff_t>(i));
  return i;
}

template <class Predicate>
bool apply_rule(std::vector<RawGlanceSegment>& segs, Predicate should_interpolate) {
  if (segs.size() < 2) return false;
  bool changed = false;
  std::size_t i = 0;
  while (i < segs.size()) {
    if (segs.size() >= 2 && should_interpolate(segs, i)) {
      i = interpolate(segs, i);
      changed = true;
    } else {
      ++i;
    }
  }
  return changed;
}

}  // namespace detail

// Applies the glance interpolation rules in order: (3) short tracking loss
// between equal AOIs, (4) glances shorter than min_glance_ms, (5) short
// tracking loss between different AOIs, (6) blinks. The sequence repeats
// until no rule fires and finishes with a merge of equal neighbours, so the
// result is a fixpoint (idempotent) and the covered time span is unchanged.
inline std::vector<RawGlanceSegment> filter_glances(std::span<const RawGlanceSegment> seq,
                                                    const GlanceFilterConfig& config = {}) {
  std::vector<RawGlanceSegment> segs(seq.begin(), seq.end());
  detail::merge_equal_neighbors(segs);

  const auto rule3 = [&](const std::vector<RawGlanceSegment>& s, std::size_t i) {
    return s[i].target == GlanceTarget::kTrackingLoss &&
           s[i].duration() < config.tracking_loss_same_aoi_ms && i > 0 && i + 1 < s.size() &&
           s[i - 1].target == s[i + 1].target;
  };
  const auto rule4 = [&](const std::vector<RawGlanceSegment>& s, std::size_t i) {
    return is_gaze_target(s[i].target) && s[i].duration() < config.min_glance_ms;
  };
  const auto rule5 = [&](const std::vector<RawGlanceSegment>& s, std::size_t i) {
    return s[i].target == GlanceTarget::kTrackingLoss &&
           s[i].duration() < config.tracking_loss_cross_aoi_ms;
  };
  const auto rule6 = [&](const std::vector<RawGlanceSegment>& s, std::size_t i) {
    return s[i].target == GlanceTarget::kEyesClosed && s[i].duration() < config.blink_ms;
  };

  bool changed = true;
  while (changed) {
    changed = false;
    changed |= detail::apply_rule(segs, rule3);
    changed |= detail::apply_rule(segs, rule4);
    changed |= detail::apply_rule(segs, rule5);
    changed |= detail::apply_rule(segs, rule6);
    changed |= detail::merge_equal_neighbors(segs);
  }
  return segs;
}

// Aggregation followed by filtering: the preprocessing applied to a trip's
// whole glance stream before glances are attached to engagements.
inline std::vector<RawGlanceSegment> preprocess_glances(std::span<const RawGlanceSegment> raw,
                                                        const GlanceFilterConfig& config = {}) {
  const auto aggregated = aggregate_aois(raw);
  return filter_glances(aggregated, config);
}

// Center-stack glance statistics. A glance is long iff its duration is
// strictly greater than long_threshold_ms.
inline GlanceMetrics glance_metrics(std::span<const RawGlanceSegment> seq,
                                    Millis long_threshold_ms = 2000) {
  GlanceMetrics m;
  for (const auto& g : seq) {
    if (g.target != GlanceTarget::kCenterStack) continue;
    m.tgd_center_ms += g.duration();
    ++m.n_glances_center;
    if (g.duration() > long_threshold_ms) ++m.n_long_glances;
  }
  m.has_long_glance = m.n_long_glances > 0;
  if (m.n_glances_center > 0) {
    m.avg_glance_ms = static_cast<double>(m.tgd_center_ms) / m.n_glances_center;
  }
  return m;
}

}  // namespace glancelab
