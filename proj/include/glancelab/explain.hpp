#pragma once

// Plot-ready views of explanations: force-plot bars, global importance,
// beeswarm rows and dependence data with an interaction-coloring feature.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "glancelab/error.hpp"
#include "glancelab/shap.hpp"

namespace glancelab {

struct ForceBar {
  std::size_t feature = 0;
  double phi = 0.0;
  double value = 0.0;  // feature value of the instance
};

struct ForceData {
  double base_value = 0.0;
  double model_output = 0.0;
  std::vector<ForceBar> positive;  // descending |phi|
  std::vector<ForceBar> negative;  // descending |phi|
  double residual = 0.0;           // sum of the contributions left out

  double total() const {
    double sum = base_value + residual;
    for (const auto& b : positive) sum += b.phi;
    for (const auto& b : negative) sum += b.phi;
    return sum;
  }
};

// The top_k non-zero contributions by |phi| (over both signs; ties by feature
// index), split into pushing-up and pushing-down groups. Everything else goes
// into the residual so base + bars + residual = model output.
inline ForceData force_data(const Explanation& e, std::size_t top_k) {
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < e.phi.size(); ++i) {
    if (e.phi[i] != 0.0) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(e.phi[a]) > std::abs(e.phi[b]);
  });
  ForceData out;
  out.base_value = e.base_value;
  out.model_output = e.model_output;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const std::size_t i = order[k];
    if (k >= top_k) {
      out.residual += e.phi[i];
      continue;
    }
    const ForceBar bar{i, e.phi[i], i < e.instance.size() ? e.instance[i] : 0.0};
    (bar.phi > 0 ? out.positive : out.negative).push_back(bar);
  }
  // The model output can differ from base + sum(phi) by rounding; keep the
  // documented identity exact on the reported numbers.
  out.residual += e.model_output - e.reconstructed();
  return out;
}

struct GlobalSummary {
  std::vector<std::string> feature_names;
  std::vector<std::vector<double>> phi;     // [instance][feature]
  std::vector<std::vector<double>> values;  // [instance][feature]
  std::vector<double> importance;           // mean |phi| per feature
  std::vector<std::size_t> ranking;         // descending importance, ties by index

  std::size_t instances() const { return phi.size(); }
};

inline GlobalSummary summarize(std::span<const Explanation> explanations,
                               std::vector<std::string> feature_names) {
  if (explanations.empty()) throw Error(ErrorCode::kTooFewInstances, "no explanations to summarize");
  GlobalSummary s;
  s.feature_names = std::move(feature_names);
  const std::size_t m = explanations.front().phi.size();
  if (s.feature_names.size() != m) {
    throw Error(ErrorCode::kDimensionMismatch, "feature names do not match explanation width");
  }
  s.importance.assign(m, 0.0);
  for (const auto& e : explanations) {
    if (e.phi.size() != m || e.instance.size() != m) {
      throw Error(ErrorCode::kDimensionMismatch, "explanations differ in width");
    }
    s.phi.push_back(e.phi);
    s.values.push_back(e.instance);
    for (std::size_t i = 0; i < m; ++i) s.importance[i] += std::abs(e.phi[i]);
  }
  for (auto& v : s.importance) v /= static_cast<double>(explanations.size());
  s.ranking.resize(m);
  std::iota(s.ranking.begin(), s.ranking.end(), std::size_t{0});
  std::stable_sort(s.ranking.begin(), s.ranking.end(), [&](std::size_t a, std::size_t b) {
    return s.importance[a] > s.importance[b];
  });
  return s;
}

struct BeeswarmRow {
  std::size_t feature = 0;
  std::string name;
  double importance = 0.0;
  std::vector<double> phi;
  std::vector<double> values;
};

struct BeeswarmData {
  std::vector<BeeswarmRow> rows;  // by global importance
  // Summed phi of the features below the cut, per instance; empty when all
  // features are shown.
  std::vector<double> remainder_phi;
  std::size_t remainder_features = 0;
};

inline BeeswarmData beeswarm_data(const GlobalSummary& s, std::size_t top_k = 19) {
  BeeswarmData out;
  const std::size_t shown = std::min(top_k, s.ranking.size());
  for (std::size_t k = 0; k < shown; ++k) {
    const std::size_t f = s.ranking[k];
    BeeswarmRow row{f, s.feature_names[f], s.importance[f], {}, {}};
    for (std::size_t i = 0; i < s.instances(); ++i) {
      row.phi.push_back(s.phi[i][f]);
      row.values.push_back(s.values[i][f]);
    }
    out.rows.push_back(std::move(row));
  }
  out.remainder_features = s.ranking.size() - shown;
  if (out.remainder_features > 0) {
    out.remainder_phi.assign(s.instances(), 0.0);
    for (std::size_t k = shown; k < s.ranking.size(); ++k) {
      for (std::size_t i = 0; i < s.instances(); ++i) out.remainder_phi[i] += s.phi[i][s.ranking[k]];
    }
  }
  return out;
}

inline constexpr std::size_t kMinDependenceInstances = 20;

struct DependenceData {
  std::size_t feature = 0;
  std::vector<double> values;  // x_i
  std::vector<double> phi;     // phi_i
  std::size_t color_feature = 0;
  std::vector<double> color_values;  // x_j*
  std::vector<double> interaction_scores;  // per j; the score of j = i is 0
};

namespace detail {

// Decile bins of the instances by rank of `key` (stable on ties).
inline std::vector<std::vector<std::size_t>> rank_deciles(std::span<const double> key) {
  std::vector<std::size_t> order(key.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key[a] < key[b]; });
  std::vector<std::vector<std::size_t>> bins(10);
  for (std::size_t r = 0; r < order.size(); ++r) bins[r * 10 / order.size()].push_back(order[r]);
  return bins;
}

inline double mean_of(std::span<const double> values, std::span<const std::size_t> idx) {
  double sum = 0.0;
  for (auto i : idx) sum += values[i];
  return sum / static_cast<double>(idx.size());
}

}  // namespace detail

// Interaction score of j for main feature i: bin instances into deciles of
// x_i; inside each bin split at the median x_j and add |mean phi_i(high) -
// mean phi_i(low)|. The coloring feature is the argmax over j != i, ties to
// the lowest index.
inline std::vector<double> interaction_scores(const GlobalSummary& s, std::size_t feature) {
  const std::size_t m = s.feature_names.size();
  const std::size_t n = s.instances();
  std::vector<double> xi(n), phi_i(n), xj(n);
  for (std::size_t r = 0; r < n; ++r) {
    xi[r] = s.values[r][feature];
    phi_i[r] = s.phi[r][feature];
  }
  const auto bins = detail::rank_deciles(xi);
  std::vector<double> scores(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    if (j == feature) continue;
    for (std::size_t r = 0; r < n; ++r) xj[r] = s.values[r][j];
    for (const auto& bin : bins) {
      if (bin.size() < 2) continue;
      std::vector<double> vals;
      for (auto r : bin) vals.push_back(xj[r]);
      std::sort(vals.begin(), vals.end());
      const double med = vals.size() % 2 ? vals[vals.size() / 2]
                                         : 0.5 * (vals[vals.size() / 2 - 1] + vals[vals.size() / 2]);
      std::vector<std::size_t> high, low;
      for (auto r : bin) (xj[r] > med ? high : low).push_back(r);
      if (high.empty()) {
        high.clear();
        low.clear();
        for (auto r : bin) (xj[r] >= med ? high : low).push_back(r);
      }
      if (high.empty() || low.empty()) continue;
      scores[j] += std::abs(detail::mean_of(phi_i, high) - detail::mean_of(phi_i, low));
    }
  }
  return scores;
}

inline DependenceData dependence_data(const GlobalSummary& s, std::size_t feature) {
  if (feature >= s.feature_names.size()) {
    throw Error(ErrorCode::kInvalidArgument, "feature index out of range");
  }
  if (s.instances() < kMinDependenceInstances) {
    throw Error(ErrorCode::kTooFewInstances, "dependence data needs at least 20 instances, got " +
                                                 std::to_string(s.instances()));
  }
  DependenceData d;
  d.feature = feature;
  d.interaction_scores = interaction_scores(s, feature);
  std::optional<std::size_t> best;
  for (std::size_t j = 0; j < d.interaction_scores.size(); ++j) {
    if (j == feature) continue;
    if (!best || d.interaction_scores[j] > d.interaction_scores[*best]) best = j;
  }
  d.color_feature = best.value_or(feature);
  for (std::size_t r = 0; r < s.instances(); ++r) {
    d.values.push_back(s.values[r][feature]);
    d.phi.push_back(s.phi[r][feature]);
    d.color_values.push_back(s.values[r][d.color_feature]);
  }
  return d;
}

// ---------------------------------------------------------------------------
// JSON documents.

inline nlohmann::json explanation_to_json(const Explanation& e,
                                          std::span<const std::string> feature_names) {
  nlohmann::json features = nlohmann::json::array();
  for (std::size_t i = 0; i < e.phi.size(); ++i) {
    features.push_back({{"name", i < feature_names.size() ? feature_names[i] : std::to_string(i)},
                        {"value", i < e.instance.size() ? e.instance[i] : 0.0},
                        {"phi", e.phi[i]}});
  }
  return {{"base_value", e.base_value}, {"model_output", e.model_output}, {"features", features}};
}

inline Explanation explanation_from_json(const nlohmann::json& j) {
  Explanation e;
  e.base_value = j.at("base_value").get<double>();
  e.model_output = j.at("model_output").get<double>();
  for (const auto& f : j.at("features")) {
    e.instance.push_back(f.at("value").get<double>());
    e.phi.push_back(f.at("phi").get<double>());
  }
  return e;
}

inline nlohmann::json force_to_json(const ForceData& f, std::span<const std::string> names) {
  auto bars = [&](const std::vector<ForceBar>& list) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& b : list) {
      out.push_back({{"feature", names[b.feature]}, {"phi", b.phi}, {"value", b.value}});
    }
    return out;
  };
  return {{"base_value", f.base_value}, {"model_output", f.model_output},
          {"positive", bars(f.positive)}, {"negative", bars(f.negative)},
          {"residual", f.residual}};
}

inline nlohmann::json global_to_json(const GlobalSummary& s) {
  nlohmann::json ranking = nlohmann::json::array();
  for (auto f : s.ranking) {
    ranking.push_back({{"feature", s.feature_names[f]}, {"mean_abs_phi", s.importance[f]}});
  }
  return {{"instances", s.instances()}, {"ranking", ranking}};
}

inline nlohmann::json beeswarm_to_json(const BeeswarmData& b) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : b.rows) {
    rows.push_back({{"feature", r.name}, {"importance", r.importance}, {"phi", r.phi}, {"values", r.values}});
  }
  return {{"rows", rows}, {"remainder_features", b.remainder_features}, {"remainder_phi", b.remainder_phi}};
}

inline nlohmann::json dependence_to_json(const DependenceData& d, std::span<const std::string> names) {
  return {{"feature", names[d.feature]},
          {"values", d.values},
          {"phi", d.phi},
          {"color_feature", names[d.color_feature]},
          {"color_values", d.color_values},
          {"interaction_scores", d.interaction_scores}};
}

}  // namespace glancelab
