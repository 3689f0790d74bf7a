#pragma once

// K-fold cross-validation and random hyperparameter search.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "glancelab/error.hpp"
#include "glancelab/forest.hpp"
#include "glancelab/matrix.hpp"

namespace glancelab {

enum class CvScheme { kRepeated10Fold, kStratified10Fold };
enum class MetricKind { kAccuracy, kMaeMs };

inline std::string_view metric_name(MetricKind m) {
  return m == MetricKind::kAccuracy ? "accuracy" : "mae_ms";
}
inline bool higher_is_better(MetricKind m) { return m == MetricKind::kAccuracy; }

struct CvConfig {
  CvScheme scheme = CvScheme::kRepeated10Fold;
  int folds = 10;
  int repetitions = 3;
  std::uint64_t seed = 0;
};

struct MetricsReport {
  MetricKind kind = MetricKind::kMaeMs;
  std::vector<double> fold_scores;
  double mean = 0.0;
  double std = 0.0;  // sample std over folds (n-1)

  static MetricsReport from_scores(MetricKind kind, std::vector<double> scores) {
    MetricsReport r;
    r.kind = kind;
    r.fold_scores = std::move(scores);
    if (r.fold_scores.empty()) return r;
    r.mean = std::accumulate(r.fold_scores.begin(), r.fold_scores.end(), 0.0) /
             static_cast<double>(r.fold_scores.size());
    if (r.fold_scores.size() > 1) {
      double ss = 0.0;
      for (double s : r.fold_scores) ss += (s - r.mean) * (s - r.mean);
      r.std = std::sqrt(ss / static_cast<double>(r.fold_scores.size() - 1));
    }
    return r;
  }
};

inline nlohmann::json metrics_to_json(const MetricsReport& r) {
  return {{"metric", metric_name(r.kind)}, {"folds", r.fold_scores}, {"mean", r.mean}, {"std", r.std}};
}

inline double accuracy(std::span<const double> predicted, std::span<const double> labels) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    hits += ((predicted[i] > 0.5 ? 1.0 : 0.0) == labels[i]) ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

inline double mean_absolute_error(std::span<const double> predicted, std::span<const double> y) {
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) sum += std::abs(predicted[i] - y[i]);
  return sum / static_cast<double>(y.size());
}

inline double score(MetricKind kind, std::span<const double> predicted, std::span<const double> y) {
  return kind == MetricKind::kAccuracy ? accuracy(predicted, y) : mean_absolute_error(predicted, y);
}

// Test-index sets, one per fold, for `repetitions` independent shuffles.
// Stratified folds deal each class round-robin, continuing the fold counter
// across classes, so every fold is within one row of the global class ratio.
inline std::vector<std::vector<std::size_t>> make_folds(std::span<const double> y,
                                                        const CvConfig& config) {
  const auto k = static_cast<std::size_t>(config.folds);
  if (config.folds < 2) throw Error(ErrorCode::kInvalidArgument, "need at least 2 folds");
  if (y.size() < k) {
    throw Error(ErrorCode::kTooFewRows,
                std::to_string(y.size()) + " rows for " + std::to_string(k) + "-fold validation");
  }
  std::vector<std::vector<std::size_t>> out;
  for (int rep = 0; rep < std::max(1, config.repetitions); ++rep) {
    std::mt19937_64 rng(detail::derive_seed(config.seed, static_cast<std::uint64_t>(rep)));
    std::vector<std::vector<std::size_t>> folds(k);
    if (config.scheme == CvScheme::kRepeated10Fold) {
      std::vector<std::size_t> perm(y.size());
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      std::shuffle(perm.begin(), perm.end(), rng);
      std::size_t pos = 0;
      for (std::size_t f = 0; f < k; ++f) {
        const std::size_t size = y.size() / k + (f < y.size() % k ? 1 : 0);
        folds[f].assign(perm.begin() + static_cast<std::ptrdiff_t>(pos),
                        perm.begin() + static_cast<std::ptrdiff_t>(pos + size));
        pos += size;
      }
    } else {
      std::vector<std::size_t> neg, pos;
      for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] != 0.0 && y[i] != 1.0) {
          throw Error(ErrorCode::kInvalidArgument, "stratified folds need 0/1 labels");
        }
        (y[i] == 1.0 ? pos : neg).push_back(i);
      }
      if (neg.size() < k || pos.size() < k) {
        throw Error(ErrorCode::kUnstratifiableData,
                    "each class needs at least one row per fold (" + std::to_string(neg.size()) +
                        " negative, " + std::to_string(pos.size()) + " positive)");
      }
      std::size_t next = 0;
      for (auto* cls : {&neg, &pos}) {
        std::shuffle(cls->begin(), cls->end(), rng);
        for (auto i : *cls) folds[next++ % k].push_back(i);
      }
    }
    for (auto& f : folds) {
      std::sort(f.begin(), f.end());
      out.push_back(std::move(f));
    }
  }
  return out;
}

// A trained model as seen by cross-validation: predictions for a test block.
using Predictor = std::function<std::vector<double>(const FeatureMatrix&)>;
// Trains on (x, y); `seed` is unique per fold.
using Trainer =
    std::function<Predictor(const FeatureMatrix& x, std::span<const double> y, std::uint64_t seed)>;

inline MetricsReport cross_validate(const FeatureMatrix& x, std::span<const double> y,
                                    const Trainer& trainer, MetricKind metric,
                                    const CvConfig& config) {
  if (x.rows() != y.size()) throw Error(ErrorCode::kDimensionMismatch, "rows and targets differ");
  const auto folds = make_folds(y, config);
  std::vector<double> scores;
  std::vector<char> in_test(y.size());
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::fill(in_test.begin(), in_test.end(), 0);
    for (auto i : folds[f]) in_test[i] = 1;
    std::vector<std::size_t> train;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (!in_test[i]) train.push_back(i);
    }
    const auto y_train = select<double>(y, train);
    const auto y_test = select<double>(y, folds[f]);
    const auto predictor = trainer(x.select_rows(train), y_train,
                                   detail::derive_seed(config.seed ^ 0xc0ffeeULL, f));
    const auto predicted = predictor(x.select_rows(folds[f]));
    scores.push_back(score(metric, predicted, y_test));
  }
  return MetricsReport::from_scores(metric, std::move(scores));
}

inline Trainer forest_trainer(Task task, ForestConfig config, unsigned threads = 1) {
  return [task, config, threads](const FeatureMatrix& x, std::span<const double> y,
                                 std::uint64_t seed) -> Predictor {
    auto c = config;
    c.seed = seed;
    auto forest = std::make_shared<Forest>(fit_forest(x, y, task, c, {}, threads));
    return [forest](const FeatureMatrix& test) { return forest->predict(test); };
  };
}

struct SearchSpace {
  std::vector<int> n_estimators{100, 200, 400, 800, 1200, 1600, 2000};
  std::vector<int> max_depth{10, 20, 30, 40, 60, 80, 100};
  std::vector<int> min_samples_split{2, 5, 10};
  std::vector<int> min_samples_leaf{1, 2, 4};
  std::vector<bool> bootstrap{true, false};
  std::vector<MaxFeatures> max_features{MaxFeatures::kAuto, MaxFeatures::kSqrt};

  std::size_t size() const {
    return n_estimators.size() * max_depth.size() * min_samples_split.size() *
           min_samples_leaf.size() * bootstrap.size() * max_features.size();
  }
};

struct SearchTrial {
  ForestConfig config;
  MetricsReport report;
};

struct SearchResult {
  ForestConfig best;
  std::size_t best_index = 0;
  std::vector<SearchTrial> trials;  // in sampling order
};

// Draws `budget` configurations uniformly from the grid and keeps the one with
// the best mean CV score; ties keep the earlier draw.
inline SearchResult random_search(const FeatureMatrix& x, std::span<const double> y, Task task,
                                  const SearchSpace& space, int budget, const CvConfig& cv,
                                  std::uint64_t seed, unsigned threads = 1) {
  if (budget < 1) throw Error(ErrorCode::kInvalidArgument, "search budget must be >= 1");
  if (space.size() == 0) throw Error(ErrorCode::kInvalidArgument, "empty search space");
  const MetricKind metric = task == Task::kClassification ? MetricKind::kAccuracy : MetricKind::kMaeMs;
  std::mt19937_64 rng(seed);
  auto draw = [&](const auto& list) {
    return list[std::uniform_int_distribution<std::size_t>(0, list.size() - 1)(rng)];
  };
  SearchResult result;
  for (int b = 0; b < budget; ++b) {
    ForestConfig c;
    c.n_estimators = draw(space.n_estimators);
    c.max_depth = draw(space.max_depth);
    c.min_samples_split = draw(space.min_samples_split);
    c.min_samples_leaf = draw(space.min_samples_leaf);
    c.bootstrap = draw(space.bootstrap);
    c.max_features = draw(space.max_features);
    c.seed = seed;
    auto report = cross_validate(x, y, forest_trainer(task, c, threads), metric, cv);
    const bool better =
        result.trials.empty() ||
        (higher_is_better(metric) ? report.mean > result.trials[result.best_index].report.mean
                                  : report.mean < result.trials[result.best_index].report.mean);
    if (better) result.best_index = result.trials.size();
    result.trials.push_back({c, std::move(report)});
  }
  result.best = result.trials[result.best_index].config;
  return result;
}

}  // namespace glancelab
