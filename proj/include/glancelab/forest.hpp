#pragma once

// CART trees and bagged Random Forests for the long-glance (classification)
// and TGD (regression) tasks.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "glancelab/error.hpp"
#include "glancelab/matrix.hpp"

namespace glancelab {

enum class Task { kClassification, kRegression };
enum class MaxFeatures { kAuto, kSqrt, kAll };

inline std::string_view task_name(Task t) {
  return t == Task::kClassification ? "classification" : "regression";
}
inline Task parse_task(std::string_view s) {
  if (s == "classification") return Task::kClassification;
  if (s == "regression") return Task::kRegression;
  throw Error(ErrorCode::kInvalidArgument, "unknown task '" + std::string(s) + "'");
}
inline std::string_view max_features_name(MaxFeatures m) {
  switch (m) {
    case MaxFeatures::kAuto: return "auto";
    case MaxFeatures::kSqrt: return "sqrt";
    case MaxFeatures::kAll: return "all";
  }
  return "auto";
}
inline MaxFeatures parse_max_features(std::string_view s) {
  if (s == "auto") return MaxFeatures::kAuto;
  if (s == "sqrt") return MaxFeatures::kSqrt;
  if (s == "all") return MaxFeatures::kAll;
  throw Error(ErrorCode::kInvalidArgument, "unknown max_features '" + std::string(s) + "'");
}

struct ForestConfig {
  int n_estimators = 100;
  int max_depth = 0;  // <= 0: unlimited
  int min_samples_split = 2;
  int min_samples_leaf = 1;
  bool bootstrap = true;
  MaxFeatures max_features = MaxFeatures::kAuto;
  std::uint64_t seed = 0;

  bool operator==(const ForestConfig&) const = default;

  static ForestConfig classification_default() {
    return {200, 10, 5, 2, true, MaxFeatures::kAuto, 0};
  }
  static ForestConfig regression_default() {
    return {1600, 60, 2, 4, true, MaxFeatures::kAuto, 0};
  }
  static ForestConfig defaults(Task task) {
    return task == Task::kClassification ? classification_default() : regression_default();
  }

  void validate() const {
    if (n_estimators < 1) throw Error(ErrorCode::kInvalidArgument, "n_estimators must be >= 1");
    if (min_samples_split < 2) {
      throw Error(ErrorCode::kInvalidArgument, "min_samples_split must be >= 2");
    }
    if (min_samples_leaf < 1) throw Error(ErrorCode::kInvalidArgument, "min_samples_leaf must be >= 1");
  }
};

// Auto resolves to Sqrt for classification and All for regression.
inline std::size_t resolve_max_features(MaxFeatures m, Task task, std::size_t n_features) {
  if (m == MaxFeatures::kAuto) m = task == Task::kClassification ? MaxFeatures::kSqrt : MaxFeatures::kAll;
  if (m == MaxFeatures::kAll) return n_features;
  const auto k = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n_features))));
  return std::max<std::size_t>(1, k);
}

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
  double cover = 0.0;

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  // x goes left when x[feature] <= threshold.
  double predict(std::span<const double> x) const {
    int i = 0;
    while (!nodes[i].is_leaf()) {
      const auto& n = nodes[i];
      i = x[n.feature] <= n.threshold ? n.left : n.right;
    }
    return nodes[i].value;
  }
  int depth() const {
    std::vector<int> d(nodes.size(), 0);
    int best = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      best = std::max(best, d[i]);
      if (!nodes[i].is_leaf()) {
        d[nodes[i].left] = d[i] + 1;
        d[nodes[i].right] = d[i] + 1;
      }
    }
    return best;
  }
  bool operator==(const Tree&) const = default;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent stream for item `index` of a seeded job.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

// Presorted CART builder. `sample` lists training rows (with repetition for
// bootstrap draws); every feature keeps the positions of `sample` sorted by
// value and each split stably partitions the node's range in all of them.
class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& x, std::span<const double> y, std::span<const std::size_t> sample,
              Task task, const ForestConfig& config, std::mt19937_64& rng)
      : x_(x), y_(y), sample_(sample.begin(), sample.end()), task_(task), config_(config), rng_(rng) {
    n_features_ = x.cols();
    mtry_ = resolve_max_features(config.max_features, task, n_features_);
    const std::size_t n = sample_.size();
    order_.resize(n_features_ * n);
    goes_left_.assign(n, 0);
    scratch_.resize(n);
    for (std::size_t f = 0; f < n_features_; ++f) {
      auto* o = &order_[f * n];
      std::iota(o, o + n, std::uint32_t{0});
      std::stable_sort(o, o + n, [&](std::uint32_t a, std::uint32_t b) {
        return value(a, f) < value(b, f);
      });
    }
    features_.resize(n_features_);
    std::iota(features_.begin(), features_.end(), std::size_t{0});
  }

  Tree build() {
    Tree tree;
    grow(tree, 0, sample_.size(), 0);
    return tree;
  }

 private:
  double value(std::uint32_t pos, std::size_t f) const { return x_(sample_[pos], f); }
  double target(std::uint32_t pos) const { return y_[sample_[pos]]; }
  std::uint32_t* order(std::size_t f) { return &order_[f * sample_.size()]; }

  struct Split {
    std::size_t feature = 0;
    double threshold = 0.0;
    double score = -std::numeric_limits<double>::infinity();
    std::size_t n_left = 0;
  };

  // Split quality proxy: sum over children of sum(y)^2 / n (regression) or
  // sum over classes of count^2 / n (classification). Larger is better; both
  // are the impurity decrease up to a node constant.
  double child_score(double sum, double count) const {
    if (task_ == Task::kRegression) return sum * sum / count;
    const double neg = count - sum;
    return (sum * sum + neg * neg) / count;
  }

  std::optional<Split> best_split(std::size_t begin, std::size_t end) {
    const std::size_t n = end - begin;
    const auto min_leaf = static_cast<std::size_t>(config_.min_samples_leaf);
    double total = 0.0;
    for (std::size_t i = begin; i < end; ++i) total += target(order(0)[i]);

    std::optional<Split> best;
    std::size_t visited = 0;
    // Partial Fisher-Yates over features; keep drawing past mtry only while
    // no valid split has been found.
    for (std::size_t k = 0; k < n_features_; ++k) {
      if (visited >= mtry_ && best) break;
      std::uniform_int_distribution<std::size_t> pick(k, n_features_ - 1);
      std::swap(features_[k], features_[pick(rng_)]);
      const std::size_t f = features_[k];
      ++visited;
      const auto* o = order(f);
      if (value(o[begin], f) == value(o[end - 1], f)) continue;
      double left_sum = 0.0;
      for (std::size_t i = begin; i + 1 < end; ++i) {
        left_sum += target(o[i]);
        const std::size_t n_left = i + 1 - begin;
        const double a = value(o[i], f);
        const double b = value(o[i + 1], f);
        if (a == b || n_left < min_leaf || n - n_left < min_leaf) continue;
        const double score = child_score(left_sum, static_cast<double>(n_left)) +
                             child_score(total - left_sum, static_cast<double>(n - n_left));
        if (!best || score > best->score) {
          double mid = a + (b - a) / 2.0;
          if (!(mid < b)) mid = a;
          best = Split{f, mid, score, n_left};
        }
      }
    }
    return best;
  }

  int grow(Tree& tree, std::size_t begin, std::size_t end, int depth) {
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    const std::size_t n = end - begin;
    double sum = 0.0;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = begin; i < end; ++i) {
      const double t = target(order(0)[i]);
      sum += t;
      lo = std::min(lo, t);
      hi = std::max(hi, t);
    }
    tree.nodes[id].value = sum / static_cast<double>(n);
    tree.nodes[id].cover = static_cast<double>(n);

    const bool depth_limited = config_.max_depth > 0 && depth >= config_.max_depth;
    if (depth_limited || n < static_cast<std::size_t>(config_.min_samples_split) ||
        n < 2 * static_cast<std::size_t>(config_.min_samples_leaf) || lo == hi) {
      return id;
    }
    const auto split = best_split(begin, end);
    if (!split) return id;

    const auto* o = order(split->feature);
    for (std::size_t i = begin; i < end; ++i) {
      goes_left_[o[i]] = value(o[i], split->feature) <= split->threshold;
    }
    const std::size_t mid = begin + split->n_left;
    for (std::size_t f = 0; f < n_features_; ++f) {
      auto* of = order(f);
      std::size_t l = begin, r = 0;
      for (std::size_t i = begin; i < end; ++i) {
        if (goes_left_[of[i]]) of[l++] = of[i];
        else scratch_[r++] = of[i];
      }
      std::copy(scratch_.begin(), scratch_.begin() + static_cast<std::ptrdiff_t>(r), of + mid);
    }

    tree.nodes[id].feature = static_cast<int>(split->feature);
    tree.nodes[id].threshold = split->threshold;
    const int left = grow(tree, begin, mid, depth + 1);
    const int right = grow(tree, mid, end, depth + 1);
    tree.nodes[id].left = left;
    tree.nodes[id].right = right;
    return id;
  }

  const FeatureMatrix& x_;
  std::span<const double> y_;
  std::vector<std::size_t> sample_;
  Task task_;
  const ForestConfig& config_;
  std::mt19937_64& rng_;
  std::size_t n_features_ = 0;
  std::size_t mtry_ = 0;
  std::vector<std::uint32_t> order_;
  std::vector<char> goes_left_;
  std::vector<std::uint32_t> scratch_;
  std::vector<std::size_t> features_;
};

inline void check_training_data(const FeatureMatrix& x, std::span<const double> y, Task task) {
  if (x.empty()) throw Error(ErrorCode::kEmptyData, "no training rows");
  if (x.rows() != y.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "feature rows and targets differ in length");
  }
  for (double v : y) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kInvalidArgument, "non-finite target");
    if (task == Task::kClassification && v != 0.0 && v != 1.0) {
      throw Error(ErrorCode::kInvalidArgument, "classification targets must be 0 or 1");
    }
  }
}

}  // namespace detail

// One CART tree on the rows listed in `sample` (repeats allowed).
inline Tree fit_tree(const FeatureMatrix& x, std::span<const double> y,
                     std::span<const std::size_t> sample, Task task, const ForestConfig& config,
                     std::mt19937_64& rng) {
  detail::check_training_data(x, y, task);
  if (sample.empty()) throw Error(ErrorCode::kEmptyData, "empty tree sample");
  config.validate();
  return detail::TreeBuilder(x, y, sample, task, config, rng).build();
}

inline Tree fit_tree(const FeatureMatrix& x, std::span<const double> y, Task task,
                     const ForestConfig& config, std::mt19937_64& rng) {
  std::vector<std::size_t> all(x.rows());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return fit_tree(x, y, all, task, config, rng);
}

class Forest {
 public:
  Forest() = default;
  Forest(Task task, ForestConfig config, std::vector<std::string> feature_names,
         std::vector<Tree> trees)
      : task_(task),
        config_(config),
        feature_names_(std::move(feature_names)),
        trees_(std::move(trees)) {}

  Task task() const { return task_; }
  const ForestConfig& config() const { return config_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  std::size_t n_features() const { return feature_names_.size(); }
  const std::vector<Tree>& trees() const { return trees_; }
  std::vector<Tree>& mutable_trees() { return trees_; }

  // Mean of tree outputs; a probability of class 1 for classification.
  double predict(std::span<const double> x) const {
    if (x.size() != n_features()) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "expected " + std::to_string(n_features()) + " features, got " +
                      std::to_string(x.size()));
    }
    double sum = 0.0;
    for (const auto& t : trees_) sum += t.predict(x);
    return sum / static_cast<double>(trees_.size());
  }
  int predict_label(std::span<const double> x) const { return predict(x) > 0.5 ? 1 : 0; }

  std::vector<double> predict(const FeatureMatrix& x) const {
    std::vector<double> out;
    out.reserve(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r) out.push_back(predict(x.row(r)));
    return out;
  }

  bool operator==(const Forest&) const = default;

 private:
  Task task_ = Task::kRegression;
  ForestConfig config_;
  std::vector<std::string> feature_names_;
  std::vector<Tree> trees_;
};

// Each tree gets its own RNG derived from (seed, tree index), so the result
// does not depend on `threads`.
inline Forest fit_forest(const FeatureMatrix& x, std::span<const double> y, Task task,
                         const ForestConfig& config, std::vector<std::string> feature_names = {},
                         unsigned threads = 1) {
  detail::check_training_data(x, y, task);
  config.validate();
  if (feature_names.empty()) {
    for (std::size_t i = 0; i < x.cols(); ++i) feature_names.push_back("x" + std::to_string(i));
  }
  if (feature_names.size() != x.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "feature name count differs from column count");
  }
  const auto n_trees = static_cast<std::size_t>(config.n_estimators);
  std::vector<Tree> trees(n_trees);
  const std::size_t n = x.rows();

  auto fit_one = [&](std::size_t t) {
    std::mt19937_64 rng(detail::derive_seed(config.seed, t));
    std::vector<std::size_t> sample(n);
    if (config.bootstrap) {
      std::uniform_int_distribution<std::size_t> draw(0, n - 1);
      for (auto& s : sample) s = draw(rng);
    } else {
      std::iota(sample.begin(), sample.end(), std::size_t{0});
    }
    trees[t] = detail::TreeBuilder(x, y, sample, task, config, rng).build();
  };

  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n_trees)));
  if (threads == 1) {
    for (std::size_t t = 0; t < n_trees; ++t) fit_one(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (std::size_t t = next++; t < n_trees; t = next++) {
          try {
            fit_one(t);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  }
  return Forest(task, config, std::move(feature_names), std::move(trees));
}

// ---------------------------------------------------------------------------
// Serialization.

inline constexpr std::string_view kForestFormat = "glancelab-forest";
inline constexpr int kForestVersion = 1;

inline nlohmann::json forest_config_to_json(const ForestConfig& c) {
  return {{"n_estimators", c.n_estimators},
          {"max_depth", c.max_depth},
          {"min_samples_split", c.min_samples_split},
          {"min_samples_leaf", c.min_samples_leaf},
          {"bootstrap", c.bootstrap},
          {"max_features", max_features_name(c.max_features)},
          {"seed", c.seed}};
}

// Missing keys keep the values of `base`.
inline ForestConfig forest_config_from_json(const nlohmann::json& j, ForestConfig base = {}) {
  try {
    base.n_estimators = j.value("n_estimators", base.n_estimators);
    base.max_depth = j.value("max_depth", base.max_depth);
    base.min_samples_split = j.value("min_samples_split", base.min_samples_split);
    base.min_samples_leaf = j.value("min_samples_leaf", base.min_samples_leaf);
    base.bootstrap = j.value("bootstrap", base.bootstrap);
    if (j.contains("max_features")) {
      base.max_features = parse_max_features(j.at("max_features").get<std::string>());
    }
    base.seed = j.value("seed", base.seed);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("forest config: ") + e.what());
  }
  base.validate();
  return base;
}

inline nlohmann::json forest_to_json(const Forest& forest) {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : forest.trees()) {
    nlohmann::json feature = nlohmann::json::array(), threshold = nlohmann::json::array(),
                   left = nlohmann::json::array(), right = nlohmann::json::array(),
                   value = nlohmann::json::array(), cover = nlohmann::json::array();
    for (const auto& n : t.nodes) {
      feature.push_back(n.feature);
      threshold.push_back(n.threshold);
      left.push_back(n.left);
      right.push_back(n.right);
      value.push_back(n.value);
      cover.push_back(n.cover);
    }
    trees.push_back({{"feature", feature}, {"threshold", threshold}, {"left", left},
                     {"right", right},     {"value", value},         {"cover", cover}});
  }
  return {{"format", kForestFormat},
          {"version", kForestVersion},
          {"task", task_name(forest.task())},
          {"config", forest_config_to_json(forest.config())},
          {"feature_names", forest.feature_names()},
          {"trees", trees}};
}

inline Forest forest_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != kForestFormat || j.value("version", 0) != kForestVersion) {
    throw Error(ErrorCode::kMalformedRecord, "not a glancelab forest (format/version mismatch)");
  }
  try {
    const auto names = j.at("feature_names").get<std::vector<std::string>>();
    std::vector<Tree> trees;
    for (const auto& jt : j.at("trees")) {
      const auto feature = jt.at("feature").get<std::vector<int>>();
      const auto threshold = jt.at("threshold").get<std::vector<double>>();
      const auto left = jt.at("left").get<std::vector<int>>();
      const auto right = jt.at("right").get<std::vector<int>>();
      const auto value = jt.at("value").get<std::vector<double>>();
      std::vector<double> cover;
      if (jt.contains("cover")) cover = jt.at("cover").get<std::vector<double>>();
      const std::size_t n = feature.size();
      if (n == 0 || threshold.size() != n || left.size() != n || right.size() != n ||
          value.size() != n || (!cover.empty() && cover.size() != n)) {
        throw Error(ErrorCode::kMalformedRecord, "tree arrays differ in length");
      }
      Tree t;
      t.nodes.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        auto& node = t.nodes[i];
        node = {feature[i], threshold[i], left[i], right[i], value[i],
                cover.empty() ? std::nan("") : cover[i]};
        if (node.feature >= static_cast<int>(names.size())) {
          throw Error(ErrorCode::kMalformedRecord, "split feature index out of range");
        }
        if (!node.is_leaf()) {
          const auto ok = [&](int c) { return c > static_cast<int>(i) && c < static_cast<int>(n); };
          if (!ok(node.left) || !ok(node.right) || !std::isfinite(node.threshold)) {
            throw Error(ErrorCode::kMalformedRecord, "invalid split node");
          }
        }
      }
      trees.push_back(std::move(t));
    }
    if (trees.empty()) throw Error(ErrorCode::kMalformedRecord, "forest has no trees");
    return Forest(parse_task(j.at("task").get<std::string>()),
                  forest_config_from_json(j.at("config")), names, std::move(trees));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedRecord, std::string("forest file: ") + e.what());
  }
}

inline void save_forest(const std::filesystem::path& path, const Forest& forest) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write model " + path.string());
  out << forest_to_json(forest).dump() << "\n";
}

inline Forest load_forest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open model " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedRecord, std::string("model file: ") + e.what());
  }
  return forest_from_json(j);
}

}  // namespace glancelab
