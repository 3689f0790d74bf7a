#pragma once

// Exact Shapley attributions for forest predictions: polynomial-time
// path-dependent TreeSHAP and a 2^M enumeration used as its oracle.

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

#include "glancelab/error.hpp"
#include "glancelab/forest.hpp"
#include "glancelab/matrix.hpp"

namespace glancelab {

struct Explanation {
  double base_value = 0.0;
  std::vector<double> phi;
  double model_output = 0.0;
  std::vector<double> instance;

  double reconstructed() const {
    double sum = base_value;
    for (double p : phi) sum += p;
    return sum;
  }
  bool operator==(const Explanation&) const = default;
};

namespace detail {

inline void check_covers(const Tree& tree) {
  for (const auto& n : tree.nodes) {
    if (!(n.cover > 0.0) || !std::isfinite(n.cover)) {
      throw Error(ErrorCode::kMissingCover, "tree node without positive cover");
    }
  }
}

inline void check_instance(const Forest& forest, std::span<const double> x) {
  if (x.size() != forest.n_features()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "expected " + std::to_string(forest.n_features()) + " features, got " +
                    std::to_string(x.size()));
  }
}

// Cover-weighted mean of the leaves below `node`: the tree output when no
// feature is known.
inline double expected_value(const Tree& tree, int node = 0) {
  const auto& n = tree.nodes[node];
  if (n.is_leaf()) return n.value;
  const double cl = tree.nodes[n.left].cover;
  const double cr = tree.nodes[n.right].cover;
  return (cl * expected_value(tree, n.left) + cr * expected_value(tree, n.right)) / (cl + cr);
}

struct PathElement {
  int feature = -1;
  double zero_fraction = 0.0;
  double one_fraction = 0.0;
  double weight = 0.0;
};

class TreeShapRunner {
 public:
  TreeShapRunner(const Tree& tree, std::span<const double> x, std::span<double> phi)
      : tree_(tree), x_(x), phi_(phi) {
    const int depth = tree.depth();
    buffer_.resize(static_cast<std::size_t>((depth + 2) * (depth + 3) / 2 + depth + 2));
  }

  void run() { recurse(0, buffer_.data(), 0, 1.0, 1.0, -1); }

 private:
  static void extend(PathElement* path, int d, double zero, double one, int feature) {
    path[d] = {feature, zero, one, d == 0 ? 1.0 : 0.0};
    for (int i = d - 1; i >= 0; --i) {
      path[i + 1].weight += one * path[i].weight * (i + 1) / static_cast<double>(d + 1);
      path[i].weight = zero * path[i].weight * (d - i) / static_cast<double>(d + 1);
    }
  }

  static void unwind(PathElement* path, int d, int index) {
    const double one = path[index].one_fraction;
    const double zero = path[index].zero_fraction;
    double next = path[d].weight;
    for (int i = d - 1; i >= 0; --i) {
      if (one != 0.0) {
        const double tmp = path[i].weight;
        path[i].weight = next * (d + 1) / (static_cast<double>(i + 1) * one);
        next = tmp - path[i].weight * zero * (d - i) / static_cast<double>(d + 1);
      } else {
        path[i].weight = path[i].weight * (d + 1) / (zero * (d - i));
      }
    }
    for (int i = index; i < d; ++i) {
      path[i].feature = path[i + 1].feature;
      path[i].zero_fraction = path[i + 1].zero_fraction;
      path[i].one_fraction = path[i + 1].one_fraction;
    }
  }

  // Sum of path weights if element `index` were unwound.
  static double unwound_sum(const PathElement* path, int d, int index) {
    const double one = path[index].one_fraction;
    const double zero = path[index].zero_fraction;
    double next = path[d].weight;
    double total = 0.0;
    for (int i = d - 1; i >= 0; --i) {
      if (one != 0.0) {
        const double tmp = next * (d + 1) / (static_cast<double>(i + 1) * one);
        total += tmp;
        next = path[i].weight - tmp * zero * (d - i) / static_cast<double>(d + 1);
      } else {
        total += path[i].weight / zero / ((d - i) / static_cast<double>(d + 1));
      }
    }
    return total;
  }

  // `parent` holds the path of length d; this level works on a copy placed
  // right after it in the buffer.
  void recurse(int node, PathElement* parent, int d, double zero, double one, int feature) {
    PathElement* path = parent + d;
    if (d > 0) std::copy(parent, parent + d, path);
    extend(path, d, zero, one, feature);

    const auto& n = tree_.nodes[node];
    if (n.is_leaf()) {
      for (int i = 1; i <= d; ++i) {
        const double w = unwound_sum(path, d, i);
        phi_[path[i].feature] += w * (path[i].one_fraction - path[i].zero_fraction) * n.value;
      }
      return;
    }

    const bool go_left = x_[n.feature] <= n.threshold;
    const int hot = go_left ? n.left : n.right;
    const int cold = go_left ? n.right : n.left;
    const double total = tree_.nodes[n.left].cover + tree_.nodes[n.right].cover;

    double incoming_zero = 1.0;
    double incoming_one = 1.0;
    int k = 1;
    for (; k <= d; ++k) {
      if (path[k].feature == n.feature) break;
    }
    if (k <= d) {
      incoming_zero = path[k].zero_fraction;
      incoming_one = path[k].one_fraction;
      unwind(path, d, k);
      --d;
    }
    recurse(hot, path, d + 1, incoming_zero * tree_.nodes[hot].cover / total, incoming_one,
            n.feature);
    recurse(cold, path, d + 1, incoming_zero * tree_.nodes[cold].cover / total, 0.0, n.feature);
  }

  const Tree& tree_;
  std::span<const double> x_;
  std::span<double> phi_;
  std::vector<PathElement> buffer_;
};

}  // namespace detail

// Per-tree attribution added into `phi`; returns the tree's base value.
inline double tree_shap(const Tree& tree, std::span<const double> x, std::span<double> phi) {
  detail::check_covers(tree);
  detail::TreeShapRunner(tree, x, phi).run();
  return detail::expected_value(tree);
}

// Path-dependent TreeSHAP: per-tree attributions averaged over the forest,
// exactly as predictions are.
inline Explanation tree_shap(const Forest& forest, std::span<const double> x) {
  detail::check_instance(forest, x);
  Explanation e;
  e.instance.assign(x.begin(), x.end());
  e.phi.assign(x.size(), 0.0);
  double base = 0.0;
  for (const auto& t : forest.trees()) base += tree_shap(t, x, e.phi);
  const auto n = static_cast<double>(forest.trees().size());
  e.base_value = base / n;
  for (auto& p : e.phi) p /= n;
  e.model_output = forest.predict(x);
  return e;
}

inline constexpr std::size_t kMaxBruteForceFeatures = 20;

namespace detail {

// f_x(S) for one tree: features in S follow x, the others average their
// children by cover.
inline double conditional_expectation(const Tree& tree, int node, std::span<const double> x,
                                      std::uint32_t known) {
  const auto& n = tree.nodes[node];
  if (n.is_leaf()) return n.value;
  if (known & (1u << n.feature)) {
    return conditional_expectation(tree, x[n.feature] <= n.threshold ? n.left : n.right, x, known);
  }
  const double wl = tree.nodes[n.left].cover;
  const double wr = tree.nodes[n.right].cover;
  return (wl * conditional_expectation(tree, n.left, x, known) +
          wr * conditional_expectation(tree, n.right, x, known)) /
         (wl + wr);
}

}  // namespace detail

// Shapley values by enumerating all 2^M coalitions of the forest's
// conditional expectation f_x(S) = mean over trees.
inline Explanation brute_force_shap(const Forest& forest, std::span<const double> x) {
  detail::check_instance(forest, x);
  const std::size_t m = x.size();
  if (m > kMaxBruteForceFeatures) {
    throw Error(ErrorCode::kTooManyFeatures,
                std::to_string(m) + " features exceed the enumeration limit of 20");
  }
  const std::uint32_t full = m == 0 ? 0u : static_cast<std::uint32_t>((1u << m) - 1);
  std::vector<long double> value(std::size_t{1} << m, 0.0L);
  std::vector<double> table(std::size_t{1} << m, 0.0);

  for (const auto& tree : forest.trees()) {
    detail::check_covers(tree);
    std::uint32_t used = 0;
    for (const auto& n : tree.nodes) {
      if (!n.is_leaf()) used |= 1u << n.feature;
    }
    // Only submasks of `used` matter to this tree.
    for (std::uint32_t s = used;; s = (s - 1) & used) {
      table[s] = detail::conditional_expectation(tree, 0, x, s);
      if (s == 0) break;
    }
    for (std::uint32_t s = 0; s <= full; ++s) {
      value[s] += table[s & used];
      if (s == full) break;
    }
  }
  const auto n_trees = static_cast<long double>(forest.trees().size());
  for (auto& v : value) v /= n_trees;

  // weight[s] = s! (M - s - 1)! / M!
  std::vector<long double> weight(m, 0.0L);
  for (std::size_t s = 0; s < m; ++s) {
    long double w = 1.0L / static_cast<long double>(m);
    for (std::size_t k = 1; k <= s; ++k) {
      w *= static_cast<long double>(k) / static_cast<long double>(m - k);
    }
    weight[s] = w;
  }

  Explanation e;
  e.instance.assign(x.begin(), x.end());
  e.phi.assign(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const std::uint32_t bit = 1u << i;
    long double acc = 0.0L;
    for (std::uint32_t s = 0; s <= full; ++s) {
      if (!(s & bit)) acc += weight[std::popcount(s)] * (value[s | bit] - value[s]);
      if (s == full) break;
    }
    e.phi[i] = static_cast<double>(acc);
  }
  e.base_value = static_cast<double>(value[0]);
  e.model_output = forest.predict(x);
  return e;
}

// TreeSHAP for every row; rows are independent, so work is split across
// `threads` without affecting the result.
inline std::vector<Explanation> explain_rows(const Forest& forest, const FeatureMatrix& x,
                                             unsigned threads = 1) {
  std::vector<Explanation> out(x.rows());
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, x.rows()))));
  if (threads == 1) {
    for (std::size_t r = 0; r < x.rows(); ++r) out[r] = tree_shap(forest, x.row(r));
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t r = next++; r < x.rows(); r = next++) {
        try {
          out[r] = tree_shap(forest, x.row(r));
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace glancelab
