#pragma once

// Linear and logistic regression on internally standardized features, plus
// the two reference baselines.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "glancelab/error.hpp"
#include "glancelab/matrix.hpp"

namespace glancelab {

struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;  // population std; 1 for constant columns

  static Standardizer fit(const FeatureMatrix& x) {
    Standardizer s;
    s.mean.assign(x.cols(), 0.0);
    s.scale.assign(x.cols(), 1.0);
    const auto n = static_cast<double>(x.rows());
    for (std::size_t c = 0; c < x.cols(); ++c) {
      double sum = 0.0;
      for (std::size_t r = 0; r < x.rows(); ++r) sum += x(r, c);
      s.mean[c] = sum / n;
      double ss = 0.0;
      for (std::size_t r = 0; r < x.rows(); ++r) ss += (x(r, c) - s.mean[c]) * (x(r, c) - s.mean[c]);
      const double sd = std::sqrt(ss / n);
      s.scale[c] = sd > 1e-12 ? sd : 1.0;
    }
    return s;
  }
};

// y ~ intercept + weights . x, reported in the original feature units.
struct LinearModel {
  double intercept = 0.0;
  std::vector<double> weights;
  bool ridge_fallback = false;  // design was singular; ridge epsilon applied

  double predict(std::span<const double> x) const {
    if (x.size() != weights.size()) throw Error(ErrorCode::kDimensionMismatch, "feature count mismatch");
    double out = intercept;
    for (std::size_t i = 0; i < x.size(); ++i) out += weights[i] * x[i];
    return out;
  }
};

// P(y = 1 | x) = sigmoid(intercept + weights . x).
struct LogisticModel {
  double intercept = 0.0;
  std::vector<double> weights;
  int iterations = 0;
  double gradient_norm = 0.0;

  double decision(std::span<const double> x) const {
    if (x.size() != weights.size()) throw Error(ErrorCode::kDimensionMismatch, "feature count mismatch");
    double z = intercept;
    for (std::size_t i = 0; i < x.size(); ++i) z += weights[i] * x[i];
    return z;
  }
  double predict(std::span<const double> x) const { return 1.0 / (1.0 + std::exp(-decision(x))); }
  int predict_label(std::span<const double> x) const { return predict(x) > 0.5 ? 1 : 0; }
};

namespace detail {

inline Eigen::MatrixXd standardized_design(const FeatureMatrix& x, const Standardizer& s) {
  Eigen::MatrixXd z(x.rows(), x.cols() + 1);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    z(r, 0) = 1.0;
    for (std::size_t c = 0; c < x.cols(); ++c) z(r, c + 1) = (x(r, c) - s.mean[c]) / s.scale[c];
  }
  return z;
}

inline void check_xy(const FeatureMatrix& x, std::span<const double> y) {
  if (x.empty()) throw Error(ErrorCode::kEmptyData, "no training rows");
  if (x.rows() != y.size()) throw Error(ErrorCode::kDimensionMismatch, "rows and targets differ");
}

// beta in standardized space -> (intercept, weights) in original units.
inline void unstandardize(const Eigen::VectorXd& beta, const Standardizer& s, double& intercept,
                          std::vector<double>& weights) {
  intercept = beta(0);
  weights.assign(s.mean.size(), 0.0);
  for (std::size_t c = 0; c < s.mean.size(); ++c) {
    weights[c] = beta(static_cast<Eigen::Index>(c + 1)) / s.scale[c];
    intercept -= weights[c] * s.mean[c];
  }
}

}  // namespace detail

inline constexpr double kRidgeEpsilon = 1e-6;

// Least squares by the normal equations. A rank-deficient design switches to
// ridge with kRidgeEpsilon on the non-intercept coefficients.
inline LinearModel fit_linear(const FeatureMatrix& x, std::span<const double> y) {
  detail::check_xy(x, y);
  const auto s = Standardizer::fit(x);
  const Eigen::MatrixXd z = detail::standardized_design(x, s);
  const Eigen::Map<const Eigen::VectorXd> target(y.data(), static_cast<Eigen::Index>(y.size()));
  Eigen::MatrixXd gram = z.transpose() * z;
  const Eigen::VectorXd rhs = z.transpose() * target;

  LinearModel model;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
  Eigen::VectorXd beta;
  if (lu.rank() == gram.rows()) {
    beta = gram.ldlt().solve(rhs);
  } else {
    model.ridge_fallback = true;
    gram.diagonal().tail(gram.rows() - 1).array() += kRidgeEpsilon * static_cast<double>(x.rows());
    beta = gram.ldlt().solve(rhs);
  }
  detail::unstandardize(beta, s, model.intercept, model.weights);
  return model;
}

struct LogisticConfig {
  double tolerance = 1e-6;  // gradient norm of the mean log-likelihood
  int max_iterations = 200;
  double ridge = kRidgeEpsilon;
};

// Newton ascent on the ridge-penalized mean log-likelihood with step halving.
// The small ridge keeps the optimum finite on separable data.
inline LogisticModel fit_logistic(const FeatureMatrix& x, std::span<const double> y,
                                  const LogisticConfig& config = {}) {
  detail::check_xy(x, y);
  for (double v : y) {
    if (v != 0.0 && v != 1.0) throw Error(ErrorCode::kInvalidArgument, "labels must be 0 or 1");
  }
  const auto s = Standardizer::fit(x);
  const Eigen::MatrixXd z = detail::standardized_design(x, s);
  const Eigen::Map<const Eigen::VectorXd> target(y.data(), static_cast<Eigen::Index>(y.size()));
  const auto n = static_cast<double>(x.rows());
  const Eigen::Index p = z.cols();

  Eigen::VectorXd penalty = Eigen::VectorXd::Constant(p, config.ridge);
  penalty(0) = 0.0;

  auto objective = [&](const Eigen::VectorXd& b) {
    const Eigen::VectorXd eta = z * b;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      const double e = eta(i);
      // log(1 + exp(e)) without overflow
      const double softplus = e > 0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e));
      ll += target(i) * e - softplus;
    }
    return ll / n - 0.5 * (penalty.array() * b.array().square()).sum();
  };

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  LogisticModel model;
  double current = objective(beta);
  for (model.iterations = 0; model.iterations < config.max_iterations; ++model.iterations) {
    const Eigen::VectorXd prob = (1.0 + (-(z * beta)).array().exp()).inverse().matrix();
    const Eigen::VectorXd grad =
        z.transpose() * (target - prob) / n - (penalty.array() * beta.array()).matrix();
    model.gradient_norm = grad.norm();
    if (model.gradient_norm < config.tolerance) break;
    const Eigen::VectorXd w = (prob.array() * (1.0 - prob.array())).matrix();
    Eigen::MatrixXd hessian = z.transpose() * w.asDiagonal() * z / n;
    hessian.diagonal() += penalty;
    hessian.diagonal().array() += 1e-12;
    const Eigen::VectorXd step = hessian.ldlt().solve(grad);
    double t = 1.0;
    Eigen::VectorXd next = beta + step;
    double value = objective(next);
    while (value < current && t > 1e-10) {
      t *= 0.5;
      next = beta + t * step;
      value = objective(next);
    }
    if (value < current) break;  // no ascent direction left at double precision
    beta = next;
    current = value;
  }
  detail::unstandardize(beta, s, model.intercept, model.weights);
  return model;
}

// Classification baseline: a fair, seeded coin per query.
class CoinBaseline {
 public:
  explicit CoinBaseline(std::uint64_t seed) : rng_(seed) {}
  int predict_label() { return std::bernoulli_distribution(0.5)(rng_) ? 1 : 0; }

 private:
  std::mt19937_64 rng_;
};

inline double median(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorCode::kEmptyData, "median of an empty list");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

// Regression baseline: the training median for every query.
struct MedianBaseline {
  double value = 0.0;
  static MedianBaseline fit(std::span<const double> y) {
    return {median(std::vector<double>(y.begin(), y.end()))};
  }
  double predict() const { return value; }
};

}  // namespace glancelab
