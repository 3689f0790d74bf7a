#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "glancelab/error.hpp"

namespace glancelab {

// Dense row-major feature matrix.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  explicit FeatureMatrix(std::size_t cols) : cols_(cols) {}
  FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
      : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows_ * cols_) {
      throw Error(ErrorCode::kDimensionMismatch, "matrix storage does not match shape");
    }
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0; }

  std::span<const double> row(std::size_t r) const {
    return {values_.data() + r * cols_, cols_};
  }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  void push_row(std::span<const double> row) {
    if (row.size() != cols_) throw Error(ErrorCode::kDimensionMismatch, "row width mismatch");
    values_.insert(values_.end(), row.begin(), row.end());
    ++rows_;
  }

  FeatureMatrix select_rows(std::span<const std::size_t> indices) const {
    FeatureMatrix out(cols_);
    out.values_.reserve(indices.size() * cols_);
    for (auto i : indices) out.push_row(row(i));
    return out;
  }

  bool operator==(const FeatureMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

template <class T>
std::vector<T> select(std::span<const T> values, std::span<const std::size_t> indices) {
  std::vector<T> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(values[i]);
  return out;
}

}  // namespace glancelab
