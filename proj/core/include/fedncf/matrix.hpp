#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace fedncf {

/// Dense row-major matrix of doubles. All model parameters use double
/// precision so gradient checks and fixed-point round trips have headroom.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  double* row(std::size_t r) { return data.data() + r * cols; }
  const double* row(std::size_t r) const { return data.data() + r * cols; }

  std::span<double> row_span(std::size_t r) { return {row(r), cols}; }
  std::span<const double> row_span(std::size_t r) const { return {row(r), cols}; }

  bool empty() const { return data.empty(); }
  std::size_t size() const { return data.size(); }

  bool same_shape(const Matrix& other) const {
    return rows == other.rows && cols == other.cols;
  }
};

}  // namespace fedncf
