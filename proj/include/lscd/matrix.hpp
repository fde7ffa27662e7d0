#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

namespace lscd {

// Dense row-major matrix of doubles. Everything here runs at desk scale
// (dozens of features, a few thousand rows), so plain loops are plenty.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const {
    return {data.data() + r * cols, cols};
  }

  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

  bool operator==(const Matrix& o) const {
    return rows == o.rows && cols == o.cols && data == o.data;
  }
};

// Copies rows [begin, begin + count) into a new matrix.
inline Matrix slice_rows(const Matrix& m, std::size_t begin, std::size_t count) {
  Matrix out(count, m.cols);
  std::copy(m.data.begin() + static_cast<std::ptrdiff_t>(begin * m.cols),
            m.data.begin() + static_cast<std::ptrdiff_t>((begin + count) * m.cols),
            out.data.begin());
  return out;
}

}  // namespace lscd
