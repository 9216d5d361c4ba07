#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "alignbench/error.hpp"

namespace alignbench {

inline constexpr double kLayerNormEps = 1e-5;

// Dense row-major matrix of doubles. A default-constructed matrix is empty
// (0x0) and only serves as a placeholder; every operation requires at least
// one row and one column.
class RealMatrix {
 public:
  RealMatrix() = default;
  RealMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  RealMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  static RealMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static RealMatrix identity(std::size_t n);
  static RealMatrix row_vector(std::span<const double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }

  bool same_shape(const RealMatrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  std::string shape_string() const;
  bool all_finite() const;

  friend bool operator==(const RealMatrix&, const RealMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

RealMatrix matmul(const RealMatrix& a, const RealMatrix& b);
RealMatrix transpose(const RealMatrix& a);

// Softmax over each row, stabilized by subtracting the row maximum.
RealMatrix row_softmax(const RealMatrix& s);
RealMatrix relu(const RealMatrix& s);

// Per row: (x - mean) / sqrt(var + eps) * gain + shift, with the population
// variance. gain and shift are 1 x cols.
RealMatrix layer_norm(const RealMatrix& s, const RealMatrix& gain, const RealMatrix& shift,
                      double eps = kLayerNormEps);

double max_abs_diff(const RealMatrix& a, const RealMatrix& b);

// Throws DimensionError mentioning `what` when the shapes differ.
void require_same_shape(const RealMatrix& a, const RealMatrix& b, const char* what);

}  // namespace alignbench
