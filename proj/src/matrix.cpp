#include "alignbench/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

namespace alignbench {

RealMatrix::RealMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {
  if (rows == 0 || cols == 0) {
    throw DimensionError(fmt::format("matrix dimensions must be positive, got {}x{}", rows, cols));
  }
}

RealMatrix::RealMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (rows == 0 || cols == 0) {
    throw DimensionError(fmt::format("matrix dimensions must be positive, got {}x{}", rows, cols));
  }
  if (values_.size() != rows * cols) {
    throw DimensionError(fmt::format("{}x{} matrix needs {} values, got {}", rows, cols,
                                     rows * cols, values_.size()));
  }
}

RealMatrix RealMatrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t cols = rows.size() == 0 ? 0 : rows.begin()->size();
  std::vector<double> values;
  values.reserve(rows.size() * cols);
  for (const auto& r : rows) {
    if (r.size() != cols) throw DimensionError("ragged initializer for RealMatrix");
    values.insert(values.end(), r.begin(), r.end());
  }
  return RealMatrix(rows.size(), cols, std::move(values));
}

RealMatrix RealMatrix::identity(std::size_t n) {
  RealMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

RealMatrix RealMatrix::row_vector(std::span<const double> values) {
  return RealMatrix(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

std::string RealMatrix::shape_string() const { return fmt::format("{}x{}", rows_, cols_); }

bool RealMatrix::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

void require_same_shape(const RealMatrix& a, const RealMatrix& b, const char* what) {
  if (!a.same_shape(b)) {
    throw DimensionError(
        fmt::format("{}: shape mismatch {} vs {}", what, a.shape_string(), b.shape_string()));
  }
}

RealMatrix matmul(const RealMatrix& a, const RealMatrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError(
        fmt::format("matmul: cannot multiply {} by {}", a.shape_string(), b.shape_string()));
  }
  RealMatrix out(a.rows(), b.cols());
  const std::size_t inner = a.cols();
  const std::size_t n = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* dst = out.row(i).data();
    for (std::size_t k = 0; k < inner; ++k) {
      const double aik = a(i, k);
      const double* src = b.row(k).data();
      for (std::size_t j = 0; j < n; ++j) dst[j] += aik * src[j];
    }
  }
  return out;
}

RealMatrix transpose(const RealMatrix& a) {
  RealMatrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

RealMatrix row_softmax(const RealMatrix& s) {
  RealMatrix out(s.rows(), s.cols());
  for (std::size_t r = 0; r < s.rows(); ++r) {
    auto in = s.row(r);
    auto dst = out.row(r);
    const double peak = *std::max_element(in.begin(), in.end());
    double total = 0.0;
    for (std::size_t c = 0; c < in.size(); ++c) {
      dst[c] = std::exp(in[c] - peak);
      total += dst[c];
    }
    for (double& v : dst) v /= total;
  }
  return out;
}

RealMatrix relu(const RealMatrix& s) {
  RealMatrix out = s;
  for (double& v : out.values()) v = std::max(v, 0.0);
  return out;
}

RealMatrix layer_norm(const RealMatrix& s, const RealMatrix& gain, const RealMatrix& shift,
                      double eps) {
  if (gain.rows() != 1 || gain.cols() != s.cols() || !gain.same_shape(shift)) {
    throw DimensionError(fmt::format("layer_norm: gain {} and shift {} must be 1x{}",
                                     gain.shape_string(), shift.shape_string(), s.cols()));
  }
  if (!(eps > 0.0)) throw ContractError("layer_norm: eps must be positive");
  RealMatrix out(s.rows(), s.cols());
  const double n = static_cast<double>(s.cols());
  for (std::size_t r = 0; r < s.rows(); ++r) {
    auto in = s.row(r);
    double mean = 0.0;
    for (double v : in) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : in) var += (v - mean) * (v - mean);
    var /= n;
    const double inv = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < s.cols(); ++c) {
      out(r, c) = (in[c] - mean) * inv * gain(0, c) + shift(0, c);
    }
  }
  return out;
}

double max_abs_diff(const RealMatrix& a, const RealMatrix& b) {
  require_same_shape(a, b, "max_abs_diff");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a.values()[i] - b.values()[i]));
  }
  return worst;
}

}  // namespace alignbench
