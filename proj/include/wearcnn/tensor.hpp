#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace wearcnn {

/// Ordered list of positive extents. Image/feature-map layout is fixed as
/// (batch, height, width, channels), row-major.
using Shape = std::vector<int>;

inline long long shape_numel(const Shape& shape) {
  long long n = 1;
  for (int extent : shape) n *= extent;
  return n;
}

inline std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ')';
  return os.str();
}

/// Throws std::invalid_argument; used for all shape/contract violations.
inline void check(bool condition, const std::string& message) {
  if (!condition) throw std::invalid_argument(message);
}

enum class RunMode { train, infer };

/// Dense n-dimensional array over Scalar (float in performance mode, double
/// in oracle/test mode). Plain value type: copy/move semantics, no views.
template <typename Scalar>
struct Tensor {
  Shape shape;
  std::vector<Scalar> data;  // row-major

  Tensor() = default;

  explicit Tensor(Shape s) : shape(std::move(s)), data(static_cast<std::size_t>(shape_numel(shape))) {
    for (int extent : shape) check(extent > 0, "Tensor: nonpositive extent in " + shape_str(shape));
  }

  Tensor(Shape s, std::vector<Scalar> values) : shape(std::move(s)), data(std::move(values)) {
    check(shape_numel(shape) == static_cast<long long>(data.size()),
          "Tensor: shape " + shape_str(shape) + " does not match buffer of length " +
              std::to_string(data.size()));
  }

  Tensor(Shape s, std::initializer_list<Scalar> values)
      : Tensor(std::move(s), std::vector<Scalar>(values)) {}

  static Tensor zeros(Shape s) { return Tensor(std::move(s)); }

  static Tensor full(Shape s, Scalar value) {
    Tensor t(std::move(s));
    std::fill(t.data.begin(), t.data.end(), value);
    return t;
  }

  int rank() const { return static_cast<int>(shape.size()); }
  long long numel() const { return static_cast<long long>(data.size()); }

  int dim(int axis) const { return shape[static_cast<std::size_t>(axis)]; }

  Scalar& operator[](long long i) { return data[static_cast<std::size_t>(i)]; }
  const Scalar& operator[](long long i) const { return data[static_cast<std::size_t>(i)]; }

  Scalar& operator()(int i, int j) { return data[static_cast<std::size_t>(i) * dim(1) + j]; }
  const Scalar& operator()(int i, int j) const {
    return data[static_cast<std::size_t>(i) * dim(1) + j];
  }

  Scalar& operator()(int b, int y, int x, int c) {
    return data[flat4(b, y, x, c)];
  }
  const Scalar& operator()(int b, int y, int x, int c) const {
    return data[flat4(b, y, x, c)];
  }

  std::size_t flat4(int b, int y, int x, int c) const {
    return ((static_cast<std::size_t>(b) * dim(1) + y) * dim(2) + x) * dim(3) + c;
  }

  /// Same buffer reinterpreted under a new shape of equal element count.
  Tensor reshaped(Shape s) const {
    check(shape_numel(s) == numel(), "reshape: " + shape_str(shape) + " -> " + shape_str(s) +
                                         " changes element count");
    Tensor t;
    t.shape = std::move(s);
    t.data = data;
    return t;
  }

  using MatrixRM = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  /// Eigen view of the buffer as a (rows x cols) row-major matrix.
  Eigen::Map<MatrixRM> as_matrix(long long rows, long long cols) {
    check(rows * cols == numel(), "as_matrix: " + std::to_string(rows) + "x" +
                                      std::to_string(cols) + " view of " + shape_str(shape));
    return Eigen::Map<MatrixRM>(data.data(), rows, cols);
  }

  Eigen::Map<const MatrixRM> as_matrix(long long rows, long long cols) const {
    check(rows * cols == numel(), "as_matrix: " + std::to_string(rows) + "x" +
                                      std::to_string(cols) + " view of " + shape_str(shape));
    return Eigen::Map<const MatrixRM>(data.data(), rows, cols);
  }

  Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> as_vector() {
    return {data.data(), static_cast<Eigen::Index>(data.size())};
  }

  Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> as_vector() const {
    return {data.data(), static_cast<Eigen::Index>(data.size())};
  }
};

template <typename Scalar>
bool same_shape(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  return a.shape == b.shape;
}

template <typename Scalar>
bool all_finite(const Tensor<Scalar>& t) {
  for (Scalar v : t.data) {
    if (!std::isfinite(static_cast<double>(v))) return false;
  }
  return true;
}

/// Debug-mode hook: forward passes assert finite outputs on finite inputs.
template <typename Scalar>
inline void debug_check_finite([[maybe_unused]] const Tensor<Scalar>& t,
                               [[maybe_unused]] const char* op) {
#ifndef NDEBUG
  if (!all_finite(t)) throw std::runtime_error(std::string(op) + ": non-finite value in output");
#endif
}

using Tensor32 = Tensor<float>;
using Tensor64 = Tensor<double>;

}  // namespace wearcnn
