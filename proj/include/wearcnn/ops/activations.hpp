#pragma once

#include "wearcnn/tensor.hpp"

namespace wearcnn {

/// Elementwise max[0, x].
template <typename Scalar>
Tensor<Scalar> relu(const Tensor<Scalar>& x) {
  Tensor<Scalar> out(x.shape);
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    out.data[i] = x.data[i] > Scalar(0) ? x.data[i] : Scalar(0);
  }
  return out;
}

/// Passes upstream where x > 0, zero elsewhere.
template <typename Scalar>
Tensor<Scalar> relu_vjp(const Tensor<Scalar>& x, const Tensor<Scalar>& upstream) {
  check(same_shape(x, upstream), "relu_vjp: upstream " + shape_str(upstream.shape) +
                                     " does not match input " + shape_str(x.shape));
  Tensor<Scalar> grad(x.shape);
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    grad.data[i] = x.data[i] > Scalar(0) ? upstream.data[i] : Scalar(0);
  }
  return grad;
}

/// Softmax along the last axis, computed with max-subtraction so that large
/// logits do not overflow. Rows sum to 1, entries lie in (0, 1).
template <typename Scalar>
Tensor<Scalar> softmax(const Tensor<Scalar>& x) {
  check(x.rank() >= 1, "softmax: input must have rank >= 1");
  const int width = x.dim(x.rank() - 1);
  const long long rows = x.numel() / width;
  Tensor<Scalar> out(x.shape);
  for (long long r = 0; r < rows; ++r) {
    const Scalar* in_row = x.data.data() + r * width;
    Scalar* out_row = out.data.data() + r * width;
    Scalar max_v = in_row[0];
    for (int j = 1; j < width; ++j) max_v = std::max(max_v, in_row[j]);
    Scalar sum{};
    for (int j = 0; j < width; ++j) {
      out_row[j] = std::exp(in_row[j] - max_v);
      sum += out_row[j];
    }
    for (int j = 0; j < width; ++j) out_row[j] /= sum;
  }
  debug_check_finite(out, "softmax");
  return out;
}

}  // namespace wearcnn
