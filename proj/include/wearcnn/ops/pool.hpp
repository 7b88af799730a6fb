#pragma once

#include "wearcnn/tensor.hpp"

namespace wearcnn {

/// Pooled values plus the flat input index of each window maximum; the vjp
/// routes upstream gradient to exactly those positions.
template <typename Scalar>
struct PoolResult {
  Tensor<Scalar> values;
  std::vector<long long> argmax;
};

/// Per-window maximum over non-overlapping-or-strided windows. Ties break
/// toward the lowest flat index (strict > while scanning in layout order).
template <typename Scalar>
PoolResult<Scalar> maxpool2d(const Tensor<Scalar>& x, int window, int stride) {
  check(x.rank() == 4, "maxpool2d: input must be rank 4, got " + shape_str(x.shape));
  check(window >= 1 && stride >= 1, "maxpool2d: window and stride must be positive");
  const int batch = x.dim(0), in_h = x.dim(1), in_w = x.dim(2), channels = x.dim(3);
  check(window <= in_h && window <= in_w,
        "maxpool2d: window " + std::to_string(window) + " larger than input " +
            shape_str(x.shape));
  const int out_h = (in_h - window) / stride + 1;
  const int out_w = (in_w - window) / stride + 1;

  PoolResult<Scalar> result;
  result.values = Tensor<Scalar>({batch, out_h, out_w, channels});
  result.argmax.resize(static_cast<std::size_t>(result.values.numel()));

  std::size_t out_i = 0;
  for (int b = 0; b < batch; ++b) {
    for (int oy = 0; oy < out_h; ++oy) {
      for (int ox = 0; ox < out_w; ++ox) {
        for (int c = 0; c < channels; ++c, ++out_i) {
          Scalar best{};
          long long best_idx = -1;
          for (int ky = 0; ky < window; ++ky) {
            for (int kx = 0; kx < window; ++kx) {
              const long long idx =
                  static_cast<long long>(x.flat4(b, oy * stride + ky, ox * stride + kx, c));
              const Scalar v = x.data[static_cast<std::size_t>(idx)];
              if (best_idx < 0 || v > best) {
                best = v;
                best_idx = idx;
              }
            }
          }
          result.values.data[out_i] = best;
          result.argmax[out_i] = best_idx;
        }
      }
    }
  }
  return result;
}

template <typename Scalar>
Tensor<Scalar> maxpool2d_vjp(const Shape& x_shape, const std::vector<long long>& argmax,
                             const Tensor<Scalar>& upstream) {
  check(static_cast<long long>(argmax.size()) == upstream.numel(),
        "maxpool2d_vjp: argmax/upstream size mismatch");
  Tensor<Scalar> grad(x_shape);
  for (std::size_t i = 0; i < argmax.size(); ++i) {
    grad.data[static_cast<std::size_t>(argmax[i])] += upstream.data[i];
  }
  return grad;
}

/// Per-channel spatial maximum; output spatial extents are 1x1.
template <typename Scalar>
PoolResult<Scalar> global_maxpool(const Tensor<Scalar>& x) {
  check(x.rank() == 4, "global_maxpool: input must be rank 4, got " + shape_str(x.shape));
  const int batch = x.dim(0), in_h = x.dim(1), in_w = x.dim(2), channels = x.dim(3);

  PoolResult<Scalar> result;
  result.values = Tensor<Scalar>({batch, 1, 1, channels});
  result.argmax.resize(static_cast<std::size_t>(batch) * channels);

  std::size_t out_i = 0;
  for (int b = 0; b < batch; ++b) {
    for (int c = 0; c < channels; ++c, ++out_i) {
      Scalar best{};
      long long best_idx = -1;
      for (int y = 0; y < in_h; ++y) {
        for (int x_pos = 0; x_pos < in_w; ++x_pos) {
          const long long idx = static_cast<long long>(x.flat4(b, y, x_pos, c));
          const Scalar v = x.data[static_cast<std::size_t>(idx)];
          if (best_idx < 0 || v > best) {
            best = v;
            best_idx = idx;
          }
        }
      }
      result.values.data[out_i] = best;
      result.argmax[out_i] = best_idx;
    }
  }
  return result;
}

template <typename Scalar>
Tensor<Scalar> global_maxpool_vjp(const Shape& x_shape, const std::vector<long long>& argmax,
                                  const Tensor<Scalar>& upstream) {
  return maxpool2d_vjp(x_shape, argmax, upstream);
}

}  // namespace wearcnn
