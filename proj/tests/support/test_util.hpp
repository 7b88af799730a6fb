#pragma once

#include "wearcnn/ops/conv.hpp"
#include "wearcnn/rng.hpp"
#include "wearcnn/tensor.hpp"

#include <functional>

namespace wearcnn::test {

inline Tensor64 random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor64 t(std::move(shape));
  for (auto& v : t.data) v = rng.uniform(lo, hi);
  return t;
}

/// Central finite differences of a scalar function at every entry of x.
inline Tensor64 finite_difference(const std::function<double(const Tensor64&)>& fn, Tensor64 x,
                                  double h = 1e-6) {
  Tensor64 grad(x.shape);
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    const double original = x.data[i];
    x.data[i] = original + h;
    const double up = fn(x);
    x.data[i] = original - h;
    const double down = fn(x);
    x.data[i] = original;
    grad.data[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

/// Gradient agreement: |a-b| <= atol or relative error <= rtol.
inline bool gradients_match(const Tensor64& analytic, const Tensor64& numeric, double atol = 1e-6,
                            double rtol = 1e-4) {
  if (analytic.shape != numeric.shape) return false;
  for (std::size_t i = 0; i < analytic.data.size(); ++i) {
    const double a = analytic.data[i], n = numeric.data[i];
    const double abs_err = std::abs(a - n);
    const double scale = std::max(std::abs(a), std::abs(n));
    if (abs_err > atol && abs_err > rtol * scale) return false;
  }
  return true;
}

inline double dot(const Tensor64& a, const Tensor64& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) sum += a.data[i] * b.data[i];
  return sum;
}

/// Naive six-nested-loop convolution; the independent oracle conv2d_forward
/// is checked against.
inline Tensor64 conv2d_reference(const Tensor64& x, const Tensor64& kernels, const Tensor64& bias,
                                 int stride, Padding padding) {
  const int batch = x.dim(0), in_h = x.dim(1), in_w = x.dim(2);
  const int kh = kernels.dim(0), kw = kernels.dim(1), in_c = kernels.dim(2),
            out_c = kernels.dim(3);
  const ConvGeometry g = conv_geometry(in_h, in_w, kh, kw, stride, padding);
  Tensor64 out({batch, g.out_h, g.out_w, out_c});
  for (int b = 0; b < batch; ++b) {
    for (int oy = 0; oy < g.out_h; ++oy) {
      for (int ox = 0; ox < g.out_w; ++ox) {
        for (int oc = 0; oc < out_c; ++oc) {
          double acc = bias.data[static_cast<std::size_t>(oc)];
          for (int ky = 0; ky < kh; ++ky) {
            for (int kx = 0; kx < kw; ++kx) {
              const int iy = oy * stride - g.pad_top + ky;
              const int ix = ox * stride - g.pad_left + kx;
              if (iy < 0 || iy >= in_h || ix < 0 || ix >= in_w) continue;
              for (int ic = 0; ic < in_c; ++ic) {
                acc += x(b, iy, ix, ic) *
                       kernels.data[kernels.flat4(ky, kx, ic, oc)];
              }
            }
          }
          out(b, oy, ox, oc) = acc;
        }
      }
    }
  }
  return out;
}

}  // namespace wearcnn::test
