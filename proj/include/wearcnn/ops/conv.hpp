#pragma once

#include "wearcnn/tensor.hpp"

namespace wearcnn {

enum class Padding { same, valid };

/// Convolution parameters. Kernels are stored (kh, kw, in_channels,
/// out_channels) so that the row-major buffer is directly the
/// (kh*kw*in_channels) x out_channels GEMM operand.
template <typename Scalar>
struct ConvParams {
  Tensor<Scalar> kernels;
  Tensor<Scalar> bias;
  int stride = 1;
  Padding padding = Padding::same;
};

struct ConvGeometry {
  int out_h = 0;
  int out_w = 0;
  int pad_top = 0;
  int pad_left = 0;
};

/// Output extents and zero-padding offsets for the stride/padding rule.
/// "same" pads symmetrically, extra pixel on the bottom/right when odd.
inline ConvGeometry conv_geometry(int in_h, int in_w, int kh, int kw, int stride, Padding padding) {
  check(stride >= 1, "conv: stride must be positive");
  ConvGeometry g;
  if (padding == Padding::valid) {
    check(kh <= in_h && kw <= in_w,
          "conv: kernel (" + std::to_string(kh) + ", " + std::to_string(kw) +
              ") larger than input (" + std::to_string(in_h) + ", " + std::to_string(in_w) + ")");
    g.out_h = (in_h - kh) / stride + 1;
    g.out_w = (in_w - kw) / stride + 1;
  } else {
    g.out_h = (in_h + stride - 1) / stride;
    g.out_w = (in_w + stride - 1) / stride;
    const int pad_h = std::max(0, (g.out_h - 1) * stride + kh - in_h);
    const int pad_w = std::max(0, (g.out_w - 1) * stride + kw - in_w);
    g.pad_top = pad_h / 2;
    g.pad_left = pad_w / 2;
  }
  return g;
}

namespace detail {

template <typename Scalar>
void check_conv_shapes(const Tensor<Scalar>& x, const Tensor<Scalar>& kernels,
                       const Tensor<Scalar>& bias) {
  check(x.rank() == 4, "conv: input must be rank 4 (batch, h, w, c), got " + shape_str(x.shape));
  check(kernels.rank() == 4,
        "conv: kernels must be rank 4 (kh, kw, in_c, out_c), got " + shape_str(kernels.shape));
  check(x.dim(3) == kernels.dim(2), "conv: input channels " + shape_str(x.shape) +
                                        " do not match kernels " + shape_str(kernels.shape));
  check(bias.numel() == kernels.dim(3), "conv: bias " + shape_str(bias.shape) +
                                            " does not match kernels " + shape_str(kernels.shape));
}

/// Patch matrix: row (b, oy, ox), column (ky, kx, ic). Out-of-image taps are
/// zero, matching zero padding.
template <typename Scalar>
typename Tensor<Scalar>::MatrixRM im2col(const Tensor<Scalar>& x, int kh, int kw, int stride,
                                         const ConvGeometry& g) {
  const int batch = x.dim(0), in_h = x.dim(1), in_w = x.dim(2), in_c = x.dim(3);
  typename Tensor<Scalar>::MatrixRM cols(static_cast<long long>(batch) * g.out_h * g.out_w,
                                         static_cast<long long>(kh) * kw * in_c);
  cols.setZero();
  for (int b = 0; b < batch; ++b) {
    for (int oy = 0; oy < g.out_h; ++oy) {
      const long long row_base = (static_cast<long long>(b) * g.out_h + oy) * g.out_w;
      const int iy0 = oy * stride - g.pad_top;
      for (int ox = 0; ox < g.out_w; ++ox) {
        Scalar* row = cols.data() + (row_base + ox) * cols.cols();
        const int ix0 = ox * stride - g.pad_left;
        for (int ky = 0; ky < kh; ++ky) {
          const int iy = iy0 + ky;
          if (iy < 0 || iy >= in_h) continue;
          for (int kx = 0; kx < kw; ++kx) {
            const int ix = ix0 + kx;
            if (ix < 0 || ix >= in_w) continue;
            const Scalar* src = x.data.data() + x.flat4(b, iy, ix, 0);
            Scalar* dst = row + (static_cast<long long>(ky) * kw + kx) * in_c;
            for (int c = 0; c < in_c; ++c) dst[c] = src[c];
          }
        }
      }
    }
  }
  return cols;
}

/// Adjoint of im2col: scatter-add patch rows back into image positions.
template <typename Scalar>
Tensor<Scalar> col2im(const typename Tensor<Scalar>::MatrixRM& cols, const Shape& x_shape, int kh,
                      int kw, int stride, const ConvGeometry& g) {
  Tensor<Scalar> x(x_shape);
  const int in_h = x_shape[1], in_w = x_shape[2], in_c = x_shape[3];
  const int batch = x_shape[0];
  for (int b = 0; b < batch; ++b) {
    for (int oy = 0; oy < g.out_h; ++oy) {
      const long long row_base = (static_cast<long long>(b) * g.out_h + oy) * g.out_w;
      const int iy0 = oy * stride - g.pad_top;
      for (int ox = 0; ox < g.out_w; ++ox) {
        const Scalar* row = cols.data() + (row_base + ox) * cols.cols();
        const int ix0 = ox * stride - g.pad_left;
        for (int ky = 0; ky < kh; ++ky) {
          const int iy = iy0 + ky;
          if (iy < 0 || iy >= in_h) continue;
          for (int kx = 0; kx < kw; ++kx) {
            const int ix = ix0 + kx;
            if (ix < 0 || ix >= in_w) continue;
            Scalar* dst = x.data.data() + x.flat4(b, iy, ix, 0);
            const Scalar* src = row + (static_cast<long long>(ky) * kw + kx) * in_c;
            for (int c = 0; c < in_c; ++c) dst[c] += src[c];
          }
        }
      }
    }
  }
  return x;
}

}  // namespace detail

/// 2-D cross-correlation (CNN convention: no kernel flip) of each input
/// channel with the kernel stack, summed per output channel, plus bias.
/// Activation is applied by a separate op.
template <typename Scalar>
Tensor<Scalar> conv2d_forward(const Tensor<Scalar>& x, const Tensor<Scalar>& kernels,
                              const Tensor<Scalar>& bias, int stride, Padding padding) {
  detail::check_conv_shapes(x, kernels, bias);
  const int kh = kernels.dim(0), kw = kernels.dim(1);
  const int in_c = kernels.dim(2), out_c = kernels.dim(3);
  const ConvGeometry g = conv_geometry(x.dim(1), x.dim(2), kh, kw, stride, padding);

  const auto cols = detail::im2col(x, kh, kw, stride, g);
  const auto kernel_mat = kernels.as_matrix(static_cast<long long>(kh) * kw * in_c, out_c);

  Tensor<Scalar> out({x.dim(0), g.out_h, g.out_w, out_c});
  auto out_mat = out.as_matrix(cols.rows(), out_c);
  out_mat.noalias() = cols * kernel_mat;
  out_mat.rowwise() += bias.as_vector().transpose();
  debug_check_finite(out, "conv2d_forward");
  return out;
}

template <typename Scalar>
Tensor<Scalar> conv2d_forward(const Tensor<Scalar>& x, const ConvParams<Scalar>& p) {
  return conv2d_forward(x, p.kernels, p.bias, p.stride, p.padding);
}

template <typename Scalar>
struct ConvGrads {
  Tensor<Scalar> x;
  Tensor<Scalar> kernels;
  Tensor<Scalar> bias;
};

/// Gradients of sum(upstream ⊙ conv2d_forward(x, p)) w.r.t. x, kernels, bias.
template <typename Scalar>
ConvGrads<Scalar> conv2d_vjp(const Tensor<Scalar>& x, const Tensor<Scalar>& kernels,
                             const Tensor<Scalar>& bias, int stride, Padding padding,
                             const Tensor<Scalar>& upstream) {
  detail::check_conv_shapes(x, kernels, bias);
  const int kh = kernels.dim(0), kw = kernels.dim(1);
  const int in_c = kernels.dim(2), out_c = kernels.dim(3);
  const ConvGeometry g = conv_geometry(x.dim(1), x.dim(2), kh, kw, stride, padding);
  const Shape expected{x.dim(0), g.out_h, g.out_w, out_c};
  check(upstream.shape == expected, "conv2d_vjp: upstream " + shape_str(upstream.shape) +
                                        " does not match output " + shape_str(expected));

  const long long rows = static_cast<long long>(x.dim(0)) * g.out_h * g.out_w;
  const auto up_mat = upstream.as_matrix(rows, out_c);
  const auto cols = detail::im2col(x, kh, kw, stride, g);

  ConvGrads<Scalar> grads;
  grads.bias = Tensor<Scalar>({out_c});
  grads.bias.as_vector() = up_mat.colwise().sum().transpose();

  grads.kernels = Tensor<Scalar>(kernels.shape);
  grads.kernels.as_matrix(cols.cols(), out_c).noalias() = cols.transpose() * up_mat;

  const auto kernel_mat = kernels.as_matrix(cols.cols(), out_c);
  typename Tensor<Scalar>::MatrixRM dcols = up_mat * kernel_mat.transpose();
  grads.x = detail::col2im<Scalar>(dcols, x.shape, kh, kw, stride, g);
  return grads;
}

template <typename Scalar>
ConvGrads<Scalar> conv2d_vjp(const Tensor<Scalar>& x, const ConvParams<Scalar>& p,
                             const Tensor<Scalar>& upstream) {
  return conv2d_vjp(x, p.kernels, p.bias, p.stride, p.padding, upstream);
}

}  // namespace wearcnn
