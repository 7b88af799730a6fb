#pragma once

#include "wearcnn/tensor.hpp"

namespace wearcnn {

template <typename Scalar>
struct DenseParams {
  Tensor<Scalar> weights;  // (in_dim, out_dim)
  Tensor<Scalar> bias;     // (out_dim)
};

/// x · W + b; activation is a separate op.
template <typename Scalar>
Tensor<Scalar> dense(const Tensor<Scalar>& x, const Tensor<Scalar>& weights,
                     const Tensor<Scalar>& bias) {
  check(x.rank() == 2, "dense: input must be rank 2 (batch, features), got " + shape_str(x.shape));
  check(weights.rank() == 2, "dense: weights must be rank 2, got " + shape_str(weights.shape));
  check(x.dim(1) == weights.dim(0), "dense: input " + shape_str(x.shape) +
                                        " does not match weights " + shape_str(weights.shape));
  check(bias.numel() == weights.dim(1), "dense: bias " + shape_str(bias.shape) +
                                            " does not match weights " + shape_str(weights.shape));

  Tensor<Scalar> out({x.dim(0), weights.dim(1)});
  auto out_mat = out.as_matrix(x.dim(0), weights.dim(1));
  out_mat.noalias() =
      x.as_matrix(x.dim(0), x.dim(1)) * weights.as_matrix(weights.dim(0), weights.dim(1));
  out_mat.rowwise() += bias.as_vector().transpose();
  debug_check_finite(out, "dense");
  return out;
}

template <typename Scalar>
Tensor<Scalar> dense(const Tensor<Scalar>& x, const DenseParams<Scalar>& p) {
  return dense(x, p.weights, p.bias);
}

template <typename Scalar>
struct DenseGrads {
  Tensor<Scalar> x;
  Tensor<Scalar> weights;
  Tensor<Scalar> bias;
};

template <typename Scalar>
DenseGrads<Scalar> dense_vjp(const Tensor<Scalar>& x, const Tensor<Scalar>& weights,
                             const Tensor<Scalar>& upstream) {
  const Shape expected{x.dim(0), weights.dim(1)};
  check(upstream.shape == expected, "dense_vjp: upstream " + shape_str(upstream.shape) +
                                        " does not match output " + shape_str(expected));
  const auto x_mat = x.as_matrix(x.dim(0), x.dim(1));
  const auto w_mat = weights.as_matrix(weights.dim(0), weights.dim(1));
  const auto up_mat = upstream.as_matrix(expected[0], expected[1]);

  DenseGrads<Scalar> grads;
  grads.x = Tensor<Scalar>(x.shape);
  grads.x.as_matrix(x.dim(0), x.dim(1)).noalias() = up_mat * w_mat.transpose();
  grads.weights = Tensor<Scalar>(weights.shape);
  grads.weights.as_matrix(weights.dim(0), weights.dim(1)).noalias() = x_mat.transpose() * up_mat;
  grads.bias = Tensor<Scalar>({weights.dim(1)});
  grads.bias.as_vector() = up_mat.colwise().sum().transpose();
  return grads;
}

template <typename Scalar>
DenseGrads<Scalar> dense_vjp(const Tensor<Scalar>& x, const DenseParams<Scalar>& p,
                             const Tensor<Scalar>& upstream) {
  return dense_vjp(x, p.weights, upstream);
}

}  // namespace wearcnn
