#pragma once

#include "wearcnn/tensor.hpp"

namespace wearcnn {

/// Normalization over the last axis (features); all leading axes form the
/// reduction batch. gamma/beta are trainable, running stats are not.
template <typename Scalar>
struct BatchNormParams {
  Tensor<Scalar> gamma;
  Tensor<Scalar> beta;
  Tensor<Scalar> running_mean;
  Tensor<Scalar> running_var;
  Scalar momentum = Scalar(0.9);
  Scalar epsilon = Scalar(1e-3);
};

template <typename Scalar>
BatchNormParams<Scalar> make_batchnorm_params(int features) {
  BatchNormParams<Scalar> p;
  p.gamma = Tensor<Scalar>::full({features}, Scalar(1));
  p.beta = Tensor<Scalar>::zeros({features});
  p.running_mean = Tensor<Scalar>::zeros({features});
  p.running_var = Tensor<Scalar>::full({features}, Scalar(1));
  return p;
}

/// What the backward pass needs from the forward pass.
template <typename Scalar>
struct BatchNormCache {
  Tensor<Scalar> x_hat;    // normalized input, same shape as x
  Tensor<Scalar> inv_std;  // (features)
  RunMode mode = RunMode::train;
};

/// Train mode normalizes by batch statistics (biased variance), scales by
/// gamma, shifts by beta, and updates the running stats in place:
/// running <- momentum * running + (1 - momentum) * batch. Infer mode uses
/// the stored running stats and leaves them untouched.
template <typename Scalar>
Tensor<Scalar> batchnorm(const Tensor<Scalar>& x, const Tensor<Scalar>& gamma,
                         const Tensor<Scalar>& beta, Tensor<Scalar>& running_mean,
                         Tensor<Scalar>& running_var, Scalar momentum, Scalar epsilon,
                         RunMode mode, BatchNormCache<Scalar>* cache = nullptr) {
  check(x.rank() >= 2, "batchnorm: input must have rank >= 2, got " + shape_str(x.shape));
  const int features = x.dim(x.rank() - 1);
  check(gamma.numel() == features, "batchnorm: feature dim " + shape_str(x.shape) +
                                       " does not match gamma " + shape_str(gamma.shape));
  const long long rows = x.numel() / features;
  check(mode == RunMode::infer || rows >= 2,
        "batchnorm: train mode requires batch size >= 2, got " + std::to_string(rows));

  Tensor<Scalar> mean({features});
  Tensor<Scalar> var({features});
  if (mode == RunMode::train) {
    for (long long r = 0; r < rows; ++r) {
      const Scalar* row = x.data.data() + r * features;
      for (int f = 0; f < features; ++f) mean.data[f] += row[f];
    }
    for (int f = 0; f < features; ++f) mean.data[f] /= Scalar(rows);
    for (long long r = 0; r < rows; ++r) {
      const Scalar* row = x.data.data() + r * features;
      for (int f = 0; f < features; ++f) {
        const Scalar d = row[f] - mean.data[f];
        var.data[f] += d * d;
      }
    }
    for (int f = 0; f < features; ++f) var.data[f] /= Scalar(rows);
    for (int f = 0; f < features; ++f) {
      running_mean.data[f] = momentum * running_mean.data[f] + (Scalar(1) - momentum) * mean.data[f];
      running_var.data[f] = momentum * running_var.data[f] + (Scalar(1) - momentum) * var.data[f];
    }
  } else {
    mean.data = running_mean.data;
    var.data = running_var.data;
  }

  Tensor<Scalar> inv_std({features});
  for (int f = 0; f < features; ++f) {
    inv_std.data[f] = Scalar(1) / std::sqrt(var.data[f] + epsilon);
  }

  Tensor<Scalar> out(x.shape);
  Tensor<Scalar> x_hat(x.shape);
  for (long long r = 0; r < rows; ++r) {
    const Scalar* row = x.data.data() + r * features;
    Scalar* hat_row = x_hat.data.data() + r * features;
    Scalar* out_row = out.data.data() + r * features;
    for (int f = 0; f < features; ++f) {
      hat_row[f] = (row[f] - mean.data[f]) * inv_std.data[f];
      out_row[f] = gamma.data[f] * hat_row[f] + beta.data[f];
    }
  }
  if (cache) {
    cache->x_hat = std::move(x_hat);
    cache->inv_std = std::move(inv_std);
    cache->mode = mode;
  }
  debug_check_finite(out, "batchnorm");
  return out;
}

template <typename Scalar>
Tensor<Scalar> batchnorm(const Tensor<Scalar>& x, BatchNormParams<Scalar>& p, RunMode mode,
                         BatchNormCache<Scalar>* cache = nullptr) {
  return batchnorm(x, p.gamma, p.beta, p.running_mean, p.running_var, p.momentum, p.epsilon, mode,
                   cache);
}

template <typename Scalar>
struct BatchNormGrads {
  Tensor<Scalar> x;
  Tensor<Scalar> gamma;
  Tensor<Scalar> beta;
};

template <typename Scalar>
BatchNormGrads<Scalar> batchnorm_vjp(const Tensor<Scalar>& gamma,
                                     const BatchNormCache<Scalar>& cache,
                                     const Tensor<Scalar>& upstream) {
  const Tensor<Scalar>& x_hat = cache.x_hat;
  check(same_shape(x_hat, upstream), "batchnorm_vjp: upstream " + shape_str(upstream.shape) +
                                         " does not match input " + shape_str(x_hat.shape));
  const int features = x_hat.dim(x_hat.rank() - 1);
  const long long rows = x_hat.numel() / features;

  BatchNormGrads<Scalar> grads;
  grads.gamma = Tensor<Scalar>({features});
  grads.beta = Tensor<Scalar>({features});
  for (long long r = 0; r < rows; ++r) {
    const Scalar* up_row = upstream.data.data() + r * features;
    const Scalar* hat_row = x_hat.data.data() + r * features;
    for (int f = 0; f < features; ++f) {
      grads.beta.data[f] += up_row[f];
      grads.gamma.data[f] += up_row[f] * hat_row[f];
    }
  }

  grads.x = Tensor<Scalar>(x_hat.shape);
  if (cache.mode == RunMode::train) {
    // Batch statistics depend on x, so the mean/variance terms feed back.
    const Scalar inv_rows = Scalar(1) / Scalar(rows);
    for (long long r = 0; r < rows; ++r) {
      const Scalar* up_row = upstream.data.data() + r * features;
      const Scalar* hat_row = x_hat.data.data() + r * features;
      Scalar* gx_row = grads.x.data.data() + r * features;
      for (int f = 0; f < features; ++f) {
        gx_row[f] = gamma.data[f] * cache.inv_std.data[f] * inv_rows *
                    (Scalar(rows) * up_row[f] - grads.beta.data[f] -
                     hat_row[f] * grads.gamma.data[f]);
      }
    }
  } else {
    for (long long r = 0; r < rows; ++r) {
      const Scalar* up_row = upstream.data.data() + r * features;
      Scalar* gx_row = grads.x.data.data() + r * features;
      for (int f = 0; f < features; ++f) {
        gx_row[f] = up_row[f] * gamma.data[f] * cache.inv_std.data[f];
      }
    }
  }
  return grads;
}

template <typename Scalar>
BatchNormGrads<Scalar> batchnorm_vjp(const BatchNormParams<Scalar>& p,
                                     const BatchNormCache<Scalar>& cache,
                                     const Tensor<Scalar>& upstream) {
  return batchnorm_vjp(p.gamma, cache, upstream);
}

}  // namespace wearcnn
