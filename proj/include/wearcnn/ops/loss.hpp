#pragma once

#include "wearcnn/ops/activations.hpp"
#include "wearcnn/tensor.hpp"

#include <span>

namespace wearcnn {

namespace detail {
template <typename Scalar>
void check_scce_args(const Tensor<Scalar>& logits, std::span<const int> labels) {
  check(logits.rank() == 2, "scce: logits must be rank 2, got " + shape_str(logits.shape));
  check(static_cast<long long>(labels.size()) == logits.dim(0),
        "scce: " + std::to_string(labels.size()) + " labels for batch " + shape_str(logits.shape));
  for (int label : labels) {
    check(label >= 0 && label < logits.dim(1),
          "scce: label " + std::to_string(label) + " out of range [0, " +
              std::to_string(logits.dim(1)) + ")");
  }
}
}  // namespace detail

/// Sparse categorical cross-entropy: mean over the batch of
/// -log softmax(logits)[label], evaluated in log-space for stability.
template <typename Scalar>
Scalar scce_loss(const Tensor<Scalar>& logits, std::span<const int> labels) {
  detail::check_scce_args(logits, labels);
  const int batch = logits.dim(0), classes = logits.dim(1);
  Scalar total{};
  for (int b = 0; b < batch; ++b) {
    const Scalar* row = logits.data.data() + static_cast<std::size_t>(b) * classes;
    Scalar max_v = row[0];
    for (int j = 1; j < classes; ++j) max_v = std::max(max_v, row[j]);
    Scalar sum{};
    for (int j = 0; j < classes; ++j) sum += std::exp(row[j] - max_v);
    total += std::log(sum) - (row[labels[static_cast<std::size_t>(b)]] - max_v);
  }
  return total / Scalar(batch);
}

/// d scce / d logits = (softmax - onehot) / batch.
template <typename Scalar>
Tensor<Scalar> scce_vjp(const Tensor<Scalar>& logits, std::span<const int> labels) {
  detail::check_scce_args(logits, labels);
  const int batch = logits.dim(0), classes = logits.dim(1);
  Tensor<Scalar> grad = softmax(logits);
  for (int b = 0; b < batch; ++b) {
    Scalar* row = grad.data.data() + static_cast<std::size_t>(b) * classes;
    row[labels[static_cast<std::size_t>(b)]] -= Scalar(1);
    for (int j = 0; j < classes; ++j) row[j] /= Scalar(batch);
  }
  return grad;
}

/// lambda * sum of squares over the given weight tensors. Callers pass conv
/// kernels and dense weights only; biases and batch-norm parameters are
/// excluded from regularization. Gradient contribution is 2 * lambda * w.
template <typename Scalar>
Scalar l2_penalty(std::span<const Tensor<Scalar>* const> weights, Scalar lambda) {
  check(lambda >= Scalar(0), "l2_penalty: lambda must be >= 0");
  Scalar sum{};
  for (const Tensor<Scalar>* w : weights) {
    for (Scalar v : w->data) sum += v * v;
  }
  return lambda * sum;
}

}  // namespace wearcnn
