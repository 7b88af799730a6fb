#pragma once

#include "wearcnn/network.hpp"
#include "wearcnn/tensor.hpp"

namespace wearcnn {

template <typename Scalar>
struct AdamConfig {
  Scalar learning_rate = Scalar(1e-3);
  Scalar beta1 = Scalar(0.9);
  Scalar beta2 = Scalar(0.999);
  Scalar epsilon = Scalar(1e-8);
};

/// First/second moment estimates per trainable parameter, in store order,
/// plus the shared step counter.
template <typename Scalar>
struct AdamState {
  std::vector<Tensor<Scalar>> m;
  std::vector<Tensor<Scalar>> v;
  long long t = 0;

  static AdamState init(const ParamStore<Scalar>& params) {
    AdamState state;
    for (const auto& entry : params.entries()) {
      if (!entry.trainable) continue;
      state.m.push_back(Tensor<Scalar>(entry.value.shape));
      state.v.push_back(Tensor<Scalar>(entry.value.shape));
    }
    return state;
  }
};

/// Bias-corrected Adam update:
///   m <- b1*m + (1-b1)*g,  v <- b2*v + (1-b2)*g^2,
///   w <- w - lr * m_hat / (sqrt(v_hat) + eps).
/// Throws on a non-finite gradient, naming the parameter.
template <typename Scalar>
void adam_step(ParamStore<Scalar>& params, const ParamStore<Scalar>& grads,
               AdamState<Scalar>& state, const AdamConfig<Scalar>& config) {
  ++state.t;
  const Scalar bc1 = Scalar(1) - std::pow(config.beta1, Scalar(state.t));
  const Scalar bc2 = Scalar(1) - std::pow(config.beta2, Scalar(state.t));

  std::size_t slot = 0;
  for (auto& entry : params.entries()) {
    if (!entry.trainable) continue;
    const Tensor<Scalar>& g = grads.at(entry.name);
    check(same_shape(entry.value, g), "adam_step: gradient shape " + shape_str(g.shape) +
                                          " does not match parameter " + entry.name + " " +
                                          shape_str(entry.value.shape));
    Tensor<Scalar>& m = state.m[slot];
    Tensor<Scalar>& v = state.v[slot];
    ++slot;
    for (std::size_t i = 0; i < g.data.size(); ++i) {
      const Scalar gi = g.data[i];
      if (!std::isfinite(static_cast<double>(gi))) {
        throw std::runtime_error("adam_step: non-finite gradient in " + entry.name +
                                 " at flat index " + std::to_string(i));
      }
      m.data[i] = config.beta1 * m.data[i] + (Scalar(1) - config.beta1) * gi;
      v.data[i] = config.beta2 * v.data[i] + (Scalar(1) - config.beta2) * gi * gi;
      const Scalar m_hat = m.data[i] / bc1;
      const Scalar v_hat = v.data[i] / bc2;
      entry.value.data[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
  }
}

}  // namespace wearcnn
