#pragma once

#include "wearcnn/ops/activations.hpp"
#include "wearcnn/ops/batchnorm.hpp"
#include "wearcnn/ops/conv.hpp"
#include "wearcnn/ops/dense.hpp"
#include "wearcnn/ops/loss.hpp"
#include "wearcnn/ops/pool.hpp"
#include "wearcnn/rng.hpp"
#include "wearcnn/tensor.hpp"

#include <map>
#include <span>
#include <variant>

namespace wearcnn {

// ---------------------------------------------------------------------------
// Declarative layer chain
// ---------------------------------------------------------------------------

struct ConvSpec {
  int filters = 1;
  int kernel = 3;
  int stride = 1;
  Padding padding = Padding::same;
};
struct ReluSpec {};
struct MaxPoolSpec {
  int window = 2;
  int stride = 2;
};
struct GlobalMaxPoolSpec {};
struct FlattenSpec {};
struct DenseSpec {
  int units = 1;
};
struct BatchNormSpec {};
struct DropoutSpec {
  double rate = 0.0;
};
/// Final dense layer with the softmax activation fused in; exactly one of
/// these ends every chain.
struct SoftmaxOutputSpec {
  int classes = 2;
};

using LayerSpec = std::variant<ConvSpec, ReluSpec, MaxPoolSpec, GlobalMaxPoolSpec, FlattenSpec,
                               DenseSpec, BatchNormSpec, DropoutSpec, SoftmaxOutputSpec>;

struct Topology {
  Shape input_shape;  // (h, w, c)
  std::vector<LayerSpec> layers;
  double l2_lambda = 0.0;
};

inline long long count_layers(const Topology& topo) {
  return static_cast<long long>(topo.layers.size());
}

/// Output shape after each layer for batch size `batch`; throws on any
/// dimension mismatch and enforces "exactly one SoftmaxOutput, last in chain".
inline std::vector<Shape> infer_shapes(const Topology& topo, int batch = 1) {
  check(topo.input_shape.size() == 3,
        "topology: input shape must be (h, w, c), got " + shape_str(topo.input_shape));
  std::vector<Shape> shapes;
  shapes.reserve(topo.layers.size());
  Shape cur{batch, topo.input_shape[0], topo.input_shape[1], topo.input_shape[2]};
  int softmax_outputs = 0;
  for (std::size_t i = 0; i < topo.layers.size(); ++i) {
    const LayerSpec& layer = topo.layers[i];
    check(softmax_outputs == 0, "topology: SoftmaxOutput must be the last layer");
    if (const auto* conv = std::get_if<ConvSpec>(&layer)) {
      check(cur.size() == 4, "topology: conv after flatten at layer " + std::to_string(i));
      const ConvGeometry g =
          conv_geometry(cur[1], cur[2], conv->kernel, conv->kernel, conv->stride, conv->padding);
      cur = {cur[0], g.out_h, g.out_w, conv->filters};
    } else if (std::holds_alternative<ReluSpec>(layer)) {
      // shape unchanged
    } else if (const auto* pool = std::get_if<MaxPoolSpec>(&layer)) {
      check(cur.size() == 4, "topology: maxpool after flatten at layer " + std::to_string(i));
      check(pool->window <= cur[1] && pool->window <= cur[2],
            "topology: pool window " + std::to_string(pool->window) + " exceeds feature map " +
                shape_str(cur) + " at layer " + std::to_string(i));
      cur = {cur[0], (cur[1] - pool->window) / pool->stride + 1,
             (cur[2] - pool->window) / pool->stride + 1, cur[3]};
    } else if (std::holds_alternative<GlobalMaxPoolSpec>(layer)) {
      check(cur.size() == 4, "topology: global maxpool after flatten at layer " + std::to_string(i));
      cur = {cur[0], 1, 1, cur[3]};
    } else if (std::holds_alternative<FlattenSpec>(layer)) {
      check(cur.size() == 4, "topology: flatten applied twice at layer " + std::to_string(i));
      cur = {cur[0], cur[1] * cur[2] * cur[3]};
    } else if (const auto* dense_spec = std::get_if<DenseSpec>(&layer)) {
      check(cur.size() == 2, "topology: dense before flatten at layer " + std::to_string(i));
      cur = {cur[0], dense_spec->units};
    } else if (std::holds_alternative<BatchNormSpec>(layer)) {
      // shape unchanged
    } else if (std::holds_alternative<DropoutSpec>(layer)) {
      // shape unchanged
    } else if (const auto* out = std::get_if<SoftmaxOutputSpec>(&layer)) {
      check(cur.size() == 2, "topology: output layer before flatten at layer " + std::to_string(i));
      cur = {cur[0], out->classes};
      ++softmax_outputs;
    }
    shapes.push_back(cur);
  }
  check(softmax_outputs == 1, "topology: chain must end in exactly one SoftmaxOutput");
  return shapes;
}

inline void validate_topology(const Topology& topo) { infer_shapes(topo, 1); }

// ---------------------------------------------------------------------------
// Reference topologies
// ---------------------------------------------------------------------------

/// Construction recipe shared by the reference networks and the
/// hyperparameter search: conv blocks (MaxPool2 after each of the first
/// conv_count-2 convs, GlobalMaxPool after the last), then fully connected
/// blocks Dense -> [BatchNorm] -> ReLU -> [Dropout], then the 16-way output.
struct CnnRecipe {
  Shape input_shape{128, 128, 3};
  std::vector<int> conv_filters{32, 64, 64, 128, 256, 256, 256};
  int conv_kernel = 3;
  int fc_count = 3;
  int fc_width = 512;
  bool batchnorm_after_fc = true;
  double dropout_rate = 0.0;
  int classes = 16;
  double l2_lambda = 0.01;
};

inline Topology build_cnn(const CnnRecipe& recipe) {
  Topology topo;
  topo.input_shape = recipe.input_shape;
  topo.l2_lambda = recipe.l2_lambda;
  const int conv_count = static_cast<int>(recipe.conv_filters.size());
  int spatial = std::min(recipe.input_shape[0], recipe.input_shape[1]);
  for (int i = 0; i < conv_count; ++i) {
    topo.layers.push_back(ConvSpec{recipe.conv_filters[static_cast<std::size_t>(i)],
                                   recipe.conv_kernel, 1, Padding::same});
    topo.layers.push_back(ReluSpec{});
    // MaxPool2 after each conv except the last two, while the feature map can
    // still be halved; GlobalMaxPool closes the conv stack.
    if (i < conv_count - 2 && spatial >= 2) {
      topo.layers.push_back(MaxPoolSpec{2, 2});
      spatial /= 2;
    } else if (i == conv_count - 1) {
      topo.layers.push_back(GlobalMaxPoolSpec{});
    }
  }
  topo.layers.push_back(FlattenSpec{});
  for (int i = 0; i < recipe.fc_count; ++i) {
    topo.layers.push_back(DenseSpec{recipe.fc_width});
    if (recipe.batchnorm_after_fc) topo.layers.push_back(BatchNormSpec{});
    topo.layers.push_back(ReluSpec{});
    if (recipe.dropout_rate > 0.0) topo.layers.push_back(DropoutSpec{recipe.dropout_rate});
  }
  topo.layers.push_back(SoftmaxOutputSpec{recipe.classes});
  validate_topology(topo);
  return topo;
}

/// The 31-layer, 2,273,680-parameter network: 128x128x3 input, seven 3x3
/// "same" conv blocks with filters 32/64/64/128/256/256/256, MaxPool2 after
/// the first five, GlobalMaxPool after the last (flatten width 256), three
/// Dense(512)+BatchNorm+ReLU blocks, Dense(16)+Softmax, L2 0.01.
inline Topology build_paper_cnn() { return build_cnn(CnnRecipe{}); }

/// Laptop-scale profile with the same shape grammar: 64x64 input, filters
/// 8/16/16/32/64/64/64, FC width 128.
inline Topology build_desk_cnn() {
  CnnRecipe recipe;
  recipe.input_shape = {64, 64, 3};
  recipe.conv_filters = {8, 16, 16, 32, 64, 64, 64};
  recipe.fc_width = 128;
  return build_cnn(recipe);
}

// ---------------------------------------------------------------------------
// Parameter store
// ---------------------------------------------------------------------------

template <typename Scalar>
struct ParamEntry {
  std::string name;
  Tensor<Scalar> value;
  bool trainable = true;
};

/// Named parameter tensors in a stable order (insertion order == layer
/// order); iteration order defines optimizer and serialization order.
template <typename Scalar>
class ParamStore {
 public:
  void add(std::string name, Tensor<Scalar> value, bool trainable) {
    check(!index_.contains(name), "ParamStore: duplicate name " + name);
    index_.emplace(name, entries_.size());
    entries_.push_back({std::move(name), std::move(value), trainable});
  }

  bool has(const std::string& name) const { return index_.contains(name); }

  Tensor<Scalar>& at(const std::string& name) {
    auto it = index_.find(name);
    check(it != index_.end(), "ParamStore: unknown parameter " + name);
    return entries_[it->second].value;
  }

  const Tensor<Scalar>& at(const std::string& name) const {
    auto it = index_.find(name);
    check(it != index_.end(), "ParamStore: unknown parameter " + name);
    return entries_[it->second].value;
  }

  std::span<ParamEntry<Scalar>> entries() { return entries_; }
  std::span<const ParamEntry<Scalar>> entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

 private:
  std::vector<ParamEntry<Scalar>> entries_;
  std::map<std::string, std::size_t> index_;
};

/// Sum of trainable tensor sizes; batch-norm running stats are excluded by
/// their non-trainable flag.
template <typename Scalar>
long long count_trainable_params(const ParamStore<Scalar>& store) {
  long long total = 0;
  for (const auto& entry : store.entries()) {
    if (entry.trainable) total += entry.value.numel();
  }
  return total;
}

namespace detail {

/// Parameter-name prefix for each layer ("" where the layer has none).
inline std::vector<std::string> layer_param_prefixes(const Topology& topo) {
  std::vector<std::string> prefixes(topo.layers.size());
  int conv_i = 0, dense_i = 0, bn_i = 0;
  for (std::size_t i = 0; i < topo.layers.size(); ++i) {
    const LayerSpec& layer = topo.layers[i];
    if (std::holds_alternative<ConvSpec>(layer)) {
      prefixes[i] = "conv" + std::to_string(++conv_i);
    } else if (std::holds_alternative<DenseSpec>(layer)) {
      prefixes[i] = "dense" + std::to_string(++dense_i);
    } else if (std::holds_alternative<BatchNormSpec>(layer)) {
      prefixes[i] = "bn" + std::to_string(++bn_i);
    } else if (std::holds_alternative<SoftmaxOutputSpec>(layer)) {
      prefixes[i] = "output";
    }
  }
  return prefixes;
}

template <typename Scalar>
Tensor<Scalar> he_uniform(Shape shape, long long fan_in, Rng& rng) {
  Tensor<Scalar> t(std::move(shape));
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (auto& v : t.data) v = static_cast<Scalar>(rng.uniform(-limit, limit));
  return t;
}

}  // namespace detail

/// Fresh parameter store for a topology: He-uniform conv/dense weights, zero
/// biases, gamma=1/beta=0, running mean 0/var 1.
template <typename Scalar>
ParamStore<Scalar> init_params(const Topology& topo, Rng& rng) {
  const auto shapes = infer_shapes(topo, 1);
  const auto prefixes = detail::layer_param_prefixes(topo);
  ParamStore<Scalar> store;
  Shape cur{1, topo.input_shape[0], topo.input_shape[1], topo.input_shape[2]};
  for (std::size_t i = 0; i < topo.layers.size(); ++i) {
    const LayerSpec& layer = topo.layers[i];
    const std::string& prefix = prefixes[i];
    if (const auto* conv = std::get_if<ConvSpec>(&layer)) {
      const int in_c = cur[3];
      const long long fan_in = static_cast<long long>(conv->kernel) * conv->kernel * in_c;
      store.add(prefix + "/kernels",
                detail::he_uniform<Scalar>({conv->kernel, conv->kernel, in_c, conv->filters},
                                           fan_in, rng),
                true);
      store.add(prefix + "/bias", Tensor<Scalar>::zeros({conv->filters}), true);
    } else if (const auto* dense_spec = std::get_if<DenseSpec>(&layer)) {
      const int in_dim = cur[1];
      store.add(prefix + "/weights",
                detail::he_uniform<Scalar>({in_dim, dense_spec->units}, in_dim, rng), true);
      store.add(prefix + "/bias", Tensor<Scalar>::zeros({dense_spec->units}), true);
    } else if (std::holds_alternative<BatchNormSpec>(layer)) {
      const int features = cur[cur.size() - 1];
      store.add(prefix + "/gamma", Tensor<Scalar>::full({features}, Scalar(1)), true);
      store.add(prefix + "/beta", Tensor<Scalar>::zeros({features}), true);
      store.add(prefix + "/running_mean", Tensor<Scalar>::zeros({features}), false);
      store.add(prefix + "/running_var", Tensor<Scalar>::full({features}, Scalar(1)), false);
    } else if (const auto* out = std::get_if<SoftmaxOutputSpec>(&layer)) {
      const int in_dim = cur[1];
      store.add(prefix + "/weights", detail::he_uniform<Scalar>({in_dim, out->classes}, in_dim, rng),
                true);
      store.add(prefix + "/bias", Tensor<Scalar>::zeros({out->classes}), true);
    }
    cur = shapes[i];
  }
  return store;
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

namespace detail {

template <typename Scalar>
struct LayerTrace {
  Tensor<Scalar> input;                // input to the layer
  std::vector<long long> pool_argmax;  // pools only
  BatchNormCache<Scalar> bn;           // batchnorm only
  Tensor<Scalar> dropout_mask;         // dropout only (already scaled)
};

struct BatchNormHyper {
  double momentum = 0.9;
  double epsilon = 1e-3;
};

/// Runs the chain. With `traces` non-null every layer input and auxiliary
/// state is recorded for the backward sweep. `stop_at_logits` skips the final
/// softmax so the loss can fuse it.
template <typename Scalar>
Tensor<Scalar> run_chain(const Topology& topo, ParamStore<Scalar>& store, Tensor<Scalar> x,
                         RunMode mode, Rng* dropout_rng,
                         std::vector<LayerTrace<Scalar>>* traces, bool stop_at_logits,
                         const BatchNormHyper& bn_hyper = {}) {
  const auto prefixes = layer_param_prefixes(topo);
  check(x.rank() == 4 && x.dim(1) == topo.input_shape[0] && x.dim(2) == topo.input_shape[1] &&
            x.dim(3) == topo.input_shape[2],
        "forward: input " + shape_str(x.shape) + " does not match topology input " +
            shape_str(topo.input_shape));
  if (traces) traces->resize(topo.layers.size());

  for (std::size_t i = 0; i < topo.layers.size(); ++i) {
    const LayerSpec& layer = topo.layers[i];
    const std::string& prefix = prefixes[i];
    LayerTrace<Scalar>* trace = traces ? &(*traces)[i] : nullptr;
    if (trace) trace->input = x;

    if (const auto* conv = std::get_if<ConvSpec>(&layer)) {
      x = conv2d_forward(x, store.at(prefix + "/kernels"), store.at(prefix + "/bias"),
                         conv->stride, conv->padding);
    } else if (std::holds_alternative<ReluSpec>(layer)) {
      x = relu(x);
    } else if (const auto* pool = std::get_if<MaxPoolSpec>(&layer)) {
      auto pooled = maxpool2d(x, pool->window, pool->stride);
      if (trace) trace->pool_argmax = std::move(pooled.argmax);
      x = std::move(pooled.values);
    } else if (std::holds_alternative<GlobalMaxPoolSpec>(layer)) {
      auto pooled = global_maxpool(x);
      if (trace) trace->pool_argmax = std::move(pooled.argmax);
      x = std::move(pooled.values);
    } else if (std::holds_alternative<FlattenSpec>(layer)) {
      x = x.reshaped({x.dim(0), x.dim(1) * x.dim(2) * x.dim(3)});
    } else if (std::holds_alternative<DenseSpec>(layer)) {
      x = dense(x, store.at(prefix + "/weights"), store.at(prefix + "/bias"));
    } else if (std::holds_alternative<BatchNormSpec>(layer)) {
      x = batchnorm(x, store.at(prefix + "/gamma"), store.at(prefix + "/beta"),
                    store.at(prefix + "/running_mean"), store.at(prefix + "/running_var"),
                    static_cast<Scalar>(bn_hyper.momentum), static_cast<Scalar>(bn_hyper.epsilon),
                    mode, trace ? &trace->bn : nullptr);
    } else if (const auto* dropout = std::get_if<DropoutSpec>(&layer)) {
      if (mode == RunMode::train && dropout->rate > 0.0) {
        check(dropout_rng != nullptr, "forward: dropout in train mode requires an RNG");
        Tensor<Scalar> mask(x.shape);
        const Scalar keep_scale = Scalar(1) / Scalar(1.0 - dropout->rate);
        for (auto& m : mask.data) {
          m = dropout_rng->uniform01() >= dropout->rate ? keep_scale : Scalar(0);
        }
        for (std::size_t j = 0; j < x.data.size(); ++j) x.data[j] *= mask.data[j];
        if (trace) trace->dropout_mask = std::move(mask);
      }
    } else if (std::holds_alternative<SoftmaxOutputSpec>(layer)) {
      x = dense(x, store.at(prefix + "/weights"), store.at(prefix + "/bias"));
      if (!stop_at_logits) x = softmax(x);
    }
  }
  return x;
}

}  // namespace detail

/// Forward pass to class probabilities. Train mode updates batch-norm running
/// stats in place and applies dropout (which needs `dropout_rng` if any
/// Dropout layer has a positive rate).
template <typename Scalar>
Tensor<Scalar> forward(const Topology& topo, ParamStore<Scalar>& store, const Tensor<Scalar>& x,
                       RunMode mode, Rng* dropout_rng = nullptr) {
  return detail::run_chain<Scalar>(topo, store, x, mode, dropout_rng, nullptr, false);
}

/// Inference-only forward over a const store.
template <typename Scalar>
Tensor<Scalar> forward(const Topology& topo, const ParamStore<Scalar>& store,
                       const Tensor<Scalar>& x) {
  auto& mutable_store = const_cast<ParamStore<Scalar>&>(store);  // infer mode never writes
  return detail::run_chain<Scalar>(topo, mutable_store, x, RunMode::infer, nullptr, nullptr, false);
}

/// argmax over the softmax outputs, ties to the lowest class index.
template <typename Scalar>
std::vector<int> predict_class(const Topology& topo, const ParamStore<Scalar>& store,
                               const Tensor<Scalar>& x) {
  const Tensor<Scalar> probs = forward(topo, store, x);
  const int batch = probs.dim(0), classes = probs.dim(1);
  std::vector<int> result(static_cast<std::size_t>(batch));
  for (int b = 0; b < batch; ++b) {
    const Scalar* row = probs.data.data() + static_cast<std::size_t>(b) * classes;
    int best = 0;
    for (int j = 1; j < classes; ++j) {
      if (row[j] > row[best]) best = j;
    }
    result[static_cast<std::size_t>(b)] = best;
  }
  return result;
}

template <typename Scalar>
struct LossAndGrads {
  Scalar loss{};
  ParamStore<Scalar> grads;  // trainable entries only, same names as the store
  Tensor<Scalar> logits;     // train-mode logits, for on-the-fly accuracy
};

/// SCCE + L2 objective and its gradients for every trainable tensor. Runs a
/// train-mode forward (batch-norm stats update, dropout active) followed by a
/// reverse sweep.
template <typename Scalar>
LossAndGrads<Scalar> loss_and_grads(const Topology& topo, ParamStore<Scalar>& store,
                                    const Tensor<Scalar>& x, std::span<const int> labels,
                                    Rng* dropout_rng = nullptr) {
  const auto prefixes = detail::layer_param_prefixes(topo);
  std::vector<detail::LayerTrace<Scalar>> traces;
  Tensor<Scalar> logits =
      detail::run_chain(topo, store, x, RunMode::train, dropout_rng, &traces, true);

  LossAndGrads<Scalar> result;
  result.loss = scce_loss(logits, labels);

  // L2 over conv kernels and dense weights only.
  const Scalar lambda = static_cast<Scalar>(topo.l2_lambda);
  if (lambda > Scalar(0)) {
    std::vector<const Tensor<Scalar>*> weights;
    for (const auto& entry : store.entries()) {
      if (entry.name.ends_with("/kernels") || entry.name.ends_with("/weights")) {
        weights.push_back(&entry.value);
      }
    }
    result.loss += l2_penalty(std::span<const Tensor<Scalar>* const>(weights), lambda);
  }

  for (const auto& entry : store.entries()) {
    if (entry.trainable) {
      result.grads.add(entry.name, Tensor<Scalar>(entry.value.shape), true);
    }
  }

  Tensor<Scalar> grad = scce_vjp(logits, labels);
  for (std::size_t ri = topo.layers.size(); ri-- > 0;) {
    const LayerSpec& layer = topo.layers[ri];
    const std::string& prefix = prefixes[ri];
    detail::LayerTrace<Scalar>& trace = traces[ri];

    if (const auto* conv = std::get_if<ConvSpec>(&layer)) {
      auto grads = conv2d_vjp(trace.input, store.at(prefix + "/kernels"),
                              store.at(prefix + "/bias"), conv->stride, conv->padding, grad);
      result.grads.at(prefix + "/kernels") = std::move(grads.kernels);
      result.grads.at(prefix + "/bias") = std::move(grads.bias);
      grad = std::move(grads.x);
    } else if (std::holds_alternative<ReluSpec>(layer)) {
      grad = relu_vjp(trace.input, grad);
    } else if (std::holds_alternative<MaxPoolSpec>(layer) ||
               std::holds_alternative<GlobalMaxPoolSpec>(layer)) {
      grad = maxpool2d_vjp(trace.input.shape, trace.pool_argmax, grad);
    } else if (std::holds_alternative<FlattenSpec>(layer)) {
      grad = grad.reshaped(trace.input.shape);
    } else if (std::holds_alternative<DenseSpec>(layer) ||
               std::holds_alternative<SoftmaxOutputSpec>(layer)) {
      auto grads = dense_vjp(trace.input, store.at(prefix + "/weights"), grad);
      result.grads.at(prefix + "/weights") = std::move(grads.weights);
      result.grads.at(prefix + "/bias") = std::move(grads.bias);
      grad = std::move(grads.x);
    } else if (std::holds_alternative<BatchNormSpec>(layer)) {
      auto grads = batchnorm_vjp(store.at(prefix + "/gamma"), trace.bn, grad);
      result.grads.at(prefix + "/gamma") = std::move(grads.gamma);
      result.grads.at(prefix + "/beta") = std::move(grads.beta);
      grad = std::move(grads.x);
    } else if (std::holds_alternative<DropoutSpec>(layer)) {
      if (trace.dropout_mask.numel() > 0) {
        for (std::size_t j = 0; j < grad.data.size(); ++j) {
          grad.data[j] *= trace.dropout_mask.data[j];
        }
      }
    }
  }

  if (lambda > Scalar(0)) {
    for (auto& entry : result.grads.entries()) {
      if (entry.name.ends_with("/kernels") || entry.name.ends_with("/weights")) {
        const Tensor<Scalar>& w = store.at(entry.name);
        for (std::size_t j = 0; j < entry.value.data.size(); ++j) {
          entry.value.data[j] += Scalar(2) * lambda * w.data[j];
        }
      }
    }
  }
  result.logits = std::move(logits);
  return result;
}

}  // namespace wearcnn
