#pragma once

#include "wearcnn/adam.hpp"
#include "wearcnn/dataset.hpp"
#include "wearcnn/network.hpp"
#include "wearcnn/rng.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <functional>
#include <numeric>
#include <thread>

namespace wearcnn {

struct TrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 32;
  int max_epochs = 200;
  int patience_epochs = 30;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 0;
};

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
  double wall_time_s = 0.0;  // never serialized into deterministic artifacts
};

template <typename Scalar>
struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;
};

namespace detail {

template <typename Scalar>
int correct_predictions(const Tensor<Scalar>& logits, std::span<const int> labels) {
  const int batch = logits.dim(0), classes = logits.dim(1);
  int correct = 0;
  for (int b = 0; b < batch; ++b) {
    const Scalar* row = logits.data.data() + static_cast<std::size_t>(b) * classes;
    int best = 0;
    for (int j = 1; j < classes; ++j) {
      if (row[j] > row[best]) best = j;
    }
    if (best == labels[static_cast<std::size_t>(b)]) ++correct;
  }
  return correct;
}

}  // namespace detail

/// Infer-mode loss (SCCE, no L2) and accuracy over a whole dataset.
template <typename Scalar>
Evaluation<Scalar> evaluate(const Topology& topo, const ParamStore<Scalar>& store,
                            const Dataset<Scalar>& data, int eval_batch = 64) {
  auto& mutable_store = const_cast<ParamStore<Scalar>&>(store);  // infer mode never writes
  double total_loss = 0.0;
  long long correct = 0;
  std::vector<long long> indices(static_cast<std::size_t>(data.count));
  std::iota(indices.begin(), indices.end(), 0);
  for (long long start = 0; start < data.count; start += eval_batch) {
    const long long stop = std::min(data.count, start + eval_batch);
    const std::span<const long long> slice(indices.data() + start,
                                           static_cast<std::size_t>(stop - start));
    DataBatch<Scalar> batch = data.fetch(slice);
    const Tensor<Scalar> logits = detail::run_chain<Scalar>(
        topo, mutable_store, std::move(batch.x), RunMode::infer, nullptr, nullptr, true);
    total_loss += static_cast<double>(scce_loss(logits, std::span<const int>(batch.labels))) *
                  static_cast<double>(stop - start);
    correct += detail::correct_predictions(logits, batch.labels);
  }
  Evaluation<Scalar> eval;
  eval.loss = total_loss / static_cast<double>(data.count);
  eval.accuracy = static_cast<double>(correct) / static_cast<double>(data.count);
  return eval;
}

template <typename Scalar>
struct FitResult {
  ParamStore<Scalar> best_params;
  std::vector<EpochMetrics> history;
  double test_accuracy = 0.0;
  int best_epoch = 0;
  double best_val_accuracy = 0.0;
  int epochs_run = 0;
};

/// The training protocol: shuffle the train set each epoch under the run
/// seed, minibatch Adam on SCCE+L2, track the best validation accuracy
/// (improvement = strictly higher), stop after `patience_epochs` epochs
/// without a new best or at `max_epochs`, restore the best checkpoint, and
/// evaluate it once on the test set.
template <typename Scalar>
FitResult<Scalar> fit(const Topology& topo, ParamStore<Scalar> store, const Dataset<Scalar>& train,
                      const Dataset<Scalar>& val, const Dataset<Scalar>& test,
                      const TrainConfig& config) {
  check(config.learning_rate > 0, "fit: learning rate must be positive");
  check(config.patience_epochs <= config.max_epochs, "fit: patience exceeds max epochs");
  check(train.count > 0, "fit: empty train set");
  const auto* output_spec = std::get_if<SoftmaxOutputSpec>(&topo.layers.back());
  check(output_spec != nullptr, "fit: topology does not end in a softmax output");
  for (int c = 0; c < output_spec->classes; ++c) {
    const bool present = std::find(train.labels.begin(), train.labels.end(), c) !=
                         train.labels.end();
    check(present, "fit: class " + std::to_string(c) + " missing from train set");
  }

  AdamConfig<Scalar> adam_config;
  adam_config.learning_rate = static_cast<Scalar>(config.learning_rate);
  adam_config.beta1 = static_cast<Scalar>(config.adam_beta1);
  adam_config.beta2 = static_cast<Scalar>(config.adam_beta2);
  adam_config.epsilon = static_cast<Scalar>(config.adam_epsilon);
  AdamState<Scalar> adam_state = AdamState<Scalar>::init(store);

  Rng shuffle_rng(derive_seed(config.seed, "shuffle"));
  Rng dropout_rng(derive_seed(config.seed, "dropout"));

  FitResult<Scalar> result;
  result.best_params = store;
  result.best_val_accuracy = -1.0;

  std::vector<long long> order(static_cast<std::size_t>(train.count));
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto epoch_start = std::chrono::steady_clock::now();
    shuffle(order, shuffle_rng);

    double train_loss = 0.0;
    long long train_correct = 0;
    for (long long start = 0; start < train.count; start += config.batch_size) {
      const long long stop = std::min(train.count, start + config.batch_size);
      const std::span<const long long> slice(order.data() + start,
                                             static_cast<std::size_t>(stop - start));
      DataBatch<Scalar> batch = train.fetch(slice);
      auto step = loss_and_grads(topo, store, batch.x, std::span<const int>(batch.labels),
                                 &dropout_rng);
      adam_step(store, step.grads, adam_state, adam_config);
      train_loss += static_cast<double>(step.loss) * static_cast<double>(stop - start);
      train_correct += detail::correct_predictions(step.logits, batch.labels);
    }

    const Evaluation<Scalar> val_eval =
        val.count > 0 ? evaluate(topo, store, val) : Evaluation<Scalar>{};

    EpochMetrics metrics;
    metrics.epoch = epoch;
    metrics.train_loss = train_loss / static_cast<double>(train.count);
    metrics.train_accuracy = static_cast<double>(train_correct) / static_cast<double>(train.count);
    metrics.val_loss = val_eval.loss;
    metrics.val_accuracy = val_eval.accuracy;
    metrics.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch_start).count();
    result.history.push_back(metrics);
    result.epochs_run = epoch;

    if (metrics.val_accuracy > result.best_val_accuracy) {
      result.best_val_accuracy = metrics.val_accuracy;
      result.best_epoch = epoch;
      result.best_params = store;
    }
    if (epoch - result.best_epoch >= config.patience_epochs) break;
  }

  result.test_accuracy =
      test.count > 0 ? evaluate(topo, result.best_params, test).accuracy : 0.0;
  return result;
}

/// n independent fits with seeds base_seed+i (fresh init per run, shared
/// split); collects the test accuracies. Runs may execute in parallel: each
/// is self-contained, so the result multiset equals serial execution.
template <typename Scalar>
std::vector<double> repeated_runs(const Topology& topo, const Dataset<Scalar>& train,
                                  const Dataset<Scalar>& val, const Dataset<Scalar>& test,
                                  TrainConfig config, int n, std::uint64_t base_seed,
                                  int workers = 1,
                                  const std::function<void(int, const FitResult<Scalar>&)>&
                                      on_run_done = {}) {
  check(n >= 1, "repeated_runs: n must be >= 1");
  std::vector<double> accuracies(static_cast<std::size_t>(n));
  std::vector<FitResult<Scalar>> results(static_cast<std::size_t>(n));

  auto run_one = [&](int i) {
    TrainConfig run_config = config;
    run_config.seed = base_seed + static_cast<std::uint64_t>(i);
    Rng init_rng(derive_seed(run_config.seed, "init"));
    auto run_store = init_params<Scalar>(topo, init_rng);
    results[static_cast<std::size_t>(i)] =
        fit(topo, std::move(run_store), train, val, test, run_config);
    accuracies[static_cast<std::size_t>(i)] = results[static_cast<std::size_t>(i)].test_accuracy;
  };

  if (workers <= 1) {
    for (int i = 0; i < n; ++i) run_one(i);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    const int thread_count = std::min(workers, n);
    pool.reserve(static_cast<std::size_t>(thread_count));
    for (int t = 0; t < thread_count; ++t) {
      pool.emplace_back([&] {
        for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) run_one(i);
      });
    }
    for (auto& thread : pool) thread.join();
  }

  if (on_run_done) {
    for (int i = 0; i < n; ++i) on_run_done(i, results[static_cast<std::size_t>(i)]);
  }
  return accuracies;
}

}  // namespace wearcnn
