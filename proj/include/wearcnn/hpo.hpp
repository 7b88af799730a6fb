#pragma once

#include "wearcnn/network.hpp"
#include "wearcnn/rng.hpp"
#include "wearcnn/trainer.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <variant>

namespace wearcnn::hpo {

// ---------------------------------------------------------------------------
// Search space
// ---------------------------------------------------------------------------

struct CategoricalDim {
  std::string name;
  std::vector<double> values;
};
struct IntDim {
  std::string name;
  int lo = 0;
  int hi = 0;
};
struct ContinuousDim {
  std::string name;
  double lo = 0.0;
  double hi = 1.0;
  bool log_scale = false;
};
using Dimension = std::variant<CategoricalDim, IntDim, ContinuousDim>;

struct SearchSpace {
  std::vector<Dimension> dims;
};

const std::string& dimension_name(const Dimension& dim);

/// One value per dimension (categoricals hold the chosen value itself).
using Config = std::vector<double>;

/// The eight tuned dimensions: FC depth/width, batch norm on/off, dropout
/// rate, L2 strength, conv depth, learning rate, per-conv filter exponents.
SearchSpace paper_search_space();

/// Two uniform [0,1] axes; used by the optimizer benchmark.
SearchSpace quadratic_benchmark_space();

Config sample_point(const SearchSpace& space, Rng& rng);

/// Deterministic space-filling point (Halton sequence over prime bases).
Config halton_point(const SearchSpace& space, std::uint64_t index);

bool in_domain(const SearchSpace& space, const Config& point);

std::optional<std::size_t> find_dimension(const SearchSpace& space, const std::string& name);

// ---------------------------------------------------------------------------
// Trials
// ---------------------------------------------------------------------------

struct Trial {
  Config point;
  double objective = 0.0;  // validation accuracy for CNN trials
  bool failed = false;
};

struct History {
  std::vector<Trial> trials;

  /// Highest-objective completed trial, or nullptr while none succeeded.
  const Trial* incumbent() const;
  double best_objective() const;
};

void observe(History& history, Trial trial);

void save_history(const std::filesystem::path& path, const SearchSpace& space,
                  const History& history);
History load_history(const std::filesystem::path& path, const SearchSpace& space);

// ---------------------------------------------------------------------------
// Gaussian-process surrogate
// ---------------------------------------------------------------------------

/// Squared-exponential kernel with per-dimension length-scales, fit by
/// maximizing the log marginal likelihood with a multi-start gradient-free
/// pattern search. Targets are normalized internally.
class GaussianProcess {
 public:
  explicit GaussianProcess(double jitter = 1e-8) : jitter_(jitter) {}

  void fit(Eigen::MatrixXd x, Eigen::VectorXd y, Rng& rng);

  struct Posterior {
    double mean = 0.0;
    double variance = 0.0;
  };
  Posterior predict(const Eigen::VectorXd& x) const;

  double log_marginal_likelihood() const { return lml_; }

 private:
  double kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const;
  double refactor();  // returns the LML at the current hyperparameters

  Eigen::MatrixXd x_;
  Eigen::VectorXd y_;  // normalized targets
  double y_mean_ = 0.0;
  double y_scale_ = 1.0;
  Eigen::VectorXd log_lengthscales_;
  double log_signal_ = 0.0;
  Eigen::MatrixXd chol_lower_;
  Eigen::VectorXd alpha_;
  double jitter_;
  double lml_ = std::numeric_limits<double>::quiet_NaN();
};

/// Expected improvement over `best` for a posterior (mean, stddev); >= 0,
/// and exactly 0 when the mean is below the incumbent with no variance left.
double expected_improvement(double mean, double stddev, double best);

/// GP feature encoding: one-hot categoricals, min-max scaled integers,
/// (log-)scaled continuous values, all in [0, 1].
Eigen::VectorXd encode_point(const SearchSpace& space, const Config& point);
int encoded_width(const SearchSpace& space);

/// Next configuration to try: the first ten suggestions are Halton points,
/// afterwards the GP surrogate maximizes expected improvement over the
/// incumbent across 2048 random candidates.
Config suggest(const History& history, const SearchSpace& space, Rng& rng);

inline constexpr int kInitialQuasirandom = 10;
inline constexpr int kCandidatePoolSize = 2048;

// ---------------------------------------------------------------------------
// Drivers
// ---------------------------------------------------------------------------

struct SmboResult {
  Config best_point;
  double best_objective = -std::numeric_limits<double>::infinity();
  History history;
};

/// Sequential model-based optimization of a black-box objective (maximized).
/// An objective that throws marks the trial failed with objective -inf.
SmboResult optimize(const SearchSpace& space,
                    const std::function<double(const Config&)>& objective, int budget,
                    std::uint64_t seed,
                    const std::function<void(int, const Trial&)>& on_trial = {});

/// Maps a sampled configuration onto a buildable network recipe plus its
/// learning rate. Dimensions missing from the space keep recipe defaults.
struct DecodedConfig {
  CnnRecipe recipe;
  double learning_rate = 1e-3;
};
DecodedConfig decode_cnn_config(const SearchSpace& space, const Config& point, Shape input_shape,
                                int classes = 16);

/// Full hyperparameter search over CNN trainings: each suggested
/// configuration trains for a fixed epoch budget (no early stop) and scores
/// its best validation accuracy.
template <typename Scalar>
SmboResult run_hpo(const SearchSpace& space, int budget, int epochs_per_trial,
                   std::uint64_t seed, const Dataset<Scalar>& train, const Dataset<Scalar>& val,
                   Shape input_shape, int classes = 16,
                   const std::function<void(int, const Trial&)>& on_trial = {}) {
  check(epochs_per_trial >= 1, "run_hpo: epochs per trial must be >= 1");
  int trial_index = 0;
  auto objective = [&](const Config& point) {
    const int this_trial = trial_index++;
    const DecodedConfig decoded = decode_cnn_config(space, point, input_shape, classes);
    const Topology topo = build_cnn(decoded.recipe);
    TrainConfig config;
    config.learning_rate = decoded.learning_rate;
    config.max_epochs = epochs_per_trial;
    config.patience_epochs = epochs_per_trial;  // fixed-budget training
    config.seed = derive_seed(seed, "hpo_trial", static_cast<std::uint64_t>(this_trial));
    Rng init_rng(derive_seed(config.seed, "init"));
    auto store = init_params<Scalar>(topo, init_rng);
    const auto result = fit(topo, std::move(store), train, val, Dataset<Scalar>{}, config);
    return result.best_val_accuracy;
  };
  return optimize(space, objective, budget, seed, on_trial);
}

}  // namespace wearcnn::hpo
