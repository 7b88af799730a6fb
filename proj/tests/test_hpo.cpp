#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "wearcnn/hpo.hpp"

#include <filesystem>

using namespace wearcnn;
using namespace wearcnn::hpo;

namespace {

/// Smooth 2-D objective with a unique optimum inside the unit square.
double quadratic_objective(const Config& point) {
  const double dx = point[0] - 0.7;
  const double dy = point[1] - 0.3;
  return 1.0 - (dx * dx + dy * dy);
}

double distance_to_optimum(const Config& point) {
  const double dx = point[0] - 0.7;
  const double dy = point[1] - 0.3;
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace

TEST_CASE("suggest returns a valid in-domain point on empty history") {
  const SearchSpace space = paper_search_space();
  Rng rng(1);
  const History empty;
  const Config point = suggest(empty, space, rng);
  CHECK(in_domain(space, point));
}

TEST_CASE("all suggestions respect domain bounds under fuzzing") {
  const SearchSpace space = paper_search_space();
  Rng rng(2);
  History history;
  Rng objective_rng(3);
  for (int i = 0; i < 10000; ++i) {
    Config point;
    if (i < 64) {
      // Exercise the real suggest path while the GP is in play.
      point = suggest(history, space, rng);
      Trial trial;
      trial.point = point;
      trial.objective = objective_rng.uniform01();
      observe(history, trial);
    } else {
      point = sample_point(space, rng);
    }
    CHECK(in_domain(space, point));
  }
}

TEST_CASE("observe keeps duplicates and tracks the incumbent") {
  const SearchSpace space = quadratic_benchmark_space();
  History history;
  const Config point{0.5, 0.5};
  for (double objective : {0.3, 0.9, 0.5}) {
    Trial trial;
    trial.point = point;
    trial.objective = objective;
    observe(history, trial);
  }
  CHECK(history.trials.size() == 3);
  CHECK(history.best_objective() == 0.9);

  Trial failed;
  failed.point = point;
  failed.failed = true;
  failed.objective = -std::numeric_limits<double>::infinity();
  observe(history, failed);
  CHECK(history.best_objective() == 0.9);
}

TEST_CASE("history serialization round-trips") {
  const SearchSpace space = paper_search_space();
  Rng rng(5);
  History history;
  for (int i = 0; i < 12; ++i) {
    Trial trial;
    trial.point = sample_point(space, rng);
    if (i == 7) {
      trial.failed = true;
      trial.objective = -std::numeric_limits<double>::infinity();
    } else {
      trial.objective = rng.uniform01();
    }
    observe(history, trial);
  }
  const auto path = std::filesystem::temp_directory_path() / "wearcnn_hpo_history.jsonl";
  save_history(path, space, history);
  const History loaded = load_history(path, space);
  REQUIRE(loaded.trials.size() == history.trials.size());
  for (std::size_t i = 0; i < history.trials.size(); ++i) {
    CHECK(loaded.trials[i].failed == history.trials[i].failed);
    if (!history.trials[i].failed) {
      CHECK(loaded.trials[i].objective == doctest::Approx(history.trials[i].objective));
    }
    for (std::size_t d = 0; d < space.dims.size(); ++d) {
      CHECK(loaded.trials[i].point[d] == doctest::Approx(history.trials[i].point[d]));
    }
  }
  std::filesystem::remove(path);
}

TEST_CASE("gp interpolates noiseless observations") {
  Rng rng(7);
  const int n = 12;
  Eigen::MatrixXd x(n, 2);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = rng.uniform01();
    x(i, 1) = rng.uniform01();
    y(i) = std::sin(3.0 * x(i, 0)) + 0.5 * std::cos(2.0 * x(i, 1));
  }
  GaussianProcess gp(1e-10);
  gp.fit(x, y, rng);
  for (int i = 0; i < n; ++i) {
    const auto posterior = gp.predict(x.row(i));
    CHECK(std::abs(posterior.mean - y(i)) < 1e-6);
    CHECK(posterior.variance >= 0.0);
  }
}

TEST_CASE("expected improvement properties") {
  CHECK(expected_improvement(0.4, 0.0, 0.5) == 0.0);  // mean below incumbent, no variance
  CHECK(expected_improvement(0.4, 1e-15, 0.5) == 0.0);
  CHECK(expected_improvement(0.7, 1e-15, 0.5) == doctest::Approx(0.2));
  for (double mean : {-1.0, 0.0, 0.5, 2.0}) {
    for (double stddev : {0.01, 0.3, 2.0}) {
      CHECK(expected_improvement(mean, stddev, 0.5) >= 0.0);
    }
  }
  // More variance means more expected improvement at a fixed mean.
  CHECK(expected_improvement(0.4, 0.5, 0.5) > expected_improvement(0.4, 0.1, 0.5));
}

TEST_CASE("suggestions concentrate near the optimum of a smooth objective") {
  const SearchSpace space = quadratic_benchmark_space();
  const SmboResult result = optimize(space, quadratic_objective, 40, 99);
  REQUIRE(result.history.trials.size() == 40);

  double early = 0.0, late = 0.0;
  for (int i = 0; i < 10; ++i) early += distance_to_optimum(result.history.trials[i].point);
  for (int i = 30; i < 40; ++i) late += distance_to_optimum(result.history.trials[i].point);
  CHECK(late / 10.0 < early / 10.0);
  CHECK(distance_to_optimum(result.best_point) < 0.15);
}

TEST_CASE("optimizer is deterministic for a fixed seed") {
  const SearchSpace space = quadratic_benchmark_space();
  const SmboResult a = optimize(space, quadratic_objective, 15, 424);
  const SmboResult b = optimize(space, quadratic_objective, 15, 424);
  REQUIRE(a.history.trials.size() == b.history.trials.size());
  for (std::size_t i = 0; i < a.history.trials.size(); ++i) {
    CHECK(a.history.trials[i].point == b.history.trials[i].point);
    CHECK(a.history.trials[i].objective == b.history.trials[i].objective);
  }
}

TEST_CASE("failing objectives mark trials failed and the loop continues") {
  const SearchSpace space = quadratic_benchmark_space();
  int calls = 0;
  auto flaky = [&](const Config& point) {
    if (++calls % 3 == 0) throw std::runtime_error("diverged");
    return quadratic_objective(point);
  };
  const SmboResult result = optimize(space, flaky, 12, 5);
  CHECK(result.history.trials.size() == 12);
  int failed = 0;
  for (const auto& trial : result.history.trials) failed += trial.failed ? 1 : 0;
  CHECK(failed == 4);
  CHECK(std::isfinite(result.best_objective));
}

TEST_CASE("budget 1 returns the single evaluated configuration") {
  const SearchSpace space = quadratic_benchmark_space();
  const SmboResult result = optimize(space, quadratic_objective, 1, 8);
  REQUIRE(result.history.trials.size() == 1);
  CHECK(result.best_point == result.history.trials[0].point);
}

TEST_CASE("every sampled point decodes into a buildable topology") {
  const SearchSpace space = paper_search_space();
  Rng rng(11);
  for (int i = 0; i < 300; ++i) {
    const Config point = sample_point(space, rng);
    const DecodedConfig decoded = decode_cnn_config(space, point, {32, 32, 3});
    const Topology topo = build_cnn(decoded.recipe);  // validates shapes end to end
    CHECK(count_layers(topo) > 0);
    CHECK(decoded.learning_rate >= 1e-5);
    CHECK(decoded.learning_rate <= 1e-2);
  }
}

TEST_CASE("decoding the paper winner rebuilds the reference network") {
  const SearchSpace space = paper_search_space();
  Config point(space.dims.size());
  point[*find_dimension(space, "fcl_count")] = 3;
  point[*find_dimension(space, "fcl_neurons")] = 512;
  point[*find_dimension(space, "batchnorm")] = 1;
  point[*find_dimension(space, "dropout_rate")] = 0.0;
  point[*find_dimension(space, "l2")] = 0.01;
  point[*find_dimension(space, "conv_count")] = 7;
  point[*find_dimension(space, "learning_rate")] = 0.001;
  const int exponents[] = {5, 6, 6, 7, 8, 8, 8};
  for (int i = 0; i < 7; ++i) {
    point[*find_dimension(space, "filters_exp_" + std::to_string(i + 1))] = exponents[i];
  }
  const DecodedConfig decoded = decode_cnn_config(space, point, {128, 128, 3});
  const Topology topo = build_cnn(decoded.recipe);
  CHECK(count_layers(topo) == 31);
  Rng rng(1);
  CHECK(count_trainable_params(init_params<double>(topo, rng)) == 2273680);
}
