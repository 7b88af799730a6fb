#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "wearcnn/rng.hpp"
#include "wearcnn/stats.hpp"

#include <algorithm>
#include <cmath>

using namespace wearcnn;
using namespace wearcnn::stats;

namespace {

/// Samples with exactly the requested mean and sample standard deviation:
/// symmetric two-point set plus the mean itself when n is odd.
std::vector<double> moment_matched(double mean, double stddev, int n) {
  std::vector<double> samples(static_cast<std::size_t>(n), mean);
  const int pairs = n / 2;
  // sum of squares about the mean must equal stddev^2 * (n - 1)
  const double offset = stddev * std::sqrt(static_cast<double>(n - 1) / (2.0 * pairs));
  for (int i = 0; i < pairs; ++i) {
    samples[static_cast<std::size_t>(2 * i)] = mean + offset;
    samples[static_cast<std::size_t>(2 * i + 1)] = mean - offset;
  }
  return samples;
}

}  // namespace

TEST_CASE("moment_matched helper hits the requested moments") {
  const auto samples = moment_matched(98.94, 0.24, 100);
  const auto d = describe(samples);
  CHECK(d.mean == doctest::Approx(98.94).epsilon(1e-12));
  CHECK(d.stddev == doctest::Approx(0.24).epsilon(1e-12));
}

TEST_CASE("describe") {
  SUBCASE("constant samples have zero spread") {
    const std::vector<double> samples(10, 0.5);
    const auto d = describe(samples);
    CHECK(d.mean == 0.5);
    CHECK(d.median == 0.5);
    CHECK(d.stddev == 0.0);
    CHECK(d.ci95_half_width == 0.0);
    CHECK(d.max == 0.5);
    CHECK(d.min == 0.5);
  }
  SUBCASE("CI half-width for sigma 0.24, N 100") {
    // scipy oracle: t(0.975, 99) = 1.984216951509 -> 0.047621206836
    const auto samples = moment_matched(98.94, 0.24, 100);
    const auto d = describe(samples);
    CHECK(d.ci95_half_width == doctest::Approx(0.047621206836).epsilon(1e-9));
  }
  SUBCASE("median of even and odd sample counts") {
    CHECK(describe({1.0, 3.0}).median == 2.0);
    CHECK(describe({1.0, 2.0, 10.0}).median == 2.0);
  }
  SUBCASE("fewer than two samples is an error") {
    CHECK_THROWS_AS(describe({1.0}), std::invalid_argument);
  }
}

TEST_CASE("welch_t on the published group moments") {
  // scipy oracle: 3.174448113078
  const RunAccuracies a{"mobile", moment_matched(98.94, 0.24, 100)};
  const RunAccuracies b{"selfmade", moment_matched(98.80, 0.37, 100)};
  CHECK(welch_t(a, b) == doctest::Approx(3.174448113078).epsilon(1e-9));
  CHECK(std::abs(welch_t(a, b) - 3.13) < 0.1);

  SUBCASE("identical samples give t = 0") {
    CHECK(welch_t(a, a) == doctest::Approx(0.0));
  }
  SUBCASE("antisymmetry") {
    CHECK(welch_t(a, b) == doctest::Approx(-welch_t(b, a)).epsilon(1e-12));
  }
  SUBCASE("shift invariance and positive scaling") {
    RunAccuracies a_shift = a, b_shift = b;
    for (auto& v : a_shift.samples) v += 10.0;
    for (auto& v : b_shift.samples) v += 10.0;
    CHECK(welch_t(a_shift, b_shift) == doctest::Approx(welch_t(a, b)).epsilon(1e-9));
    RunAccuracies a_scale = a, b_scale = b;
    for (auto& v : a_scale.samples) v *= 3.0;
    for (auto& v : b_scale.samples) v *= 3.0;
    CHECK(welch_t(a_scale, b_scale) == doctest::Approx(welch_t(a, b)).epsilon(1e-9));
  }
}

TEST_CASE("welch degrees of freedom") {
  const RunAccuracies a{"mobile", moment_matched(98.94, 0.24, 100)};
  const RunAccuracies b{"selfmade", moment_matched(98.80, 0.37, 100)};
  const auto df = welch_df(a, b);
  // scipy oracle: 169.777956034103
  CHECK(df.raw == doctest::Approx(169.777956034103).epsilon(1e-9));
  CHECK(df.floored == 169);

  SUBCASE("equal variances and equal n reduce to 2N-2") {
    const RunAccuracies c{"c", moment_matched(0.5, 0.1, 30)};
    const RunAccuracies d{"d", moment_matched(0.9, 0.1, 30)};
    CHECK(welch_df(c, d).raw == doctest::Approx(58.0).epsilon(1e-9));
  }
  SUBCASE("df never exceeds Na+Nb-2") {
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
      RunAccuracies x{"x", {}}, y{"y", {}};
      const int nx = 3 + static_cast<int>(rng.uniform_int(20));
      const int ny = 3 + static_cast<int>(rng.uniform_int(20));
      for (int i = 0; i < nx; ++i) x.samples.push_back(rng.uniform01());
      for (int i = 0; i < ny; ++i) y.samples.push_back(rng.uniform(0.2, 0.9));
      CHECK(welch_df(x, y).raw <= nx + ny - 2 + 1e-9);
    }
  }
}

TEST_CASE("t distribution tail and quantile") {
  // scipy oracles.
  CHECK(t_critical(0.01, 169) == doctest::Approx(2.348615065143).epsilon(1e-8));
  CHECK(std::abs(t_critical(0.01, 169) - 2.35) < 0.01);
  CHECK(t_critical(0.05, 12) == doctest::Approx(1.782287555649).epsilon(1e-8));
  CHECK(p_one_tailed(3.13, 169) == doctest::Approx(0.001029908007).epsilon(1e-6));
  CHECK(p_one_tailed(2.0, 30) == doctest::Approx(0.027312522481).epsilon(1e-8));
  CHECK(p_one_tailed(-1.3, 7.5) == doctest::Approx(0.883936610592).epsilon(1e-8));
  CHECK(p_one_tailed(0.0, 17) == doctest::Approx(0.5).epsilon(1e-12));

  SUBCASE("p is strictly decreasing in t") {
    double previous = 1.1;
    for (double t = -4.0; t <= 4.0; t += 0.25) {
      const double p = p_one_tailed(t, 9.0);
      CHECK(p < previous);
      previous = p;
    }
  }
  SUBCASE("t_critical and p_one_tailed are mutual inverses") {
    Rng rng(11);
    for (int trial = 0; trial < 30; ++trial) {
      const double alpha = rng.uniform(0.001, 0.5);
      const double df = rng.uniform(1.5, 300.0);
      CHECK(p_one_tailed(t_critical(alpha, df), df) == doctest::Approx(alpha).epsilon(1e-8));
    }
  }
  SUBCASE("domain errors") {
    CHECK_THROWS_AS(t_critical(0.0, 10), std::invalid_argument);
    CHECK_THROWS_AS(t_critical(1.0, 10), std::invalid_argument);
    CHECK_THROWS_AS(t_critical(0.05, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(p_one_tailed(1.0, -2.0), std::invalid_argument);
  }
}

TEST_CASE("one-tailed Welch test") {
  const RunAccuracies a{"mobile", moment_matched(98.94, 0.24, 100)};
  const RunAccuracies b{"selfmade", moment_matched(98.80, 0.37, 100)};

  SUBCASE("published inputs reject H0") {
    const auto test = one_tailed_test(a, b, 0.01);
    CHECK(test.reject);
    CHECK(test.df_floor == 169);
    CHECK(test.p_value < 0.01);
    CHECK(test.t_stat > test.t_crit);
  }
  SUBCASE("identical groups fail to reject") {
    CHECK_FALSE(one_tailed_test(a, a, 0.01).reject);
  }
  SUBCASE("swapping the groups fails to reject (one-tailed asymmetry)") {
    CHECK_FALSE(one_tailed_test(b, a, 0.01).reject);
  }
}

TEST_CASE("confusion matrix") {
  SUBCASE("perfect predictions give a 100% diagonal") {
    ConfusionMatrix matrix(16);
    std::vector<int> labels, predictions;
    for (int c = 0; c < 16; ++c) {
      for (int i = 0; i < 3; ++i) {
        labels.push_back(c);
        predictions.push_back(c);
      }
    }
    matrix.accumulate(predictions, labels);
    const auto percent = matrix.row_percent();
    for (int t = 0; t < 16; ++t) {
      for (int p = 0; p < 16; ++p) {
        CHECK(percent[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)] ==
              doctest::Approx(t == p ? 100.0 : 0.0));
      }
    }
  }
  SUBCASE("single off-diagonal sample") {
    ConfusionMatrix matrix(16);
    matrix.accumulate({5}, {3});
    CHECK(matrix.at(3, 5) == 1);
    CHECK(matrix.at(3, 3) == 0);
  }
  SUBCASE("row sums of the percent form are 100 on random input") {
    Rng rng(17);
    ConfusionMatrix matrix(16);
    std::vector<int> labels, predictions;
    for (int i = 0; i < 2000; ++i) {
      labels.push_back(static_cast<int>(rng.uniform_int(16)));
      predictions.push_back(static_cast<int>(rng.uniform_int(16)));
    }
    matrix.accumulate(predictions, labels);
    for (const auto& row : matrix.row_percent()) {
      double sum = 0.0;
      for (double v : row) sum += v;
      CHECK(sum == doctest::Approx(100.0).epsilon(1e-4));
    }
  }
  SUBCASE("accumulation is order independent and merges by addition") {
    Rng rng(19);
    std::vector<int> labels, predictions;
    for (int i = 0; i < 500; ++i) {
      labels.push_back(static_cast<int>(rng.uniform_int(16)));
      predictions.push_back(static_cast<int>(rng.uniform_int(16)));
    }
    ConfusionMatrix whole(16);
    whole.accumulate(predictions, labels);

    ConfusionMatrix front(16), back(16);
    const std::vector<int> labels_front(labels.begin(), labels.begin() + 200);
    const std::vector<int> preds_front(predictions.begin(), predictions.begin() + 200);
    const std::vector<int> labels_back(labels.begin() + 200, labels.end());
    const std::vector<int> preds_back(predictions.begin() + 200, predictions.end());
    back.accumulate(preds_back, labels_back);
    front.accumulate(preds_front, labels_front);
    front += back;
    for (int t = 0; t < 16; ++t) {
      for (int p = 0; p < 16; ++p) CHECK(front.at(t, p) == whole.at(t, p));
    }
  }
  SUBCASE("csv has 17 columns") {
    ConfusionMatrix matrix(16);
    matrix.accumulate({0}, {0});
    const std::string csv = matrix.to_csv(false);
    const std::string header = csv.substr(0, csv.find('\n'));
    CHECK(std::count(header.begin(), header.end(), ',') == 16);
  }
}

TEST_CASE("quartiles") {
  const auto q = quartiles({1.0, 2.0, 3.0, 4.0, 5.0});
  CHECK(q.min == 1.0);
  CHECK(q.q1 == 2.0);
  CHECK(q.median == 3.0);
  CHECK(q.q3 == 4.0);
  CHECK(q.max == 5.0);
}
