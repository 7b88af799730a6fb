#pragma once

#include <array>
#include <string>
#include <vector>

namespace wearcnn::stats {

/// Test accuracies of repeated training runs, as fractions in [0, 1].
struct RunAccuracies {
  std::string label;
  std::vector<double> samples;

  std::size_t n() const { return samples.size(); }
};

struct DescriptiveStats {
  double mean = 0.0;
  double median = 0.0;
  double stddev = 0.0;          // sample standard deviation, N-1 denominator
  double ci95_half_width = 0.0; // t(0.975, N-1) * stddev / sqrt(N)
  double max = 0.0;
  double min = 0.0;
  long long n = 0;
};

/// Throws std::invalid_argument for fewer than two samples.
DescriptiveStats describe(const std::vector<double>& samples);

/// Welch's t statistic (mu_a - mu_b) / sqrt(sa^2/Na + sb^2/Nb).
double welch_t(const RunAccuracies& a, const RunAccuracies& b);

struct WelchDf {
  double raw = 0.0;
  long long floored = 0;
};

/// Welch-Satterthwaite degrees of freedom, raw and floored for reporting.
WelchDf welch_df(const RunAccuracies& a, const RunAccuracies& b);

/// Upper-tail quantile of Student's t: P(T > t_critical) = alpha.
double t_critical(double alpha, double df);

/// Upper-tail probability P(T > t) of Student's t, via the regularized
/// incomplete beta function evaluated by continued fraction (max error
/// below 1e-10 over the reporting range).
double p_one_tailed(double t, double df);

struct WelchTTest {
  double t_stat = 0.0;
  double df_raw = 0.0;
  long long df_floor = 0;
  double t_crit = 0.0;
  double p_value = 0.0;
  double alpha = 0.0;
  bool reject = false;
};

/// One-tailed Welch test of H0: mu_a <= mu_b; rejects iff p < alpha.
/// The raw degrees of freedom drive the p-value, the floored value is for
/// table reporting.
WelchTTest one_tailed_test(const RunAccuracies& a, const RunAccuracies& b, double alpha = 0.01);

/// Counts at (true class, predicted class), accumulated across runs;
/// addition merges partial matrices.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int classes = 16);

  int classes() const { return classes_; }
  long long at(int true_class, int predicted) const;
  void accumulate(const std::vector<int>& predictions, const std::vector<int>& labels);
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);

  /// Row-normalized percentages (rows with no samples stay zero).
  std::vector<std::vector<double>> row_percent() const;

  /// 17-column CSV: true class then one column per predicted class.
  std::string to_csv(bool as_row_percent) const;

 private:
  int classes_;
  std::vector<long long> counts_;
};

/// Boxplot-ready five-number summary.
struct Quartiles {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};

Quartiles quartiles(const std::vector<double>& samples);

}  // namespace wearcnn::stats
