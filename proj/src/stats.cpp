#include "wearcnn/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace wearcnn::stats {

namespace {

void require(bool condition, const char* message) {
  if (!condition) throw std::invalid_argument(message);
}

double sample_mean(const std::vector<double>& samples) {
  double sum = 0.0;
  for (double v : samples) sum += v;
  return sum / static_cast<double>(samples.size());
}

double sample_stddev(const std::vector<double>& samples, double mean) {
  double ss = 0.0;
  for (double v : samples) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(samples.size() - 1));
}

/// Continued fraction for the regularized incomplete beta (modified Lentz).
double betacf(double a, double b, double x) {
  constexpr int kMaxIterations = 300;
  constexpr double kEps = 1e-15;
  constexpr double kTiny = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) return h;
  }
  throw std::runtime_error("incomplete beta: continued fraction did not converge");
}

/// Regularized incomplete beta I_x(a, b).
double incbeta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  // Use the symmetry that keeps the continued fraction well-conditioned.
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * betacf(a, b, x) / a;
  }
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

}  // namespace

DescriptiveStats describe(const std::vector<double>& samples) {
  require(samples.size() >= 2, "describe: need at least two samples");
  DescriptiveStats stats;
  stats.n = static_cast<long long>(samples.size());
  stats.mean = sample_mean(samples);
  stats.stddev = sample_stddev(samples, stats.mean);

  std::vector<double> sorted = samples;
  std::sort(sorted.begin(), sorted.end());
  stats.min = sorted.front();
  stats.max = sorted.back();
  const std::size_t n = sorted.size();
  stats.median = (n % 2 == 1) ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);

  const double t_975 = t_critical(0.025, static_cast<double>(stats.n - 1));
  stats.ci95_half_width = t_975 * stats.stddev / std::sqrt(static_cast<double>(stats.n));
  return stats;
}

double welch_t(const RunAccuracies& a, const RunAccuracies& b) {
  require(a.n() >= 2 && b.n() >= 2, "welch_t: need at least two samples per group");
  const double mean_a = sample_mean(a.samples);
  const double mean_b = sample_mean(b.samples);
  const double var_a = std::pow(sample_stddev(a.samples, mean_a), 2);
  const double var_b = std::pow(sample_stddev(b.samples, mean_b), 2);
  return (mean_a - mean_b) /
         std::sqrt(var_a / static_cast<double>(a.n()) + var_b / static_cast<double>(b.n()));
}

WelchDf welch_df(const RunAccuracies& a, const RunAccuracies& b) {
  require(a.n() >= 2 && b.n() >= 2, "welch_df: need at least two samples per group");
  const double mean_a = sample_mean(a.samples);
  const double mean_b = sample_mean(b.samples);
  const double se_a = std::pow(sample_stddev(a.samples, mean_a), 2) / static_cast<double>(a.n());
  const double se_b = std::pow(sample_stddev(b.samples, mean_b), 2) / static_cast<double>(b.n());
  WelchDf df;
  df.raw = (se_a + se_b) * (se_a + se_b) /
           (se_a * se_a / static_cast<double>(a.n() - 1) +
            se_b * se_b / static_cast<double>(b.n() - 1));
  df.floored = static_cast<long long>(std::floor(df.raw));
  return df;
}

double p_one_tailed(double t, double df) {
  require(df > 0.0, "p_one_tailed: df must be positive");
  const double x = df / (df + t * t);
  const double half_tail = 0.5 * incbeta(0.5 * df, 0.5, x);
  return t >= 0.0 ? half_tail : 1.0 - half_tail;
}

double t_critical(double alpha, double df) {
  require(df > 0.0, "t_critical: df must be positive");
  require(alpha > 0.0 && alpha < 1.0, "t_critical: alpha must lie in (0, 1)");
  // p_one_tailed is strictly decreasing in t; bisect on an expanding bracket.
  double lo = -1.0, hi = 1.0;
  while (p_one_tailed(lo, df) < alpha) lo *= 2.0;
  while (p_one_tailed(hi, df) > alpha) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (p_one_tailed(mid, df) > alpha) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo < 1e-13 * std::max(1.0, std::abs(hi))) break;
  }
  return 0.5 * (lo + hi);
}

WelchTTest one_tailed_test(const RunAccuracies& a, const RunAccuracies& b, double alpha) {
  require(alpha > 0.0 && alpha < 1.0, "one_tailed_test: alpha must lie in (0, 1)");
  WelchTTest test;
  test.alpha = alpha;
  test.t_stat = welch_t(a, b);
  const WelchDf df = welch_df(a, b);
  test.df_raw = df.raw;
  test.df_floor = df.floored;
  test.t_crit = t_critical(alpha, df.raw);
  test.p_value = p_one_tailed(test.t_stat, df.raw);
  test.reject = test.p_value < alpha;
  return test;
}

ConfusionMatrix::ConfusionMatrix(int classes)
    : classes_(classes), counts_(static_cast<std::size_t>(classes) * classes, 0) {
  require(classes >= 1, "confusion matrix: need at least one class");
}

long long ConfusionMatrix::at(int true_class, int predicted) const {
  return counts_[static_cast<std::size_t>(true_class) * classes_ + predicted];
}

void ConfusionMatrix::accumulate(const std::vector<int>& predictions,
                                 const std::vector<int>& labels) {
  require(predictions.size() == labels.size(), "confusion matrix: prediction/label mismatch");
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const int truth = labels[i], pred = predictions[i];
    require(truth >= 0 && truth < classes_ && pred >= 0 && pred < classes_,
            "confusion matrix: class index out of range");
    ++counts_[static_cast<std::size_t>(truth) * classes_ + pred];
  }
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  require(classes_ == other.classes_, "confusion matrix: class count mismatch");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  return *this;
}

std::vector<std::vector<double>> ConfusionMatrix::row_percent() const {
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(classes_),
                                        std::vector<double>(static_cast<std::size_t>(classes_)));
  for (int t = 0; t < classes_; ++t) {
    long long row_sum = 0;
    for (int p = 0; p < classes_; ++p) row_sum += at(t, p);
    if (row_sum == 0) continue;
    for (int p = 0; p < classes_; ++p) {
      rows[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)] =
          100.0 * static_cast<double>(at(t, p)) / static_cast<double>(row_sum);
    }
  }
  return rows;
}

std::string ConfusionMatrix::to_csv(bool as_row_percent) const {
  std::ostringstream os;
  os << "true_class";
  for (int p = 0; p < classes_; ++p) os << ",pred_" << p;
  os << '\n';
  const auto percents = as_row_percent ? row_percent() : std::vector<std::vector<double>>{};
  for (int t = 0; t < classes_; ++t) {
    os << t;
    for (int p = 0; p < classes_; ++p) {
      if (as_row_percent) {
        os << ',' << percents[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
      } else {
        os << ',' << at(t, p);
      }
    }
    os << '\n';
  }
  return os.str();
}

Quartiles quartiles(const std::vector<double>& samples) {
  require(!samples.empty(), "quartiles: need at least one sample");
  std::vector<double> sorted = samples;
  std::sort(sorted.begin(), sorted.end());
  const auto interpolate = [&](double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = static_cast<std::size_t>(std::ceil(pos));
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
  };
  Quartiles q;
  q.min = sorted.front();
  q.q1 = interpolate(0.25);
  q.median = interpolate(0.5);
  q.q3 = interpolate(0.75);
  q.max = sorted.back();
  return q;
}

}  // namespace wearcnn::stats
