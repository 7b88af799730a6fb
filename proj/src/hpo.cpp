#include "wearcnn/hpo.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>

namespace wearcnn::hpo {

namespace {

constexpr double kSqrt2 = 1.4142135623730950488016887242097;
constexpr double kInvSqrt2Pi = 0.39894228040143267793994605993438;

double radical_inverse(std::uint64_t index, int base) {
  double result = 0.0;
  double f = 1.0 / base;
  while (index > 0) {
    result += f * static_cast<double>(index % static_cast<std::uint64_t>(base));
    index /= static_cast<std::uint64_t>(base);
    f /= base;
  }
  return result;
}

double map_unit(const Dimension& dim, double u) {
  if (const auto* cat = std::get_if<CategoricalDim>(&dim)) {
    const auto k = cat->values.size();
    auto idx = static_cast<std::size_t>(u * static_cast<double>(k));
    if (idx >= k) idx = k - 1;
    return cat->values[idx];
  }
  if (const auto* int_dim = std::get_if<IntDim>(&dim)) {
    const int span = int_dim->hi - int_dim->lo + 1;
    int offset = static_cast<int>(u * span);
    if (offset >= span) offset = span - 1;
    return static_cast<double>(int_dim->lo + offset);
  }
  const auto& cont = std::get<ContinuousDim>(dim);
  if (cont.log_scale) {
    return std::exp(std::log(cont.lo) + u * (std::log(cont.hi) - std::log(cont.lo)));
  }
  return cont.lo + u * (cont.hi - cont.lo);
}

}  // namespace

const std::string& dimension_name(const Dimension& dim) {
  return std::visit([](const auto& d) -> const std::string& { return d.name; }, dim);
}

SearchSpace paper_search_space() {
  SearchSpace space;
  space.dims.push_back(IntDim{"fcl_count", 0, 3});
  space.dims.push_back(CategoricalDim{"fcl_neurons", {64, 128, 256, 512}});
  space.dims.push_back(CategoricalDim{"batchnorm", {0, 1}});  // off / after every FC layer
  space.dims.push_back(CategoricalDim{"dropout_rate", {0.0, 0.25, 0.5}});
  space.dims.push_back(ContinuousDim{"l2", 1e-4, 1e-1, true});
  space.dims.push_back(IntDim{"conv_count", 3, 7});
  space.dims.push_back(ContinuousDim{"learning_rate", 1e-5, 1e-2, true});
  for (int i = 1; i <= 7; ++i) {
    space.dims.push_back(IntDim{"filters_exp_" + std::to_string(i), 4, 8});
  }
  return space;
}

SearchSpace quadratic_benchmark_space() {
  SearchSpace space;
  space.dims.push_back(ContinuousDim{"x", 0.0, 1.0, false});
  space.dims.push_back(ContinuousDim{"y", 0.0, 1.0, false});
  return space;
}

Config sample_point(const SearchSpace& space, Rng& rng) {
  Config point;
  point.reserve(space.dims.size());
  for (const auto& dim : space.dims) point.push_back(map_unit(dim, rng.uniform01()));
  return point;
}

Config halton_point(const SearchSpace& space, std::uint64_t index) {
  static constexpr int kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29,
                                    31, 37, 41, 43, 47, 53, 59, 61, 67, 71};
  check(space.dims.size() <= std::size(kPrimes), "halton: too many dimensions");
  Config point;
  point.reserve(space.dims.size());
  for (std::size_t d = 0; d < space.dims.size(); ++d) {
    point.push_back(map_unit(space.dims[d], radical_inverse(index + 1, kPrimes[d])));
  }
  return point;
}

bool in_domain(const SearchSpace& space, const Config& point) {
  if (point.size() != space.dims.size()) return false;
  for (std::size_t d = 0; d < space.dims.size(); ++d) {
    const double v = point[d];
    bool ok = false;
    if (const auto* cat = std::get_if<CategoricalDim>(&space.dims[d])) {
      for (double allowed : cat->values) ok = ok || std::abs(v - allowed) < 1e-12;
    } else if (const auto* int_dim = std::get_if<IntDim>(&space.dims[d])) {
      ok = v >= int_dim->lo && v <= int_dim->hi && v == std::floor(v);
    } else {
      const auto& cont = std::get<ContinuousDim>(space.dims[d]);
      ok = v >= cont.lo && v <= cont.hi;
    }
    if (!ok) return false;
  }
  return true;
}

std::optional<std::size_t> find_dimension(const SearchSpace& space, const std::string& name) {
  for (std::size_t d = 0; d < space.dims.size(); ++d) {
    if (dimension_name(space.dims[d]) == name) return d;
  }
  return std::nullopt;
}

const Trial* History::incumbent() const {
  const Trial* best = nullptr;
  for (const auto& trial : trials) {
    if (trial.failed) continue;
    if (!best || trial.objective > best->objective) best = &trial;
  }
  return best;
}

double History::best_objective() const {
  const Trial* best = incumbent();
  return best ? best->objective : -std::numeric_limits<double>::infinity();
}

void observe(History& history, Trial trial) { history.trials.push_back(std::move(trial)); }

// ---------------------------------------------------------------------------
// Gaussian process
// ---------------------------------------------------------------------------

double GaussianProcess::kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
  double quad = 0.0;
  for (Eigen::Index d = 0; d < a.size(); ++d) {
    const double scaled = (a(d) - b(d)) / std::exp(log_lengthscales_(d));
    quad += scaled * scaled;
  }
  return std::exp(2.0 * log_signal_) * std::exp(-0.5 * quad);
}

double GaussianProcess::refactor() {
  const Eigen::Index n = x_.rows();
  Eigen::MatrixXd gram(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double k = kernel(x_.row(i), x_.row(j));
      gram(i, j) = k;
      gram(j, i) = k;
    }
    gram(i, i) += jitter_;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
  chol_lower_ = llt.matrixL();
  alpha_ = llt.solve(y_);

  double log_det = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) log_det += std::log(chol_lower_(i, i));
  lml_ = -0.5 * y_.dot(alpha_) - log_det -
         0.5 * static_cast<double>(n) * std::log(2.0 * 3.14159265358979323846);
  return lml_;
}

void GaussianProcess::fit(Eigen::MatrixXd x, Eigen::VectorXd y, Rng& rng) {
  check(x.rows() == y.size() && x.rows() >= 1, "gp: inconsistent training data");
  x_ = std::move(x);
  y_mean_ = y.mean();
  const double var =
      (y.array() - y_mean_).square().sum() / std::max<Eigen::Index>(1, y.size() - 1);
  y_scale_ = std::sqrt(std::max(var, 1e-12));
  y_ = (y.array() - y_mean_) / y_scale_;

  const Eigen::Index dims = x_.cols();
  // theta = [log signal, log lengthscale_0 .. log lengthscale_{d-1}]
  auto evaluate = [&](const Eigen::VectorXd& theta) {
    log_signal_ = theta(0);
    log_lengthscales_ = theta.tail(dims);
    return refactor();
  };

  std::vector<Eigen::VectorXd> starts;
  starts.push_back(Eigen::VectorXd::Zero(dims + 1));
  for (int s = 0; s < 4; ++s) {
    Eigen::VectorXd theta(dims + 1);
    theta(0) = rng.uniform(std::log(0.3), std::log(3.0));
    for (Eigen::Index d = 0; d < dims; ++d) {
      theta(1 + d) = rng.uniform(std::log(0.05), std::log(3.0));
    }
    starts.push_back(theta);
  }

  Eigen::VectorXd best_theta = starts.front();
  double best_lml = -std::numeric_limits<double>::infinity();
  for (const auto& start : starts) {
    Eigen::VectorXd current = start;
    double current_lml = evaluate(current);
    double step = 0.5;
    int evals = 0;
    while (step > 1e-3 && evals < 400) {
      bool improved = false;
      for (Eigen::Index i = 0; i < current.size() && !improved; ++i) {
        for (const double delta : {step, -step}) {
          Eigen::VectorXd candidate = current;
          candidate(i) += delta;
          const double lml = evaluate(candidate);
          ++evals;
          if (lml > current_lml) {
            current = candidate;
            current_lml = lml;
            improved = true;
            break;
          }
        }
      }
      if (!improved) step *= 0.5;
    }
    if (current_lml > best_lml) {
      best_lml = current_lml;
      best_theta = current;
    }
  }
  evaluate(best_theta);
}

GaussianProcess::Posterior GaussianProcess::predict(const Eigen::VectorXd& x) const {
  const Eigen::Index n = x_.rows();
  Eigen::VectorXd k_star(n);
  for (Eigen::Index i = 0; i < n; ++i) k_star(i) = kernel(x_.row(i), x);
  const double mean_normalized = k_star.dot(alpha_);
  const Eigen::VectorXd v =
      chol_lower_.triangularView<Eigen::Lower>().solve(k_star);
  const double prior = kernel(x, x) + jitter_;
  const double var_normalized = std::max(0.0, prior - v.squaredNorm());

  Posterior posterior;
  posterior.mean = y_mean_ + y_scale_ * mean_normalized;
  posterior.variance = y_scale_ * y_scale_ * var_normalized;
  return posterior;
}

double expected_improvement(double mean, double stddev, double best) {
  if (stddev < 1e-12) return std::max(0.0, mean - best);
  const double z = (mean - best) / stddev;
  const double cdf = 0.5 * std::erfc(-z / kSqrt2);
  const double pdf = kInvSqrt2Pi * std::exp(-0.5 * z * z);
  return std::max(0.0, (mean - best) * cdf + stddev * pdf);
}

int encoded_width(const SearchSpace& space) {
  int width = 0;
  for (const auto& dim : space.dims) {
    if (const auto* cat = std::get_if<CategoricalDim>(&dim)) {
      width += static_cast<int>(cat->values.size());
    } else {
      width += 1;
    }
  }
  return width;
}

Eigen::VectorXd encode_point(const SearchSpace& space, const Config& point) {
  check(point.size() == space.dims.size(), "encode: point does not match space");
  Eigen::VectorXd encoded(encoded_width(space));
  Eigen::Index at = 0;
  for (std::size_t d = 0; d < space.dims.size(); ++d) {
    const double v = point[d];
    if (const auto* cat = std::get_if<CategoricalDim>(&space.dims[d])) {
      for (double allowed : cat->values) {
        encoded(at++) = std::abs(v - allowed) < 1e-12 ? 1.0 : 0.0;
      }
    } else if (const auto* int_dim = std::get_if<IntDim>(&space.dims[d])) {
      const double span = std::max(1, int_dim->hi - int_dim->lo);
      encoded(at++) = (v - int_dim->lo) / span;
    } else {
      const auto& cont = std::get<ContinuousDim>(space.dims[d]);
      if (cont.log_scale) {
        encoded(at++) = (std::log(v) - std::log(cont.lo)) / (std::log(cont.hi) - std::log(cont.lo));
      } else {
        encoded(at++) = (v - cont.lo) / (cont.hi - cont.lo);
      }
    }
  }
  return encoded;
}

Config suggest(const History& history, const SearchSpace& space, Rng& rng) {
  if (history.trials.size() < static_cast<std::size_t>(kInitialQuasirandom)) {
    return halton_point(space, history.trials.size());
  }

  std::vector<const Trial*> usable;
  double worst_success = std::numeric_limits<double>::infinity();
  for (const auto& trial : history.trials) {
    if (!trial.failed) worst_success = std::min(worst_success, trial.objective);
  }
  if (!std::isfinite(worst_success)) return sample_point(space, rng);

  Eigen::MatrixXd x(static_cast<Eigen::Index>(history.trials.size()), encoded_width(space));
  Eigen::VectorXd y(static_cast<Eigen::Index>(history.trials.size()));
  for (std::size_t i = 0; i < history.trials.size(); ++i) {
    const Trial& trial = history.trials[i];
    x.row(static_cast<Eigen::Index>(i)) = encode_point(space, trial.point);
    // Failed trials are imputed at the worst observed objective.
    y(static_cast<Eigen::Index>(i)) = trial.failed ? worst_success : trial.objective;
  }

  GaussianProcess gp;
  gp.fit(std::move(x), std::move(y), rng);

  const double best = history.best_objective();
  Config best_candidate;
  double best_ei = -1.0;
  for (int i = 0; i < kCandidatePoolSize; ++i) {
    Config candidate = sample_point(space, rng);
    const auto posterior = gp.predict(encode_point(space, candidate));
    const double ei = expected_improvement(posterior.mean, std::sqrt(posterior.variance), best);
    if (ei > best_ei) {
      best_ei = ei;
      best_candidate = std::move(candidate);
    }
  }
  return best_candidate;
}

SmboResult optimize(const SearchSpace& space,
                    const std::function<double(const Config&)>& objective, int budget,
                    std::uint64_t seed, const std::function<void(int, const Trial&)>& on_trial) {
  check(budget >= 1, "optimize: budget must be >= 1");
  SmboResult result;
  Rng rng(derive_seed(seed, "smbo"));
  for (int i = 0; i < budget; ++i) {
    Trial trial;
    trial.point = suggest(result.history, space, rng);
    try {
      trial.objective = objective(trial.point);
    } catch (const std::exception&) {
      trial.failed = true;
      trial.objective = -std::numeric_limits<double>::infinity();
    }
    observe(result.history, trial);
    if (on_trial) on_trial(i, trial);
  }
  if (const Trial* best = result.history.incumbent()) {
    result.best_point = best->point;
    result.best_objective = best->objective;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

void save_history(const std::filesystem::path& path, const SearchSpace& space,
                  const History& history) {
  std::ofstream out(path, std::ios::trunc);
  if (!out.good()) throw std::runtime_error("hpo history: cannot write " + path.string());
  for (std::size_t i = 0; i < history.trials.size(); ++i) {
    const Trial& trial = history.trials[i];
    nlohmann::json line;
    line["trial"] = i;
    line["status"] = trial.failed ? "failed" : "ok";
    if (trial.failed) {
      line["objective"] = nullptr;
    } else {
      line["objective"] = trial.objective;
    }
    nlohmann::json params;
    for (std::size_t d = 0; d < space.dims.size(); ++d) {
      params[dimension_name(space.dims[d])] = trial.point[d];
    }
    line["params"] = params;
    out << line.dump() << '\n';
  }
}

History load_history(const std::filesystem::path& path, const SearchSpace& space) {
  std::ifstream in(path);
  if (!in.good()) throw std::runtime_error("hpo history: cannot open " + path.string());
  History history;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const nlohmann::json parsed = nlohmann::json::parse(line);
    Trial trial;
    trial.failed = parsed.at("status").get<std::string>() == "failed";
    trial.objective = trial.failed ? -std::numeric_limits<double>::infinity()
                                   : parsed.at("objective").get<double>();
    trial.point.resize(space.dims.size());
    for (std::size_t d = 0; d < space.dims.size(); ++d) {
      trial.point[d] = parsed.at("params").at(dimension_name(space.dims[d])).get<double>();
    }
    history.trials.push_back(std::move(trial));
  }
  return history;
}

// ---------------------------------------------------------------------------
// CNN configuration decoding
// ---------------------------------------------------------------------------

DecodedConfig decode_cnn_config(const SearchSpace& space, const Config& point, Shape input_shape,
                                int classes) {
  check(in_domain(space, point), "decode: configuration is out of domain");
  DecodedConfig decoded;
  decoded.recipe.input_shape = std::move(input_shape);
  decoded.recipe.classes = classes;

  auto lookup = [&](const std::string& name) -> std::optional<double> {
    if (const auto idx = find_dimension(space, name)) return point[*idx];
    return std::nullopt;
  };

  const int conv_count = static_cast<int>(
      lookup("conv_count").value_or(static_cast<double>(decoded.recipe.conv_filters.size())));
  static constexpr int kDefaultExponents[] = {5, 6, 6, 7, 8, 8, 8};
  std::vector<int> filters;
  for (int i = 0; i < conv_count; ++i) {
    const auto exponent = lookup("filters_exp_" + std::to_string(i + 1));
    const int exp_value =
        exponent ? static_cast<int>(*exponent) : kDefaultExponents[std::min(i, 6)];
    filters.push_back(1 << exp_value);
  }
  decoded.recipe.conv_filters = std::move(filters);

  if (const auto v = lookup("fcl_count")) decoded.recipe.fc_count = static_cast<int>(*v);
  if (const auto v = lookup("fcl_neurons")) decoded.recipe.fc_width = static_cast<int>(*v);
  if (const auto v = lookup("batchnorm")) decoded.recipe.batchnorm_after_fc = *v >= 0.5;
  if (const auto v = lookup("dropout_rate")) decoded.recipe.dropout_rate = *v;
  if (const auto v = lookup("l2")) decoded.recipe.l2_lambda = *v;
  if (const auto v = lookup("learning_rate")) decoded.learning_rate = *v;
  return decoded;
}

}  // namespace wearcnn::hpo
