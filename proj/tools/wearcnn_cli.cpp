// Command-line front end: corpus generation, training, repeated-run
// experiments, hyperparameter search, statistical comparison, and report
// generation. All randomness flows from --seed via named substreams; outputs
// are byte-identical across reruns, wall-clock timings go to a sidecar log.

#include "wearcnn/checkpoint.hpp"
#include "wearcnn/dataset.hpp"
#include "wearcnn/hpo.hpp"
#include "wearcnn/manifest.hpp"
#include "wearcnn/network.hpp"
#include "wearcnn/splits.hpp"
#include "wearcnn/stats.hpp"
#include "wearcnn/synthgen.hpp"
#include "wearcnn/trainer.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace {

using namespace wearcnn;
using json = nlohmann::json;

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

/// Appends a timestamped line to the sidecar log; the only place wall-clock
/// data is allowed to land.
class SidecarLog {
 public:
  explicit SidecarLog(const std::filesystem::path& path) : out_(path, std::ios::app) {}

  void line(const std::string& text) {
    const auto now = std::chrono::system_clock::now();
    const std::time_t stamp = std::chrono::system_clock::to_time_t(now);
    char buffer[32];
    std::strftime(buffer, sizeof(buffer), "%F %T", std::gmtime(&stamp));
    out_ << buffer << "  " << text << '\n';
    out_.flush();
  }

 private:
  std::ofstream out_;
};

struct ProfileChoice {
  std::string name = "desk";

  Topology topology() const { return name == "paper" ? build_paper_cnn() : build_desk_cnn(); }
  int input_size() const { return name == "paper" ? 128 : 64; }
};

/// Scaled per-class holdout: the published protocol holds out 64 of 465
/// images per class; the same share, rounded down to whole four-view
/// workpieces, applies at any corpus scale.
int scaled_holdout(const DatasetManifest& manifest) {
  std::map<int, int> per_class;
  for (const auto& record : manifest.records) ++per_class[record.class_index];
  check(per_class.size() == static_cast<std::size_t>(kNumClasses),
        "corpus does not cover all 16 classes");
  int min_images = std::numeric_limits<int>::max();
  for (const auto& [class_index, count] : per_class) min_images = std::min(min_images, count);
  const int holdout = 4 * (16 * min_images / 465);
  check(holdout >= 4, "corpus too small: fewer than one holdout workpiece per class");
  return holdout;
}

struct LoadedSplit {
  Dataset<float> train;
  Dataset<float> val;
  Dataset<float> test;
  Split split;
};

LoadedSplit load_split(const DatasetManifest& manifest, int input_size, int holdout_per_class,
                       std::uint64_t seed) {
  LoadedSplit loaded;
  loaded.split = per_class_holdout(manifest, holdout_per_class, holdout_per_class,
                                   derive_seed(seed, "split"));
  const auto make = [&](const std::vector<SampleRecord>& records) {
    auto samples = std::make_shared<SampleSet>(SampleSet::load(manifest, records, input_size));
    return make_dataset<float>(std::move(samples));
  };
  loaded.train = make(loaded.split.train);
  loaded.val = make(loaded.split.val);
  loaded.test = make(loaded.split.test);
  return loaded;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out.good()) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string metrics_jsonl(const std::vector<EpochMetrics>& history) {
  std::ostringstream out;
  for (const auto& m : history) {
    json line;
    line["epoch"] = m.epoch;
    line["train_loss"] = m.train_loss;
    line["train_accuracy"] = m.train_accuracy;
    line["val_loss"] = m.val_loss;
    line["val_accuracy"] = m.val_accuracy;
    out << line.dump() << '\n';
  }
  return out.str();
}

std::string summary_json(std::uint64_t seed, const FitResult<float>& result) {
  json summary;
  summary["seed"] = seed;
  summary["epochs_run"] = result.epochs_run;
  summary["best_val_acc"] = result.best_val_accuracy;
  summary["test_acc"] = result.test_accuracy;
  return summary.dump(2) + "\n";
}

std::vector<double> load_accuracy_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in.good()) throw std::runtime_error("cannot open " + path.string());
  std::vector<double> values;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto last_comma = line.find_last_of(',');
    const std::string cell = last_comma == std::string::npos ? line : line.substr(last_comma + 1);
    try {
      values.push_back(std::stod(cell));
    } catch (const std::exception&) {
      // header or annotation row
    }
  }
  if (values.empty()) throw std::runtime_error("no accuracy values in " + path.string());
  return values;
}

json descriptive_json(const stats::DescriptiveStats& d) {
  json out;
  out["mean"] = d.mean;
  out["median"] = d.median;
  out["stddev"] = d.stddev;
  out["ci95_half_width"] = d.ci95_half_width;
  out["max"] = d.max;
  out["min"] = d.min;
  out["n"] = d.n;
  return out;
}

json quartiles_json(const stats::Quartiles& q) {
  json out;
  out["min"] = q.min;
  out["q1"] = q.q1;
  out["median"] = q.median;
  out["q3"] = q.q3;
  out["max"] = q.max;
  return out;
}

hpo::SearchSpace load_space_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in.good()) throw std::runtime_error("cannot open space file " + path.string());
  json parsed;
  in >> parsed;
  hpo::SearchSpace space;
  for (const auto& dim : parsed.at("dimensions")) {
    const std::string type = dim.at("type").get<std::string>();
    const std::string name = dim.at("name").get<std::string>();
    if (type == "categorical") {
      space.dims.push_back(
          hpo::CategoricalDim{name, dim.at("values").get<std::vector<double>>()});
    } else if (type == "int") {
      space.dims.push_back(hpo::IntDim{name, dim.at("lo").get<int>(), dim.at("hi").get<int>()});
    } else if (type == "continuous") {
      space.dims.push_back(hpo::ContinuousDim{name, dim.at("lo").get<double>(),
                                              dim.at("hi").get<double>(),
                                              dim.value("log", false)});
    } else {
      throw std::invalid_argument("unknown dimension type '" + type + "' in " + path.string());
    }
  }
  return space;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

struct GenerateArgs {
  std::string out;
  int per_class = 5;
  int image_size = 128;
  int views = 4;
  std::uint64_t seed = 0;
  // Noise defaults track RenderConfig.
  double lighting_gain_sigma = RenderConfig{}.lighting_gain_sigma;
  double burr_angular_sigma = RenderConfig{}.burr_angular_sigma;
  double pixel_noise_sigma = RenderConfig{}.pixel_noise_sigma;
};

int cmd_generate(const GenerateArgs& args) {
  RenderConfig config;
  config.image_size = args.image_size;
  config.per_class_workpieces = args.per_class;
  config.views_per_workpiece = args.views;
  config.master_seed = args.seed;
  config.lighting_gain_sigma = args.lighting_gain_sigma;
  config.burr_angular_sigma = args.burr_angular_sigma;
  config.pixel_noise_sigma = args.pixel_noise_sigma;

  const DatasetManifest manifest = generate_dataset(config, args.out);
  std::cout << manifest.records.size() << " images written to " << args.out << "\n";
  return 0;
}

struct TrainArgs {
  std::string data;
  std::string out;
  ProfileChoice profile;
  std::uint64_t seed = 0;
  int epochs = 200;
  int patience = 30;
  int batch_size = 32;
  double learning_rate = 0.001;
  int holdout_per_class = -1;  // -1: scaled rule
};

int cmd_train(const TrainArgs& args) {
  const DatasetManifest manifest = load_manifest(args.data);
  validate_manifest(manifest);
  const Topology topo = args.profile.topology();
  const int holdout =
      args.holdout_per_class >= 0 ? args.holdout_per_class : scaled_holdout(manifest);

  std::filesystem::create_directories(args.out);
  SidecarLog log(std::filesystem::path(args.out) / "run.log");
  log.line("train start: profile=" + args.profile.name + " holdout=" + std::to_string(holdout));

  const auto t0 = std::chrono::steady_clock::now();
  const LoadedSplit data = load_split(manifest, args.profile.input_size(), holdout, args.seed);

  TrainConfig config;
  config.learning_rate = args.learning_rate;
  config.batch_size = args.batch_size;
  config.max_epochs = args.epochs;
  config.patience_epochs = std::min(args.patience, args.epochs);
  config.seed = args.seed;

  Rng init_rng(derive_seed(args.seed, "init"));
  auto store = init_params<float>(topo, init_rng);
  const FitResult<float> result = fit(topo, std::move(store), data.train, data.val, data.test,
                                      config);
  const double wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const std::filesystem::path out_dir(args.out);
  write_text(out_dir / "metrics.jsonl", metrics_jsonl(result.history));
  write_text(out_dir / "summary.json", summary_json(args.seed, result));
  save_checkpoint(out_dir / "checkpoint.wcnn", result.best_params);
  for (const auto& m : result.history) {
    log.line("epoch " + std::to_string(m.epoch) + " wall_time_s=" + std::to_string(m.wall_time_s));
  }
  log.line("train done: wall_time_s=" + std::to_string(wall_s));

  std::cout << "epochs_run=" << result.epochs_run << " best_val_acc=" << result.best_val_accuracy
            << " test_acc=" << result.test_accuracy << "\n";
  return 0;
}

struct ExperimentArgs {
  TrainArgs train;
  int runs = 100;
  int workers = 1;
  std::string label = "self_created_cnn";
};

int cmd_experiment(const ExperimentArgs& args) {
  const DatasetManifest manifest = load_manifest(args.train.data);
  validate_manifest(manifest);
  const Topology topo = args.train.profile.topology();
  const int holdout = args.train.holdout_per_class >= 0 ? args.train.holdout_per_class
                                                        : scaled_holdout(manifest);

  std::filesystem::create_directories(args.train.out);
  SidecarLog log(std::filesystem::path(args.train.out) / "run.log");
  log.line("experiment start: runs=" + std::to_string(args.runs) + " label=" + args.label);

  const LoadedSplit data =
      load_split(manifest, args.train.profile.input_size(), holdout, args.train.seed);

  TrainConfig config;
  config.learning_rate = args.train.learning_rate;
  config.batch_size = args.train.batch_size;
  config.max_epochs = args.train.epochs;
  config.patience_epochs = std::min(args.train.patience, args.train.epochs);

  const std::function<void(int, const FitResult<float>&)> on_run_done =
      [&](int i, const FitResult<float>& result) {
        log.line("run " + std::to_string(i) + " epochs=" + std::to_string(result.epochs_run) +
                 " test_acc=" + std::to_string(result.test_accuracy));
      };
  const auto accuracies = repeated_runs(topo, data.train, data.val, data.test, config, args.runs,
                                        args.train.seed, args.workers, on_run_done);

  std::ostringstream csv;
  csv << "run,seed,test_accuracy\n";
  for (std::size_t i = 0; i < accuracies.size(); ++i) {
    csv << i << ',' << args.train.seed + i << ',' << accuracies[i] << '\n';
  }
  const auto csv_path =
      std::filesystem::path(args.train.out) / ("accuracies_" + args.label + ".csv");
  write_text(csv_path, csv.str());

  const auto d = stats::describe(accuracies);
  std::cout << args.label << ": n=" << d.n << " mean=" << d.mean << " stddev=" << d.stddev
            << " min=" << d.min << " max=" << d.max << "\n"
            << "accuracies written to " << csv_path.string() << "\n";
  return 0;
}

struct HpoArgs {
  std::string data;
  std::string out;
  std::string space_file;
  int trials = 25;
  int epochs_per_trial = 50;
  std::uint64_t seed = 0;
  int holdout_per_class = -1;
  int image_size = 0;  // 0: corpus size
};

int cmd_hpo(const HpoArgs& args) {
  const DatasetManifest manifest = load_manifest(args.data);
  validate_manifest(manifest);
  const hpo::SearchSpace space =
      args.space_file.empty() ? hpo::paper_search_space() : load_space_file(args.space_file);
  const int input_size = args.image_size > 0 ? args.image_size : manifest.target_size;
  const int holdout =
      args.holdout_per_class >= 0 ? args.holdout_per_class : scaled_holdout(manifest);

  std::filesystem::create_directories(args.out);
  SidecarLog log(std::filesystem::path(args.out) / "run.log");
  log.line("hpo start: trials=" + std::to_string(args.trials));

  const LoadedSplit data = load_split(manifest, input_size, holdout, args.seed);
  const Shape input_shape{input_size, input_size, 3};

  const auto result = hpo::run_hpo<float>(
      space, args.trials, args.epochs_per_trial, args.seed, data.train, data.val, input_shape, 16,
      [&](int i, const hpo::Trial& trial) {
        log.line("trial " + std::to_string(i) +
                 (trial.failed ? " failed" : " objective=" + std::to_string(trial.objective)));
        std::cout << "trial " << i << ": "
                  << (trial.failed ? "failed" : "val_acc=" + std::to_string(trial.objective))
                  << "\n";
      });

  const std::filesystem::path out_dir(args.out);
  hpo::save_history(out_dir / "hpo_history.jsonl", space, result.history);

  json best;
  best["objective"] = result.best_objective;
  json params;
  for (std::size_t d = 0; d < space.dims.size(); ++d) {
    params[hpo::dimension_name(space.dims[d])] = result.best_point[d];
  }
  best["params"] = params;
  write_text(out_dir / "best_config.json", best.dump(2) + "\n");

  std::cout << "best val_acc=" << result.best_objective << " (history in "
            << (out_dir / "hpo_history.jsonl").string() << ")\n";
  return 0;
}

struct CompareArgs {
  std::string runs_a;
  std::string runs_b;
  std::string label_a = "model_a";
  std::string label_b = "model_b";
  double alpha = 0.01;
  std::string out = "compare_report.json";
};

int cmd_compare(const CompareArgs& args) {
  check(args.alpha > 0.0 && args.alpha < 1.0, "alpha must lie in (0, 1)");
  stats::RunAccuracies a{args.label_a, load_accuracy_csv(args.runs_a)};
  stats::RunAccuracies b{args.label_b, load_accuracy_csv(args.runs_b)};

  const auto test = stats::one_tailed_test(a, b, args.alpha);

  json report;
  report["model_a"] = a.label;
  report["model_b"] = b.label;
  report["descriptive"][a.label] = descriptive_json(stats::describe(a.samples));
  report["descriptive"][b.label] = descriptive_json(stats::describe(b.samples));
  report["welch"]["t_stat"] = test.t_stat;
  report["welch"]["df_raw"] = test.df_raw;
  report["welch"]["df_floor"] = test.df_floor;
  report["welch"]["t_crit"] = test.t_crit;
  report["welch"]["p"] = test.p_value;
  report["welch"]["alpha"] = test.alpha;
  report["welch"]["reject"] = test.reject;
  report["boxplot"][a.label] = quartiles_json(stats::quartiles(a.samples));
  report["boxplot"][b.label] = quartiles_json(stats::quartiles(b.samples));
  write_text(args.out, report.dump(2) + "\n");

  std::cout << (test.reject ? "reject H0" : "fail to reject H0") << ": t=" << test.t_stat
            << " df=" << test.df_floor << " t_crit=" << test.t_crit << " p=" << test.p_value
            << " alpha=" << test.alpha << "\n"
            << "report written to " << args.out << "\n";
  return 0;
}

struct ReportArgs {
  std::string checkpoint;
  std::string data;
  std::string out = ".";
  ProfileChoice profile;
  std::string subset = "all";  // all | test
  std::uint64_t seed = 0;
  int holdout_per_class = -1;
};

int cmd_report(const ReportArgs& args) {
  const DatasetManifest manifest = load_manifest(args.data);
  validate_manifest(manifest);
  const Topology topo = args.profile.topology();
  Rng init_rng(0);
  auto store = init_params<float>(topo, init_rng);
  load_checkpoint(args.checkpoint, store);

  std::vector<SampleRecord> records;
  if (args.subset == "test") {
    const int holdout =
        args.holdout_per_class >= 0 ? args.holdout_per_class : scaled_holdout(manifest);
    records = per_class_holdout(manifest, holdout, holdout, derive_seed(args.seed, "split")).test;
  } else {
    records = manifest.records;
  }

  const auto samples = std::make_shared<SampleSet>(
      SampleSet::load(manifest, records, args.profile.input_size()));
  const auto dataset = make_dataset<float>(samples);

  stats::ConfusionMatrix confusion(kNumClasses);
  std::vector<long long> indices(static_cast<std::size_t>(dataset.count));
  std::iota(indices.begin(), indices.end(), 0);
  for (long long start = 0; start < dataset.count; start += 64) {
    const long long stop = std::min(dataset.count, start + 64);
    const std::span<const long long> slice(indices.data() + start,
                                           static_cast<std::size_t>(stop - start));
    const auto batch = dataset.fetch(slice);
    confusion.accumulate(predict_class(topo, store, batch.x), batch.labels);
  }

  std::filesystem::create_directories(args.out);
  const std::filesystem::path out_dir(args.out);
  write_text(out_dir / "confusion_counts.csv", confusion.to_csv(false));
  write_text(out_dir / "confusion_row_percent.csv", confusion.to_csv(true));

  json per_class;
  long long correct = 0, total = 0;
  for (int c = 0; c < kNumClasses; ++c) {
    long long row = 0;
    for (int p = 0; p < kNumClasses; ++p) row += confusion.at(c, p);
    per_class[std::to_string(c)] = row == 0 ? 0.0 : static_cast<double>(confusion.at(c, c)) / row;
    correct += confusion.at(c, c);
    total += row;
  }
  json summary;
  summary["per_class_accuracy"] = per_class;
  summary["overall_accuracy"] = total == 0 ? 0.0 : static_cast<double>(correct) / total;
  summary["samples"] = total;
  write_text(out_dir / "per_class_accuracy.json", summary.dump(2) + "\n");

  std::cout << "overall_accuracy=" << summary["overall_accuracy"].get<double>() << " over "
            << total << " samples\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Image-based tool-wear classification: synthetic corpus generation, CNN training, "
               "hyperparameter search, and statistical model comparison"};
  app.require_subcommand(1);
  app.set_config("--config")->configurable(false);

  GenerateArgs generate_args;
  auto* generate = app.add_subcommand("generate", "Render a synthetic workpiece-image corpus");
  generate->add_option("--out", generate_args.out, "Output corpus directory")->required();
  generate->add_option("--per-class", generate_args.per_class, "Workpieces per wear class")
      ->check(CLI::PositiveNumber);
  generate->add_option("--image-size", generate_args.image_size, "Square image side length")
      ->check(CLI::Range(16, 1024));
  generate->add_option("--views", generate_args.views, "Views per workpiece (must divide 360)");
  generate->add_option("--seed", generate_args.seed, "Master seed");
  generate->add_option("--lighting-sigma", generate_args.lighting_gain_sigma,
                       "Lighting gain noise");
  generate->add_option("--burr-sigma", generate_args.burr_angular_sigma,
                       "Burr angular variance");
  generate->add_option("--pixel-sigma", generate_args.pixel_noise_sigma, "Pixel noise fraction");

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train one network on a corpus");
  train->add_option("--data", train_args.data, "Corpus directory")->required();
  train->add_option("--out", train_args.out, "Output directory")->required();
  train->add_option("--profile", train_args.profile.name, "Topology profile")
      ->check(CLI::IsMember({"paper", "desk"}));
  train->add_option("--seed", train_args.seed, "Run seed");
  train->add_option("--epochs", train_args.epochs, "Maximum epochs")->check(CLI::PositiveNumber);
  train->add_option("--patience", train_args.patience, "Early-stopping patience")
      ->check(CLI::NonNegativeNumber);
  train->add_option("--batch-size", train_args.batch_size, "Minibatch size")
      ->check(CLI::PositiveNumber);
  train->add_option("--lr", train_args.learning_rate, "Learning rate")
      ->check(CLI::PositiveNumber);
  train->add_option("--holdout-per-class", train_args.holdout_per_class,
                    "Validation/test images held out per class (default: scaled rule)");

  ExperimentArgs experiment_args;
  auto* experiment =
      app.add_subcommand("experiment", "Repeated training runs for model comparison");
  experiment->add_option("--data", experiment_args.train.data, "Corpus directory")->required();
  experiment->add_option("--out", experiment_args.train.out, "Output directory")->required();
  experiment->add_option("--profile", experiment_args.train.profile.name, "Topology profile")
      ->check(CLI::IsMember({"paper", "desk"}));
  experiment->add_option("--runs", experiment_args.runs, "Number of independent runs")
      ->check(CLI::PositiveNumber);
  experiment->add_option("--seed", experiment_args.train.seed, "Base seed (run i uses seed+i)");
  experiment->add_option("--label", experiment_args.label, "Model label for the accuracy CSV");
  experiment->add_option("--workers", experiment_args.workers, "Parallel training workers")
      ->check(CLI::PositiveNumber);
  experiment->add_option("--epochs", experiment_args.train.epochs, "Maximum epochs");
  experiment->add_option("--patience", experiment_args.train.patience, "Early-stopping patience");
  experiment->add_option("--batch-size", experiment_args.train.batch_size, "Minibatch size");
  experiment->add_option("--lr", experiment_args.train.learning_rate, "Learning rate");
  experiment->add_option("--holdout-per-class", experiment_args.train.holdout_per_class,
                         "Holdout images per class");

  HpoArgs hpo_args;
  auto* hpo_cmd = app.add_subcommand("hpo", "Bayesian hyperparameter search");
  hpo_cmd->add_option("--data", hpo_args.data, "Corpus directory")->required();
  hpo_cmd->add_option("--out", hpo_args.out, "Output directory")->required();
  hpo_cmd->add_option("--trials", hpo_args.trials, "Trial budget")->check(CLI::PositiveNumber);
  hpo_cmd->add_option("--epochs-per-trial", hpo_args.epochs_per_trial,
                      "Training epochs per trial");
  hpo_cmd->add_option("--seed", hpo_args.seed, "Search seed");
  hpo_cmd->add_option("--space", hpo_args.space_file, "Search-space JSON file (default built-in)");
  hpo_cmd->add_option("--image-size", hpo_args.image_size,
                      "Trial input size (default: corpus size)");
  hpo_cmd->add_option("--holdout-per-class", hpo_args.holdout_per_class,
                      "Holdout images per class");

  CompareArgs compare_args;
  auto* compare = app.add_subcommand("compare", "One-tailed Welch test between two run sets");
  compare->add_option("--runs-a", compare_args.runs_a, "Accuracy CSV of model A")->required();
  compare->add_option("--runs-b", compare_args.runs_b, "Accuracy CSV of model B")->required();
  compare->add_option("--label-a", compare_args.label_a, "Label of model A");
  compare->add_option("--label-b", compare_args.label_b, "Label of model B");
  compare->add_option("--alpha", compare_args.alpha, "Significance level")
      ->check(CLI::Range(1e-9, 1.0 - 1e-9));
  compare->add_option("--out", compare_args.out, "Report JSON path");

  ReportArgs report_args;
  auto* report = app.add_subcommand("report", "Evaluate a checkpoint into confusion matrices");
  report->add_option("--checkpoint", report_args.checkpoint, "Checkpoint file")->required();
  report->add_option("--data", report_args.data, "Corpus directory")->required();
  report->add_option("--out", report_args.out, "Output directory");
  report->add_option("--profile", report_args.profile.name, "Topology profile")
      ->check(CLI::IsMember({"paper", "desk"}));
  report->add_option("--subset", report_args.subset, "Evaluate 'all' records or the 'test' split")
      ->check(CLI::IsMember({"all", "test"}));
  report->add_option("--seed", report_args.seed, "Split seed when --subset test");
  report->add_option("--holdout-per-class", report_args.holdout_per_class,
                     "Holdout images per class when --subset test");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (generate->parsed()) return cmd_generate(generate_args);
    if (train->parsed()) return cmd_train(train_args);
    if (experiment->parsed()) return cmd_experiment(experiment_args);
    if (hpo_cmd->parsed()) return cmd_hpo(hpo_args);
    if (compare->parsed()) return cmd_compare(compare_args);
    if (report->parsed()) return cmd_report(report_args);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
