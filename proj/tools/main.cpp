// chanlearn: generate channel datasets, train/evaluate models, and reproduce
// the reference experiments. Exit codes: 0 success, 1 runtime error, 2 usage.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "chanlearn/architectures.hpp"
#include "chanlearn/dataset.hpp"
#include "chanlearn/experiments.hpp"
#include "chanlearn/forest.hpp"
#include "chanlearn/nn/serialize.hpp"
#include "chanlearn/nn/train.hpp"

namespace cl = chanlearn;
using nlohmann::json;

namespace {

std::uint64_t seed_or_env(std::optional<std::uint64_t> flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("CHANLEARN_SEED")) {
    return std::strtoull(env, nullptr, 10);
  }
  return 0;
}

void write_resolved_config(const std::filesystem::path& dir, const json& config) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "resolved_config.json", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + (dir / "resolved_config.json").string());
  out << config.dump(2) << "\n";
}

struct GenerateArgs {
  std::string task = "classification";
  int per_class = 1000;
  int count = 1000;
  int len = 30;
  double r = 1.0;
  std::string gen = "d1";
  double mu = 0.5;
  std::string form = "exp";
  int k_steps = 6;
  double c = 0.5;
  std::optional<std::uint64_t> seed;
  std::string out = "dataset.chl";
};

int cmd_generate(const GenerateArgs& a) {
  const std::uint64_t seed = seed_or_env(a.seed);
  cl::Dataset ds;
  json config{{"command", "generate"}, {"task", a.task}, {"seed", seed}, {"out", a.out}};

  if (a.task == "classification") {
    ds = cl::build_classification({a.per_class, a.len, a.r,
                                   cl::generation_from_name(a.gen), seed});
    config["per_class"] = a.per_class;
    config["len"] = a.len;
    config["r"] = a.r;
    config["gen"] = a.gen;
  } else if (a.task == "regression") {
    ds = cl::build_regression({a.count, a.r, seed});
    config["count"] = a.count;
    config["r"] = a.r;
  } else if (a.task == "forecast-markov") {
    ds = cl::build_forecast_markovian({a.count, a.mu, a.r, seed});
    config["count"] = a.count;
    config["mu"] = a.mu;
    config["r"] = a.r;
  } else if (a.task == "forecast-det") {
    ds = cl::build_forecast_deterministic({a.count, cl::det_form_from_name(a.form),
                                           a.k_steps, a.r, seed});
    config["count"] = a.count;
    config["form"] = a.form;
    config["K"] = a.k_steps;
    config["r"] = a.r;
  } else {  // binning (validated by CLI11)
    ds = cl::build_memory_binning({a.count, a.c, a.r, seed});
    config["count"] = a.count;
    config["c"] = a.c;
    config["r"] = a.r;
  }

  cl::save(ds, a.out);
  const auto parent = std::filesystem::path(a.out).parent_path();
  write_resolved_config(parent.empty() ? "." : parent, config);
  std::cout << "wrote " << ds.samples.size() << " samples to " << a.out << "\n";
  return 0;
}

struct TrainArgs {
  std::string data;
  std::string model = "rnn";
  std::string spec_file;
  int epochs = 100;
  int batch = 200;
  double lr = 1e-3;
  double ratio = 0.8;
  std::optional<std::uint64_t> seed;
  std::string out = "model";
  bool verbose = false;
};

int cmd_train(const TrainArgs& a) {
  const std::uint64_t seed = seed_or_env(a.seed);
  const cl::Dataset ds = cl::load(a.data);
  const cl::SplitPair parts = cl::split(ds, a.ratio, cl::derive_seed(seed, {0x51}));

  json config{{"command", "train"},   {"data", a.data},   {"model", a.model},
              {"epochs", a.epochs},   {"batch", a.batch}, {"lr", a.lr},
              {"ratio", a.ratio},     {"seed", seed},     {"out", a.out}};

  if (a.model == "forest") {
    if (ds.task != cl::Task::classification) {
      throw std::runtime_error("forest supports classification only");
    }
    const cl::RandomForest forest = cl::RandomForest::fit(parts.train, 100, seed);
    json metrics{{"train_accuracy", forest.accuracy(parts.train)},
                 {"test_accuracy", forest.accuracy(parts.test)},
                 {"n_estimators", forest.n_estimators()}};
    std::filesystem::create_directories(a.out);
    std::ofstream mf(std::filesystem::path(a.out) / "forest_metrics.json");
    mf << metrics.dump(2) << "\n";
    write_resolved_config(a.out, config);
    std::cout << "forest test accuracy " << metrics["test_accuracy"] << "\n";
    return 0;
  }

  cl::nn::NetworkSpec spec;
  if (!a.spec_file.empty()) {
    std::ifstream sf(a.spec_file);
    if (!sf) throw std::runtime_error("cannot open spec file: " + a.spec_file);
    spec = cl::nn::spec_from_json(json::parse(sf));
    config["spec_file"] = a.spec_file;
  } else if (ds.task == cl::Task::classification) {
    spec = cl::classifier_by_name(a.model, ds.seq_len, ds.n_classes);
  } else if (ds.task == cl::Task::regression) {
    spec = cl::regression_ffnn(ds.seq_len);
  } else if (ds.target_width == cl::kForecastMarkovTargetLen &&
             ds.seq_len == cl::kForecastMarkovInputLen) {
    spec = cl::forecast_markov_ffnn();
  } else {
    spec = cl::forecast_det_ffnn(ds.seq_len);
  }

  cl::nn::TrainConfig cfg{a.epochs, a.batch, a.lr, cl::derive_seed(seed, {0x52}), a.verbose};
  cl::nn::TrainedModel model = cl::nn::train(spec, parts.train, parts.test, cfg);

  // Classification keeps the best checkpoint (per-epoch test accuracy);
  // regressors keep the final parameters.
  const bool classify = ds.task == cl::Task::classification;
  cl::nn::save_model(model, a.out, /*use_best=*/classify);

  std::ofstream hf(std::filesystem::path(a.out) / "history.csv", std::ios::binary);
  hf << "epoch,train_loss,test_loss,train_metric,test_metric\n";
  for (std::size_t e = 0; e < model.history.size(); ++e) {
    const auto& h = model.history[e];
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g\n", e + 1, h.train_loss,
                  h.test_loss, h.train_metric, h.test_metric);
    hf << buf;
  }
  write_resolved_config(a.out, config);
  if (classify) {
    std::cout << "best test accuracy " << model.best_test_metric << "\n";
  } else {
    std::cout << "final test mse " << model.history.back().test_loss << "\n";
  }
  return 0;
}

struct EvalArgs {
  std::string model_dir;
  std::string data;
  std::string out = "metrics.json";
};

int cmd_eval(const EvalArgs& a) {
  const cl::Dataset ds = cl::load(a.data);
  cl::nn::LoadedModel loaded = cl::nn::load_model(a.model_dir);

  json metrics{{"model", a.model_dir}, {"data", a.data}};
  if (ds.task == cl::Task::classification) {
    const auto ev = cl::nn::evaluate_classification(loaded.net, ds);
    metrics["accuracy"] = ev.accuracy;
    metrics["confusion"] = ev.confusion;
  } else {
    metrics["mse"] = cl::nn::evaluate_regression(loaded.net, ds);
  }
  std::ofstream out(a.out, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + a.out);
  out << metrics.dump(2) << "\n";
  std::cout << metrics.dump(2) << "\n";
  return 0;
}

struct ExperimentArgs {
  std::string name;
  std::string scale = "desk";
  std::string gen = "d1";
  std::string form = "exp";
  std::vector<double> r_grid{0.25, 0.5, 1.0, 1.5, 2.0};
  std::vector<int> len_grid{30};
  std::vector<std::string> models{"forest", "ffnn", "rnn", "cnn1d"};
  std::vector<double> c_grid{0.3, 0.5, 0.7, 0.9, 0.96};
  std::vector<double> mu_grid{0.2, 0.5, 0.8, 0.9};
  std::vector<std::size_t> targets{1000, 10000, 30000, 100000, 300000};
  std::optional<int> samples, epochs, batch, repeats;
  std::optional<std::uint64_t> seed;
  std::string out = "report";
};

int cmd_experiment(const ExperimentArgs& a) {
  const std::uint64_t seed = seed_or_env(a.seed);
  const cl::Scale scale = cl::scale_from_name(a.scale);
  const cl::RunOverrides ov{a.samples, a.epochs, a.batch, a.repeats};

  cl::RunReport report;
  if (a.name == "classify-sweep") {
    cl::SweepGrid grid{a.r_grid, a.len_grid, a.models,
                       a.repeats.value_or(scale == cl::Scale::paper ? 5 : 2)};
    report = cl::run_classification_sweep(grid, cl::generation_from_name(a.gen),
                                          scale, ov, seed);
  } else if (a.name == "confusion") {
    report = cl::run_confusion(cl::generation_from_name(a.gen), scale, ov, seed);
  } else if (a.name == "memory-binning") {
    report = cl::run_memory_binning(a.c_grid, scale, ov, seed);
  } else if (a.name == "complexity") {
    report = cl::run_complexity_sweep(a.targets, scale, ov, seed);
  } else if (a.name == "regression") {
    report = cl::run_regression(scale, ov, seed);
  } else if (a.name == "forecast-markov") {
    report = cl::run_forecast_markovian(a.mu_grid, scale, ov, seed);
  } else if (a.name == "forecast-det") {
    report = cl::run_forecast_deterministic(cl::det_form_from_name(a.form), scale, ov, seed);
  } else {
    // Unknown names are rejected by CLI11 before we get here.
    throw std::logic_error("unhandled experiment: " + a.name);
  }

  cl::write_report(report, a.out);
  json config = report.config;
  config["command"] = "experiment";
  config["experiment"] = a.name;
  write_resolved_config(a.out, config);
  std::cout << "report written to " << a.out << " (wall " << report.wall_seconds << "s)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"time-varying lossy-channel simulation and learning toolkit"};
  app.require_subcommand(1);

  GenerateArgs gen_args;
  auto* gen = app.add_subcommand("generate", "build a dataset file");
  gen->add_option("--task", gen_args.task, "dataset task")
      ->check(CLI::IsMember({"classification", "regression", "forecast-markov",
                             "forecast-det", "binning"}));
  gen->add_option("--per-class", gen_args.per_class, "samples per class (classification)");
  gen->add_option("--count", gen_args.count, "sample count (other tasks)");
  gen->add_option("--len", gen_args.len, "sequence length (classification)");
  gen->add_option("--r", gen_args.r, "squeezing parameter");
  gen->add_option("--gen", gen_args.gen, "initialization mode")
      ->check(CLI::IsMember({"d1", "d2"}));
  gen->add_option("--mu", gen_args.mu, "memory parameter (forecast-markov)");
  gen->add_option("--form", gen_args.form, "deterministic law (forecast-det)")
      ->check(CLI::IsMember({"cos", "exp"}));
  gen->add_option("--K", gen_args.k_steps, "input steps (forecast-det)");
  gen->add_option("--c", gen_args.c, "bin threshold (binning)");
  gen->add_option("--seed", gen_args.seed, "master seed (or CHANLEARN_SEED)");
  gen->add_option("--out", gen_args.out, "output .chl path");

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "train a model on a dataset file");
  train->add_option("--data", train_args.data, "dataset .chl path")->required();
  train->add_option("--model", train_args.model, "architecture")
      ->check(CLI::IsMember({"ffnn", "rnn", "cnn1d", "forest"}));
  train->add_option("--spec", train_args.spec_file, "custom network spec JSON");
  train->add_option("--epochs", train_args.epochs, "training epochs");
  train->add_option("--batch", train_args.batch, "mini-batch size");
  train->add_option("--lr", train_args.lr, "learning rate");
  train->add_option("--ratio", train_args.ratio, "train fraction of the split");
  train->add_option("--seed", train_args.seed, "master seed (or CHANLEARN_SEED)");
  train->add_option("--out", train_args.out, "output model directory");
  train->add_flag("--verbose", train_args.verbose, "per-epoch log on stderr");

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "evaluate a saved model on a dataset");
  eval->add_option("--model", eval_args.model_dir, "model directory")->required();
  eval->add_option("--data", eval_args.data, "dataset .chl path")->required();
  eval->add_option("--out", eval_args.out, "metrics JSON path");

  ExperimentArgs exp_args;
  auto* exp = app.add_subcommand("experiment", "reproduce a reference experiment");
  exp->add_option("name", exp_args.name, "experiment name")
      ->required()
      ->check(CLI::IsMember({"classify-sweep", "confusion", "memory-binning",
                             "complexity", "regression", "forecast-markov",
                             "forecast-det"}));
  exp->add_option("--scale", exp_args.scale, "desk or paper preset")
      ->check(CLI::IsMember({"desk", "paper"}));
  exp->add_option("--gen", exp_args.gen, "initialization mode")
      ->check(CLI::IsMember({"d1", "d2"}));
  exp->add_option("--form", exp_args.form, "deterministic law (forecast-det)")
      ->check(CLI::IsMember({"cos", "exp"}));
  exp->add_option("--r-grid", exp_args.r_grid, "sweep r values");
  exp->add_option("--len-grid", exp_args.len_grid, "sweep sequence lengths");
  exp->add_option("--models", exp_args.models, "sweep model kinds");
  exp->add_option("--c-grid", exp_args.c_grid, "binning thresholds");
  exp->add_option("--mu-grid", exp_args.mu_grid, "forecast memory values");
  exp->add_option("--targets", exp_args.targets, "complexity parameter budgets");
  exp->add_option("--samples", exp_args.samples, "override preset sample count");
  exp->add_option("--epochs", exp_args.epochs, "override preset epochs");
  exp->add_option("--batch", exp_args.batch, "override preset batch size");
  exp->add_option("--repeats", exp_args.repeats, "override preset repeats");
  exp->add_option("--seed", exp_args.seed, "master seed (or CHANLEARN_SEED)");
  exp->add_option("--out", exp_args.out, "report output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*gen) return cmd_generate(gen_args);
    if (*train) return cmd_train(train_args);
    if (*eval) return cmd_eval(eval_args);
    if (*exp) return cmd_experiment(exp_args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
