#include "chanlearn/experiments.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "chanlearn/architectures.hpp"
#include "chanlearn/forest.hpp"
#include "chanlearn/nn/train.hpp"
#include "chanlearn/rng.hpp"

namespace chanlearn {

using nlohmann::json;

namespace {

constexpr std::uint64_t kTagDataset = 0xE1;
constexpr std::uint64_t kTagSplitSeed = 0xE2;
constexpr std::uint64_t kTagTrain = 0xE3;

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

class WallClock {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

struct Stats {
  double mean = 0.0;
  double stddev = 0.0;
};

Stats mean_std(const std::vector<double>& xs) {
  Stats s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

int epochs_for_classifier(const std::string& model, Scale scale) {
  const bool paper = scale == Scale::paper;
  if (model == "rnn") return paper ? 800 : 200;
  return paper ? 400 : 100;  // ffnn, cnn1d
}

json eval_to_json(const nn::ClassificationEval& ev) {
  return {{"accuracy", ev.accuracy}, {"confusion", ev.confusion}};
}

}  // namespace

Scale scale_from_name(std::string_view name) {
  if (name == "desk") return Scale::desk;
  if (name == "paper") return Scale::paper;
  throw std::invalid_argument("unknown scale: " + std::string(name) +
                              " (expected desk or paper)");
}

std::string_view scale_name(Scale s) { return s == Scale::desk ? "desk" : "paper"; }

void write_report(const RunReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);

  json j{{"experiment", report.experiment},
         {"config", report.config},
         {"seeds", report.seeds},
         {"metrics", report.metrics}};
  std::ofstream rf(dir / "report.json", std::ios::binary);
  if (!rf) throw std::runtime_error("cannot write " + (dir / "report.json").string());
  rf << j.dump(2) << "\n";

  for (const CsvTable& table : report.tables) {
    std::ofstream cf(dir / (table.name + ".csv"), std::ios::binary);
    if (!cf) throw std::runtime_error("cannot write " + (dir / (table.name + ".csv")).string());
    for (std::size_t i = 0; i < table.header.size(); ++i) {
      cf << table.header[i] << (i + 1 < table.header.size() ? "," : "");
    }
    cf << "\n";
    for (const auto& row : table.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        cf << row[i] << (i + 1 < row.size() ? "," : "");
      }
      cf << "\n";
    }
  }

  // Wall time lives outside the canonical (byte-reproducible) outputs.
  std::ofstream tf(dir / "timing.txt", std::ios::binary);
  tf << "wall_seconds " << report.wall_seconds << "\n";
}

// ---------------------------------------------------------------------------

RunReport run_classification_sweep(const SweepGrid& grid, Generation generation,
                                   Scale scale, const RunOverrides& ov,
                                   std::uint64_t seed) {
  if (grid.r_values.empty() || grid.lengths.empty() || grid.models.empty() ||
      grid.repeats < 1) {
    throw std::invalid_argument("classification sweep: empty grid axis");
  }
  WallClock clock;
  const bool paper = scale == Scale::paper;
  const int per_class = ov.samples.value_or(paper ? 10000 : 2000);
  const int batch = ov.batch.value_or(paper ? 1000 : 200);
  const int repeats = ov.repeats.value_or(grid.repeats);

  RunReport report;
  report.experiment = "classify-sweep";
  report.config = {{"generation", generation_name(generation)},
                   {"scale", scale_name(scale)},
                   {"per_class", per_class},
                   {"batch", batch},
                   {"repeats", repeats},
                   {"r_values", grid.r_values},
                   {"lengths", grid.lengths},
                   {"models", grid.models},
                   {"master_seed", seed}};
  report.seeds = {seed};

  CsvTable curve{"sweep", {"model", "r", "length", "repeat", "accuracy"}, {}};
  json points = json::array();

  std::uint64_t point_index = 0;
  for (double r : grid.r_values) {
    for (int length : grid.lengths) {
      for (const std::string& model : grid.models) {
        std::vector<double> accs;
        for (int rep = 0; rep < repeats; ++rep) {
          const std::uint64_t ds_seed = derive_seed(seed, {kTagDataset, point_index,
                                                           static_cast<std::uint64_t>(rep)});
          const std::uint64_t tr_seed = derive_seed(seed, {kTagTrain, point_index,
                                                           static_cast<std::uint64_t>(rep)});
          Dataset ds = build_classification({per_class, length, r, generation, ds_seed});
          SplitPair parts = split(ds, 0.8, derive_seed(seed, {kTagSplitSeed, point_index,
                                                              static_cast<std::uint64_t>(rep)}));
          double acc;
          if (model == "forest") {
            const RandomForest forest = RandomForest::fit(parts.train, 100, tr_seed);
            acc = forest.accuracy(parts.test);
          } else {
            nn::TrainConfig cfg{epochs_for_classifier(model, scale)};
            if (ov.epochs) cfg.epochs = *ov.epochs;
            cfg.batch_size = batch;
            cfg.seed = tr_seed;
            const auto spec = classifier_by_name(model, length, kNumClasses);
            const nn::TrainedModel trained = nn::train(spec, parts.train, parts.test, cfg);
            acc = trained.best_test_metric;
          }
          accs.push_back(acc);
          curve.rows.push_back({model, fmt17(r), std::to_string(length),
                                std::to_string(rep), fmt17(acc)});
          std::cerr << "[sweep] model=" << model << " r=" << r << " len=" << length
                    << " rep=" << rep << " acc=" << acc << "\n";
        }
        const Stats st = mean_std(accs);
        points.push_back({{"model", model},
                          {"r", r},
                          {"length", length},
                          {"accuracy_mean", st.mean},
                          {"accuracy_std", st.stddev},
                          {"accuracy_raw", accs}});
        ++point_index;
      }
    }
  }
  report.metrics = {{"points", points}};
  report.tables = {curve};
  report.wall_seconds = clock.seconds();
  return report;
}

RunReport run_confusion(Generation generation, Scale scale, const RunOverrides& ov,
                        std::uint64_t seed) {
  WallClock clock;
  const bool paper = scale == Scale::paper;
  const int per_class = ov.samples.value_or(paper ? 10000 : 2000);
  const int length = 30;
  const double r = 1.0;

  nn::TrainConfig cfg;
  cfg.epochs = ov.epochs.value_or(paper ? 800 : 200);
  // Desk batch 50 keeps the reference optimizer budget (32k steps) inside
  // the shorter epoch count.
  cfg.batch_size = ov.batch.value_or(paper ? 1000 : 50);
  cfg.seed = derive_seed(seed, {kTagTrain});

  Dataset ds = build_classification({per_class, length, r, generation,
                                     derive_seed(seed, {kTagDataset})});
  SplitPair parts = split(ds, 0.8, derive_seed(seed, {kTagSplitSeed}));

  nn::TrainedModel trained =
      nn::train(lstm_classifier(length, kNumClasses), parts.train, parts.test, cfg);
  trained.use_best_checkpoint();
  const nn::ClassificationEval ev = nn::evaluate_classification(trained.net, parts.test);

  RunReport report;
  report.experiment = "confusion";
  report.config = {{"generation", generation_name(generation)},
                   {"scale", scale_name(scale)},
                   {"per_class", per_class},
                   {"length", length},
                   {"r", r},
                   {"epochs", cfg.epochs},
                   {"batch", cfg.batch_size},
                   {"master_seed", seed}};
  report.seeds = {seed, cfg.seed};
  report.metrics = eval_to_json(ev);
  report.metrics["best_epoch"] = trained.best_epoch;
  report.metrics["best_test_accuracy"] = trained.best_test_metric;

  CsvTable conf{"confusion", {"true\\pred", "NM", "M", "ML", "C", "D"}, {}};
  for (int i = 0; i < kNumClasses; ++i) {
    std::vector<std::string> row{std::string(class_label(class_from_index(i)))};
    for (int j = 0; j < kNumClasses; ++j) row.push_back(std::to_string(ev.confusion[i][j]));
    conf.rows.push_back(std::move(row));
  }
  CsvTable hist{"history", {"epoch", "train_loss", "test_loss", "train_acc", "test_acc"}, {}};
  for (std::size_t e = 0; e < trained.history.size(); ++e) {
    const auto& h = trained.history[e];
    hist.rows.push_back({std::to_string(e + 1), fmt17(h.train_loss), fmt17(h.test_loss),
                         fmt17(h.train_metric), fmt17(h.test_metric)});
  }
  report.tables = {conf, hist};
  report.wall_seconds = clock.seconds();
  return report;
}

RunReport run_memory_binning(const std::vector<double>& c_grid, Scale scale,
                             const RunOverrides& ov, std::uint64_t seed) {
  if (c_grid.empty()) throw std::invalid_argument("memory binning: empty c grid");
  for (double c : c_grid) {
    if (!(c >= 0.3 && c <= 0.96)) {
      throw std::invalid_argument("memory binning: c must lie in [0.3, 0.96]");
    }
  }
  WallClock clock;
  const bool paper = scale == Scale::paper;
  const int count = ov.samples.value_or(8000);

  nn::TrainConfig cfg;
  cfg.epochs = ov.epochs.value_or(paper ? 800 : 120);
  cfg.batch_size = ov.batch.value_or(paper ? 1000 : 200);

  RunReport report;
  report.experiment = "memory-binning";
  report.config = {{"scale", scale_name(scale)},
                   {"count", count},
                   {"length", kBinningSeqLen},
                   {"init", "Beta(2,2)"},
                   {"epochs", cfg.epochs},
                   {"batch", cfg.batch_size},
                   {"c_grid", c_grid},
                   {"master_seed", seed}};
  report.seeds = {seed};

  CsvTable curve{"binning", {"c", "best_test_accuracy"}, {}};
  json points = json::array();
  for (std::size_t i = 0; i < c_grid.size(); ++i) {
    const double c = c_grid[i];
    Dataset ds = build_memory_binning({count, c, 1.0, derive_seed(seed, {kTagDataset, i})});
    SplitPair parts = split(ds, 0.8, derive_seed(seed, {kTagSplitSeed, i}));
    nn::TrainConfig run_cfg = cfg;
    run_cfg.seed = derive_seed(seed, {kTagTrain, i});
    const nn::TrainedModel trained =
        nn::train(lstm_classifier(kBinningSeqLen, 2), parts.train, parts.test, run_cfg);
    points.push_back({{"c", c}, {"best_test_accuracy", trained.best_test_metric}});
    curve.rows.push_back({fmt17(c), fmt17(trained.best_test_metric)});
    std::cerr << "[binning] c=" << c << " acc=" << trained.best_test_metric << "\n";
  }
  report.metrics = {{"points", points}};
  report.tables = {curve};
  report.wall_seconds = clock.seconds();
  return report;
}

RunReport run_complexity_sweep(const std::vector<std::size_t>& param_targets,
                               Scale scale, const RunOverrides& ov,
                               std::uint64_t seed) {
  if (param_targets.empty()) throw std::invalid_argument("complexity sweep: no targets");
  WallClock clock;
  const bool paper = scale == Scale::paper;
  const int per_class = ov.samples.value_or(paper ? 10000 : 1200);
  const int length = 10;

  nn::TrainConfig cfg;
  cfg.epochs = ov.epochs.value_or(paper ? 800 : 60);
  cfg.batch_size = ov.batch.value_or(paper ? 1000 : 200);

  Dataset ds = build_classification({per_class, length, 1.0, Generation::d2,
                                     derive_seed(seed, {kTagDataset})});
  SplitPair parts = split(ds, 0.8, derive_seed(seed, {kTagSplitSeed}));

  RunReport report;
  report.experiment = "complexity";
  report.config = {{"scale", scale_name(scale)},
                   {"generation", "d2"},
                   {"per_class", per_class},
                   {"length", length},
                   {"epochs", cfg.epochs},
                   {"batch", cfg.batch_size},
                   {"targets", param_targets},
                   {"master_seed", seed}};
  report.seeds = {seed};

  CsvTable curve{"complexity", {"target_params", "actual_params", "best_test_accuracy"}, {}};
  json points = json::array();
  for (std::size_t i = 0; i < param_targets.size(); ++i) {
    const std::size_t target = param_targets[i];
    const double factor = lstm_width_factor_for(length, kNumClasses, target);
    const auto spec = lstm_classifier_scaled(length, kNumClasses, factor);
    const std::size_t actual = nn::param_count(spec);
    nn::TrainConfig run_cfg = cfg;
    run_cfg.seed = derive_seed(seed, {kTagTrain, i});
    const nn::TrainedModel trained = nn::train(spec, parts.train, parts.test, run_cfg);
    points.push_back({{"target_params", target},
                      {"actual_params", actual},
                      {"width_factor", factor},
                      {"best_test_accuracy", trained.best_test_metric}});
    curve.rows.push_back({std::to_string(target), std::to_string(actual),
                          fmt17(trained.best_test_metric)});
    std::cerr << "[complexity] target=" << target << " actual=" << actual
              << " acc=" << trained.best_test_metric << "\n";
  }
  report.metrics = {{"points", points}};
  report.tables = {curve};
  report.wall_seconds = clock.seconds();
  return report;
}

namespace {

/// Width factor for the regression stack hitting target +-10%.
double regression_width_factor_for(int seq_len, std::size_t target) {
  const auto count = [&](double s) {
    return nn::param_count(regression_ffnn_scaled(seq_len, s));
  };
  double lo = 1.0 / 64.0, hi = 64.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const std::size_t p = count(mid);
    const double rel = (static_cast<double>(p) - static_cast<double>(target)) /
                       static_cast<double>(target);
    if (std::abs(rel) <= 0.10) return mid;
    (p < target ? lo : hi) = mid;
  }
  throw std::runtime_error("regression width bisection failed for target " +
                           std::to_string(target));
}

}  // namespace

RunReport run_regression(Scale scale, const RunOverrides& ov, std::uint64_t seed) {
  WallClock clock;
  const int count = ov.samples.value_or(20000);

  nn::TrainConfig cfg;
  cfg.epochs = ov.epochs.value_or(200);
  cfg.batch_size = ov.batch.value_or(1000);
  cfg.seed = derive_seed(seed, {kTagTrain});

  Dataset ds = build_regression({count, 1.0, derive_seed(seed, {kTagDataset})});
  SplitPair parts = split(ds, 0.8, derive_seed(seed, {kTagSplitSeed}));

  nn::TrainedModel trained =
      nn::train(regression_ffnn(kRegressionLen), parts.train, parts.test, cfg);
  const double final_train = trained.history.back().train_loss;
  const double final_test = trained.history.back().test_loss;

  RunReport report;
  report.experiment = "regression";
  report.config = {{"scale", scale_name(scale)},
                   {"count", count},
                   {"seq_len", kRegressionLen},
                   {"generation", "d2"},
                   {"epochs", cfg.epochs},
                   {"batch", cfg.batch_size},
                   {"learning_rate", cfg.learning_rate},
                   {"master_seed", seed}};
  report.seeds = {seed, cfg.seed};
  report.metrics = {{"final_train_mse", final_train}, {"final_test_mse", final_test}};

  // Two sample prediction traces from the test set.
  json traces = json::array();
  for (std::size_t i = 0; i < 2 && i < parts.test.samples.size(); ++i) {
    const Sample& s = parts.test.samples[i];
    nn::Tensor x({1, static_cast<std::size_t>(kRegressionLen)},
                 std::vector<double>(s.features.begin(), s.features.end()));
    const nn::Tensor pred = trained.net.forward(x, false);
    traces.push_back({{"target", s.targets},
                      {"prediction", std::vector<double>(pred.data(), pred.data() + pred.size())}});
  }
  report.metrics["sample_traces"] = traces;

  // Width tiers: compact regressors reach the same error.
  json tiers = json::array();
  for (std::size_t target : {std::size_t{1000}, std::size_t{2000}, std::size_t{10000}}) {
    const double factor = regression_width_factor_for(kRegressionLen, target);
    const auto spec = regression_ffnn_scaled(kRegressionLen, factor);
    nn::TrainConfig tier_cfg = cfg;
    tier_cfg.seed = derive_seed(seed, {kTagTrain, target});
    const nn::TrainedModel tier = nn::train(spec, parts.train, parts.test, tier_cfg);
    tiers.push_back({{"target_params", target},
                     {"actual_params", nn::param_count(spec)},
                     {"final_test_mse", tier.history.back().test_loss}});
    std::cerr << "[regression] tier=" << target
              << " mse=" << tier.history.back().test_loss << "\n";
  }
  report.metrics["tiers"] = tiers;

  CsvTable hist{"history", {"epoch", "train_mse", "test_mse"}, {}};
  for (std::size_t e = 0; e < trained.history.size(); ++e) {
    hist.rows.push_back({std::to_string(e + 1), fmt17(trained.history[e].train_loss),
                         fmt17(trained.history[e].test_loss)});
  }
  report.tables = {hist};
  report.wall_seconds = clock.seconds();
  return report;
}

RunReport run_forecast_markovian(const std::vector<double>& mu_grid, Scale scale,
                                 const RunOverrides& ov, std::uint64_t seed) {
  if (mu_grid.empty()) throw std::invalid_argument("markovian forecast: empty mu grid");
  for (double mu : mu_grid) {
    if (!(mu > 0.0 && mu < 1.0)) {
      throw std::invalid_argument("markovian forecast: mu must lie in (0, 1)");
    }
  }
  WallClock clock;
  const int count = ov.samples.value_or(1000);
  const int n_seeds = ov.repeats.value_or(3);

  nn::TrainConfig cfg;
  cfg.epochs = ov.epochs.value_or(500);
  cfg.batch_size = ov.batch.value_or(100);

  RunReport report;
  report.experiment = "forecast-markov";
  report.config = {{"scale", scale_name(scale)},
                   {"count", count},
                   {"input_len", kForecastMarkovInputLen},
                   {"target_len", kForecastMarkovTargetLen},
                   {"epochs", cfg.epochs},
                   {"batch", cfg.batch_size},
                   {"seeds_per_point", n_seeds},
                   {"mu_grid", mu_grid},
                   {"master_seed", seed}};
  report.seeds = {seed};

  CsvTable curve{"forecast_markov", {"mu", "seed_index", "final_test_mse"}, {}};
  json points = json::array();
  for (std::size_t i = 0; i < mu_grid.size(); ++i) {
    const double mu = mu_grid[i];
    std::vector<double> mses;
    for (int rep = 0; rep < n_seeds; ++rep) {
      Dataset ds = build_forecast_markovian(
          {count, mu, 1.0, derive_seed(seed, {kTagDataset, i, static_cast<std::uint64_t>(rep)})});
      SplitPair parts =
          split(ds, 0.8, derive_seed(seed, {kTagSplitSeed, i, static_cast<std::uint64_t>(rep)}));
      nn::TrainConfig run_cfg = cfg;
      run_cfg.seed = derive_seed(seed, {kTagTrain, i, static_cast<std::uint64_t>(rep)});
      const nn::TrainedModel trained =
          nn::train(forecast_markov_ffnn(), parts.train, parts.test, run_cfg);
      const double mse = trained.history.back().test_loss;
      mses.push_back(mse);
      curve.rows.push_back({fmt17(mu), std::to_string(rep), fmt17(mse)});
    }
    const Stats st = mean_std(mses);
    points.push_back({{"mu", mu},
                      {"test_mse_mean", st.mean},
                      {"test_mse_std", st.stddev},
                      {"test_mse_raw", mses}});
    std::cerr << "[forecast-markov] mu=" << mu << " mse=" << st.mean << "\n";
  }
  report.metrics = {{"points", points}};
  report.tables = {curve};
  report.wall_seconds = clock.seconds();
  return report;
}

RunReport run_forecast_deterministic(DetForm form, Scale scale,
                                     const RunOverrides& ov, std::uint64_t seed) {
  WallClock clock;
  const bool paper = scale == Scale::paper;
  const int input_len = form == DetForm::cos ? 15 : 6;
  // Reference setup: 200000 train + 10000 test.
  const int count = ov.samples.value_or(paper ? 210000 : 22000);
  const double ratio = paper ? 20.0 / 21.0 : 10.0 / 11.0;

  nn::TrainConfig cfg;
  cfg.epochs = ov.epochs.value_or(paper ? 500 : 150);
  cfg.batch_size = ov.batch.value_or(1000);
  cfg.seed = derive_seed(seed, {kTagTrain});

  Dataset ds = build_forecast_deterministic(
      {count, form, input_len, 1.0, derive_seed(seed, {kTagDataset})});
  SplitPair parts = split(ds, ratio, derive_seed(seed, {kTagSplitSeed}));

  nn::TrainedModel trained =
      nn::train(forecast_det_ffnn(input_len), parts.train, parts.test, cfg);

  RunReport report;
  report.experiment = "forecast-det";
  report.config = {{"scale", scale_name(scale)},
                   {"form", det_form_name(form)},
                   {"input_len", input_len},
                   {"target_len", kForecastDetTargetLen},
                   {"train_samples", parts.train.samples.size()},
                   {"test_samples", parts.test.samples.size()},
                   {"epochs", cfg.epochs},
                   {"batch", cfg.batch_size},
                   {"master_seed", seed}};
  report.seeds = {seed, cfg.seed};
  report.metrics = {{"final_train_mse", trained.history.back().train_loss},
                    {"final_test_mse", trained.history.back().test_loss}};

  json traces = json::array();
  for (std::size_t i = 0; i < 2 && i < parts.test.samples.size(); ++i) {
    const Sample& s = parts.test.samples[i];
    nn::Tensor x({1, static_cast<std::size_t>(input_len)},
                 std::vector<double>(s.features.begin(), s.features.end()));
    const nn::Tensor pred = trained.net.forward(x, false);
    traces.push_back({{"target", s.targets},
                      {"prediction", std::vector<double>(pred.data(), pred.data() + pred.size())}});
  }
  report.metrics["sample_traces"] = traces;

  CsvTable hist{"history", {"epoch", "train_mse", "test_mse"}, {}};
  for (std::size_t e = 0; e < trained.history.size(); ++e) {
    hist.rows.push_back({std::to_string(e + 1), fmt17(trained.history[e].train_loss),
                         fmt17(trained.history[e].test_loss)});
  }
  report.tables = {hist};
  report.wall_seconds = clock.seconds();
  return report;
}

}  // namespace chanlearn
