#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "chanlearn/dataset.hpp"

namespace chanlearn {

/// desk: sizes/epochs cut to run on a workstation in minutes;
/// paper: the reference configuration (hours of CPU for classification).
enum class Scale { desk, paper };

Scale scale_from_name(std::string_view name);
std::string_view scale_name(Scale s);

/// Optional knobs for smoke runs; unset fields use the scale preset.
struct RunOverrides {
  std::optional<int> samples;  // per-class count or total count, per experiment
  std::optional<int> epochs;
  std::optional<int> batch;
  std::optional<int> repeats;
};

struct CsvTable {
  std::string name;  // file stem; written as <name>.csv
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Everything an experiment produces. config/seeds/metrics/tables are pure
/// functions of (experiment args, master seed) and serialize byte-identically
/// across reruns; wall_seconds goes to a separate timing file.
struct RunReport {
  std::string experiment;
  nlohmann::json config;
  std::vector<std::uint64_t> seeds;
  nlohmann::json metrics;
  std::vector<CsvTable> tables;
  double wall_seconds = 0.0;
};

/// Writes report.json, one CSV per table, and timing.txt under dir.
void write_report(const RunReport& report, const std::filesystem::path& dir);

struct SweepGrid {
  std::vector<double> r_values{0.25, 0.5, 1.0, 1.5, 2.0};
  std::vector<int> lengths{30};
  std::vector<std::string> models{"forest", "ffnn", "rnn", "cnn1d"};
  int repeats = 5;
};

/// Accuracy of every model at every (r, length) grid point, averaged over
/// repeats of the best-checkpoint test accuracy; each repeat resamples both
/// the dataset and the initialization.
RunReport run_classification_sweep(const SweepGrid& grid, Generation generation,
                                   Scale scale, const RunOverrides& ov,
                                   std::uint64_t seed);

/// Best-configuration run (LSTM, length 30, r = 1): accuracy plus the 5x5
/// confusion matrix of the best checkpoint.
RunReport run_confusion(Generation generation, Scale scale,
                        const RunOverrides& ov, std::uint64_t seed);

/// Binary memory classification (mu >= c) per threshold.
RunReport run_memory_binning(const std::vector<double>& c_grid, Scale scale,
                             const RunOverrides& ov, std::uint64_t seed);

/// LSTM classifier scaled to each parameter budget (within +-10%), trained on
/// D2 length-10 data.
RunReport run_complexity_sweep(const std::vector<std::size_t>& param_targets,
                               Scale scale, const RunOverrides& ov,
                               std::uint64_t seed);

/// Transmissivity-sequence regression plus the small width-tier table.
RunReport run_regression(Scale scale, const RunOverrides& ov, std::uint64_t seed);

/// Markovian forecasting error per memory parameter, averaged over 3 seeds.
RunReport run_forecast_markovian(const std::vector<double>& mu_grid, Scale scale,
                                 const RunOverrides& ov, std::uint64_t seed);

/// Deterministic-law forecasting (cos K=15, exp K=6).
RunReport run_forecast_deterministic(DetForm form, Scale scale,
                                     const RunOverrides& ov, std::uint64_t seed);

}  // namespace chanlearn
