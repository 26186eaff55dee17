#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "chanlearn/eta_process.hpp"

namespace chanlearn {

enum class Task { classification, regression, forecast };
enum class Generation { d1, d2, fixed };  // 'fixed' = pinned Beta(2,2) init

std::string_view task_name(Task t);
Task task_from_name(std::string_view name);
std::string_view generation_name(Generation g);
Generation generation_from_name(std::string_view name);

/// Generating-process parameters kept for analysis; not persisted.
struct SampleMeta {
  std::optional<double> mu;
  std::optional<double> a, b, delta;
};

struct Sample {
  std::vector<double> features;   // sigma_11 per channel use
  int label = -1;                 // classification target, -1 otherwise
  std::vector<double> targets;    // regression / forecast targets
  SampleMeta meta;
};

struct Dataset {
  std::vector<Sample> samples;
  double r = 1.0;
  int seq_len = 0;
  Task task = Task::classification;
  Generation generation = Generation::d2;
  std::uint64_t master_seed = 0;
  int n_classes = 0;    // 0 for non-classification tasks
  int target_width = 0; // 1 for class labels, vector width otherwise

  std::size_t size() const { return samples.size(); }
};

/// Compares the persisted content (header fields, features, targets, labels).
bool persisted_equal(const Dataset& a, const Dataset& b);

struct ClassificationConfig {
  int per_class = 10000;
  int seq_len = 30;
  double r = 1.0;
  Generation generation = Generation::d1;
  std::uint64_t seed = 0;
};
Dataset build_classification(const ClassificationConfig& cfg);

inline constexpr int kRegressionLen = 5;

struct RegressionConfig {
  int count = 20000;
  double r = 1.0;
  std::uint64_t seed = 0;
};
Dataset build_regression(const RegressionConfig& cfg);

inline constexpr int kForecastMarkovInputLen = 6;
inline constexpr int kForecastMarkovTargetLen = 3;

struct ForecastMarkovConfig {
  int count = 1000;
  double mu = 0.5;
  double r = 1.0;
  std::uint64_t seed = 0;
};
Dataset build_forecast_markovian(const ForecastMarkovConfig& cfg);

enum class DetForm { cos, exp };
std::string_view det_form_name(DetForm f);
DetForm det_form_from_name(std::string_view name);

inline constexpr int kForecastDetTargetLen = 6;

struct ForecastDetConfig {
  int count = 200000;
  DetForm form = DetForm::exp;
  int input_len = 6;  // K: 15 for cos, 6 for exp in the reference setup
  double r = 1.0;
  std::uint64_t seed = 0;
};
Dataset build_forecast_deterministic(const ForecastDetConfig& cfg);

inline constexpr int kBinningSeqLen = 10;

struct MemoryBinningConfig {
  int count = 8000;
  double threshold = 0.5;  // c in [0.3, 0.96]; label 1 iff mu >= c
  double r = 1.0;
  std::uint64_t seed = 0;
};
Dataset build_memory_binning(const MemoryBinningConfig& cfg);

struct SplitPair {
  Dataset train;
  Dataset test;
};

/// Seeded random split; classification datasets are split per class so the
/// class proportions carry over within +-1 sample.
SplitPair split(const Dataset& ds, double ratio, std::uint64_t seed);

/// One JSON header line followed by CSV rows (features then targets), floats
/// at 17 significant digits so a round-trip is bit-exact.
void save(const Dataset& ds, const std::filesystem::path& path);
Dataset load(const std::filesystem::path& path);

}  // namespace chanlearn
