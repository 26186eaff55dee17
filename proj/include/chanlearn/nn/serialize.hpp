#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "chanlearn/nn/train.hpp"

namespace chanlearn::nn {

nlohmann::json spec_to_json(const NetworkSpec& spec);
NetworkSpec spec_from_json(const nlohmann::json& j);

nlohmann::json history_to_json(const std::vector<EpochStats>& history);

/// Writes manifest.json (spec, tensor table, seed, history) and params.bin
/// (raw little-endian doubles, concatenated in layer order) under dir.
/// When use_best is set the best checkpoint is written instead of the final
/// parameters.
void save_model(const TrainedModel& model, const std::filesystem::path& dir,
                bool use_best);

struct LoadedModel {
  NetworkSpec spec;
  Network net;
  std::uint64_t seed = 0;
  std::vector<EpochStats> history;
};

/// Restores bit-exact inference from save_model output.
LoadedModel load_model(const std::filesystem::path& dir);

}  // namespace chanlearn::nn
