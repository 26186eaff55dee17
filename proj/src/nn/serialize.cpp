#include "chanlearn/nn/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace chanlearn::nn {

using nlohmann::json;

namespace {

json layer_to_json(const LayerSpec& spec) {
  json j;
  j["kind"] = std::string(layer_kind_name(spec));
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, DenseSpec>) {
          j["units"] = s.units;
          j["activation"] = std::string(activation_name(s.activation));
        } else if constexpr (std::is_same_v<T, LstmSpec>) {
          j["units"] = s.units;
          j["return_sequences"] = s.return_sequences;
        } else if constexpr (std::is_same_v<T, Conv1DSpec>) {
          j["filters"] = s.filters;
          j["kernel_size"] = s.kernel_size;
          j["activation"] = std::string(activation_name(s.activation));
        } else if constexpr (std::is_same_v<T, MaxPool1DSpec>) {
          j["pool_size"] = s.pool_size;
        } else if constexpr (std::is_same_v<T, DropoutSpec>) {
          j["rate"] = s.rate;
        }
      },
      spec);
  return j;
}

LayerSpec layer_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "dense") {
    return DenseSpec{j.at("units").get<int>(),
                     activation_from_name(j.at("activation").get<std::string>())};
  }
  if (kind == "lstm") {
    return LstmSpec{j.at("units").get<int>(), j.at("return_sequences").get<bool>()};
  }
  if (kind == "conv1d") {
    return Conv1DSpec{j.at("filters").get<int>(), j.at("kernel_size").get<int>(),
                      activation_from_name(j.at("activation").get<std::string>())};
  }
  if (kind == "maxpool1d") return MaxPool1DSpec{j.at("pool_size").get<int>()};
  if (kind == "dropout") return DropoutSpec{j.at("rate").get<double>()};
  if (kind == "flatten") return FlattenSpec{};
  throw std::invalid_argument("unknown layer kind: " + kind);
}

}  // namespace

json spec_to_json(const NetworkSpec& spec) {
  json j;
  j["input_shape"] = spec.input_shape;
  j["loss"] = std::string(loss_name(spec.loss));
  j["layers"] = json::array();
  for (const auto& layer : spec.layers) j["layers"].push_back(layer_to_json(layer));
  return j;
}

NetworkSpec spec_from_json(const json& j) {
  NetworkSpec spec;
  spec.input_shape = j.at("input_shape").get<std::vector<std::size_t>>();
  spec.loss = loss_from_name(j.at("loss").get<std::string>());
  for (const auto& layer : j.at("layers")) spec.layers.push_back(layer_from_json(layer));
  return spec;
}

json history_to_json(const std::vector<EpochStats>& history) {
  json out = json::array();
  for (const auto& e : history) {
    out.push_back({{"train_loss", e.train_loss},
                   {"test_loss", e.test_loss},
                   {"train_metric", e.train_metric},
                   {"test_metric", e.test_metric}});
  }
  return out;
}

namespace {

static_assert(std::endian::native == std::endian::little,
              "params.bin is little-endian; add byte swapping for this target");

void write_doubles(std::ofstream& out, const Tensor& t) {
  out.write(reinterpret_cast<const char*>(t.data()),
            static_cast<std::streamsize>(t.size() * sizeof(double)));
}

}  // namespace

void save_model(const TrainedModel& model, const std::filesystem::path& dir,
                bool use_best) {
  std::filesystem::create_directories(dir);

  const std::vector<Tensor>* tensors;
  std::vector<Tensor> final_params;
  if (use_best) {
    if (model.best_params.empty()) {
      throw std::invalid_argument("save_model: no best checkpoint recorded");
    }
    tensors = &model.best_params;
  } else {
    final_params = const_cast<TrainedModel&>(model).net.snapshot_parameters();
    tensors = &final_params;
  }

  json manifest;
  manifest["spec"] = spec_to_json(model.spec);
  manifest["seed"] = model.seed;
  manifest["checkpoint"] = use_best ? "best" : "final";
  manifest["best_epoch"] = model.best_epoch;
  manifest["history"] = history_to_json(model.history);
  json table = json::array();
  std::size_t offset = 0;
  for (const Tensor& t : *tensors) {
    table.push_back({{"shape", t.shape()}, {"offset", offset}, {"count", t.size()}});
    offset += t.size();
  }
  manifest["tensors"] = table;

  std::ofstream mf(dir / "manifest.json");
  if (!mf) throw std::runtime_error("cannot write " + (dir / "manifest.json").string());
  mf << manifest.dump(2) << "\n";

  std::ofstream pf(dir / "params.bin", std::ios::binary);
  if (!pf) throw std::runtime_error("cannot write " + (dir / "params.bin").string());
  for (const Tensor& t : *tensors) write_doubles(pf, t);
}

LoadedModel load_model(const std::filesystem::path& dir) {
  std::ifstream mf(dir / "manifest.json");
  if (!mf) throw std::runtime_error("cannot open " + (dir / "manifest.json").string());
  json manifest = json::parse(mf);

  const NetworkSpec spec = spec_from_json(manifest.at("spec"));
  LoadedModel loaded{spec, Network(spec, 0), manifest.value("seed", std::uint64_t{0}), {}};
  if (manifest.contains("history")) {
    for (const auto& e : manifest["history"]) {
      loaded.history.push_back({e.at("train_loss").get<double>(),
                                e.at("test_loss").get<double>(),
                                e.at("train_metric").get<double>(),
                                e.at("test_metric").get<double>()});
    }
  }

  std::ifstream pf(dir / "params.bin", std::ios::binary);
  if (!pf) throw std::runtime_error("cannot open " + (dir / "params.bin").string());

  std::vector<Tensor> tensors;
  for (const auto& entry : manifest.at("tensors")) {
    Tensor t(entry.at("shape").get<std::vector<std::size_t>>());
    pf.read(reinterpret_cast<char*>(t.data()),
            static_cast<std::streamsize>(t.size() * sizeof(double)));
    if (!pf) throw std::runtime_error("params.bin truncated");
    tensors.push_back(std::move(t));
  }
  loaded.net.restore_parameters(tensors);
  return loaded;
}

}  // namespace chanlearn::nn
