#include "chanlearn/nn/spec.hpp"

#include <stdexcept>

#include "chanlearn/nn/tensor.hpp"

namespace chanlearn::nn {

std::string_view activation_name(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::linear: return "linear";
    case Activation::softmax: return "softmax";
  }
  throw std::logic_error("activation_name: bad enum");
}

Activation activation_from_name(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  if (name == "linear") return Activation::linear;
  if (name == "softmax") return Activation::softmax;
  throw std::invalid_argument("unknown activation: " + std::string(name));
}

std::string_view layer_kind_name(const LayerSpec& spec) {
  return std::visit(
      [](const auto& s) -> std::string_view {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, DenseSpec>) return "dense";
        if constexpr (std::is_same_v<T, LstmSpec>) return "lstm";
        if constexpr (std::is_same_v<T, Conv1DSpec>) return "conv1d";
        if constexpr (std::is_same_v<T, MaxPool1DSpec>) return "maxpool1d";
        if constexpr (std::is_same_v<T, DropoutSpec>) return "dropout";
        if constexpr (std::is_same_v<T, FlattenSpec>) return "flatten";
      },
      spec);
}

std::string_view loss_name(Loss l) {
  return l == Loss::softmax_cross_entropy ? "softmax_cross_entropy" : "mse";
}

Loss loss_from_name(std::string_view name) {
  if (name == "softmax_cross_entropy") return Loss::softmax_cross_entropy;
  if (name == "mse") return Loss::mse;
  throw std::invalid_argument("unknown loss: " + std::string(name));
}

namespace {

[[noreturn]] void chain_fail(std::size_t index, const LayerSpec& spec,
                             const std::string& what) {
  throw std::invalid_argument("layer " + std::to_string(index) + " (" +
                              std::string(layer_kind_name(spec)) + "): " + what);
}

void validate_layer(std::size_t index, const LayerSpec& spec) {
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, DenseSpec>) {
          if (s.units < 1) chain_fail(index, spec, "units must be >= 1");
        } else if constexpr (std::is_same_v<T, LstmSpec>) {
          if (s.units < 1) chain_fail(index, spec, "units must be >= 1");
        } else if constexpr (std::is_same_v<T, Conv1DSpec>) {
          if (s.filters < 1) chain_fail(index, spec, "filters must be >= 1");
          if (s.kernel_size < 1) chain_fail(index, spec, "kernel_size must be >= 1");
          if (s.activation == Activation::softmax) {
            chain_fail(index, spec, "softmax is not supported on conv layers");
          }
        } else if constexpr (std::is_same_v<T, MaxPool1DSpec>) {
          if (s.pool_size < 1) chain_fail(index, spec, "pool_size must be >= 1");
        } else if constexpr (std::is_same_v<T, DropoutSpec>) {
          if (!(s.rate >= 0.0 && s.rate < 1.0)) {
            chain_fail(index, spec, "rate must lie in [0, 1)");
          }
        }
      },
      spec);
}

}  // namespace

std::vector<std::vector<std::size_t>> chained_shapes(const NetworkSpec& spec) {
  if (spec.input_shape.empty() || spec.input_shape.size() > 2) {
    throw std::invalid_argument("input shape must be {D} or {T, C}");
  }
  for (std::size_t d : spec.input_shape) {
    if (d == 0) throw std::invalid_argument("input shape dimensions must be positive");
  }

  std::vector<std::vector<std::size_t>> shapes{spec.input_shape};
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& layer = spec.layers[i];
    validate_layer(i, layer);
    const auto& in = shapes.back();
    std::vector<std::size_t> out;
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, DenseSpec>) {
            if (in.size() != 1) chain_fail(i, layer, "expects a flat input, got " + shape_string(in));
            out = {static_cast<std::size_t>(s.units)};
          } else if constexpr (std::is_same_v<T, LstmSpec>) {
            if (in.size() != 2) chain_fail(i, layer, "expects a sequence input, got " + shape_string(in));
            if (s.return_sequences) {
              out = {in[0], static_cast<std::size_t>(s.units)};
            } else {
              out = {static_cast<std::size_t>(s.units)};
            }
          } else if constexpr (std::is_same_v<T, Conv1DSpec>) {
            if (in.size() != 2) chain_fail(i, layer, "expects a sequence input, got " + shape_string(in));
            if (in[0] < static_cast<std::size_t>(s.kernel_size)) {
              chain_fail(i, layer, "sequence shorter than kernel");
            }
            out = {in[0] - s.kernel_size + 1, static_cast<std::size_t>(s.filters)};
          } else if constexpr (std::is_same_v<T, MaxPool1DSpec>) {
            if (in.size() != 2) chain_fail(i, layer, "expects a sequence input, got " + shape_string(in));
            if (in[0] < static_cast<std::size_t>(s.pool_size)) {
              chain_fail(i, layer, "sequence shorter than pool");
            }
            out = {in[0] / s.pool_size, in[1]};
          } else if constexpr (std::is_same_v<T, DropoutSpec>) {
            out = in;
          } else if constexpr (std::is_same_v<T, FlattenSpec>) {
            std::size_t n = 1;
            for (std::size_t d : in) n *= d;
            out = {n};
          }
        },
        layer);
    shapes.push_back(std::move(out));
  }
  return shapes;
}

std::size_t param_count(const NetworkSpec& spec) {
  const auto shapes = chained_shapes(spec);
  std::size_t total = 0;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& in = shapes[i];
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, DenseSpec>) {
            total += static_cast<std::size_t>(s.units) * (in[0] + 1);
          } else if constexpr (std::is_same_v<T, LstmSpec>) {
            const std::size_t u = s.units;
            total += 4 * u * (in[1] + u + 1);
          } else if constexpr (std::is_same_v<T, Conv1DSpec>) {
            total += static_cast<std::size_t>(s.filters) *
                     (static_cast<std::size_t>(s.kernel_size) * in[1] + 1);
          }
        },
        spec.layers[i]);
  }
  return total;
}

}  // namespace chanlearn::nn
