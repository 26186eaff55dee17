#pragma once

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

namespace chanlearn::nn {

enum class Activation { relu, tanh, linear, softmax };

std::string_view activation_name(Activation a);
Activation activation_from_name(std::string_view name);

struct DenseSpec {
  int units;
  Activation activation = Activation::linear;
};
struct LstmSpec {
  int units;
  bool return_sequences = false;
};
struct Conv1DSpec {
  int filters;
  int kernel_size;
  Activation activation = Activation::relu;
};
struct MaxPool1DSpec {
  int pool_size;
};
struct DropoutSpec {
  double rate;
};
struct FlattenSpec {};

using LayerSpec = std::variant<DenseSpec, LstmSpec, Conv1DSpec, MaxPool1DSpec,
                               DropoutSpec, FlattenSpec>;

std::string_view layer_kind_name(const LayerSpec& spec);

enum class Loss { softmax_cross_entropy, mse };

std::string_view loss_name(Loss l);
Loss loss_from_name(std::string_view name);

struct NetworkSpec {
  std::vector<std::size_t> input_shape;  // per-sample: {T, C} or {D}
  std::vector<LayerSpec> layers;
  Loss loss = Loss::mse;
};

/// Per-sample output shape of every layer, input first; throws on an
/// inconsistent chain (e.g. Dense fed a sequence, Conv1D fed a flat vector).
std::vector<std::vector<std::size_t>> chained_shapes(const NetworkSpec& spec);

/// Exact trainable parameter count:
/// Dense in->out: out*(in+1); LSTM in->u: 4u*(in+u+1);
/// Conv1D c->f kernel k: f*(k*c+1); pool/dropout/flatten: 0.
std::size_t param_count(const NetworkSpec& spec);

}  // namespace chanlearn::nn
