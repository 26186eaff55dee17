#include "chanlearn/architectures.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace chanlearn {

using namespace nn;

NetworkSpec ffnn_classifier(int seq_len, int n_classes) {
  NetworkSpec spec;
  spec.input_shape = {static_cast<std::size_t>(seq_len), 1};
  spec.loss = Loss::softmax_cross_entropy;
  spec.layers = {
      FlattenSpec{},
      DenseSpec{128, Activation::relu}, DropoutSpec{0.2},
      DenseSpec{128, Activation::relu}, DropoutSpec{0.2},
      DenseSpec{64, Activation::relu},
      DenseSpec{64, Activation::relu},  DropoutSpec{0.2},
      DenseSpec{16, Activation::relu},
      DenseSpec{n_classes, Activation::softmax},
  };
  return spec;
}

NetworkSpec lstm_classifier(int seq_len, int n_classes) {
  return lstm_classifier_scaled(seq_len, n_classes, 1.0);
}

NetworkSpec lstm_classifier_scaled(int seq_len, int n_classes, double width_factor) {
  if (!(width_factor > 0.0)) {
    throw std::invalid_argument("width_factor must be positive");
  }
  const auto scaled = [&](int w) {
    return std::max(1, static_cast<int>(std::lround(w * width_factor)));
  };
  NetworkSpec spec;
  spec.input_shape = {static_cast<std::size_t>(seq_len), 1};
  spec.loss = Loss::softmax_cross_entropy;
  spec.layers = {
      LstmSpec{scaled(64), /*return_sequences=*/true},
      LstmSpec{scaled(32), /*return_sequences=*/false},
      DenseSpec{scaled(64), Activation::relu}, DropoutSpec{0.2},
      DenseSpec{scaled(16), Activation::relu}, DropoutSpec{0.2},
      DenseSpec{n_classes, Activation::softmax},
  };
  return spec;
}

NetworkSpec cnn1d_classifier(int seq_len, int n_classes) {
  NetworkSpec spec;
  spec.input_shape = {static_cast<std::size_t>(seq_len), 1};
  spec.loss = Loss::softmax_cross_entropy;
  spec.layers = {
      Conv1DSpec{128, 2, Activation::relu},
      MaxPool1DSpec{2},
      Conv1DSpec{128, 2, Activation::relu},
      MaxPool1DSpec{2},
      FlattenSpec{},
      DenseSpec{64, Activation::relu},
      DenseSpec{n_classes, Activation::softmax},
  };
  return spec;
}

NetworkSpec regression_ffnn(int seq_len) {
  return regression_ffnn_scaled(seq_len, 1.0);
}

NetworkSpec regression_ffnn_scaled(int seq_len, double width_factor) {
  const auto scaled = [&](int w) {
    return std::max(1, static_cast<int>(std::lround(w * width_factor)));
  };
  NetworkSpec spec;
  spec.input_shape = {static_cast<std::size_t>(seq_len)};
  spec.loss = Loss::mse;
  spec.layers = {
      DenseSpec{scaled(64), Activation::relu},
      DenseSpec{scaled(32), Activation::relu},
      DenseSpec{seq_len, Activation::linear},
  };
  return spec;
}

NetworkSpec forecast_markov_ffnn() {
  NetworkSpec spec;
  spec.input_shape = {6};
  spec.loss = Loss::mse;
  spec.layers = {
      DenseSpec{32, Activation::relu},
      DenseSpec{16, Activation::relu},
      DenseSpec{3, Activation::linear},
  };
  return spec;
}

NetworkSpec forecast_det_ffnn(int input_len) {
  NetworkSpec spec;
  spec.input_shape = {static_cast<std::size_t>(input_len)};
  spec.loss = Loss::mse;
  spec.layers = {
      DenseSpec{256, Activation::relu},
      DenseSpec{64, Activation::relu},
      DenseSpec{32, Activation::relu},
      DenseSpec{6, Activation::linear},
  };
  return spec;
}

double lstm_width_factor_for(int seq_len, int n_classes,
                             std::size_t target_params, double tolerance) {
  const auto count = [&](double s) {
    return param_count(lstm_classifier_scaled(seq_len, n_classes, s));
  };
  double lo = 1.0 / 1024.0, hi = 64.0;
  if (count(lo) > target_params || count(hi) < target_params) {
    throw std::invalid_argument("target parameter count outside the scalable range");
  }
  // Bisect; the rounded width map is a step function, so stop once the
  // midpoint lands inside the tolerance band.
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const std::size_t p = count(mid);
    const double rel = (static_cast<double>(p) - static_cast<double>(target_params)) /
                       static_cast<double>(target_params);
    if (std::abs(rel) <= tolerance) return mid;
    (p < target_params ? lo : hi) = mid;
  }
  throw std::runtime_error("lstm_width_factor_for: no width factor within tolerance of " +
                           std::to_string(target_params) + " parameters");
}

NetworkSpec classifier_by_name(const std::string& name, int seq_len, int n_classes) {
  if (name == "ffnn") return ffnn_classifier(seq_len, n_classes);
  if (name == "rnn") return lstm_classifier(seq_len, n_classes);
  if (name == "cnn1d") return cnn1d_classifier(seq_len, n_classes);
  throw std::invalid_argument("unknown classifier architecture: " + name +
                              " (expected ffnn, rnn or cnn1d)");
}

}  // namespace chanlearn
