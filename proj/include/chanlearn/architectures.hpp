#pragma once

#include <string>

#include "chanlearn/nn/spec.hpp"

namespace chanlearn {

/// The reference layer stacks. Classification nets take {seq_len, 1}
/// sequences and end in an n_classes softmax; the regressors take flat
/// inputs and end in a linear layer.

/// Flatten -> 128 -> 128 (dropout after each) -> 64 -> 64 -> dropout ->
/// 16 -> softmax. 400 epochs, batch 1000, lr 1e-3.
nn::NetworkSpec ffnn_classifier(int seq_len, int n_classes);

/// LSTM 64 (sequences) -> LSTM 32 -> 64 -> dropout -> 16 -> dropout ->
/// softmax. 800 epochs, batch 1000.
nn::NetworkSpec lstm_classifier(int seq_len, int n_classes);

/// lstm_classifier with every hidden width scaled by width_factor
/// (complexity sweeps).
nn::NetworkSpec lstm_classifier_scaled(int seq_len, int n_classes,
                                       double width_factor);

/// Conv(128, k2) -> pool 2 -> Conv(128, k2) -> pool 2 -> Flatten -> 64 ->
/// softmax. 400 epochs, batch 1000.
nn::NetworkSpec cnn1d_classifier(int seq_len, int n_classes);

/// 5 -> 64 -> 32 -> 5 linear. 200 epochs, batch 1000, lr 1e-3.
nn::NetworkSpec regression_ffnn(int seq_len = 5);

/// regression_ffnn with scaled hidden widths (complexity table).
nn::NetworkSpec regression_ffnn_scaled(int seq_len, double width_factor);

/// 6 -> 32 -> 16 -> 3 linear. 500 epochs, batch 100.
nn::NetworkSpec forecast_markov_ffnn();

/// K -> 256 -> 64 -> 32 -> 6 linear. 500 epochs, batch 1000.
nn::NetworkSpec forecast_det_ffnn(int input_len);

/// Width factor whose lstm_classifier_scaled hits target_params within
/// +-tolerance (relative), found by bisection on the monotone width ->
/// param_count map.
double lstm_width_factor_for(int seq_len, int n_classes,
                             std::size_t target_params, double tolerance = 0.10);

/// Named lookup for the CLI: ffnn | rnn | cnn1d (classification),
/// given the sequence length and class count.
nn::NetworkSpec classifier_by_name(const std::string& name, int seq_len,
                                   int n_classes);

}  // namespace chanlearn
