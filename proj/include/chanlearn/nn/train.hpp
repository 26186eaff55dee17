#pragma once

#include <cstdint>
#include <vector>

#include "chanlearn/dataset.hpp"
#include "chanlearn/nn/network.hpp"

namespace chanlearn::nn {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<Tensor> m;  // first moments, shaped like the parameters
  std::vector<Tensor> v;  // second moments
  std::int64_t step = 0;

  static AdamState like(const std::vector<Tensor*>& params);
};

/// One bias-corrected Adam update over all parameter tensors.
void adam_step(const std::vector<Tensor*>& params,
               const std::vector<Tensor*>& grads, AdamState& state, double lr,
               const AdamConfig& cfg = {});

struct TrainConfig {
  int epochs = 100;
  int batch_size = 1000;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  bool verbose = false;  // per-epoch line on stderr
};

struct EpochStats {
  double train_loss = 0.0;
  double test_loss = 0.0;
  double train_metric = 0.0;  // accuracy for classification, mse otherwise
  double test_metric = 0.0;
};

struct TrainedModel {
  NetworkSpec spec;
  Network net;  // parameters as of the final epoch
  AdamState adam;
  std::vector<EpochStats> history;
  std::vector<Tensor> best_params;  // checkpoint at the best test metric
  double best_test_metric = 0.0;
  int best_epoch = -1;
  std::uint64_t seed = 0;

  /// Swap the best checkpoint into the live network.
  void use_best_checkpoint() { net.restore_parameters(best_params); }
};

/// Mini-batch Adam training. Shuffling, initialization and dropout are all
/// derived from cfg.seed; rerunning with the same inputs reproduces the
/// history bit for bit. A non-finite loss aborts with a diagnostic naming the
/// epoch, batch and first offending layer.
TrainedModel train(const NetworkSpec& spec, const Dataset& train_ds,
                   const Dataset& test_ds, const TrainConfig& cfg);

/// Batch tensors for a dataset: {N, T, 1} sequences, or flattened {N, T} when
/// the spec's input is rank 1.
Tensor dataset_inputs(const Dataset& ds, const NetworkSpec& spec);
Tensor dataset_targets(const Dataset& ds);       // regression/forecast
std::vector<int> dataset_labels(const Dataset& ds);  // classification

struct ClassificationEval {
  double accuracy = 0.0;
  std::vector<std::vector<int>> confusion;  // rows true, cols predicted
};

ClassificationEval evaluate_classification(Network& net, const Dataset& ds);
double evaluate_regression(Network& net, const Dataset& ds);

}  // namespace chanlearn::nn
