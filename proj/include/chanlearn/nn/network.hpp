#pragma once

#include <memory>
#include <vector>

#include "chanlearn/nn/layers.hpp"
#include "chanlearn/nn/spec.hpp"
#include "chanlearn/nn/tensor.hpp"
#include "chanlearn/rng.hpp"

namespace chanlearn::nn {

/// A layer stack built from a NetworkSpec with seeded initialization.
/// Forward/backward operate on whole batches; dropout draws come from an
/// internal stream so a (seed, call sequence) pair is fully reproducible.
class Network {
 public:
  Network(NetworkSpec spec, std::uint64_t init_seed);

  const NetworkSpec& spec() const { return spec_; }

  Tensor forward(const Tensor& batch, bool training);
  /// Reverse pass; dy is the loss gradient w.r.t. the network output.
  /// When from_logits is true the final layer must be a softmax Dense and dy
  /// is taken w.r.t. its pre-activation (fused cross-entropy path).
  void backward(const Tensor& dy, bool from_logits = false);

  /// Pre-activation of the final softmax Dense, cached by the last forward.
  const Tensor& last_logits() const;

  std::vector<Tensor*> parameters();
  std::vector<Tensor*> gradients();
  void zero_gradients();
  std::size_t num_parameters() const;

  void reseed_dropout(std::uint64_t seed) { dropout_rng_ = RandomStream(seed); }

  /// Deep copies of all parameter tensors, in layer order.
  std::vector<Tensor> snapshot_parameters() const;
  void restore_parameters(const std::vector<Tensor>& snap);

  std::size_t layer_count() const { return layers_.size(); }
  const Layer& layer(std::size_t i) const { return *layers_[i]; }
  Layer& layer(std::size_t i) { return *layers_[i]; }

  /// Eval-mode sweep locating the first layer that emits a non-finite value
  /// for this batch; -1 if all outputs are finite. Used for NaN-abort
  /// diagnostics only.
  int diagnose_first_nonfinite(const Tensor& batch);

 private:
  NetworkSpec spec_;
  std::vector<std::unique_ptr<Layer>> layers_;
  RandomStream dropout_rng_;
};

}  // namespace chanlearn::nn
