#pragma once

#include <memory>
#include <string_view>
#include <vector>

#include "chanlearn/nn/spec.hpp"
#include "chanlearn/nn/tensor.hpp"
#include "chanlearn/rng.hpp"

namespace chanlearn::nn {

/// One layer instance holding its parameters, gradients and forward cache.
/// forward() validates the batch shape and stores whatever backward() needs;
/// backward() consumes the cache (calling it twice, or before any forward,
/// throws) and accumulates parameter gradients.
class Layer {
 public:
  virtual ~Layer() = default;

  virtual Tensor forward(const Tensor& x, bool training, RandomStream& rng) = 0;
  virtual Tensor backward(const Tensor& dy) = 0;

  virtual std::vector<Tensor*> params() { return {}; }
  virtual std::vector<Tensor*> grads() { return {}; }
  void zero_grads() {
    for (Tensor* g : grads()) g->set_zero();
  }

  virtual std::string_view kind() const = 0;
  const std::vector<std::size_t>& input_shape() const { return in_shape_; }
  const std::vector<std::size_t>& output_shape() const { return out_shape_; }

 protected:
  void require_cache() const;
  void consume_cache();
  void arm_cache() { has_cache_ = true; }
  void batch_shape_checked(const Tensor& x) const;

  std::vector<std::size_t> in_shape_;   // per-sample
  std::vector<std::size_t> out_shape_;  // per-sample
  bool has_cache_ = false;
};

class DenseLayer final : public Layer {
 public:
  DenseLayer(const DenseSpec& spec, const std::vector<std::size_t>& in_shape,
             RandomStream& init);

  Tensor forward(const Tensor& x, bool training, RandomStream& rng) override;
  Tensor backward(const Tensor& dy) override;
  /// Backward with dy already expressed w.r.t. the pre-activation z; used by
  /// the fused softmax-cross-entropy path.
  Tensor backward_preactivation(const Tensor& dz);

  std::vector<Tensor*> params() override { return {&w_, &b_}; }
  std::vector<Tensor*> grads() override { return {&dw_, &db_}; }
  std::string_view kind() const override { return "dense"; }
  Activation activation() const { return act_; }
  /// Pre-activation cached by the last forward.
  const Tensor& logits() const { return z_cache_; }

 private:
  Tensor backward_impl(const Tensor& dz);

  Activation act_;
  std::size_t in_ = 0, out_ = 0;
  Tensor w_, b_, dw_, db_;
  Tensor x_cache_, z_cache_, y_cache_;
};

class LstmLayer final : public Layer {
 public:
  LstmLayer(const LstmSpec& spec, const std::vector<std::size_t>& in_shape,
            RandomStream& init);

  Tensor forward(const Tensor& x, bool training, RandomStream& rng) override;
  Tensor backward(const Tensor& dy) override;

  std::vector<Tensor*> params() override { return {&wx_, &wh_, &b_}; }
  std::vector<Tensor*> grads() override { return {&dwx_, &dwh_, &db_}; }
  std::string_view kind() const override { return "lstm"; }

 private:
  std::size_t steps_ = 0, in_ = 0, units_ = 0;
  bool return_sequences_ = false;
  Tensor wx_, wh_, b_, dwx_, dwh_, db_;
  // Per-step caches, each [B, 4u] or [B, u].
  Tensor x_cache_;
  std::vector<Tensor> gates_, cell_, cell_tanh_, hidden_;
  std::size_t batch_ = 0;
};

class Conv1DLayer final : public Layer {
 public:
  Conv1DLayer(const Conv1DSpec& spec, const std::vector<std::size_t>& in_shape,
              RandomStream& init);

  Tensor forward(const Tensor& x, bool training, RandomStream& rng) override;
  Tensor backward(const Tensor& dy) override;

  std::vector<Tensor*> params() override { return {&k_, &b_}; }
  std::vector<Tensor*> grads() override { return {&dk_, &db_}; }
  std::string_view kind() const override { return "conv1d"; }

 private:
  Activation act_;
  std::size_t in_steps_ = 0, in_ch_ = 0, filters_ = 0, kernel_ = 0, out_steps_ = 0;
  Tensor k_, b_, dk_, db_;       // kernel [k, C, F]
  Tensor cols_cache_, z_cache_;  // im2col matrix and pre-activation
  std::size_t batch_ = 0;
};

class MaxPool1DLayer final : public Layer {
 public:
  MaxPool1DLayer(const MaxPool1DSpec& spec, const std::vector<std::size_t>& in_shape);

  Tensor forward(const Tensor& x, bool training, RandomStream& rng) override;
  Tensor backward(const Tensor& dy) override;
  std::string_view kind() const override { return "maxpool1d"; }

 private:
  std::size_t pool_ = 0, in_steps_ = 0, ch_ = 0, out_steps_ = 0;
  std::vector<std::size_t> argmax_;
  std::size_t batch_ = 0;
};

class DropoutLayer final : public Layer {
 public:
  DropoutLayer(const DropoutSpec& spec, const std::vector<std::size_t>& in_shape);

  Tensor forward(const Tensor& x, bool training, RandomStream& rng) override;
  Tensor backward(const Tensor& dy) override;
  std::string_view kind() const override { return "dropout"; }

 private:
  double rate_;
  Tensor mask_;  // scale factors: 0 or 1/(1-rate)
  bool mask_used_ = false;
};

class FlattenLayer final : public Layer {
 public:
  explicit FlattenLayer(const std::vector<std::size_t>& in_shape);

  Tensor forward(const Tensor& x, bool training, RandomStream& rng) override;
  Tensor backward(const Tensor& dy) override;
  std::string_view kind() const override { return "flatten"; }

 private:
  std::size_t batch_ = 0;
};

std::unique_ptr<Layer> make_layer(const LayerSpec& spec,
                                  const std::vector<std::size_t>& in_shape,
                                  RandomStream& init);

/// Glorot-uniform fill: limit sqrt(6 / (fan_in + fan_out)).
void glorot_fill(Tensor& t, std::size_t fan_in, std::size_t fan_out,
                 RandomStream& rng);

/// Per-square-block orthogonal fill for recurrent kernels ([rows, n*block_cols]).
void orthogonal_fill_blocks(Tensor& t, std::size_t rows, std::size_t block_cols,
                            RandomStream& rng);

}  // namespace chanlearn::nn
