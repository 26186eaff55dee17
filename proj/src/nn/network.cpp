#include "chanlearn/nn/network.hpp"

#include <cmath>
#include <stdexcept>

namespace chanlearn::nn {

namespace {
constexpr std::uint64_t kTagInit = 0xA0;
constexpr std::uint64_t kTagDropout = 0xA1;
}  // namespace

Network::Network(NetworkSpec spec, std::uint64_t init_seed)
    : spec_(std::move(spec)),
      dropout_rng_(RandomStream::derive(init_seed, kTagDropout)) {
  const auto shapes = chained_shapes(spec_);  // validates the chain
  RandomStream init = RandomStream::derive(init_seed, kTagInit);
  layers_.reserve(spec_.layers.size());
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    layers_.push_back(make_layer(spec_.layers[i], shapes[i], init));
  }
  if (spec_.loss == Loss::softmax_cross_entropy) {
    const auto* last = layers_.empty() ? nullptr
                                       : dynamic_cast<DenseLayer*>(layers_.back().get());
    if (!last || last->activation() != Activation::softmax) {
      throw std::invalid_argument(
          "softmax_cross_entropy requires a softmax Dense output layer");
    }
  }
}

Tensor Network::forward(const Tensor& batch, bool training) {
  Tensor x = batch;
  for (auto& layer : layers_) {
    x = layer->forward(x, training, dropout_rng_);
  }
  return x;
}

void Network::backward(const Tensor& dy, bool from_logits) {
  Tensor g = dy;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    if (from_logits && i == layers_.size() - 1) {
      auto* dense = dynamic_cast<DenseLayer*>(layers_[i].get());
      if (!dense) throw std::logic_error("fused backward: output layer is not Dense");
      g = dense->backward_preactivation(g);
    } else {
      g = layers_[i]->backward(g);
    }
  }
}

const Tensor& Network::last_logits() const {
  const auto* dense = layers_.empty() ? nullptr
                                      : dynamic_cast<const DenseLayer*>(layers_.back().get());
  if (!dense || dense->activation() != Activation::softmax) {
    throw std::logic_error("last_logits: output layer is not a softmax Dense");
  }
  return dense->logits();
}

std::vector<Tensor*> Network::parameters() {
  std::vector<Tensor*> out;
  for (auto& layer : layers_) {
    for (Tensor* p : layer->params()) out.push_back(p);
  }
  return out;
}

std::vector<Tensor*> Network::gradients() {
  std::vector<Tensor*> out;
  for (auto& layer : layers_) {
    for (Tensor* g : layer->grads()) out.push_back(g);
  }
  return out;
}

void Network::zero_gradients() {
  for (auto& layer : layers_) layer->zero_grads();
}

std::size_t Network::num_parameters() const { return param_count(spec_); }

std::vector<Tensor> Network::snapshot_parameters() const {
  std::vector<Tensor> snap;
  for (const auto& layer : layers_) {
    for (Tensor* p : const_cast<Layer&>(*layer).params()) snap.push_back(*p);
  }
  return snap;
}

void Network::restore_parameters(const std::vector<Tensor>& snap) {
  std::size_t i = 0;
  for (auto& layer : layers_) {
    for (Tensor* p : layer->params()) {
      if (i >= snap.size() || !snap[i].same_shape(*p)) {
        throw std::invalid_argument("restore_parameters: snapshot shape mismatch");
      }
      *p = snap[i++];
    }
  }
  if (i != snap.size()) {
    throw std::invalid_argument("restore_parameters: snapshot tensor count mismatch");
  }
}

int Network::diagnose_first_nonfinite(const Tensor& batch) {
  RandomStream unused(0);
  Tensor x = batch;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    x = layers_[i]->forward(x, false, unused);
    for (double v : x.buffer()) {
      if (!std::isfinite(v)) return static_cast<int>(i);
    }
  }
  return -1;
}

}  // namespace chanlearn::nn
