#pragma once

#include <span>

#include "chanlearn/nn/tensor.hpp"

namespace chanlearn::nn {

/// Mean cross-entropy computed from cached logits via log-sum-exp:
/// (1/B) sum_i (logsumexp(z_i) - z_i[label_i]). Stable for any logit scale.
double cross_entropy_from_logits(const Tensor& logits, std::span<const int> labels);

/// Fused gradient w.r.t. logits: (softmax(z) - onehot) / B. probs is the
/// softmax output of the forward pass.
Tensor cross_entropy_logits_grad(const Tensor& probs, std::span<const int> labels);

/// Mean over batch and output components of the squared error.
double mse(const Tensor& pred, const Tensor& target);

/// d mse / d pred = 2 (pred - target) / (B * D).
Tensor mse_grad(const Tensor& pred, const Tensor& target);

}  // namespace chanlearn::nn
