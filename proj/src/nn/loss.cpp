#include "chanlearn/nn/loss.hpp"

#include <cmath>
#include <stdexcept>

namespace chanlearn::nn {

double cross_entropy_from_logits(const Tensor& logits, std::span<const int> labels) {
  if (logits.rank() != 2 || logits.dim(0) != labels.size()) {
    throw std::invalid_argument("cross_entropy: logits/labels size mismatch");
  }
  const std::size_t batch = logits.dim(0);
  const std::size_t classes = logits.dim(1);
  double total = 0.0;
  for (std::size_t i = 0; i < batch; ++i) {
    const int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= classes) {
      throw std::invalid_argument("cross_entropy: label out of range");
    }
    const double* row = logits.data() + i * classes;
    double m = row[0];
    for (std::size_t j = 1; j < classes; ++j) m = std::max(m, row[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < classes; ++j) sum += std::exp(row[j] - m);
    total += m + std::log(sum) - row[y];
  }
  return total / static_cast<double>(batch);
}

Tensor cross_entropy_logits_grad(const Tensor& probs, std::span<const int> labels) {
  if (probs.rank() != 2 || probs.dim(0) != labels.size()) {
    throw std::invalid_argument("cross_entropy grad: probs/labels size mismatch");
  }
  const std::size_t batch = probs.dim(0);
  const std::size_t classes = probs.dim(1);
  Tensor grad = probs;
  const double inv_b = 1.0 / static_cast<double>(batch);
  for (std::size_t i = 0; i < batch; ++i) {
    double* row = grad.data() + i * classes;
    row[labels[i]] -= 1.0;
    for (std::size_t j = 0; j < classes; ++j) row[j] *= inv_b;
  }
  return grad;
}

double mse(const Tensor& pred, const Tensor& target) {
  if (!pred.same_shape(target)) {
    throw std::invalid_argument("mse: shape mismatch");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    total += d * d;
  }
  return total / static_cast<double>(pred.size());
}

Tensor mse_grad(const Tensor& pred, const Tensor& target) {
  if (!pred.same_shape(target)) {
    throw std::invalid_argument("mse_grad: shape mismatch");
  }
  Tensor grad(pred.shape());
  const double scale = 2.0 / static_cast<double>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    grad[i] = scale * (pred[i] - target[i]);
  }
  return grad;
}

}  // namespace chanlearn::nn
