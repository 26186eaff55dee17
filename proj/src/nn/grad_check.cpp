#include "chanlearn/nn/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "chanlearn/nn/loss.hpp"
#include "chanlearn/nn/network.hpp"
#include "chanlearn/rng.hpp"

namespace chanlearn::nn {

GradCheckResult gradient_check(const NetworkSpec& spec, std::uint64_t seed,
                               std::size_t batch, std::size_t max_checked) {
  const auto shapes = chained_shapes(spec);
  Network net(spec, derive_seed(seed, {0x6C}));

  RandomStream data_rng = RandomStream::derive(seed, 0x6D);
  // Zero-initialized biases put ReLU pre-activations exactly on the kink,
  // where the subgradient and the finite difference legitimately disagree;
  // jitter every parameter off those symmetry points.
  for (Tensor* p : net.parameters()) {
    for (double& v : p->buffer()) v += data_rng.uniform(-0.05, 0.05);
  }
  std::vector<std::size_t> in_shape{batch};
  in_shape.insert(in_shape.end(), spec.input_shape.begin(), spec.input_shape.end());
  Tensor x(in_shape);
  for (double& v : x.buffer()) v = data_rng.uniform(-1.0, 1.0);

  const auto& out_shape = shapes.back();
  const bool classify = spec.loss == Loss::softmax_cross_entropy;
  std::vector<int> labels;
  Tensor y;
  if (classify) {
    labels.resize(batch);
    for (auto& l : labels) {
      l = static_cast<int>(data_rng.uniform_index(out_shape[0]));
    }
  } else {
    std::vector<std::size_t> tshape{batch};
    tshape.insert(tshape.end(), out_shape.begin(), out_shape.end());
    y = Tensor(tshape);
    for (double& v : y.buffer()) v = data_rng.uniform(-1.0, 1.0);
  }

  const std::uint64_t dropout_seed = derive_seed(seed, {0x6E});
  auto loss_of = [&]() {
    net.reseed_dropout(dropout_seed);
    Tensor out = net.forward(x, true);
    return classify ? cross_entropy_from_logits(net.last_logits(), labels)
                    : mse(out, y);
  };

  // Analytic gradients.
  net.zero_gradients();
  net.reseed_dropout(dropout_seed);
  Tensor out = net.forward(x, true);
  if (classify) {
    net.backward(cross_entropy_logits_grad(out, labels), /*from_logits=*/true);
  } else {
    net.backward(mse_grad(out, y));
  }

  const auto params = net.parameters();
  const auto grads = net.gradients();
  std::size_t total = 0;
  for (const Tensor* p : params) total += p->size();

  // Pick up to max_checked distinct flat indices.
  std::vector<std::size_t> picks;
  if (total <= max_checked) {
    picks.resize(total);
    std::iota(picks.begin(), picks.end(), 0);
  } else {
    RandomStream pick_rng = RandomStream::derive(seed, 0x6F);
    std::vector<std::size_t> all(total);
    std::iota(all.begin(), all.end(), 0);
    for (std::size_t i = 0; i < max_checked; ++i) {
      std::swap(all[i], all[i + pick_rng.uniform_index(total - i)]);
    }
    picks.assign(all.begin(), all.begin() + max_checked);
  }

  const double h = 1e-5;
  // Central differences over a loss of order one carry ~1e-11 of rounding
  // noise; gradients below this floor cannot be resolved at any tolerance,
  // so they are verified against zero instead of scored relatively.
  const double resolvable = 1e-6;
  GradCheckResult result;
  for (std::size_t flat : picks) {
    std::size_t t = 0, off = flat;
    while (off >= params[t]->size()) off -= params[t++]->size();
    double& theta = (*params[t])[off];
    const double saved = theta;

    theta = saved + h;
    const double lp = loss_of();
    theta = saved - h;
    const double lm = loss_of();
    theta = saved;

    const double numeric = (lp - lm) / (2.0 * h);
    const double analytic = (*grads[t])[off];
    if (std::abs(analytic) < resolvable && std::abs(numeric) < resolvable) {
      continue;  // both sides agree the gradient vanishes
    }
    result.checked += 1;
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    const double rel = std::abs(analytic - numeric) / denom;
    if (rel > result.max_rel_error) {
      result.max_rel_error = rel;
      result.worst_param = flat;
    }
  }
  return result;
}

}  // namespace chanlearn::nn
