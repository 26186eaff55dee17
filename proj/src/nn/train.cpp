#include "chanlearn/nn/train.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <stdexcept>

#include "chanlearn/nn/loss.hpp"

namespace chanlearn::nn {

namespace {

constexpr std::uint64_t kTagShuffle = 0xB0;

std::vector<int> argmax_rows(const Tensor& probs) {
  const std::size_t rows = probs.dim(0);
  const std::size_t cols = probs.dim(1);
  std::vector<int> out(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    const double* row = probs.data() + i * cols;
    int best = 0;
    for (std::size_t j = 1; j < cols; ++j) {
      if (row[j] > row[best]) best = static_cast<int>(j);  // ties keep lowest index
    }
    out[i] = best;
  }
  return out;
}

Tensor gather_rows(const Tensor& x, std::span<const std::size_t> idx) {
  const std::size_t row_size = x.size() / x.dim(0);
  std::vector<std::size_t> shape = x.shape();
  shape[0] = idx.size();
  Tensor out(std::move(shape));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const double* src = x.data() + idx[i] * row_size;
    std::copy(src, src + row_size, out.data() + i * row_size);
  }
  return out;
}

}  // namespace

AdamState AdamState::like(const std::vector<Tensor*>& params) {
  AdamState s;
  s.m.reserve(params.size());
  s.v.reserve(params.size());
  for (const Tensor* p : params) {
    s.m.emplace_back(p->shape());
    s.v.emplace_back(p->shape());
  }
  return s;
}

void adam_step(const std::vector<Tensor*>& params,
               const std::vector<Tensor*>& grads, AdamState& state, double lr,
               const AdamConfig& cfg) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw std::invalid_argument("adam_step: tensor list size mismatch");
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    const Tensor& g = *grads[i];
    Tensor& m = state.m[i];
    Tensor& v = state.v[i];
    if (!p.same_shape(g) || !p.same_shape(m)) {
      throw std::invalid_argument("adam_step: shape mismatch at tensor " + std::to_string(i));
    }
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g[j];
      v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g[j] * g[j];
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      p[j] -= lr * mhat / (std::sqrt(vhat) + cfg.epsilon);
    }
  }
}

Tensor dataset_inputs(const Dataset& ds, const NetworkSpec& spec) {
  const std::size_t n = ds.samples.size();
  const std::size_t len = static_cast<std::size_t>(ds.seq_len);
  if (spec.input_shape.size() == 2) {
    if (spec.input_shape[0] != len || spec.input_shape[1] != 1) {
      throw std::invalid_argument("dataset_inputs: spec expects " +
                                  shape_string(spec.input_shape) + ", dataset has length " +
                                  std::to_string(len));
    }
    Tensor x({n, len, 1});
    for (std::size_t i = 0; i < n; ++i) {
      std::copy(ds.samples[i].features.begin(), ds.samples[i].features.end(),
                x.data() + i * len);
    }
    return x;
  }
  if (spec.input_shape[0] != len) {
    throw std::invalid_argument("dataset_inputs: spec expects width " +
                                std::to_string(spec.input_shape[0]) + ", dataset has " +
                                std::to_string(len));
  }
  Tensor x({n, len});
  for (std::size_t i = 0; i < n; ++i) {
    std::copy(ds.samples[i].features.begin(), ds.samples[i].features.end(),
              x.data() + i * len);
  }
  return x;
}

Tensor dataset_targets(const Dataset& ds) {
  if (ds.task == Task::classification) {
    throw std::invalid_argument("dataset_targets: classification datasets carry labels");
  }
  const std::size_t n = ds.samples.size();
  const std::size_t w = static_cast<std::size_t>(ds.target_width);
  Tensor y({n, w});
  for (std::size_t i = 0; i < n; ++i) {
    if (ds.samples[i].targets.size() != w) {
      throw std::invalid_argument("dataset_targets: ragged target widths");
    }
    std::copy(ds.samples[i].targets.begin(), ds.samples[i].targets.end(), y.data() + i * w);
  }
  return y;
}

std::vector<int> dataset_labels(const Dataset& ds) {
  if (ds.task != Task::classification) {
    throw std::invalid_argument("dataset_labels: dataset is not a classification task");
  }
  std::vector<int> labels(ds.samples.size());
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = ds.samples[i].label;
  return labels;
}

namespace {

struct EvalResult {
  double loss = 0.0;
  double metric = 0.0;
};

// Full pass in eval mode, batched to bound memory.
EvalResult evaluate_pass(Network& net, const Tensor& x, const Tensor* y,
                         const std::vector<int>* labels,
                         std::vector<std::vector<int>>* confusion) {
  const std::size_t n = x.dim(0);
  const std::size_t eval_batch = 2048;
  const bool classify = labels != nullptr;
  double loss_sum = 0.0;
  double metric_sum = 0.0;

  for (std::size_t start = 0; start < n; start += eval_batch) {
    const std::size_t stop = std::min(n, start + eval_batch);
    std::vector<std::size_t> idx(stop - start);
    std::iota(idx.begin(), idx.end(), start);
    Tensor xb = gather_rows(x, idx);
    Tensor out = net.forward(xb, false);
    if (classify) {
      std::vector<int> lb(labels->begin() + start, labels->begin() + stop);
      loss_sum += cross_entropy_from_logits(net.last_logits(), lb) * static_cast<double>(lb.size());
      const auto pred = argmax_rows(out);
      for (std::size_t i = 0; i < lb.size(); ++i) {
        if (pred[i] == lb[i]) metric_sum += 1.0;
        if (confusion) (*confusion)[lb[i]][pred[i]] += 1;
      }
    } else {
      Tensor yb = gather_rows(*y, idx);
      const double batch_mse = mse(out, yb);
      loss_sum += batch_mse * static_cast<double>(idx.size());
      metric_sum += batch_mse * static_cast<double>(idx.size());
    }
  }
  return {loss_sum / static_cast<double>(n), metric_sum / static_cast<double>(n)};
}

}  // namespace

TrainedModel train(const NetworkSpec& spec, const Dataset& train_ds,
                   const Dataset& test_ds, const TrainConfig& cfg) {
  if (cfg.epochs < 1 || cfg.batch_size < 1 || !(cfg.learning_rate > 0.0)) {
    throw std::invalid_argument("train: epochs, batch_size and learning_rate must be positive");
  }
  const bool classify = spec.loss == Loss::softmax_cross_entropy;
  if (classify != (train_ds.task == Task::classification)) {
    throw std::invalid_argument("train: loss does not match the dataset task");
  }
  if (train_ds.task != test_ds.task || train_ds.seq_len != test_ds.seq_len) {
    throw std::invalid_argument("train: train/test datasets disagree");
  }
  if (classify) {
    const auto shapes = chained_shapes(spec);
    if (shapes.back() != std::vector<std::size_t>{static_cast<std::size_t>(train_ds.n_classes)}) {
      throw std::invalid_argument("train: output width does not match the class count");
    }
  }

  TrainedModel model{spec, Network(spec, cfg.seed), {}, {}, {}, 0.0, -1, cfg.seed};
  Network& net = model.net;
  const auto params = net.parameters();
  const auto grads = net.gradients();
  model.adam = AdamState::like(params);

  const Tensor x_train = dataset_inputs(train_ds, spec);
  const Tensor x_test = dataset_inputs(test_ds, spec);
  Tensor y_train, y_test;
  std::vector<int> l_train, l_test;
  if (classify) {
    l_train = dataset_labels(train_ds);
    l_test = dataset_labels(test_ds);
  } else {
    y_train = dataset_targets(train_ds);
    y_test = dataset_targets(test_ds);
  }

  const std::size_t n = x_train.dim(0);
  std::vector<std::size_t> order(n);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    RandomStream shuffle_rng =
        RandomStream::derive(cfg.seed, {kTagShuffle, static_cast<std::uint64_t>(epoch)});
    for (std::size_t i = n; i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng.uniform_index(i)]);
    }

    double loss_sum = 0.0;
    double correct = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size, ++batch_index) {
      const std::size_t stop = std::min(n, start + cfg.batch_size);
      std::span<const std::size_t> idx(order.data() + start, stop - start);
      Tensor xb = gather_rows(x_train, idx);

      net.zero_gradients();
      Tensor out = net.forward(xb, true);

      double batch_loss;
      if (classify) {
        std::vector<int> lb(idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i) lb[i] = l_train[idx[i]];
        batch_loss = cross_entropy_from_logits(net.last_logits(), lb);
        if (std::isfinite(batch_loss)) {
          net.backward(cross_entropy_logits_grad(out, lb), /*from_logits=*/true);
          const auto pred = argmax_rows(out);
          for (std::size_t i = 0; i < lb.size(); ++i) {
            if (pred[i] == lb[i]) correct += 1.0;
          }
        }
      } else {
        Tensor yb = gather_rows(y_train, idx);
        batch_loss = mse(out, yb);
        if (std::isfinite(batch_loss)) net.backward(mse_grad(out, yb));
      }

      if (!std::isfinite(batch_loss)) {
        const int bad = net.diagnose_first_nonfinite(xb);
        std::string where = bad >= 0 ? std::string(net.layer(bad).kind()) + " (layer " +
                                           std::to_string(bad) + ")"
                                     : "loss";
        throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch) +
                                 ", batch " + std::to_string(batch_index) +
                                 ", first non-finite value in " + where);
      }

      loss_sum += batch_loss * static_cast<double>(idx.size());
      adam_step(params, grads, model.adam, cfg.learning_rate);
    }

    EpochStats stats;
    stats.train_loss = loss_sum / static_cast<double>(n);
    stats.train_metric = classify ? correct / static_cast<double>(n) : stats.train_loss;
    const EvalResult ev = classify
                              ? evaluate_pass(net, x_test, nullptr, &l_test, nullptr)
                              : evaluate_pass(net, x_test, &y_test, nullptr, nullptr);
    stats.test_loss = ev.loss;
    stats.test_metric = ev.metric;
    model.history.push_back(stats);

    const bool better = model.best_epoch < 0 ||
                        (classify ? stats.test_metric > model.best_test_metric
                                  : stats.test_metric < model.best_test_metric);
    if (better) {
      model.best_test_metric = stats.test_metric;
      model.best_epoch = epoch;
      model.best_params = net.snapshot_parameters();
    }

    if (cfg.verbose) {
      std::cerr << "epoch " << epoch + 1 << "/" << cfg.epochs
                << " train_loss=" << stats.train_loss << " test_loss=" << stats.test_loss
                << " test_metric=" << stats.test_metric << "\n";
    }
  }
  return model;
}

ClassificationEval evaluate_classification(Network& net, const Dataset& ds) {
  if (ds.task != Task::classification) {
    throw std::invalid_argument("evaluate_classification: dataset is not labeled");
  }
  const Tensor x = dataset_inputs(ds, net.spec());
  const auto labels = dataset_labels(ds);
  ClassificationEval result;
  result.confusion.assign(ds.n_classes, std::vector<int>(ds.n_classes, 0));
  const EvalResult ev = evaluate_pass(net, x, nullptr, &labels, &result.confusion);
  result.accuracy = ev.metric;
  return result;
}

double evaluate_regression(Network& net, const Dataset& ds) {
  if (ds.task == Task::classification) {
    throw std::invalid_argument("evaluate_regression: dataset carries class labels");
  }
  const Tensor x = dataset_inputs(ds, net.spec());
  const Tensor y = dataset_targets(ds);
  return evaluate_pass(net, x, &y, nullptr, nullptr).loss;
}

}  // namespace chanlearn::nn
