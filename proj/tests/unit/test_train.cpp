#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "chanlearn/architectures.hpp"
#include "chanlearn/dataset.hpp"
#include "chanlearn/nn/loss.hpp"
#include "chanlearn/nn/serialize.hpp"
#include "chanlearn/nn/train.hpp"

using namespace chanlearn;
using namespace chanlearn::nn;

namespace {

/// Two well-separated 5-feature blobs, labels 0/1.
Dataset separable_toy(int per_class, std::uint64_t seed) {
  Dataset ds;
  ds.task = Task::classification;
  ds.seq_len = 5;
  ds.n_classes = 2;
  ds.target_width = 1;
  ds.master_seed = seed;
  RandomStream rng(seed);
  for (int c = 0; c < 2; ++c) {
    for (int i = 0; i < per_class; ++i) {
      Sample s;
      s.label = c;
      const double center = c == 0 ? 1.2 : 3.0;
      for (int j = 0; j < 5; ++j) s.features.push_back(center + 0.3 * rng.normal());
      ds.samples.push_back(std::move(s));
    }
  }
  return ds;
}

}  // namespace

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  Tensor p({3}, {1.0, -2.0, 0.5});
  Tensor g({3});
  AdamState state = AdamState::like({&p});
  const Tensor before = p;
  adam_step({&p}, {&g}, state, 0.1);
  for (std::size_t i = 0; i < p.size(); ++i) CHECK(p[i] == before[i]);
}

TEST_CASE("adam: first step moves by ~lr in the gradient direction") {
  Tensor p({2}, {0.0, 0.0});
  Tensor g({2}, {3.0, -0.5});  // |g| >> epsilon
  AdamState state = AdamState::like({&p});
  adam_step({&p}, {&g}, state, 0.01);
  CHECK(p[0] == doctest::Approx(-0.01).epsilon(1e-6));
  CHECK(p[1] == doctest::Approx(0.01).epsilon(1e-6));
}

TEST_CASE("adam: identical calls from a state snapshot agree") {
  Tensor p1({4}, {0.1, 0.2, 0.3, 0.4});
  Tensor p2 = p1;
  Tensor g({4}, {0.5, -0.1, 0.0, 2.0});
  AdamState s1 = AdamState::like({&p1});
  s1.m[0] = Tensor({4}, {0.01, 0.0, -0.02, 0.1});
  s1.v[0] = Tensor({4}, {0.04, 0.01, 0.02, 0.3});
  s1.step = 9;
  AdamState s2 = s1;
  adam_step({&p1}, {&g}, s1, 0.005);
  adam_step({&p2}, {&g}, s2, 0.005);
  for (std::size_t i = 0; i < p1.size(); ++i) CHECK(p1[i] == p2[i]);
}

TEST_CASE("adam converges on a quadratic") {
  Tensor p({1}, {0.0});
  Tensor g({1});
  AdamState state = AdamState::like({&p});
  for (int step = 0; step < 2000; ++step) {
    g[0] = 2.0 * (p[0] - 3.0);
    adam_step({&p}, {&g}, state, 0.05);
  }
  CHECK(p[0] == doctest::Approx(3.0).epsilon(1e-3));
}

TEST_CASE("training separates a linearly separable toy problem") {
  const Dataset ds = separable_toy(60, 99);
  const SplitPair parts = split(ds, 0.8, 1);

  NetworkSpec spec;
  spec.input_shape = {5};
  spec.loss = Loss::softmax_cross_entropy;
  spec.layers = {DenseSpec{8, Activation::relu}, DenseSpec{2, Activation::softmax}};

  TrainConfig cfg{200, 24, 5e-3, 7};
  TrainedModel model = train(spec, parts.train, parts.test, cfg);
  const auto ev = evaluate_classification(model.net, parts.train);
  CHECK(ev.accuracy == doctest::Approx(1.0));
}

TEST_CASE("training recovers the exact affine feature inverse") {
  const Dataset ds = build_regression({2000, 1.0, 5});
  const SplitPair parts = split(ds, 0.8, 2);
  TrainConfig cfg{200, 100, 1e-3, 3};
  TrainedModel model = train(regression_ffnn(kRegressionLen), parts.train, parts.test, cfg);
  CHECK(model.history.back().train_loss < 1e-5);
}

TEST_CASE("training history is monotone after warm-up on the affine problem") {
  int good = 0, total = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Dataset ds = build_regression({1000, 1.0, seed});
    const SplitPair parts = split(ds, 0.8, seed);
    TrainConfig cfg{80, 100, 1e-3, seed};
    const TrainedModel model = train(regression_ffnn(kRegressionLen), parts.train,
                                     parts.test, cfg);
    for (std::size_t e = 10; e < model.history.size(); ++e) {
      total += 1;
      if (model.history[e].train_loss <= model.history[e - 1].train_loss) good += 1;
    }
  }
  CHECK(static_cast<double>(good) / total >= 0.95);
}

TEST_CASE("training is bit-reproducible given the seed") {
  const Dataset ds = build_regression({400, 1.0, 11});
  const SplitPair parts = split(ds, 0.8, 12);
  TrainConfig cfg{10, 64, 1e-3, 13};
  const TrainedModel a = train(regression_ffnn(kRegressionLen), parts.train, parts.test, cfg);
  const TrainedModel b = train(regression_ffnn(kRegressionLen), parts.train, parts.test, cfg);
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t e = 0; e < a.history.size(); ++e) {
    CHECK(a.history[e].train_loss == b.history[e].train_loss);
    CHECK(a.history[e].test_loss == b.history[e].test_loss);
    CHECK(a.history[e].test_metric == b.history[e].test_metric);
  }
}

TEST_CASE("loss/task mismatches are rejected") {
  const Dataset reg = build_regression({50, 1.0, 1});
  const SplitPair parts = split(reg, 0.8, 1);
  NetworkSpec classifier;
  classifier.input_shape = {5};
  classifier.loss = Loss::softmax_cross_entropy;
  classifier.layers = {DenseSpec{5, Activation::softmax}};
  CHECK_THROWS(train(classifier, parts.train, parts.test, TrainConfig{1, 10, 1e-3, 1}));
}

TEST_CASE("evaluate_classification: constant predictor and confusion identities") {
  const Dataset ds = build_classification({20, 6, 1.0, Generation::d1, 21});

  NetworkSpec spec;
  spec.input_shape = {6, 1};
  spec.loss = Loss::softmax_cross_entropy;
  spec.layers = {FlattenSpec{}, DenseSpec{5, Activation::softmax}};
  Network net(spec, 1);
  for (Tensor* p : net.parameters()) p->set_zero();
  // Bias the first logit: the net always predicts class 0.
  (*net.parameters()[1])[0] = 5.0;

  const auto ev = evaluate_classification(net, ds);
  CHECK(ev.accuracy == doctest::Approx(0.2));
  int trace = 0, total = 0;
  for (int i = 0; i < 5; ++i) {
    int row_sum = 0;
    for (int j = 0; j < 5; ++j) {
      row_sum += ev.confusion[i][j];
      total += ev.confusion[i][j];
    }
    CHECK(row_sum == 20);  // per-class test counts
    trace += ev.confusion[i][i];
  }
  CHECK(static_cast<double>(trace) / total == doctest::Approx(ev.accuracy).epsilon(1e-12));
}

TEST_CASE("evaluate_regression: zero net yields the target second moment") {
  const Dataset ds = build_regression({100, 1.0, 23});
  NetworkSpec spec;
  spec.input_shape = {5};
  spec.layers = {DenseSpec{5, Activation::linear}};
  Network net(spec, 1);
  for (Tensor* p : net.parameters()) p->set_zero();

  double second_moment = 0.0;
  for (const Sample& s : ds.samples) {
    for (double t : s.targets) second_moment += t * t;
  }
  second_moment /= static_cast<double>(ds.samples.size() * 5);
  CHECK(evaluate_regression(net, ds) == doctest::Approx(second_moment).epsilon(1e-12));

  // Independent recomputation from raw forward outputs.
  Tensor x = dataset_inputs(ds, spec);
  Tensor y = dataset_targets(ds);
  Network net2(spec, 9);
  const Tensor pred = net2.forward(x, false);
  double manual = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    manual += (pred[i] - y[i]) * (pred[i] - y[i]);
  }
  manual /= static_cast<double>(pred.size());
  CHECK(evaluate_regression(net2, ds) == doctest::Approx(manual).epsilon(1e-12));

  CHECK_THROWS(evaluate_regression(net, build_classification({2, 5, 1.0, Generation::d1, 1})));
}

TEST_CASE("model serialization restores bit-exact inference") {
  const Dataset ds = build_regression({200, 1.0, 31});
  const SplitPair parts = split(ds, 0.8, 32);
  TrainConfig cfg{3, 50, 1e-3, 33};
  TrainedModel model = train(regression_ffnn(kRegressionLen), parts.train, parts.test, cfg);

  const auto dir = std::filesystem::temp_directory_path() / "chanlearn_model_test";
  save_model(model, dir, /*use_best=*/false);
  LoadedModel loaded = load_model(dir);

  Tensor x = dataset_inputs(parts.test, model.spec);
  const Tensor a = model.net.forward(x, false);
  const Tensor b = loaded.net.forward(x, false);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
  CHECK(loaded.history.size() == model.history.size());
  std::filesystem::remove_all(dir);
}

TEST_CASE("nan loss aborts with an epoch/batch/layer diagnostic") {
  Dataset ds = build_regression({64, 1.0, 41});
  ds.samples[5].targets[2] = std::numeric_limits<double>::quiet_NaN();
  const SplitPair parts = split(ds, 0.8, 42);
  Dataset train_ds = parts.train;
  // Make sure the poisoned sample landed in the training half.
  bool poisoned = false;
  for (const Sample& s : train_ds.samples) {
    for (double t : s.targets) poisoned |= std::isnan(t);
  }
  if (!poisoned) train_ds = parts.test;

  try {
    train(regression_ffnn(kRegressionLen), train_ds, train_ds, TrainConfig{2, 64, 1e-3, 43});
    FAIL("expected a non-finite-loss abort");
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("non-finite loss") != std::string::npos);
    CHECK(msg.find("epoch 0") != std::string::npos);
    CHECK(msg.find("loss") != std::string::npos);
  }
}
