#include <doctest.h>

#include <cmath>

#include "chanlearn/architectures.hpp"
#include "chanlearn/nn/grad_check.hpp"
#include "chanlearn/nn/loss.hpp"
#include "chanlearn/nn/network.hpp"

using namespace chanlearn;
using namespace chanlearn::nn;

TEST_CASE("parameter counting formulas") {
  NetworkSpec dense;
  dense.input_shape = {10};
  dense.layers = {DenseSpec{5, Activation::linear}};
  CHECK(param_count(dense) == 55);

  NetworkSpec lstm;
  lstm.input_shape = {4, 1};
  lstm.layers = {LstmSpec{64, false}};
  CHECK(param_count(lstm) == 16896);

  NetworkSpec conv;
  conv.input_shape = {8, 1};
  conv.layers = {Conv1DSpec{128, 2}};
  CHECK(param_count(conv) == 384);

  // Reference LSTM classifier at length 30: 16896 + 12416 + 2112 + 1040 + 85.
  CHECK(param_count(lstm_classifier(30, 5)) == 32549);

  NetworkSpec bad;
  bad.input_shape = {10};
  bad.layers = {LstmSpec{8, false}};  // sequence layer on flat input
  CHECK_THROWS(param_count(bad));
}

TEST_CASE("shape chaining matches layer semantics") {
  const auto shapes = chained_shapes(cnn1d_classifier(30, 5));
  // 30 -> conv k2 -> 29 -> pool2 -> 14 -> conv k2 -> 13 -> pool2 -> 6.
  CHECK(shapes[1] == std::vector<std::size_t>{29, 128});
  CHECK(shapes[2] == std::vector<std::size_t>{14, 128});
  CHECK(shapes[3] == std::vector<std::size_t>{13, 128});
  CHECK(shapes[4] == std::vector<std::size_t>{6, 128});
  CHECK(shapes[5] == std::vector<std::size_t>{768});
  CHECK(shapes.back() == std::vector<std::size_t>{5});
}

TEST_CASE("zero-weight dense layer gives zero output") {
  NetworkSpec spec;
  spec.input_shape = {3};
  spec.layers = {DenseSpec{4, Activation::linear}};
  Network net(spec, 1);
  for (Tensor* p : net.parameters()) p->set_zero();
  Tensor x({2, 3}, {1.0, -2.0, 0.5, 3.0, 0.0, 1.0});
  const Tensor y = net.forward(x, false);
  for (std::size_t i = 0; i < y.size(); ++i) CHECK(y[i] == 0.0);
}

TEST_CASE("softmax outputs are distributions; equal logits give 0.2") {
  NetworkSpec spec;
  spec.input_shape = {4};
  spec.layers = {DenseSpec{5, Activation::softmax}};
  spec.loss = Loss::softmax_cross_entropy;
  Network net(spec, 3);

  for (Tensor* p : net.parameters()) p->set_zero();  // equal logits
  Tensor x({3, 4}, {0.3, -1.0, 2.0, 0.1, 1.0, 1.0, 1.0, 1.0, -5.0, 2.0, 0.0, 0.7});
  const Tensor uniform = net.forward(x, false);
  for (std::size_t i = 0; i < uniform.size(); ++i) {
    CHECK(uniform[i] == doctest::Approx(0.2).epsilon(1e-14));
  }

  Network random_net(spec, 5);
  const Tensor y = random_net.forward(x, false);
  for (std::size_t row = 0; row < 3; ++row) {
    double sum = 0.0;
    for (std::size_t j = 0; j < 5; ++j) {
      const double p = y[row * 5 + j];
      CHECK(p >= 0.0);
      sum += p;
    }
    CHECK(std::abs(sum - 1.0) < 1e-12);
  }
}

TEST_CASE("single-sample linear dense MSE gradient equals the closed form") {
  NetworkSpec spec;
  spec.input_shape = {3};
  spec.layers = {DenseSpec{1, Activation::linear}};
  Network net(spec, 11);

  Tensor x({1, 3}, {0.4, -0.7, 1.2});
  Tensor target({1, 1}, {0.9});
  net.zero_gradients();
  const Tensor pred = net.forward(x, true);
  net.backward(mse_grad(pred, target));

  const double residual = 2.0 * (pred[0] - target[0]);  // batch 1, one output
  const auto grads = net.gradients();
  for (int i = 0; i < 3; ++i) {
    CHECK((*grads[0])[i] == doctest::Approx(residual * x[i]).epsilon(1e-12));
  }
  CHECK((*grads[1])[0] == doctest::Approx(residual).epsilon(1e-12));
}

TEST_CASE("zero loss gradient produces zero parameter gradients") {
  NetworkSpec spec;
  spec.input_shape = {4};
  spec.layers = {DenseSpec{6, Activation::tanh}, DenseSpec{2, Activation::linear}};
  Network net(spec, 13);
  Tensor x({3, 4});
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = 0.1 * static_cast<double>(i);
  net.zero_gradients();
  net.forward(x, true);
  net.backward(Tensor({3, 2}));
  for (Tensor* g : net.gradients()) {
    for (std::size_t i = 0; i < g->size(); ++i) CHECK((*g)[i] == 0.0);
  }
}

TEST_CASE("backward without forward is rejected") {
  NetworkSpec spec;
  spec.input_shape = {2};
  spec.layers = {DenseSpec{2, Activation::linear}};
  Network net(spec, 1);
  CHECK_THROWS(net.backward(Tensor({1, 2})));
  Tensor x({1, 2}, {1.0, 2.0});
  net.forward(x, false);
  net.backward(Tensor({1, 2}));
  CHECK_THROWS(net.backward(Tensor({1, 2})));  // cache already consumed
}

TEST_CASE("forward rejects shape mismatches") {
  NetworkSpec spec;
  spec.input_shape = {3, 1};
  spec.layers = {LstmSpec{4, false}, DenseSpec{2, Activation::linear}};
  Network net(spec, 1);
  CHECK_THROWS(net.forward(Tensor({2, 5, 1}), false));
  CHECK_THROWS(net.forward(Tensor({2, 3}), false));
}

TEST_CASE("maxpool routes each output gradient to exactly one input") {
  MaxPool1DSpec spec{2};
  MaxPool1DLayer pool(spec, {6, 3});
  RandomStream rng(3);
  Tensor x({2, 6, 3});
  for (double& v : x.buffer()) v = rng.uniform(-1.0, 1.0);  // distinct maxima a.s.
  pool.forward(x, false, rng);
  Tensor dy({2, 3, 3});
  for (double& v : dy.buffer()) v = rng.uniform(0.5, 1.5);
  const Tensor dx = pool.backward(dy);

  double in_sum = 0.0, out_sum = 0.0;
  int nonzero = 0;
  for (std::size_t i = 0; i < dx.size(); ++i) {
    in_sum += std::abs(dx[i]);
    if (dx[i] != 0.0) ++nonzero;
  }
  for (std::size_t i = 0; i < dy.size(); ++i) out_sum += std::abs(dy[i]);
  CHECK(in_sum == doctest::Approx(out_sum).epsilon(1e-12));
  CHECK(nonzero == static_cast<int>(dy.size()));
}

TEST_CASE("inverted dropout preserves the expected activation") {
  DropoutSpec spec{0.2};
  DropoutLayer drop(spec, {50});
  RandomStream rng(71);
  Tensor x({1, 50});
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = 0.5 + 0.01 * static_cast<double>(i);

  Tensor sum({1, 50});
  const int masks = 40000;
  for (int m = 0; m < masks; ++m) {
    const Tensor y = drop.forward(x, true, rng);
    drop.backward(y);  // clear the cache
    for (std::size_t i = 0; i < y.size(); ++i) sum[i] += y[i];
  }
  const Tensor eval = drop.forward(x, false, rng);
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(sum[i] / masks == doctest::Approx(eval[i]).epsilon(0.01));
  }
}

TEST_CASE("gradient check: every layer type in isolation") {
  const double tol = 1e-4;

  NetworkSpec dense_relu;
  dense_relu.input_shape = {6};
  dense_relu.layers = {DenseSpec{8, Activation::relu}, DenseSpec{3, Activation::linear}};
  CHECK(gradient_check(dense_relu).max_rel_error <= tol);

  NetworkSpec dense_tanh;
  dense_tanh.input_shape = {6};
  dense_tanh.layers = {DenseSpec{8, Activation::tanh}, DenseSpec{3, Activation::linear}};
  CHECK(gradient_check(dense_tanh).max_rel_error <= tol);

  NetworkSpec dense_softmax;
  dense_softmax.input_shape = {6};
  dense_softmax.layers = {DenseSpec{5, Activation::softmax}};
  dense_softmax.loss = Loss::softmax_cross_entropy;
  CHECK(gradient_check(dense_softmax).max_rel_error <= tol);

  NetworkSpec lstm_last;
  lstm_last.input_shape = {5, 2};
  lstm_last.layers = {LstmSpec{6, false}, DenseSpec{3, Activation::linear}};
  CHECK(gradient_check(lstm_last).max_rel_error <= tol);

  NetworkSpec lstm_seq;
  lstm_seq.input_shape = {5, 2};
  lstm_seq.layers = {LstmSpec{6, true}, LstmSpec{4, false}, DenseSpec{2, Activation::linear}};
  CHECK(gradient_check(lstm_seq).max_rel_error <= tol);

  NetworkSpec conv;
  conv.input_shape = {9, 2};
  conv.layers = {Conv1DSpec{4, 3, Activation::tanh}, FlattenSpec{},
                 DenseSpec{3, Activation::linear}};
  CHECK(gradient_check(conv).max_rel_error <= tol);

  NetworkSpec pool;
  pool.input_shape = {8, 2};
  pool.layers = {Conv1DSpec{4, 2, Activation::linear}, MaxPool1DSpec{2}, FlattenSpec{},
                 DenseSpec{3, Activation::linear}};
  CHECK(gradient_check(pool).max_rel_error <= tol);

  NetworkSpec dropout;
  dropout.input_shape = {10};
  dropout.layers = {DenseSpec{8, Activation::tanh}, DropoutSpec{0.2},
                    DenseSpec{3, Activation::linear}};
  CHECK(gradient_check(dropout).max_rel_error <= tol);
}

TEST_CASE("gradient check: reference examples") {
  NetworkSpec a;
  a.input_shape = {8};
  a.layers = {DenseSpec{8, Activation::relu}, DenseSpec{5, Activation::softmax}};
  a.loss = Loss::softmax_cross_entropy;
  CHECK(gradient_check(a).max_rel_error <= 1e-5);

  NetworkSpec b;
  b.input_shape = {4, 1};
  b.layers = {LstmSpec{6, false}, DenseSpec{3, Activation::linear}};
  CHECK(gradient_check(b).max_rel_error <= 1e-4);

  NetworkSpec c;
  c.input_shape = {8, 1};
  c.layers = {Conv1DSpec{4, 2, Activation::relu}, MaxPool1DSpec{2}, FlattenSpec{},
              DenseSpec{2, Activation::softmax}};
  c.loss = Loss::softmax_cross_entropy;
  CHECK(gradient_check(c).max_rel_error <= 1e-5);
}

namespace {

NetworkSpec reduced_ffnn() {
  NetworkSpec spec;
  spec.input_shape = {8, 1};
  spec.loss = Loss::softmax_cross_entropy;
  spec.layers = {FlattenSpec{},
                 DenseSpec{12, Activation::relu}, DropoutSpec{0.2},
                 DenseSpec{12, Activation::relu}, DropoutSpec{0.2},
                 DenseSpec{8, Activation::relu},
                 DenseSpec{8, Activation::relu}, DropoutSpec{0.2},
                 DenseSpec{4, Activation::relu},
                 DenseSpec{5, Activation::softmax}};
  return spec;
}

NetworkSpec reduced_lstm() {
  NetworkSpec spec;
  spec.input_shape = {6, 1};
  spec.loss = Loss::softmax_cross_entropy;
  spec.layers = {LstmSpec{8, true}, LstmSpec{6, false},
                 DenseSpec{8, Activation::relu}, DropoutSpec{0.2},
                 DenseSpec{4, Activation::relu}, DropoutSpec{0.2},
                 DenseSpec{5, Activation::softmax}};
  return spec;
}

NetworkSpec reduced_cnn() {
  NetworkSpec spec;
  spec.input_shape = {9, 1};
  spec.loss = Loss::softmax_cross_entropy;
  spec.layers = {Conv1DSpec{6, 2, Activation::relu}, MaxPool1DSpec{2},
                 Conv1DSpec{6, 2, Activation::relu}, MaxPool1DSpec{2}, FlattenSpec{},
                 DenseSpec{8, Activation::relu}, DenseSpec{5, Activation::softmax}};
  return spec;
}

NetworkSpec reduced_regressor() {
  NetworkSpec spec;
  spec.input_shape = {5};
  spec.loss = Loss::mse;
  spec.layers = {DenseSpec{16, Activation::relu}, DenseSpec{8, Activation::relu},
                 DenseSpec{5, Activation::linear}};
  return spec;
}

}  // namespace

TEST_CASE("gradient check: reduced reference stacks stay under 2000 parameters") {
  for (const NetworkSpec& spec :
       {reduced_ffnn(), reduced_lstm(), reduced_cnn(), reduced_regressor()}) {
    CHECK(param_count(spec) <= 2000);
    const GradCheckResult res = gradient_check(spec);
    CHECK(res.max_rel_error <= 1e-4);
  }
}

TEST_CASE("dropout forward is deterministic given the dropout seed") {
  NetworkSpec spec = reduced_ffnn();
  Network a(spec, 21), b(spec, 21);
  Tensor x({4, 8, 1});
  RandomStream rng(5);
  for (double& v : x.buffer()) v = rng.uniform(1.0, 4.0);
  const Tensor ya = a.forward(x, true);
  const Tensor yb = b.forward(x, true);
  for (std::size_t i = 0; i < ya.size(); ++i) CHECK(ya[i] == yb[i]);
}
