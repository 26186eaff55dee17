#include "chanlearn/nn/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace chanlearn::nn {

namespace {

void apply_activation(Activation act, Tensor& z) {
  switch (act) {
    case Activation::linear:
      return;
    case Activation::relu:
      for (double& v : z.buffer()) v = v > 0.0 ? v : 0.0;
      return;
    case Activation::tanh:
      for (double& v : z.buffer()) v = std::tanh(v);
      return;
    case Activation::softmax: {
      // Row-wise, stabilized by the row max.
      const std::size_t cols = z.shape().back();
      const std::size_t rows = z.size() / cols;
      for (std::size_t i = 0; i < rows; ++i) {
        double* row = z.data() + i * cols;
        double m = row[0];
        for (std::size_t j = 1; j < cols; ++j) m = std::max(m, row[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < cols; ++j) {
          row[j] = std::exp(row[j] - m);
          sum += row[j];
        }
        for (std::size_t j = 0; j < cols; ++j) row[j] /= sum;
      }
      return;
    }
  }
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

void glorot_fill(Tensor& t, std::size_t fan_in, std::size_t fan_out,
                 RandomStream& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& v : t.buffer()) v = rng.uniform(-limit, limit);
}

void orthogonal_fill_blocks(Tensor& t, std::size_t rows, std::size_t block_cols,
                            RandomStream& rng) {
  // Per-block orthogonal init (QR of a Gaussian draw, sign-fixed by the R
  // diagonal); recurrent kernels train markedly better orthogonal than
  // Glorot-uniform on stacked cells.
  const std::size_t blocks = t.size() / (rows * block_cols);
  MatMap full(t.data(), rows, blocks * block_cols);
  for (std::size_t b = 0; b < blocks; ++b) {
    Eigen::MatrixXd g(rows, block_cols);
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < block_cols; ++j) g(i, j) = rng.normal();
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(rows, block_cols);
    const Eigen::MatrixXd r = qr.matrixQR().topRows(block_cols).triangularView<Eigen::Upper>();
    for (std::size_t j = 0; j < block_cols; ++j) {
      if (r(j, j) < 0.0) q.col(j) = -q.col(j);
    }
    full.middleCols(b * block_cols, block_cols) = q;
  }
}

void Layer::require_cache() const {
  if (!has_cache_) {
    throw std::logic_error(std::string(kind()) +
                           ": backward without a matching forward (stale cache)");
  }
}

void Layer::consume_cache() { has_cache_ = false; }

void Layer::batch_shape_checked(const Tensor& x) const {
  if (x.rank() != in_shape_.size() + 1) {
    throw std::invalid_argument(std::string(kind()) + ": input rank mismatch, got " +
                                shape_string(x.shape()));
  }
  for (std::size_t i = 0; i < in_shape_.size(); ++i) {
    if (x.dim(i + 1) != in_shape_[i]) {
      throw std::invalid_argument(std::string(kind()) + ": input shape " +
                                  shape_string(x.shape()) + " does not match " +
                                  shape_string(in_shape_));
    }
  }
}

// ---------------------------------------------------------------------------
// Dense

DenseLayer::DenseLayer(const DenseSpec& spec, const std::vector<std::size_t>& in_shape,
                       RandomStream& init)
    : act_(spec.activation) {
  if (in_shape.size() != 1) {
    throw std::invalid_argument("dense: expects a flat input, got " + shape_string(in_shape));
  }
  in_ = in_shape[0];
  out_ = static_cast<std::size_t>(spec.units);
  in_shape_ = in_shape;
  out_shape_ = {out_};
  w_ = Tensor({in_, out_});
  b_ = Tensor({out_});
  dw_ = Tensor({in_, out_});
  db_ = Tensor({out_});
  glorot_fill(w_, in_, out_, init);
}

Tensor DenseLayer::forward(const Tensor& x, bool /*training*/, RandomStream& /*rng*/) {
  batch_shape_checked(x);
  const std::size_t batch = x.dim(0);
  Tensor z({batch, out_});
  z.mat(batch, out_).noalias() = x.mat(batch, in_) * w_.mat(in_, out_);
  z.mat(batch, out_).rowwise() += b_.vec().transpose();
  x_cache_ = x;
  z_cache_ = z;
  apply_activation(act_, z);
  if (act_ == Activation::tanh || act_ == Activation::softmax) y_cache_ = z;
  arm_cache();
  return z;
}

Tensor DenseLayer::backward_impl(const Tensor& dz) {
  const std::size_t batch = dz.dim(0);
  dw_.mat(in_, out_).noalias() += x_cache_.mat(batch, in_).transpose() * dz.mat(batch, out_);
  db_.vec().noalias() += dz.mat(batch, out_).colwise().sum().transpose();
  Tensor dx({batch, in_});
  dx.mat(batch, in_).noalias() = dz.mat(batch, out_) * w_.mat(in_, out_).transpose();
  consume_cache();
  return dx;
}

Tensor DenseLayer::backward(const Tensor& dy) {
  require_cache();
  if (!dy.same_shape(z_cache_)) {
    throw std::invalid_argument("dense backward: gradient shape mismatch");
  }
  const std::size_t batch = dy.dim(0);
  Tensor dz = dy;
  switch (act_) {
    case Activation::linear:
      break;
    case Activation::relu:
      for (std::size_t i = 0; i < dz.size(); ++i) {
        if (z_cache_[i] <= 0.0) dz[i] = 0.0;
      }
      break;
    case Activation::tanh:
      for (std::size_t i = 0; i < dz.size(); ++i) {
        dz[i] *= 1.0 - y_cache_[i] * y_cache_[i];
      }
      break;
    case Activation::softmax:
      // dz_i = p_i * (dy_i - sum_j dy_j p_j), row-wise.
      for (std::size_t row = 0; row < batch; ++row) {
        const double* p = y_cache_.data() + row * out_;
        double* g = dz.data() + row * out_;
        double dot = 0.0;
        for (std::size_t j = 0; j < out_; ++j) dot += g[j] * p[j];
        for (std::size_t j = 0; j < out_; ++j) g[j] = p[j] * (g[j] - dot);
      }
      break;
  }
  return backward_impl(dz);
}

Tensor DenseLayer::backward_preactivation(const Tensor& dz) {
  require_cache();
  if (!dz.same_shape(z_cache_)) {
    throw std::invalid_argument("dense backward: gradient shape mismatch");
  }
  return backward_impl(dz);
}

// ---------------------------------------------------------------------------
// LSTM
//
// Gate layout along the 4u axis: [input, forget, cell candidate, output].
// c_t = f*c_{t-1} + i*g,  h_t = o*tanh(c_t); initial h, c are zero.

LstmLayer::LstmLayer(const LstmSpec& spec, const std::vector<std::size_t>& in_shape,
                     RandomStream& init)
    : return_sequences_(spec.return_sequences) {
  if (in_shape.size() != 2) {
    throw std::invalid_argument("lstm: expects a sequence input, got " + shape_string(in_shape));
  }
  steps_ = in_shape[0];
  in_ = in_shape[1];
  units_ = static_cast<std::size_t>(spec.units);
  in_shape_ = in_shape;
  out_shape_ = return_sequences_ ? std::vector<std::size_t>{steps_, units_}
                                 : std::vector<std::size_t>{units_};
  wx_ = Tensor({in_, 4 * units_});
  wh_ = Tensor({units_, 4 * units_});
  b_ = Tensor({4 * units_});
  dwx_ = Tensor({in_, 4 * units_});
  dwh_ = Tensor({units_, 4 * units_});
  db_ = Tensor({4 * units_});
  glorot_fill(wx_, in_, 4 * units_, init);
  orthogonal_fill_blocks(wh_, units_, units_, init);
  // Forget-gate bias starts at 1 so early training does not flush the cell.
  for (std::size_t j = units_; j < 2 * units_; ++j) b_[j] = 1.0;
}

Tensor LstmLayer::forward(const Tensor& x, bool /*training*/, RandomStream& /*rng*/) {
  batch_shape_checked(x);
  const std::size_t batch = x.dim(0);
  batch_ = batch;
  x_cache_ = x;
  gates_.assign(steps_, Tensor({batch, 4 * units_}));
  cell_.assign(steps_, Tensor({batch, units_}));
  cell_tanh_.assign(steps_, Tensor({batch, units_}));
  hidden_.assign(steps_, Tensor({batch, units_}));

  ConstMatMap xin(x.data(), batch * steps_, in_);
  Tensor h_prev({batch, units_});
  Tensor c_prev({batch, units_});

  for (std::size_t t = 0; t < steps_; ++t) {
    Tensor& z = gates_[t];
    // x_t rows of the [B*T, in] view are strided by T; gather once per step.
    Tensor xt({batch, in_});
    for (std::size_t row = 0; row < batch; ++row) {
      const double* src = x.data() + (row * steps_ + t) * in_;
      std::copy(src, src + in_, xt.data() + row * in_);
    }
    z.mat(batch, 4 * units_).noalias() = xt.mat(batch, in_) * wx_.mat(in_, 4 * units_);
    z.mat(batch, 4 * units_).noalias() +=
        h_prev.mat(batch, units_) * wh_.mat(units_, 4 * units_);
    z.mat(batch, 4 * units_).rowwise() += b_.vec().transpose();

    Tensor& c = cell_[t];
    Tensor& ct = cell_tanh_[t];
    Tensor& h = hidden_[t];
    for (std::size_t row = 0; row < batch; ++row) {
      double* zr = z.data() + row * 4 * units_;
      const double* cp = c_prev.data() + row * units_;
      double* cr = c.data() + row * units_;
      double* ctr = ct.data() + row * units_;
      double* hr = h.data() + row * units_;
      for (std::size_t j = 0; j < units_; ++j) {
        const double ig = sigmoid(zr[j]);
        const double fg = sigmoid(zr[units_ + j]);
        const double gg = std::tanh(zr[2 * units_ + j]);
        const double og = sigmoid(zr[3 * units_ + j]);
        // Cache activated gates in place of the pre-activations.
        zr[j] = ig;
        zr[units_ + j] = fg;
        zr[2 * units_ + j] = gg;
        zr[3 * units_ + j] = og;
        cr[j] = fg * cp[j] + ig * gg;
        ctr[j] = std::tanh(cr[j]);
        hr[j] = og * ctr[j];
      }
    }
    h_prev = h;
    c_prev = c;
  }

  arm_cache();
  if (return_sequences_) {
    Tensor out({batch, steps_, units_});
    for (std::size_t t = 0; t < steps_; ++t) {
      for (std::size_t row = 0; row < batch; ++row) {
        std::copy(hidden_[t].data() + row * units_, hidden_[t].data() + (row + 1) * units_,
                  out.data() + (row * steps_ + t) * units_);
      }
    }
    return out;
  }
  return hidden_.back();
}

Tensor LstmLayer::backward(const Tensor& dy) {
  require_cache();
  const std::size_t batch = batch_;
  const std::size_t u = units_;
  if (return_sequences_) {
    if (dy.rank() != 3 || dy.dim(0) != batch || dy.dim(1) != steps_ || dy.dim(2) != u) {
      throw std::invalid_argument("lstm backward: gradient shape mismatch");
    }
  } else {
    if (dy.rank() != 2 || dy.dim(0) != batch || dy.dim(1) != u) {
      throw std::invalid_argument("lstm backward: gradient shape mismatch");
    }
  }

  Tensor dx({batch, steps_, in_});
  Tensor dh_next({batch, u});
  Tensor dc_next({batch, u});
  Tensor dz({batch, 4 * u});
  Tensor xt({batch, in_});
  Tensor dxt({batch, in_});

  for (std::size_t t = steps_; t-- > 0;) {
    // Gradient flowing into h_t: from the output at step t plus recurrence.
    Tensor dh = dh_next;
    if (return_sequences_) {
      for (std::size_t row = 0; row < batch; ++row) {
        const double* src = dy.data() + (row * steps_ + t) * u;
        double* dst = dh.data() + row * u;
        for (std::size_t j = 0; j < u; ++j) dst[j] += src[j];
      }
    } else if (t == steps_ - 1) {
      dh.vec() += dy.vec();
    }

    const Tensor& gates = gates_[t];
    const Tensor& ct = cell_tanh_[t];
    for (std::size_t row = 0; row < batch; ++row) {
      const double* g = gates.data() + row * 4 * u;
      const double* ctr = ct.data() + row * u;
      const double* cprev =
          t > 0 ? cell_[t - 1].data() + row * u : nullptr;
      const double* dhr = dh.data() + row * u;
      double* dcn = dc_next.data() + row * u;
      double* dzr = dz.data() + row * 4 * u;
      for (std::size_t j = 0; j < u; ++j) {
        const double ig = g[j], fg = g[u + j], gg = g[2 * u + j], og = g[3 * u + j];
        const double dout = dhr[j] * ctr[j];                       // d o
        const double dc = dhr[j] * og * (1.0 - ctr[j] * ctr[j]) + dcn[j];
        const double din = dc * gg;                                // d i
        const double dfor = dc * (cprev ? cprev[j] : 0.0);         // d f
        const double dcand = dc * ig;                              // d g
        dcn[j] = dc * fg;
        dzr[j] = din * ig * (1.0 - ig);
        dzr[u + j] = dfor * fg * (1.0 - fg);
        dzr[2 * u + j] = dcand * (1.0 - gg * gg);
        dzr[3 * u + j] = dout * og * (1.0 - og);
      }
    }

    for (std::size_t row = 0; row < batch; ++row) {
      const double* src = x_cache_.data() + (row * steps_ + t) * in_;
      std::copy(src, src + in_, xt.data() + row * in_);
    }
    dwx_.mat(in_, 4 * u).noalias() += xt.mat(batch, in_).transpose() * dz.mat(batch, 4 * u);
    if (t > 0) {
      dwh_.mat(u, 4 * u).noalias() +=
          hidden_[t - 1].mat(batch, u).transpose() * dz.mat(batch, 4 * u);
    }
    db_.vec().noalias() += dz.mat(batch, 4 * u).colwise().sum().transpose();

    dxt.mat(batch, in_).noalias() = dz.mat(batch, 4 * u) * wx_.mat(in_, 4 * u).transpose();
    for (std::size_t row = 0; row < batch; ++row) {
      std::copy(dxt.data() + row * in_, dxt.data() + (row + 1) * in_,
                dx.data() + (row * steps_ + t) * in_);
    }
    dh_next.mat(batch, u).noalias() = dz.mat(batch, 4 * u) * wh_.mat(u, 4 * u).transpose();
  }

  consume_cache();
  return dx;
}

// ---------------------------------------------------------------------------
// Conv1D ('valid' padding, stride 1) via im2col

Conv1DLayer::Conv1DLayer(const Conv1DSpec& spec, const std::vector<std::size_t>& in_shape,
                         RandomStream& init)
    : act_(spec.activation) {
  if (in_shape.size() != 2) {
    throw std::invalid_argument("conv1d: expects a sequence input, got " + shape_string(in_shape));
  }
  in_steps_ = in_shape[0];
  in_ch_ = in_shape[1];
  filters_ = static_cast<std::size_t>(spec.filters);
  kernel_ = static_cast<std::size_t>(spec.kernel_size);
  if (in_steps_ < kernel_) throw std::invalid_argument("conv1d: sequence shorter than kernel");
  out_steps_ = in_steps_ - kernel_ + 1;
  in_shape_ = in_shape;
  out_shape_ = {out_steps_, filters_};
  k_ = Tensor({kernel_, in_ch_, filters_});
  b_ = Tensor({filters_});
  dk_ = Tensor({kernel_, in_ch_, filters_});
  db_ = Tensor({filters_});
  glorot_fill(k_, kernel_ * in_ch_, kernel_ * filters_, init);
}

Tensor Conv1DLayer::forward(const Tensor& x, bool /*training*/, RandomStream& /*rng*/) {
  batch_shape_checked(x);
  const std::size_t batch = x.dim(0);
  batch_ = batch;
  const std::size_t patch = kernel_ * in_ch_;

  cols_cache_ = Tensor({batch * out_steps_, patch});
  for (std::size_t row = 0; row < batch; ++row) {
    const double* xr = x.data() + row * in_steps_ * in_ch_;
    for (std::size_t t = 0; t < out_steps_; ++t) {
      double* dst = cols_cache_.data() + (row * out_steps_ + t) * patch;
      std::copy(xr + t * in_ch_, xr + (t + kernel_) * in_ch_, dst);
    }
  }

  Tensor z({batch, out_steps_, filters_});
  MatMap zm(z.data(), batch * out_steps_, filters_);
  zm.noalias() = cols_cache_.mat(batch * out_steps_, patch) * k_.mat(patch, filters_);
  zm.rowwise() += b_.vec().transpose();
  z_cache_ = z;
  apply_activation(act_, z);
  arm_cache();
  return z;
}

Tensor Conv1DLayer::backward(const Tensor& dy) {
  require_cache();
  if (dy.rank() != 3 || dy.dim(0) != batch_ || dy.dim(1) != out_steps_ ||
      dy.dim(2) != filters_) {
    throw std::invalid_argument("conv1d backward: gradient shape mismatch");
  }
  const std::size_t batch = batch_;
  const std::size_t patch = kernel_ * in_ch_;

  Tensor dz = dy;
  if (act_ == Activation::relu) {
    for (std::size_t i = 0; i < dz.size(); ++i) {
      if (z_cache_[i] <= 0.0) dz[i] = 0.0;
    }
  } else if (act_ == Activation::tanh) {
    for (std::size_t i = 0; i < dz.size(); ++i) {
      const double th = std::tanh(z_cache_[i]);
      dz[i] *= 1.0 - th * th;
    }
  }

  ConstMatMap dzm(dz.data(), batch * out_steps_, filters_);
  dk_.mat(patch, filters_).noalias() +=
      cols_cache_.mat(batch * out_steps_, patch).transpose() * dzm;
  db_.vec().noalias() += dzm.colwise().sum().transpose();

  Tensor dcols({batch * out_steps_, patch});
  dcols.mat(batch * out_steps_, patch).noalias() = dzm * k_.mat(patch, filters_).transpose();

  // col2im: scatter-add patches back onto the input grid.
  Tensor dx({batch, in_steps_, in_ch_});
  for (std::size_t row = 0; row < batch; ++row) {
    double* dxr = dx.data() + row * in_steps_ * in_ch_;
    for (std::size_t t = 0; t < out_steps_; ++t) {
      const double* src = dcols.data() + (row * out_steps_ + t) * patch;
      double* dst = dxr + t * in_ch_;
      for (std::size_t i = 0; i < patch; ++i) dst[i] += src[i];
    }
  }
  consume_cache();
  return dx;
}

// ---------------------------------------------------------------------------
// MaxPool1D (stride = pool size, 'valid')

MaxPool1DLayer::MaxPool1DLayer(const MaxPool1DSpec& spec,
                               const std::vector<std::size_t>& in_shape) {
  if (in_shape.size() != 2) {
    throw std::invalid_argument("maxpool1d: expects a sequence input, got " + shape_string(in_shape));
  }
  pool_ = static_cast<std::size_t>(spec.pool_size);
  in_steps_ = in_shape[0];
  ch_ = in_shape[1];
  if (in_steps_ < pool_) throw std::invalid_argument("maxpool1d: sequence shorter than pool");
  out_steps_ = in_steps_ / pool_;
  in_shape_ = in_shape;
  out_shape_ = {out_steps_, ch_};
}

Tensor MaxPool1DLayer::forward(const Tensor& x, bool /*training*/, RandomStream& /*rng*/) {
  batch_shape_checked(x);
  const std::size_t batch = x.dim(0);
  batch_ = batch;
  Tensor y({batch, out_steps_, ch_});
  argmax_.assign(y.size(), 0);
  for (std::size_t row = 0; row < batch; ++row) {
    const double* xr = x.data() + row * in_steps_ * ch_;
    for (std::size_t t = 0; t < out_steps_; ++t) {
      for (std::size_t c = 0; c < ch_; ++c) {
        std::size_t best = (t * pool_) * ch_ + c;
        double best_v = xr[best];
        for (std::size_t p = 1; p < pool_; ++p) {
          const std::size_t idx = (t * pool_ + p) * ch_ + c;
          if (xr[idx] > best_v) {  // ties keep the earliest position
            best_v = xr[idx];
            best = idx;
          }
        }
        const std::size_t out_idx = (row * out_steps_ + t) * ch_ + c;
        y[out_idx] = best_v;
        argmax_[out_idx] = row * in_steps_ * ch_ + best;
      }
    }
  }
  arm_cache();
  return y;
}

Tensor MaxPool1DLayer::backward(const Tensor& dy) {
  require_cache();
  if (dy.rank() != 3 || dy.dim(0) != batch_ || dy.dim(1) != out_steps_ || dy.dim(2) != ch_) {
    throw std::invalid_argument("maxpool1d backward: gradient shape mismatch");
  }
  Tensor dx({batch_, in_steps_, ch_});
  for (std::size_t i = 0; i < dy.size(); ++i) dx[argmax_[i]] += dy[i];
  consume_cache();
  return dx;
}

// ---------------------------------------------------------------------------
// Dropout (inverted: scaled at train time, identity in eval)

DropoutLayer::DropoutLayer(const DropoutSpec& spec, const std::vector<std::size_t>& in_shape)
    : rate_(spec.rate) {
  in_shape_ = in_shape;
  out_shape_ = in_shape;
}

Tensor DropoutLayer::forward(const Tensor& x, bool training, RandomStream& rng) {
  batch_shape_checked(x);
  if (!training || rate_ == 0.0) {
    mask_used_ = false;
    arm_cache();
    return x;
  }
  const double keep_scale = 1.0 / (1.0 - rate_);
  mask_ = Tensor(x.shape());
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double m = rng.uniform() >= rate_ ? keep_scale : 0.0;
    mask_[i] = m;
    y[i] = x[i] * m;
  }
  mask_used_ = true;
  arm_cache();
  return y;
}

Tensor DropoutLayer::backward(const Tensor& dy) {
  require_cache();
  consume_cache();
  if (!mask_used_) return dy;
  if (!dy.same_shape(mask_)) {
    throw std::invalid_argument("dropout backward: gradient shape mismatch");
  }
  Tensor dx(dy.shape());
  for (std::size_t i = 0; i < dy.size(); ++i) dx[i] = dy[i] * mask_[i];
  return dx;
}

// ---------------------------------------------------------------------------
// Flatten

FlattenLayer::FlattenLayer(const std::vector<std::size_t>& in_shape) {
  in_shape_ = in_shape;
  out_shape_ = {shape_product(in_shape)};
}

Tensor FlattenLayer::forward(const Tensor& x, bool /*training*/, RandomStream& /*rng*/) {
  batch_shape_checked(x);
  batch_ = x.dim(0);
  arm_cache();
  return x.reshaped({batch_, out_shape_[0]});
}

Tensor FlattenLayer::backward(const Tensor& dy) {
  require_cache();
  consume_cache();
  std::vector<std::size_t> shape{batch_};
  shape.insert(shape.end(), in_shape_.begin(), in_shape_.end());
  return dy.reshaped(std::move(shape));
}

// ---------------------------------------------------------------------------

std::unique_ptr<Layer> make_layer(const LayerSpec& spec,
                                  const std::vector<std::size_t>& in_shape,
                                  RandomStream& init) {
  return std::visit(
      [&](const auto& s) -> std::unique_ptr<Layer> {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, DenseSpec>) {
          return std::make_unique<DenseLayer>(s, in_shape, init);
        } else if constexpr (std::is_same_v<T, LstmSpec>) {
          return std::make_unique<LstmLayer>(s, in_shape, init);
        } else if constexpr (std::is_same_v<T, Conv1DSpec>) {
          return std::make_unique<Conv1DLayer>(s, in_shape, init);
        } else if constexpr (std::is_same_v<T, MaxPool1DSpec>) {
          return std::make_unique<MaxPool1DLayer>(s, in_shape);
        } else if constexpr (std::is_same_v<T, DropoutSpec>) {
          return std::make_unique<DropoutLayer>(s, in_shape);
        } else {
          return std::make_unique<FlattenLayer>(in_shape);
        }
      },
      spec);
}

}  // namespace chanlearn::nn
