#include "chanlearn/nn/tensor.hpp"

#include <numeric>
#include <stdexcept>
#include <string>

namespace chanlearn::nn {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_product(shape_), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> shape, AlignedBuffer data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_product(shape_)) {
    throw std::invalid_argument("Tensor: data length does not match shape " +
                                shape_string(shape_));
  }
}

Tensor::Tensor(std::vector<std::size_t> shape, const std::vector<double>& data)
    : shape_(std::move(shape)), data_(data.begin(), data.end()) {
  if (data_.size() != shape_product(shape_)) {
    throw std::invalid_argument("Tensor: data length does not match shape " +
                                shape_string(shape_));
  }
}

Tensor::Tensor(std::vector<std::size_t> shape, std::initializer_list<double> data)
    : shape_(std::move(shape)), data_(data.begin(), data.end()) {
  if (data_.size() != shape_product(shape_)) {
    throw std::invalid_argument("Tensor: data length does not match shape " +
                                shape_string(shape_));
  }
}

Tensor Tensor::reshaped(std::vector<std::size_t> shape) const {
  if (shape_product(shape) != size()) {
    throw std::invalid_argument("Tensor::reshaped: size mismatch " +
                                shape_string(shape_) + " -> " + shape_string(shape));
  }
  return Tensor(std::move(shape), data_);
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

MatMap Tensor::mat(std::size_t rows, std::size_t cols) {
  if (rows * cols != size()) {
    throw std::invalid_argument("Tensor::mat: view size mismatch");
  }
  return MatMap(data_.data(), rows, cols);
}

ConstMatMap Tensor::mat(std::size_t rows, std::size_t cols) const {
  if (rows * cols != size()) {
    throw std::invalid_argument("Tensor::mat: view size mismatch");
  }
  return ConstMatMap(data_.data(), rows, cols);
}

VecMap Tensor::vec() { return VecMap(data_.data(), size()); }
ConstVecMap Tensor::vec() const { return ConstVecMap(data_.data(), size()); }

}  // namespace chanlearn::nn
