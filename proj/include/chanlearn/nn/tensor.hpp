#pragma once

#include <cstddef>
#include <new>
#include <vector>

#include <Eigen/Dense>

namespace chanlearn::nn {

using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<MatRM>;
using ConstMatMap = Eigen::Map<const MatRM>;
using VecMap = Eigen::Map<Eigen::VectorXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

/// Fixed 64-byte alignment for all tensor storage. Vectorized kernels pick
/// their peel/remainder split from the buffer address; pinning the alignment
/// makes every arithmetic reduction order a pure function of the shapes, so
/// reruns are bit-identical regardless of heap state.
template <class T, std::size_t Align>
struct AlignedAllocator {
  using value_type = T;
  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U, Align>&) {}
  T* allocate(std::size_t n) {
    return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t{Align}));
  }
  void deallocate(T* p, std::size_t n) {
    ::operator delete(p, n * sizeof(T), std::align_val_t{Align});
  }
  template <class U>
  struct rebind {
    using other = AlignedAllocator<U, Align>;
  };
  bool operator==(const AlignedAllocator&) const { return true; }
  bool operator!=(const AlignedAllocator&) const { return false; }
};

using AlignedBuffer = std::vector<double, AlignedAllocator<double, 64>>;

/// Dense row-major double tensor.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape);
  Tensor(std::vector<std::size_t> shape, AlignedBuffer data);
  Tensor(std::vector<std::size_t> shape, const std::vector<double>& data);
  Tensor(std::vector<std::size_t> shape, std::initializer_list<double> data);

  static Tensor zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t size() const { return data_.size(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  AlignedBuffer& buffer() { return data_; }
  const AlignedBuffer& buffer() const { return data_; }

  /// Same buffer, new shape (sizes must agree).
  Tensor reshaped(std::vector<std::size_t> shape) const;

  void fill(double v);
  void set_zero() { fill(0.0); }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  /// View as a rows x cols matrix; total size must match.
  MatMap mat(std::size_t rows, std::size_t cols);
  ConstMatMap mat(std::size_t rows, std::size_t cols) const;
  VecMap vec();
  ConstVecMap vec() const;

 private:
  std::vector<std::size_t> shape_;
  AlignedBuffer data_;
};

std::size_t shape_product(const std::vector<std::size_t>& shape);
std::string shape_string(const std::vector<std::size_t>& shape);

}  // namespace chanlearn::nn
