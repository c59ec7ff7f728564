#ifndef TGIC_TENSOR_H_
#define TGIC_TENSOR_H_

#include <initializer_list>
#include <memory>
#include <numeric>
#include <vector>

#include "tgic/common.h"

namespace tgic {

// Dense row-major tensor of doubles. Copies are shallow (shared storage);
// use clone() for a deep copy. Kept deliberately small: shape, data, a few
// constructors. All math lives in kernels.h / graph.h.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape, double fill = 0.0) : shape_(std::move(shape)) {
    buf_ = std::make_shared<std::vector<double>>(count(shape_), fill);
  }
  Tensor(std::initializer_list<int> shape, double fill = 0.0)
      : Tensor(std::vector<int>(shape), fill) {}

  static Tensor scalar(double v) {
    Tensor t({1});
    (*t.buf_)[0] = v;
    return t;
  }
  static Tensor from(std::vector<int> shape, std::vector<double> data) {
    TGIC_CHECK(count(shape) == data.size(), "tensor data/shape mismatch");
    Tensor t;
    t.shape_ = std::move(shape);
    t.buf_ = std::make_shared<std::vector<double>>(std::move(data));
    return t;
  }

  bool defined() const { return buf_ != nullptr; }
  size_t size() const { return buf_ ? buf_->size() : 0; }
  int ndim() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
  const std::vector<int>& shape() const { return shape_; }

  double* data() { return buf_->data(); }
  const double* data() const { return buf_->data(); }
  double& operator[](size_t i) { return (*buf_)[i]; }
  double operator[](size_t i) const { return (*buf_)[i]; }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  // Shares storage; only the shape changes.
  Tensor reshaped(std::vector<int> shape) const {
    TGIC_CHECK(count(shape) == size(), "reshape size mismatch");
    Tensor t;
    t.buf_ = buf_;
    t.shape_ = std::move(shape);
    return t;
  }

  Tensor clone() const {
    Tensor t;
    t.shape_ = shape_;
    t.buf_ = std::make_shared<std::vector<double>>(*buf_);
    return t;
  }

  void fill(double v) { std::fill(buf_->begin(), buf_->end(), v); }

  bool all_finite() const;

  static size_t count(const std::vector<int>& shape) {
    size_t n = 1;
    for (int d : shape) {
      TGIC_CHECK(d >= 0, "negative tensor dim");
      n *= static_cast<size_t>(d);
    }
    return n;
  }

 private:
  std::shared_ptr<std::vector<double>> buf_;
  std::vector<int> shape_;
};

}  // namespace tgic

#endif  // TGIC_TENSOR_H_
