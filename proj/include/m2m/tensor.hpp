#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "m2m/rng.hpp"

namespace m2m {

// Dense row-major tensor of doubles. All training math runs in double so the
// finite-difference checks are meaningful.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int64_t> shape, double fill = 0.0);
  Tensor(std::initializer_list<int64_t> shape, double fill = 0.0)
      : Tensor(std::vector<int64_t>(shape), fill) {}

  static Tensor scalar(double v);
  static Tensor randn(std::vector<int64_t> shape, Rng& rng, double stddev = 1.0);

  const std::vector<int64_t>& shape() const { return shape_; }
  int64_t numel() const { return static_cast<int64_t>(data_.size()); }
  int64_t dim(size_t i) const { return shape_.at(i); }
  size_t ndim() const { return shape_.size(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double& operator[](int64_t i) { return data_[i]; }
  double operator[](int64_t i) const { return data_[i]; }

  // NCHW accessor for 4-d tensors.
  double& at4(int64_t n, int64_t c, int64_t h, int64_t w) {
    return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }
  double at4(int64_t n, int64_t c, int64_t h, int64_t w) const {
    return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }

  void fill(double v);
  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool all_finite() const;
  std::string shape_str() const;

 private:
  std::vector<int64_t> shape_;
  std::vector<double> data_;
};

// C = A(m,k) * B(k,n), all row-major, accumulate optionally. Backed by Eigen.
void gemm(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n,
          bool accumulate = false);
// C = A^T(m,k) * B(k,n) where A is stored (k,m) row-major.
void gemm_at(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n,
             bool accumulate = false);
// C = A(m,k) * B^T(k,n) where B is stored (n,k) row-major.
void gemm_bt(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n,
             bool accumulate = false);

}  // namespace m2m
