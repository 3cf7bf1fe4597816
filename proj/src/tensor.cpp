#include "m2m/tensor.hpp"

#include <Eigen/Core>

#include <cmath>
#include <sstream>

#include "m2m/errors.hpp"

namespace m2m {

namespace {
using MatMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstMatMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
}  // namespace

Tensor::Tensor(std::vector<int64_t> shape, double fill) : shape_(std::move(shape)) {
  int64_t n = 1;
  for (int64_t d : shape_) {
    if (d <= 0) throw ValidationError("tensor dimension must be positive");
    n *= d;
  }
  data_.assign(static_cast<size_t>(n), fill);
}

Tensor Tensor::scalar(double v) {
  Tensor t({1});
  t.data_[0] = v;
  return t;
}

Tensor Tensor::randn(std::vector<int64_t> shape, Rng& rng, double stddev) {
  Tensor t(std::move(shape));
  for (auto& v : t.data_) v = rng.normal() * stddev;
  return t;
}

void Tensor::fill(double v) { data_.assign(data_.size(), v); }

bool Tensor::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << "(";
  for (size_t i = 0; i < shape_.size(); ++i) os << (i ? "," : "") << shape_[i];
  os << ")";
  return os.str();
}

void gemm(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n,
          bool accumulate) {
  ConstMatMap A(a, m, k), B(b, k, n);
  MatMap C(c, m, n);
  if (accumulate)
    C.noalias() += A * B;
  else
    C.noalias() = A * B;
}

void gemm_at(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n,
             bool accumulate) {
  ConstMatMap A(a, k, m), B(b, k, n);
  MatMap C(c, m, n);
  if (accumulate)
    C.noalias() += A.transpose() * B;
  else
    C.noalias() = A.transpose() * B;
}

void gemm_bt(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n,
             bool accumulate) {
  ConstMatMap A(a, m, k), B(b, n, k);
  MatMap C(c, m, n);
  if (accumulate)
    C.noalias() += A * B.transpose();
  else
    C.noalias() = A * B.transpose();
}

}  // namespace m2m
