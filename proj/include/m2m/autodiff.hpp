#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "m2m/tensor.hpp"

namespace m2m::ad {

// Reverse-mode autodiff over Tensor. Graphs are built per training step and
// discarded after backward(); parameter leaves persist across steps and are
// updated in place by the optimizer.
class Node;
using Var = std::shared_ptr<Node>;

class Node {
 public:
  Tensor value;
  Tensor grad;  // allocated on demand, same shape as value
  bool requires_grad = false;
  bool is_leaf = true;
  std::string name;  // set for parameters
  std::vector<Var> inputs;
  // Reads this->grad, accumulates into inputs' grads.
  std::function<void(Node&)> backprop;

  Tensor& ensure_grad() {
    if (grad.numel() != value.numel()) grad = Tensor(value.shape());
    return grad;
  }
  void zero_grad() {
    if (grad.numel() == value.numel())
      grad.fill(0.0);
    else
      grad = Tensor(value.shape());
  }
  double scalar() const { return value[0]; }
};

Var constant(Tensor v);
Var param(Tensor v, std::string name);
// Fresh node wrapping the same value with no history.
Var detach(const Var& x);

// Runs reverse accumulation from a scalar root. Leaf gradients must be
// zeroed by the caller beforehand (optimizers own that).
void backward(const Var& root);

// While alive, ops record no history: outputs are constants. Used for
// evaluation passes and for loss terms that only feed the report.
class NoGradScope {
 public:
  NoGradScope();
  ~NoGradScope();
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;
};
bool grad_enabled();

// ---- elementwise / structural ----
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var scale(const Var& a, double c);
// y = sum_i coeff[i] * terms[i]; all terms share a shape (scalars in practice).
Var wsum(const std::vector<Var>& terms, const std::vector<double>& coeffs);
Var mul_const(const Var& a, Tensor m);
// Appends constant channel planes after x's channels: (N,C,H,W)+(N,K,H,W) -> (N,C+K,H,W).
Var concat_const_channels(const Var& x, Tensor planes);

Var relu(const Var& x);
Var leaky_relu(const Var& x, double slope);
Var tanh_act(const Var& x);
Var sigmoid_act(const Var& x);

// ---- layers ----
// x: (N,Ci,H,W), w: (Co,Ci,kh,kw), b: (Co)
Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad);
// x: (N,Ci,H,W), w: (Ci,Co,kh,kw), b: (Co); H_out = (H-1)*stride - 2*pad + kh + out_pad
Var conv_transpose2d(const Var& x, const Var& w, const Var& b, int stride, int pad, int out_pad);
// x: (N,F), w: (K,F), b: (K) -> (N,K)
Var linear(const Var& x, const Var& w, const Var& b);
// Per-(sample,channel) normalization over the spatial extent.
Var instance_norm(const Var& x, double eps = 1e-5);
// (N,C,H,W) -> (N,C)
Var global_avg_pool(const Var& x);

// ---- reductions / losses ----
struct ClampStats {
  long events = 0;
};
// Clamp to [eps, 1-eps]; gradient is zero where clamped; counts clamps.
Var clamp_unit(const Var& x, double eps, ClampStats* stats = nullptr);
// mean over all elements of log(x) — scalar.
Var mean_log(const Var& x);
// mean over all elements of log(1 - x) — scalar.
Var mean_log1m(const Var& x);
// mean |a - b| — scalar.
Var l1_diff(const Var& a, const Var& b);
// mean (a - b)^2 — scalar.
Var sq_diff(const Var& a, const Var& b);
// Row-wise softmax cross entropy against integer labels, mean over rows.
Var cross_entropy(const Var& logits, const std::vector<int>& labels);

}  // namespace m2m::ad
