#include "m2m/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "m2m/errors.hpp"

namespace m2m::ad {

namespace {

thread_local int g_no_grad_depth = 0;

// Scratch for im2col panels; recomputed in backward instead of cached so the
// graph holds activations only.
thread_local std::vector<double> g_col_scratch;
thread_local std::vector<double> g_col_scratch2;

Var make_node(Tensor value, std::vector<Var> inputs, std::function<void(Node&)> backprop) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->is_leaf = false;
  bool needs = false;
  if (g_no_grad_depth == 0) {
    for (const auto& in : inputs)
      if (in && in->requires_grad) needs = true;
  }
  if (needs) {
    node->requires_grad = true;
    node->inputs = std::move(inputs);
    node->backprop = std::move(backprop);
  }
  return node;
}

int64_t conv_out_extent(int64_t in, int k, int stride, int pad) {
  const int64_t out = (in + 2 * pad - k) / stride + 1;
  if (out <= 0) throw ValidationError("conv output extent would be non-positive");
  return out;
}

// col is (C*kh*kw, Ho*Wo); image is (C, H, W).
void im2col(const double* img, int64_t C, int64_t H, int64_t W, int kh, int kw, int stride,
            int pad, int64_t Ho, int64_t Wo, double* col) {
  for (int64_t c = 0; c < C; ++c) {
    const double* plane = img + c * H * W;
    for (int i = 0; i < kh; ++i) {
      for (int j = 0; j < kw; ++j) {
        double* row = col + ((c * kh + i) * kw + j) * Ho * Wo;
        for (int64_t ho = 0; ho < Ho; ++ho) {
          const int64_t h = ho * stride - pad + i;
          double* out = row + ho * Wo;
          if (h < 0 || h >= H) {
            std::fill(out, out + Wo, 0.0);
            continue;
          }
          const double* src = plane + h * W;
          for (int64_t wo = 0; wo < Wo; ++wo) {
            const int64_t w = wo * stride - pad + j;
            out[wo] = (w >= 0 && w < W) ? src[w] : 0.0;
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatter-add col back into the image.
void col2im_add(const double* col, int64_t C, int64_t H, int64_t W, int kh, int kw, int stride,
                int pad, int64_t Ho, int64_t Wo, double* img) {
  for (int64_t c = 0; c < C; ++c) {
    double* plane = img + c * H * W;
    for (int i = 0; i < kh; ++i) {
      for (int j = 0; j < kw; ++j) {
        const double* row = col + ((c * kh + i) * kw + j) * Ho * Wo;
        for (int64_t ho = 0; ho < Ho; ++ho) {
          const int64_t h = ho * stride - pad + i;
          if (h < 0 || h >= H) continue;
          double* dst = plane + h * W;
          const double* src = row + ho * Wo;
          for (int64_t wo = 0; wo < Wo; ++wo) {
            const int64_t w = wo * stride - pad + j;
            if (w >= 0 && w < W) dst[w] += src[wo];
          }
        }
      }
    }
  }
}

}  // namespace

NoGradScope::NoGradScope() { ++g_no_grad_depth; }
NoGradScope::~NoGradScope() { --g_no_grad_depth; }
bool grad_enabled() { return g_no_grad_depth == 0; }

Var constant(Tensor v) {
  auto node = std::make_shared<Node>();
  node->value = std::move(v);
  return node;
}

Var param(Tensor v, std::string name) {
  auto node = std::make_shared<Node>();
  node->value = std::move(v);
  node->requires_grad = true;
  node->name = std::move(name);
  return node;
}

Var detach(const Var& x) { return constant(x->value); }

void backward(const Var& root) {
  if (root->value.numel() != 1) throw ValidationError("backward() needs a scalar root");
  if (!root->requires_grad) return;

  // Iterative post-order DFS; reversed it is a topological order from the
  // root toward the leaves.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, size_t>> stack;
  stack.emplace_back(root.get(), 0);
  visited.insert(root.get());
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->inputs.size()) {
      Node* next = node->inputs[idx++].get();
      if (next->requires_grad && !visited.count(next)) {
        visited.insert(next);
        stack.emplace_back(next, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root->ensure_grad();
  root->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backprop) node->backprop(*node);
  }
}

// ---------------------------------------------------------------- elementwise

Var add(const Var& a, const Var& b) {
  if (!a->value.same_shape(b->value)) throw ValidationError("add: shape mismatch");
  Tensor out(a->value.shape());
  const int64_t n = out.numel();
  for (int64_t i = 0; i < n; ++i) out[i] = a->value[i] + b->value[i];
  return make_node(std::move(out), {a, b}, [](Node& self) {
    for (int s = 0; s < 2; ++s) {
      auto& in = self.inputs[s];
      if (!in->requires_grad) continue;
      Tensor& g = in->ensure_grad();
      for (int64_t i = 0; i < self.grad.numel(); ++i) g[i] += self.grad[i];
    }
  });
}

Var sub(const Var& a, const Var& b) {
  if (!a->value.same_shape(b->value)) throw ValidationError("sub: shape mismatch");
  Tensor out(a->value.shape());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = a->value[i] - b->value[i];
  return make_node(std::move(out), {a, b}, [](Node& self) {
    if (self.inputs[0]->requires_grad) {
      Tensor& g = self.inputs[0]->ensure_grad();
      for (int64_t i = 0; i < self.grad.numel(); ++i) g[i] += self.grad[i];
    }
    if (self.inputs[1]->requires_grad) {
      Tensor& g = self.inputs[1]->ensure_grad();
      for (int64_t i = 0; i < self.grad.numel(); ++i) g[i] -= self.grad[i];
    }
  });
}

Var scale(const Var& a, double c) {
  Tensor out(a->value.shape());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = a->value[i] * c;
  return make_node(std::move(out), {a}, [c](Node& self) {
    if (!self.inputs[0]->requires_grad) return;
    Tensor& g = self.inputs[0]->ensure_grad();
    for (int64_t i = 0; i < self.grad.numel(); ++i) g[i] += c * self.grad[i];
  });
}

Var wsum(const std::vector<Var>& terms, const std::vector<double>& coeffs) {
  if (terms.empty() || terms.size() != coeffs.size())
    throw ValidationError("wsum: term/coefficient count mismatch");
  Tensor out(terms[0]->value.shape());
  for (size_t t = 0; t < terms.size(); ++t) {
    if (!terms[t]->value.same_shape(out)) throw ValidationError("wsum: shape mismatch");
    for (int64_t i = 0; i < out.numel(); ++i) out[i] += coeffs[t] * terms[t]->value[i];
  }
  return make_node(std::move(out), terms, [coeffs](Node& self) {
    for (size_t t = 0; t < self.inputs.size(); ++t) {
      auto& in = self.inputs[t];
      if (!in->requires_grad) continue;
      Tensor& g = in->ensure_grad();
      for (int64_t i = 0; i < self.grad.numel(); ++i) g[i] += coeffs[t] * self.grad[i];
    }
  });
}

Var mul_const(const Var& a, Tensor m) {
  if (!a->value.same_shape(m)) throw ValidationError("mul_const: shape mismatch");
  Tensor out(a->value.shape());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = a->value[i] * m[i];
  auto mp = std::make_shared<Tensor>(std::move(m));
  return make_node(std::move(out), {a}, [mp](Node& self) {
    if (!self.inputs[0]->requires_grad) return;
    Tensor& g = self.inputs[0]->ensure_grad();
    for (int64_t i = 0; i < self.grad.numel(); ++i) g[i] += (*mp)[i] * self.grad[i];
  });
}

Var concat_const_channels(const Var& x, Tensor planes) {
  const auto& xs = x->value.shape();
  const auto& ps = planes.shape();
  if (xs.size() != 4 || ps.size() != 4 || xs[0] != ps[0] || xs[2] != ps[2] || xs[3] != ps[3])
    throw ValidationError("concat_const_channels: incompatible shapes");
  const int64_t N = xs[0], C = xs[1], K = ps[1], HW = xs[2] * xs[3];
  Tensor out({N, C + K, xs[2], xs[3]});
  for (int64_t n = 0; n < N; ++n) {
    std::copy(x->value.data() + n * C * HW, x->value.data() + (n + 1) * C * HW,
              out.data() + n * (C + K) * HW);
    std::copy(planes.data() + n * K * HW, planes.data() + (n + 1) * K * HW,
              out.data() + (n * (C + K) + C) * HW);
  }
  return make_node(std::move(out), {x}, [N, C, K, HW](Node& self) {
    if (!self.inputs[0]->requires_grad) return;
    Tensor& g = self.inputs[0]->ensure_grad();
    for (int64_t n = 0; n < N; ++n) {
      const double* src = self.grad.data() + n * (C + K) * HW;
      double* dst = g.data() + n * C * HW;
      for (int64_t i = 0; i < C * HW; ++i) dst[i] += src[i];
    }
  });
}

// ---------------------------------------------------------------- activations

Var relu(const Var& x) {
  Tensor out(x->value.shape());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = x->value[i] > 0.0 ? x->value[i] : 0.0;
  return make_node(std::move(out), {x}, [](Node& self) {
    auto& in = self.inputs[0];
    if (!in->requires_grad) return;
    Tensor& g = in->ensure_grad();
    for (int64_t i = 0; i < self.grad.numel(); ++i)
      if (in->value[i] > 0.0) g[i] += self.grad[i];
  });
}

Var leaky_relu(const Var& x, double slope) {
  Tensor out(x->value.shape());
  for (int64_t i = 0; i < out.numel(); ++i) {
    const double v = x->value[i];
    out[i] = v > 0.0 ? v : slope * v;
  }
  return make_node(std::move(out), {x}, [slope](Node& self) {
    auto& in = self.inputs[0];
    if (!in->requires_grad) return;
    Tensor& g = in->ensure_grad();
    for (int64_t i = 0; i < self.grad.numel(); ++i)
      g[i] += (in->value[i] > 0.0 ? 1.0 : slope) * self.grad[i];
  });
}

Var tanh_act(const Var& x) {
  Tensor out(x->value.shape());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = std::tanh(x->value[i]);
  return make_node(std::move(out), {x}, [](Node& self) {
    auto& in = self.inputs[0];
    if (!in->requires_grad) return;
    Tensor& g = in->ensure_grad();
    for (int64_t i = 0; i < self.grad.numel(); ++i)
      g[i] += (1.0 - self.value[i] * self.value[i]) * self.grad[i];
  });
}

Var sigmoid_act(const Var& x) {
  Tensor out(x->value.shape());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = 1.0 / (1.0 + std::exp(-x->value[i]));
  return make_node(std::move(out), {x}, [](Node& self) {
    auto& in = self.inputs[0];
    if (!in->requires_grad) return;
    Tensor& g = in->ensure_grad();
    for (int64_t i = 0; i < self.grad.numel(); ++i) {
      const double y = self.value[i];
      g[i] += y * (1.0 - y) * self.grad[i];
    }
  });
}

// --------------------------------------------------------------------- layers

Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad) {
  const auto& xs = x->value.shape();
  const auto& ws = w->value.shape();
  if (xs.size() != 4 || ws.size() != 4) throw ValidationError("conv2d: need 4-d tensors");
  if (xs[1] != ws[1]) throw ValidationError("conv2d: channel mismatch");
  const int64_t N = xs[0], Ci = xs[1], H = xs[2], W = xs[3];
  const int64_t Co = ws[0];
  const int kh = static_cast<int>(ws[2]), kw = static_cast<int>(ws[3]);
  const int64_t Ho = conv_out_extent(H, kh, stride, pad);
  const int64_t Wo = conv_out_extent(W, kw, stride, pad);
  const int64_t K = Ci * kh * kw, L = Ho * Wo;

  Tensor out({N, Co, Ho, Wo});
  g_col_scratch.resize(static_cast<size_t>(K * L));
  for (int64_t n = 0; n < N; ++n) {
    im2col(x->value.data() + n * Ci * H * W, Ci, H, W, kh, kw, stride, pad, Ho, Wo,
           g_col_scratch.data());
    gemm(w->value.data(), g_col_scratch.data(), out.data() + n * Co * L, Co, K, L);
    for (int64_t co = 0; co < Co; ++co) {
      double* row = out.data() + (n * Co + co) * L;
      const double bias = b->value[co];
      for (int64_t l = 0; l < L; ++l) row[l] += bias;
    }
  }

  auto bp = [N, Ci, H, W, Co, kh, kw, stride, pad, Ho, Wo, K, L](Node& self) {
    auto& x_in = self.inputs[0];
    auto& w_in = self.inputs[1];
    auto& b_in = self.inputs[2];
    const Tensor& gy = self.grad;
    if (b_in->requires_grad) {
      Tensor& gb = b_in->ensure_grad();
      for (int64_t n = 0; n < N; ++n)
        for (int64_t co = 0; co < Co; ++co) {
          const double* row = gy.data() + (n * Co + co) * L;
          double s = 0.0;
          for (int64_t l = 0; l < L; ++l) s += row[l];
          gb[co] += s;
        }
    }
    const bool need_dw = w_in->requires_grad;
    const bool need_dx = x_in->requires_grad;
    if (!need_dw && !need_dx) return;
    g_col_scratch.resize(static_cast<size_t>(K * L));
    if (need_dx) g_col_scratch2.resize(static_cast<size_t>(K * L));
    Tensor* gw = need_dw ? &w_in->ensure_grad() : nullptr;
    Tensor* gx = need_dx ? &x_in->ensure_grad() : nullptr;
    for (int64_t n = 0; n < N; ++n) {
      if (need_dw) {
        im2col(x_in->value.data() + n * Ci * H * W, Ci, H, W, kh, kw, stride, pad, Ho, Wo,
               g_col_scratch.data());
        gemm_bt(gy.data() + n * Co * L, g_col_scratch.data(), gw->data(), Co, L, K, true);
      }
      if (need_dx) {
        gemm_at(w_in->value.data(), gy.data() + n * Co * L, g_col_scratch2.data(), K, Co, L);
        col2im_add(g_col_scratch2.data(), Ci, H, W, kh, kw, stride, pad, Ho, Wo,
                   gx->data() + n * Ci * H * W);
      }
    }
  };
  return make_node(std::move(out), {x, w, b}, bp);
}

Var conv_transpose2d(const Var& x, const Var& w, const Var& b, int stride, int pad,
                     int out_pad) {
  const auto& xs = x->value.shape();
  const auto& ws = w->value.shape();
  if (xs.size() != 4 || ws.size() != 4) throw ValidationError("conv_transpose2d: need 4-d");
  if (xs[1] != ws[0]) throw ValidationError("conv_transpose2d: channel mismatch");
  const int64_t N = xs[0], Ci = xs[1], H = xs[2], W = xs[3];
  const int64_t Co = ws[1];
  const int kh = static_cast<int>(ws[2]), kw = static_cast<int>(ws[3]);
  const int64_t Ho = (H - 1) * stride - 2 * pad + kh + out_pad;
  const int64_t Wo = (W - 1) * stride - 2 * pad + kw + out_pad;
  if (Ho <= 0 || Wo <= 0) throw ValidationError("conv_transpose2d: bad output extent");
  const int64_t K = Co * kh * kw, L = H * W;

  Tensor out({N, Co, Ho, Wo});
  g_col_scratch.resize(static_cast<size_t>(K * L));
  for (int64_t n = 0; n < N; ++n) {
    gemm_at(w->value.data(), x->value.data() + n * Ci * L, g_col_scratch.data(), K, Ci, L);
    col2im_add(g_col_scratch.data(), Co, Ho, Wo, kh, kw, stride, pad, H, W,
               out.data() + n * Co * Ho * Wo);
    for (int64_t co = 0; co < Co; ++co) {
      double* plane = out.data() + (n * Co + co) * Ho * Wo;
      const double bias = b->value[co];
      for (int64_t l = 0; l < Ho * Wo; ++l) plane[l] += bias;
    }
  }

  auto bp = [N, Ci, H, W, Co, kh, kw, stride, pad, Ho, Wo, K, L](Node& self) {
    auto& x_in = self.inputs[0];
    auto& w_in = self.inputs[1];
    auto& b_in = self.inputs[2];
    const Tensor& gy = self.grad;
    if (b_in->requires_grad) {
      Tensor& gb = b_in->ensure_grad();
      for (int64_t n = 0; n < N; ++n)
        for (int64_t co = 0; co < Co; ++co) {
          const double* plane = gy.data() + (n * Co + co) * Ho * Wo;
          double s = 0.0;
          for (int64_t l = 0; l < Ho * Wo; ++l) s += plane[l];
          gb[co] += s;
        }
    }
    const bool need_dw = w_in->requires_grad;
    const bool need_dx = x_in->requires_grad;
    if (!need_dw && !need_dx) return;
    g_col_scratch.resize(static_cast<size_t>(K * L));
    Tensor* gw = need_dw ? &w_in->ensure_grad() : nullptr;
    Tensor* gx = need_dx ? &x_in->ensure_grad() : nullptr;
    for (int64_t n = 0; n < N; ++n) {
      // im2col over the upstream gradient turns both remaining products into
      // plain GEMMs: dx = W * col(gy), dW += x * col(gy)^T.
      im2col(gy.data() + n * Co * Ho * Wo, Co, Ho, Wo, kh, kw, stride, pad, H, W,
             g_col_scratch.data());
      if (need_dx)
        gemm(w_in->value.data(), g_col_scratch.data(), gx->data() + n * Ci * L, Ci, K, L, true);
      if (need_dw)
        gemm_bt(x_in->value.data() + n * Ci * L, g_col_scratch.data(), gw->data(), Ci, L, K,
                true);
    }
  };
  return make_node(std::move(out), {x, w, b}, bp);
}

Var linear(const Var& x, const Var& w, const Var& b) {
  const auto& xs = x->value.shape();
  const auto& ws = w->value.shape();
  if (xs.size() != 2 || ws.size() != 2 || xs[1] != ws[1])
    throw ValidationError("linear: shape mismatch");
  const int64_t N = xs[0], F = xs[1], K = ws[0];
  Tensor out({N, K});
  gemm_bt(x->value.data(), w->value.data(), out.data(), N, F, K);
  for (int64_t n = 0; n < N; ++n)
    for (int64_t k = 0; k < K; ++k) out[n * K + k] += b->value[k];

  return make_node(std::move(out), {x, w, b}, [N, F, K](Node& self) {
    auto& x_in = self.inputs[0];
    auto& w_in = self.inputs[1];
    auto& b_in = self.inputs[2];
    const Tensor& gy = self.grad;
    if (b_in->requires_grad) {
      Tensor& gb = b_in->ensure_grad();
      for (int64_t n = 0; n < N; ++n)
        for (int64_t k = 0; k < K; ++k) gb[k] += gy[n * K + k];
    }
    if (x_in->requires_grad)
      gemm(gy.data(), w_in->value.data(), x_in->ensure_grad().data(), N, K, F, true);
    if (w_in->requires_grad)
      gemm_at(gy.data(), x_in->value.data(), w_in->ensure_grad().data(), K, N, F, true);
  });
}

Var instance_norm(const Var& x, double eps) {
  const auto& xs = x->value.shape();
  if (xs.size() != 4) throw ValidationError("instance_norm: need 4-d input");
  const int64_t N = xs[0], C = xs[1], S = xs[2] * xs[3];
  Tensor out(xs);
  auto inv_std = std::make_shared<std::vector<double>>(static_cast<size_t>(N * C));
  for (int64_t p = 0; p < N * C; ++p) {
    const double* src = x->value.data() + p * S;
    double mu = 0.0;
    for (int64_t i = 0; i < S; ++i) mu += src[i];
    mu /= static_cast<double>(S);
    double var = 0.0;
    for (int64_t i = 0; i < S; ++i) {
      const double d = src[i] - mu;
      var += d * d;
    }
    var /= static_cast<double>(S);
    const double inv = 1.0 / std::sqrt(var + eps);
    (*inv_std)[p] = inv;
    double* dst = out.data() + p * S;
    for (int64_t i = 0; i < S; ++i) dst[i] = (src[i] - mu) * inv;
  }
  return make_node(std::move(out), {x}, [N, C, S, inv_std](Node& self) {
    auto& in = self.inputs[0];
    if (!in->requires_grad) return;
    Tensor& gx = in->ensure_grad();
    for (int64_t p = 0; p < N * C; ++p) {
      const double* g = self.grad.data() + p * S;
      const double* y = self.value.data() + p * S;
      double mg = 0.0, mgy = 0.0;
      for (int64_t i = 0; i < S; ++i) {
        mg += g[i];
        mgy += g[i] * y[i];
      }
      mg /= static_cast<double>(S);
      mgy /= static_cast<double>(S);
      const double inv = (*inv_std)[p];
      double* dst = gx.data() + p * S;
      for (int64_t i = 0; i < S; ++i) dst[i] += inv * (g[i] - mg - y[i] * mgy);
    }
  });
}

Var global_avg_pool(const Var& x) {
  const auto& xs = x->value.shape();
  if (xs.size() != 4) throw ValidationError("global_avg_pool: need 4-d input");
  const int64_t N = xs[0], C = xs[1], S = xs[2] * xs[3];
  Tensor out({N, C});
  for (int64_t p = 0; p < N * C; ++p) {
    const double* src = x->value.data() + p * S;
    double s = 0.0;
    for (int64_t i = 0; i < S; ++i) s += src[i];
    out[p] = s / static_cast<double>(S);
  }
  return make_node(std::move(out), {x}, [N, C, S](Node& self) {
    auto& in = self.inputs[0];
    if (!in->requires_grad) return;
    Tensor& gx = in->ensure_grad();
    for (int64_t p = 0; p < N * C; ++p) {
      const double g = self.grad[p] / static_cast<double>(S);
      double* dst = gx.data() + p * S;
      for (int64_t i = 0; i < S; ++i) dst[i] += g;
    }
  });
}

// ------------------------------------------------------------------- reductions

Var clamp_unit(const Var& x, double eps, ClampStats* stats) {
  Tensor out(x->value.shape());
  long events = 0;
  for (int64_t i = 0; i < out.numel(); ++i) {
    const double v = x->value[i];
    if (v < eps) {
      out[i] = eps;
      ++events;
    } else if (v > 1.0 - eps) {
      out[i] = 1.0 - eps;
      ++events;
    } else {
      out[i] = v;
    }
  }
  if (stats) stats->events += events;
  return make_node(std::move(out), {x}, [eps](Node& self) {
    auto& in = self.inputs[0];
    if (!in->requires_grad) return;
    Tensor& g = in->ensure_grad();
    for (int64_t i = 0; i < self.grad.numel(); ++i) {
      const double v = in->value[i];
      if (v >= eps && v <= 1.0 - eps) g[i] += self.grad[i];
    }
  });
}

Var mean_log(const Var& x) {
  const int64_t n = x->value.numel();
  double s = 0.0;
  for (int64_t i = 0; i < n; ++i) s += std::log(x->value[i]);
  return make_node(Tensor::scalar(s / static_cast<double>(n)), {x}, [n](Node& self) {
    auto& in = self.inputs[0];
    if (!in->requires_grad) return;
    Tensor& g = in->ensure_grad();
    const double gy = self.grad[0] / static_cast<double>(n);
    for (int64_t i = 0; i < n; ++i) g[i] += gy / in->value[i];
  });
}

Var mean_log1m(const Var& x) {
  const int64_t n = x->value.numel();
  double s = 0.0;
  for (int64_t i = 0; i < n; ++i) s += std::log(1.0 - x->value[i]);
  return make_node(Tensor::scalar(s / static_cast<double>(n)), {x}, [n](Node& self) {
    auto& in = self.inputs[0];
    if (!in->requires_grad) return;
    Tensor& g = in->ensure_grad();
    const double gy = self.grad[0] / static_cast<double>(n);
    for (int64_t i = 0; i < n; ++i) g[i] -= gy / (1.0 - in->value[i]);
  });
}

Var l1_diff(const Var& a, const Var& b) {
  if (!a->value.same_shape(b->value)) throw ValidationError("l1_diff: shape mismatch");
  const int64_t n = a->value.numel();
  double s = 0.0;
  for (int64_t i = 0; i < n; ++i) s += std::abs(a->value[i] - b->value[i]);
  return make_node(Tensor::scalar(s / static_cast<double>(n)), {a, b}, [n](Node& self) {
    const double gy = self.grad[0] / static_cast<double>(n);
    auto& a_in = self.inputs[0];
    auto& b_in = self.inputs[1];
    Tensor* ga = a_in->requires_grad ? &a_in->ensure_grad() : nullptr;
    Tensor* gb = b_in->requires_grad ? &b_in->ensure_grad() : nullptr;
    for (int64_t i = 0; i < n; ++i) {
      const double d = a_in->value[i] - b_in->value[i];
      const double sgn = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
      if (ga) (*ga)[i] += gy * sgn;
      if (gb) (*gb)[i] -= gy * sgn;
    }
  });
}

Var sq_diff(const Var& a, const Var& b) {
  if (!a->value.same_shape(b->value)) throw ValidationError("sq_diff: shape mismatch");
  const int64_t n = a->value.numel();
  double s = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    const double d = a->value[i] - b->value[i];
    s += d * d;
  }
  return make_node(Tensor::scalar(s / static_cast<double>(n)), {a, b}, [n](Node& self) {
    const double gy = 2.0 * self.grad[0] / static_cast<double>(n);
    auto& a_in = self.inputs[0];
    auto& b_in = self.inputs[1];
    Tensor* ga = a_in->requires_grad ? &a_in->ensure_grad() : nullptr;
    Tensor* gb = b_in->requires_grad ? &b_in->ensure_grad() : nullptr;
    for (int64_t i = 0; i < n; ++i) {
      const double d = a_in->value[i] - b_in->value[i];
      if (ga) (*ga)[i] += gy * d;
      if (gb) (*gb)[i] -= gy * d;
    }
  });
}

Var cross_entropy(const Var& logits, const std::vector<int>& labels) {
  const auto& ls = logits->value.shape();
  if (ls.size() != 2) throw ValidationError("cross_entropy: logits must be 2-d");
  const int64_t N = ls[0], K = ls[1];
  if (static_cast<int64_t>(labels.size()) != N)
    throw ValidationError("cross_entropy: label count mismatch");
  for (int lab : labels)
    if (lab < 0 || lab >= K) throw ValidationError("cross_entropy: label out of range");

  double total = 0.0;
  for (int64_t i = 0; i < N; ++i) {
    const double* z = logits->value.data() + i * K;
    double m = z[0];
    for (int64_t k = 1; k < K; ++k) m = std::max(m, z[k]);
    double lse = 0.0;
    for (int64_t k = 0; k < K; ++k) lse += std::exp(z[k] - m);
    lse = m + std::log(lse);
    total += lse - z[labels[i]];
  }
  return make_node(Tensor::scalar(total / static_cast<double>(N)), {logits},
                   [N, K, labels](Node& self) {
                     auto& in = self.inputs[0];
                     if (!in->requires_grad) return;
                     Tensor& g = in->ensure_grad();
                     const double gy = self.grad[0] / static_cast<double>(N);
                     for (int64_t i = 0; i < N; ++i) {
                       const double* z = in->value.data() + i * K;
                       double m = z[0];
                       for (int64_t k = 1; k < K; ++k) m = std::max(m, z[k]);
                       double denom = 0.0;
                       for (int64_t k = 0; k < K; ++k) denom += std::exp(z[k] - m);
                       for (int64_t k = 0; k < K; ++k) {
                         const double p = std::exp(z[k] - m) / denom;
                         g[i * K + k] += gy * (p - (k == labels[i] ? 1.0 : 0.0));
                       }
                     }
                   });
}

}  // namespace m2m::ad
