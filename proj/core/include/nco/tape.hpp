#pragma once

#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "nco/tensor.hpp"

namespace nco {

// Reverse-mode autodiff tape. Execution is eager: every op computes its value
// immediately and records a backward closure when any input needs a gradient.
// Nodes are appended in topological order, so the backward pass is a single
// reverse sweep. One tape per forward pass; single-threaded by construction.
template <class T>
class Tape {
 public:
  struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Tensor<T> value) {
    const bool rg = value.requires_grad;
    return push(std::move(value), rg, nullptr);
  }

  Var constant(Tensor<T> value) {
    value.requires_grad = false;
    return push(std::move(value), false, nullptr);
  }

  const Tensor<T>& val(Var v) const { return nodes_[v.id].value; }

  // Gradient of a node; zeros if the node never received one.
  Tensor<T> grad(Var v) const {
    const Node& n = nodes_[v.id];
    if (n.grad.data.empty()) return Tensor<T>(n.value.shape, T(0));
    return n.grad;
  }

  bool has_grad(Var v) const { return !nodes_[v.id].grad.data.empty(); }
  std::size_t num_nodes() const { return nodes_.size(); }

  // ---- primitives ---------------------------------------------------------

  Var matmul(Var a, Var b) {
    Tensor<T> out = k_matmul_nn(val(a), val(b));
    return push(std::move(out), needs(a) || needs(b),
                [this, a, b](int self) {
                  const Tensor<T>& g = nodes_[self].grad;
                  if (needs(a)) accum(a, k_matmul_nt(g, val(b)));
                  if (needs(b)) accum(b, k_matmul_tn(val(a), g));
                });
  }

  // a * b^T
  Var matmul_nt(Var a, Var b) {
    Tensor<T> out = k_matmul_nt(val(a), val(b));
    return push(std::move(out), needs(a) || needs(b),
                [this, a, b](int self) {
                  const Tensor<T>& g = nodes_[self].grad;
                  if (needs(a)) accum(a, k_matmul_nn(g, val(b)));
                  if (needs(b)) accum(b, k_matmul_tn(g, val(a)));
                });
  }

  Var add(Var a, Var b) {
    Tensor<T> out = k_add(val(a), val(b));
    return push(std::move(out), needs(a) || needs(b), [this, a, b](int self) {
      const Tensor<T>& g = nodes_[self].grad;
      if (needs(a)) accum(a, g);
      if (needs(b)) accum(b, g);
    });
  }

  Var add_rowvec(Var a, Var v) {
    Tensor<T> out = k_add_rowvec(val(a), val(v));
    return push(std::move(out), needs(a) || needs(v), [this, a, v](int self) {
      const Tensor<T>& g = nodes_[self].grad;
      if (needs(a)) accum(a, g);
      if (needs(v)) {
        Tensor<T> gv(val(v).shape, T(0));
        const int m = g.shape[0], n = g.shape[1];
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < n; ++j) gv.data[j] += g.data[static_cast<std::size_t>(i) * n + j];
        accum(v, gv);
      }
    });
  }

  Var mul(Var a, Var b) {
    Tensor<T> out = k_mul(val(a), val(b));
    return push(std::move(out), needs(a) || needs(b), [this, a, b](int self) {
      const Tensor<T>& g = nodes_[self].grad;
      if (needs(a)) accum(a, k_mul(g, val(b)));
      if (needs(b)) accum(b, k_mul(g, val(a)));
    });
  }

  Var mul_rowvec(Var a, Var v) {
    Tensor<T> out = k_mul_rowvec(val(a), val(v));
    return push(std::move(out), needs(a) || needs(v), [this, a, v](int self) {
      const Tensor<T>& g = nodes_[self].grad;
      const int m = g.shape[0], n = g.shape[1];
      if (needs(a)) accum(a, k_mul_rowvec(g, val(v)));
      if (needs(v)) {
        Tensor<T> gv(val(v).shape, T(0));
        const Tensor<T>& av = val(a);
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < n; ++j)
            gv.data[j] += g.data[static_cast<std::size_t>(i) * n + j] *
                          av.data[static_cast<std::size_t>(i) * n + j];
        accum(v, gv);
      }
    });
  }

  Var scale(Var a, T c) {
    Tensor<T> out = k_scale(val(a), c);
    return push(std::move(out), needs(a), [this, a, c](int self) {
      if (needs(a)) accum(a, k_scale(nodes_[self].grad, c));
    });
  }

  Var tanh_op(Var a) {
    Tensor<T> out = k_tanh(val(a));
    return push(std::move(out), needs(a), [this, a](int self) {
      if (!needs(a)) return;
      const Tensor<T>& y = nodes_[self].value;
      const Tensor<T>& g = nodes_[self].grad;
      Tensor<T> gx(y.shape);
      for (std::size_t i = 0; i < y.data.size(); ++i)
        gx.data[i] = g.data[i] * (T(1) - y.data[i] * y.data[i]);
      accum(a, gx);
    });
  }

  Var relu(Var a) {
    Tensor<T> out = k_relu(val(a));
    return push(std::move(out), needs(a), [this, a](int self) {
      if (!needs(a)) return;
      const Tensor<T>& x = val(a);
      const Tensor<T>& g = nodes_[self].grad;
      Tensor<T> gx(x.shape);
      for (std::size_t i = 0; i < x.data.size(); ++i)
        gx.data[i] = x.data[i] > T(0) ? g.data[i] : T(0);
      accum(a, gx);
    });
  }

  Var log_op(Var a) {
    Tensor<T> out = k_log(val(a));
    return push(std::move(out), needs(a), [this, a](int self) {
      if (!needs(a)) return;
      const Tensor<T>& x = val(a);
      const Tensor<T>& g = nodes_[self].grad;
      Tensor<T> gx(x.shape);
      for (std::size_t i = 0; i < x.data.size(); ++i) gx.data[i] = g.data[i] / x.data[i];
      accum(a, gx);
    });
  }

  // Gradient never propagates into masked positions (exact zeros there).
  Var masked_softmax(Var a, Mask m) {
    Tensor<T> out = k_masked_softmax(val(a), m);
    return push(std::move(out), needs(a), [this, a, m = std::move(m)](int self) {
      if (!needs(a)) return;
      const Tensor<T>& y = nodes_[self].value;
      const Tensor<T>& g = nodes_[self].grad;
      const int rows = y.shape[0], n = y.shape[1];
      Tensor<T> gx({rows, n});
      for (int i = 0; i < rows; ++i) {
        const T* yr = &y.data[static_cast<std::size_t>(i) * n];
        const T* gr = &g.data[static_cast<std::size_t>(i) * n];
        T dot = T(0);
        for (int j = 0; j < n; ++j) dot += gr[j] * yr[j];
        T* o = &gx.data[static_cast<std::size_t>(i) * n];
        for (int j = 0; j < n; ++j) o[j] = m.at(i, j) ? yr[j] * (gr[j] - dot) : T(0);
      }
      accum(a, gx);
    });
  }

  Var mean_rows(Var a) {
    Tensor<T> out = k_mean_rows(val(a));
    return push(std::move(out), needs(a), [this, a](int self) {
      if (!needs(a)) return;
      const Tensor<T>& g = nodes_[self].grad;
      const Tensor<T>& x = val(a);
      const int m = x.shape[0], n = x.shape[1];
      Tensor<T> gx({m, n});
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
          gx.data[static_cast<std::size_t>(i) * n + j] = g.data[j] / static_cast<T>(m);
      accum(a, gx);
    });
  }

  Var sum(Var a) {
    Tensor<T> out = k_reduce_sum(val(a));
    return push(std::move(out), needs(a), [this, a](int self) {
      if (!needs(a)) return;
      accum(a, Tensor<T>(val(a).shape, nodes_[self].grad.data[0]));
    });
  }

  Var mean(Var a) {
    Tensor<T> out = k_reduce_mean(val(a));
    return push(std::move(out), needs(a), [this, a](int self) {
      if (!needs(a)) return;
      const T g = nodes_[self].grad.data[0] / static_cast<T>(val(a).size());
      accum(a, Tensor<T>(val(a).shape, g));
    });
  }

  Var select_rows(Var a, std::vector<int> idx) {
    Tensor<T> out = k_select_rows(val(a), idx);
    return push(std::move(out), needs(a), [this, a, idx = std::move(idx)](int self) {
      if (!needs(a)) return;
      const Tensor<T>& g = nodes_[self].grad;
      const int n = g.shape[1];
      Tensor<T> gx(val(a).shape, T(0));
      for (std::size_t i = 0; i < idx.size(); ++i)
        for (int j = 0; j < n; ++j)
          gx.data[static_cast<std::size_t>(idx[i]) * n + j] += g.data[i * n + j];
      accum(a, gx);
    });
  }

  Var gather_cols(Var a, std::vector<int> idx) {
    Tensor<T> out = k_gather_cols(val(a), idx);
    return push(std::move(out), needs(a), [this, a, idx = std::move(idx)](int self) {
      if (!needs(a)) return;
      const Tensor<T>& g = nodes_[self].grad;
      Tensor<T> gx(val(a).shape, T(0));
      const int n = val(a).shape[1];
      for (std::size_t i = 0; i < idx.size(); ++i)
        gx.data[i * static_cast<std::size_t>(n) + idx[i]] += g.data[i];
      accum(a, gx);
    });
  }

  Var layer_norm(Var a, T eps) {
    Tensor<T> out = k_layer_norm(val(a), eps);
    return push(std::move(out), needs(a), [this, a, eps](int self) {
      if (!needs(a)) return;
      const Tensor<T>& x = val(a);
      const Tensor<T>& y = nodes_[self].value;
      const Tensor<T>& g = nodes_[self].grad;
      const int m = x.shape[0], n = x.shape[1];
      Tensor<T> gx({m, n});
      for (int i = 0; i < m; ++i) {
        const T* xr = &x.data[static_cast<std::size_t>(i) * n];
        const T* yr = &y.data[static_cast<std::size_t>(i) * n];
        const T* gr = &g.data[static_cast<std::size_t>(i) * n];
        T mean = T(0);
        for (int j = 0; j < n; ++j) mean += xr[j];
        mean /= static_cast<T>(n);
        T var = T(0);
        for (int j = 0; j < n; ++j) var += (xr[j] - mean) * (xr[j] - mean);
        var /= static_cast<T>(n);
        const T inv = T(1) / std::sqrt(var + eps);
        T gmean = T(0), gydot = T(0);
        for (int j = 0; j < n; ++j) {
          gmean += gr[j];
          gydot += gr[j] * yr[j];
        }
        gmean /= static_cast<T>(n);
        gydot /= static_cast<T>(n);
        T* o = &gx.data[static_cast<std::size_t>(i) * n];
        for (int j = 0; j < n; ++j) o[j] = inv * (gr[j] - gmean - yr[j] * gydot);
      }
      accum(a, gx);
    });
  }

  Var concat_rows(Var a, Var b) {
    Tensor<T> out = k_concat_rows(val(a), val(b));
    return push(std::move(out), needs(a) || needs(b), [this, a, b](int self) {
      const Tensor<T>& g = nodes_[self].grad;
      const int n = g.shape[1];
      const int ma = val(a).shape[0];
      if (needs(a)) {
        Tensor<T> ga({ma, n});
        std::copy(g.data.begin(), g.data.begin() + static_cast<std::size_t>(ma) * n,
                  ga.data.begin());
        accum(a, ga);
      }
      if (needs(b)) {
        const int mb = val(b).shape[0];
        Tensor<T> gb({mb, n});
        std::copy(g.data.begin() + static_cast<std::size_t>(ma) * n, g.data.end(),
                  gb.data.begin());
        accum(b, gb);
      }
    });
  }

  // ---- backward -----------------------------------------------------------

  void backward(Var loss) {
    if (backward_done_) {
      throw ContractError("tape: backward called twice without a fresh forward pass");
    }
    if (nodes_.empty()) throw ContractError("tape: backward on empty tape");
    if (!val(loss).is_scalar()) {
      throw ShapeError("tape: backward requires a scalar loss, got shape " +
                       val(loss).shape_str());
    }
    backward_done_ = true;
    Node& root = nodes_[loss.id];
    root.grad = Tensor<T>(root.value.shape, T(1));
    for (int i = loss.id; i >= 0; --i) {
      Node& n = nodes_[i];
      if (!n.back || n.grad.data.empty()) continue;
      n.back(i);
    }
  }

  bool backward_done() const { return backward_done_; }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;  // empty until touched
    bool needs_grad = false;
    std::function<void(int)> back;
  };

  bool needs(Var v) const { return nodes_[v.id].needs_grad; }

  void accum(Var v, const Tensor<T>& g) {
    Node& n = nodes_[v.id];
    if (n.grad.data.empty()) {
      n.grad = g;
    } else {
      for (std::size_t i = 0; i < g.data.size(); ++i) n.grad.data[i] += g.data[i];
    }
  }

  // Inputs are captured by the backward closure itself.
  Var push(Tensor<T> value, bool needs_grad, std::function<void(int)> back) {
    Node n;
    n.value = std::move(value);
    n.needs_grad = needs_grad;
    n.back = needs_grad ? std::move(back) : nullptr;
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace nco
