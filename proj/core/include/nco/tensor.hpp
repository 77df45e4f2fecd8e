#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "nco/errors.hpp"

namespace nco {

// Dense row-major tensor. The scalar type is selectable: float for training,
// double for gradient checks.
template <class T>
struct Tensor {
  std::vector<int> shape;
  std::vector<T> data;
  bool requires_grad = false;

  Tensor() = default;

  explicit Tensor(std::vector<int> s, T fill = T(0)) : shape(std::move(s)) {
    data.assign(count(shape), fill);
  }

  Tensor(std::vector<int> s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {
    if (count(shape) != data.size()) {
      throw ShapeError("tensor init: shape " + shape_str(shape) + " needs " +
                       std::to_string(count(shape)) + " values, got " +
                       std::to_string(data.size()));
    }
  }

  static std::size_t count(const std::vector<int>& s) {
    std::size_t n = 1;
    for (int d : s) n *= static_cast<std::size_t>(d);
    return n;
  }

  static std::string shape_str(const std::vector<int>& s) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << ")";
    return os.str();
  }

  std::size_t size() const { return data.size(); }
  bool is_scalar() const { return data.size() == 1; }
  int rows() const { return shape.empty() ? 1 : shape[0]; }
  int cols() const { return shape.size() < 2 ? 1 : shape[1]; }

  T& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols() + c]; }
  T at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols() + c]; }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  std::string shape_str() const { return shape_str(shape); }
};

// Boolean mask aligned with the last two axes of the tensor it gates.
struct Mask {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> data;  // row-major, 1 = feasible

  Mask() = default;
  Mask(int r, int c, std::uint8_t fill = 1)
      : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {}

  std::uint8_t at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
  void set(int r, int c, bool v) { data[static_cast<std::size_t>(r) * cols + c] = v ? 1 : 0; }

  static Mask all(int r, int c) { return Mask(r, c, 1); }
};

namespace detail {

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw ShapeError(msg);
}

template <class T>
void require_2d(const Tensor<T>& t, const char* who) {
  require(t.shape.size() == 2, std::string(who) + ": expected 2-d tensor, got shape " +
                                   Tensor<T>::shape_str(t.shape));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Kernels. Pure value functions; the tape wraps these with backward closures.
// ---------------------------------------------------------------------------

// C = A (m,k) * B (k,n)
template <class T>
Tensor<T> k_matmul_nn(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_2d(a, "matmul");
  detail::require_2d(b, "matmul");
  if (a.shape[1] != b.shape[0]) {
    throw ShapeError("matmul: " + a.shape_str() + " x " + b.shape_str() + " mismatch");
  }
  const int m = a.shape[0], k = a.shape[1], n = b.shape[1];
  Tensor<T> c({m, n});
  for (int i = 0; i < m; ++i) {
    const T* arow = &a.data[static_cast<std::size_t>(i) * k];
    T* crow = &c.data[static_cast<std::size_t>(i) * n];
    for (int p = 0; p < k; ++p) {
      const T av = arow[p];
      if (av == T(0)) continue;
      const T* brow = &b.data[static_cast<std::size_t>(p) * n];
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

// C = A (m,k) * B^T where B is (n,k)
template <class T>
Tensor<T> k_matmul_nt(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_2d(a, "matmul_nt");
  detail::require_2d(b, "matmul_nt");
  if (a.shape[1] != b.shape[1]) {
    throw ShapeError("matmul_nt: " + a.shape_str() + " x " + b.shape_str() + "^T mismatch");
  }
  const int m = a.shape[0], k = a.shape[1], n = b.shape[0];
  Tensor<T> c({m, n});
  for (int i = 0; i < m; ++i) {
    const T* arow = &a.data[static_cast<std::size_t>(i) * k];
    T* crow = &c.data[static_cast<std::size_t>(i) * n];
    for (int j = 0; j < n; ++j) {
      const T* brow = &b.data[static_cast<std::size_t>(j) * k];
      T acc = T(0);
      for (int p = 0; p < k; ++p) acc += arow[p] * brow[p];
      crow[j] = acc;
    }
  }
  return c;
}

// C = A^T (k,m) * B (k,n) -> (m,n)
template <class T>
Tensor<T> k_matmul_tn(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_2d(a, "matmul_tn");
  detail::require_2d(b, "matmul_tn");
  if (a.shape[0] != b.shape[0]) {
    throw ShapeError("matmul_tn: " + a.shape_str() + "^T x " + b.shape_str() + " mismatch");
  }
  const int k = a.shape[0], m = a.shape[1], n = b.shape[1];
  Tensor<T> c({m, n});
  for (int p = 0; p < k; ++p) {
    const T* arow = &a.data[static_cast<std::size_t>(p) * m];
    const T* brow = &b.data[static_cast<std::size_t>(p) * n];
    for (int i = 0; i < m; ++i) {
      const T av = arow[i];
      if (av == T(0)) continue;
      T* crow = &c.data[static_cast<std::size_t>(i) * n];
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

template <class T>
Tensor<T> k_add(const Tensor<T>& a, const Tensor<T>& b) {
  if (!a.same_shape(b)) {
    throw ShapeError("add: shape " + a.shape_str() + " vs " + b.shape_str());
  }
  Tensor<T> c = a;
  for (std::size_t i = 0; i < c.data.size(); ++i) c.data[i] += b.data[i];
  return c;
}

// Broadcast a row vector (n) or (1,n) over the rows of (m,n).
template <class T>
Tensor<T> k_add_rowvec(const Tensor<T>& a, const Tensor<T>& v) {
  detail::require_2d(a, "add_rowvec");
  const int n = a.shape[1];
  if (static_cast<int>(v.size()) != n) {
    throw ShapeError("add_rowvec: matrix " + a.shape_str() + " vs vector " + v.shape_str());
  }
  Tensor<T> c = a;
  for (int i = 0; i < a.shape[0]; ++i)
    for (int j = 0; j < n; ++j) c.data[static_cast<std::size_t>(i) * n + j] += v.data[j];
  return c;
}

template <class T>
Tensor<T> k_mul(const Tensor<T>& a, const Tensor<T>& b) {
  if (!a.same_shape(b)) {
    throw ShapeError("mul: shape " + a.shape_str() + " vs " + b.shape_str());
  }
  Tensor<T> c = a;
  for (std::size_t i = 0; i < c.data.size(); ++i) c.data[i] *= b.data[i];
  return c;
}

template <class T>
Tensor<T> k_mul_rowvec(const Tensor<T>& a, const Tensor<T>& v) {
  detail::require_2d(a, "mul_rowvec");
  const int n = a.shape[1];
  if (static_cast<int>(v.size()) != n) {
    throw ShapeError("mul_rowvec: matrix " + a.shape_str() + " vs vector " + v.shape_str());
  }
  Tensor<T> c = a;
  for (int i = 0; i < a.shape[0]; ++i)
    for (int j = 0; j < n; ++j) c.data[static_cast<std::size_t>(i) * n + j] *= v.data[j];
  return c;
}

template <class T>
Tensor<T> k_scale(const Tensor<T>& a, T c) {
  Tensor<T> r = a;
  for (auto& x : r.data) x *= c;
  return r;
}

template <class T>
Tensor<T> k_tanh(const Tensor<T>& a) {
  Tensor<T> r = a;
  for (auto& x : r.data) x = std::tanh(x);
  return r;
}

template <class T>
Tensor<T> k_relu(const Tensor<T>& a) {
  Tensor<T> r = a;
  for (auto& x : r.data) x = x > T(0) ? x : T(0);
  return r;
}

template <class T>
Tensor<T> k_log(const Tensor<T>& a) {
  Tensor<T> r = a;
  for (auto& x : r.data) x = std::log(x);
  return r;
}

// Softmax over the last axis, restricted to mask==1 positions; masked entries
// are exactly zero. A fully masked row has no feasible action.
template <class T>
Tensor<T> k_masked_softmax(const Tensor<T>& a, const Mask& m) {
  detail::require_2d(a, "masked_softmax");
  if (a.shape[0] != m.rows || a.shape[1] != m.cols) {
    throw ShapeError("masked_softmax: logits " + a.shape_str() + " vs mask (" +
                     std::to_string(m.rows) + "," + std::to_string(m.cols) + ")");
  }
  const int rows = a.shape[0], n = a.shape[1];
  Tensor<T> y({rows, n});
  for (int i = 0; i < rows; ++i) {
    const T* x = &a.data[static_cast<std::size_t>(i) * n];
    T* out = &y.data[static_cast<std::size_t>(i) * n];
    T mx = -std::numeric_limits<T>::infinity();
    bool any = false;
    for (int j = 0; j < n; ++j) {
      if (m.at(i, j)) {
        any = true;
        if (x[j] > mx) mx = x[j];
      }
    }
    if (!any) {
      throw FeasibilityError("masked_softmax: row " + std::to_string(i) +
                             " is fully masked (no feasible action)");
    }
    T sum = T(0);
    for (int j = 0; j < n; ++j) {
      if (m.at(i, j)) {
        out[j] = std::exp(x[j] - mx);
        sum += out[j];
      } else {
        out[j] = T(0);
      }
    }
    for (int j = 0; j < n; ++j) out[j] /= sum;
  }
  return y;
}

// (m,n) -> (1,n) column means.
template <class T>
Tensor<T> k_mean_rows(const Tensor<T>& a) {
  detail::require_2d(a, "mean_rows");
  const int m = a.shape[0], n = a.shape[1];
  Tensor<T> r({1, n});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) r.data[j] += a.data[static_cast<std::size_t>(i) * n + j];
  for (int j = 0; j < n; ++j) r.data[j] /= static_cast<T>(m);
  return r;
}

template <class T>
Tensor<T> k_reduce_sum(const Tensor<T>& a) {
  Tensor<T> r({1});
  T acc = T(0);
  for (T x : a.data) acc += x;
  r.data[0] = acc;
  return r;
}

template <class T>
Tensor<T> k_reduce_mean(const Tensor<T>& a) {
  Tensor<T> r = k_reduce_sum(a);
  r.data[0] /= static_cast<T>(a.size());
  return r;
}

template <class T>
Tensor<T> k_select_rows(const Tensor<T>& a, const std::vector<int>& idx) {
  detail::require_2d(a, "select_rows");
  const int n = a.shape[1];
  Tensor<T> r({static_cast<int>(idx.size()), n});
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || idx[i] >= a.shape[0]) {
      throw ShapeError("select_rows: index " + std::to_string(idx[i]) + " out of range for " +
                       a.shape_str());
    }
    for (int j = 0; j < n; ++j) r.data[i * n + j] = a.data[static_cast<std::size_t>(idx[i]) * n + j];
  }
  return r;
}

// Per-row column gather: (m,n) with idx (m) -> (m,1).
template <class T>
Tensor<T> k_gather_cols(const Tensor<T>& a, const std::vector<int>& idx) {
  detail::require_2d(a, "gather_cols");
  if (static_cast<int>(idx.size()) != a.shape[0]) {
    throw ShapeError("gather_cols: " + std::to_string(idx.size()) + " indices for " +
                     a.shape_str());
  }
  Tensor<T> r({a.shape[0], 1});
  for (int i = 0; i < a.shape[0]; ++i) {
    if (idx[i] < 0 || idx[i] >= a.shape[1]) {
      throw ShapeError("gather_cols: index " + std::to_string(idx[i]) + " out of range for " +
                       a.shape_str());
    }
    r.data[i] = a.at(i, idx[i]);
  }
  return r;
}

// Standardize each row to zero mean / unit variance (the scale-shift affine is
// applied separately via mul_rowvec/add_rowvec).
template <class T>
Tensor<T> k_layer_norm(const Tensor<T>& a, T eps) {
  detail::require_2d(a, "layer_norm");
  const int m = a.shape[0], n = a.shape[1];
  Tensor<T> r({m, n});
  for (int i = 0; i < m; ++i) {
    const T* x = &a.data[static_cast<std::size_t>(i) * n];
    T* out = &r.data[static_cast<std::size_t>(i) * n];
    T mean = T(0);
    for (int j = 0; j < n; ++j) mean += x[j];
    mean /= static_cast<T>(n);
    T var = T(0);
    for (int j = 0; j < n; ++j) var += (x[j] - mean) * (x[j] - mean);
    var /= static_cast<T>(n);
    const T inv = T(1) / std::sqrt(var + eps);
    for (int j = 0; j < n; ++j) out[j] = (x[j] - mean) * inv;
  }
  return r;
}

// Stack two matrices with equal column counts along axis 0.
template <class T>
Tensor<T> k_concat_rows(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_2d(a, "concat_rows");
  detail::require_2d(b, "concat_rows");
  if (a.shape[1] != b.shape[1]) {
    throw ShapeError("concat_rows: " + a.shape_str() + " vs " + b.shape_str());
  }
  Tensor<T> r({a.shape[0] + b.shape[0], a.shape[1]});
  std::copy(a.data.begin(), a.data.end(), r.data.begin());
  std::copy(b.data.begin(), b.data.end(), r.data.begin() + a.data.size());
  return r;
}

// Shannon entropy of one probability row (natural log); zero entries skipped.
template <class T>
double row_entropy(const T* p, int n) {
  double h = 0.0;
  for (int j = 0; j < n; ++j) {
    const double pj = static_cast<double>(p[j]);
    if (pj > 0.0) h -= pj * std::log(pj);
  }
  return h;
}

}  // namespace nco
