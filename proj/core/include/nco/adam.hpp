#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "nco/errors.hpp"
#include "nco/params.hpp"
#include "nco/tensor.hpp"

namespace nco {

// The surrogate objective is maximized; we implement that as plain Adam
// descent on its negation. This is the only place the sign convention lives.
template <class T>
struct AdamConfig {
  T lr = T(1e-4);
  T beta1 = T(0.9);
  T beta2 = T(0.999);
  T eps = T(1e-8);
};

template <class T>
struct AdamState {
  std::vector<Tensor<T>> first_moment;
  std::vector<Tensor<T>> second_moment;
  std::int64_t step_count = 0;

  static AdamState for_params(const ParamSet<T>& params) {
    AdamState s;
    s.first_moment.reserve(params.size());
    s.second_moment.reserve(params.size());
    for (int i = 0; i < params.size(); ++i) {
      s.first_moment.emplace_back(params.tensor(i).shape, T(0));
      s.second_moment.emplace_back(params.tensor(i).shape, T(0));
    }
    return s;
  }
};

// One bias-corrected Adam update over all trainable parameters. Gradients are
// of the descent loss. Parameters with requires_grad=false are skipped (their
// moments stay untouched). Throws on non-finite gradients, naming the tensor.
template <class T>
void adam_step(ParamSet<T>& params, const std::vector<Tensor<T>>& grads, AdamState<T>& state,
               const AdamConfig<T>& cfg) {
  if (static_cast<int>(grads.size()) != params.size() ||
      static_cast<int>(state.first_moment.size()) != params.size()) {
    throw ShapeError("adam_step: gradient/state count mismatch");
  }
  state.step_count += 1;
  const T bc1 = T(1) - std::pow(cfg.beta1, static_cast<T>(state.step_count));
  const T bc2 = T(1) - std::pow(cfg.beta2, static_cast<T>(state.step_count));
  for (int p = 0; p < params.size(); ++p) {
    Tensor<T>& theta = params.tensor(p);
    if (!theta.requires_grad) continue;
    const Tensor<T>& g = grads[p];
    if (!theta.same_shape(g)) {
      throw ShapeError("adam_step: parameter '" + params.name(p) + "' shape " +
                       theta.shape_str() + " vs gradient " + g.shape_str());
    }
    Tensor<T>& m = state.first_moment[p];
    Tensor<T>& v = state.second_moment[p];
    for (std::size_t i = 0; i < g.data.size(); ++i) {
      const T gi = g.data[i];
      if (!std::isfinite(gi)) {
        throw ContractError("adam_step: non-finite gradient in parameter '" + params.name(p) +
                            "' at element " + std::to_string(i));
      }
      m.data[i] = cfg.beta1 * m.data[i] + (T(1) - cfg.beta1) * gi;
      v.data[i] = cfg.beta2 * v.data[i] + (T(1) - cfg.beta2) * gi * gi;
      const T mhat = m.data[i] / bc1;
      const T vhat = v.data[i] / bc2;
      theta.data[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

}  // namespace nco
