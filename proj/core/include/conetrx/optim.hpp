#pragma once

#include <cmath>
#include <cstdint>

#include "conetrx/tensor.hpp"

namespace conetrx {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Per-parameter Adam state: first/second moment grids and step counter.
template <typename T>
struct AdamState {
  Tensor<T> m, v;
  int64_t step = 0;
};

/// One bias-corrected Adam update. Deterministic: identical inputs produce
/// bitwise-identical parameters.
template <typename T>
void adam_step(Tensor<T>& param, const Tensor<T>& grad, AdamState<T>& state, const AdamConfig& cfg) {
  require(param.same_shape(grad), "adam: gradient shape " + grad.shape_str() + " != parameter " + param.shape_str());
  if (state.m.numel() == 0) {
    state.m = Tensor<T>::zeros_like(param);
    state.v = Tensor<T>::zeros_like(param);
    state.step = 0;
  }
  require(state.m.same_shape(param), "adam: state shape does not match parameter");

  ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));

  T* p = param.data();
  const T* g = grad.data();
  T* m = state.m.data();
  T* v = state.v.data();
  for (int64_t i = 0; i < param.numel(); ++i) {
    double gi = g[i];
    double mi = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
    double vi = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
    m[i] = static_cast<T>(mi);
    v[i] = static_cast<T>(vi);
    double mhat = mi / bc1;
    double vhat = vi / bc2;
    p[i] = static_cast<T>(p[i] - cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps));
  }
}

}  // namespace conetrx
