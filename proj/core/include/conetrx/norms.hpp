#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "conetrx/kernels.hpp"
#include "conetrx/tensor.hpp"

namespace conetrx {

enum class NormMode { train, eval };

/// Batch statistics saved by a train-mode forward pass, needed to run the
/// matching backward pass. For batch norm: one entry per channel. For layer
/// norm: one entry per (batch, t, f) position.
template <typename T>
struct NormStats {
  std::vector<T> mean, var;
};

template <typename T>
struct NormGrads {
  Tensor<T> dx, dgamma, dbeta;
};

// ---------------------------------------------------------------------------
// Batch normalization over (batch, T, F) per channel.
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> batch_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     Tensor<T>& running_mean, Tensor<T>& running_var, bool& stats_ready, NormMode mode,
                     double eps, double momentum, NormStats<T>* cache) {
  ActDims d = act_dims(x);
  require(gamma.rank() == 1 && gamma.dim(0) == d.c, "batch norm gain must be [C], got " + gamma.shape_str());
  require(beta.same_shape(gamma) && running_mean.same_shape(gamma) && running_var.same_shape(gamma),
          "batch norm parameter shapes inconsistent");

  const int64_t rows = d.b * d.t * d.f;
  const int64_t c = d.c;
  std::vector<T> mean(static_cast<size_t>(c)), var(static_cast<size_t>(c));

  if (mode == NormMode::train) {
    std::vector<double> sum(static_cast<size_t>(c), 0.0), sq(static_cast<size_t>(c), 0.0);
    const T* xp = x.data();
    for (int64_t r = 0; r < rows; ++r) {
      const T* row = xp + r * c;
      for (int64_t i = 0; i < c; ++i) {
        sum[static_cast<size_t>(i)] += row[i];
        sq[static_cast<size_t>(i)] += static_cast<double>(row[i]) * row[i];
      }
    }
    const double inv = 1.0 / static_cast<double>(rows);
    for (int64_t i = 0; i < c; ++i) {
      double m = sum[static_cast<size_t>(i)] * inv;
      double v = sq[static_cast<size_t>(i)] * inv - m * m;
      if (v < 0) v = 0;  // guard against round-off on degenerate inputs
      mean[static_cast<size_t>(i)] = static_cast<T>(m);
      var[static_cast<size_t>(i)] = static_cast<T>(v);
      running_mean[i] = static_cast<T>(momentum * running_mean[i] + (1.0 - momentum) * m);
      running_var[i] = static_cast<T>(momentum * running_var[i] + (1.0 - momentum) * v);
    }
    stats_ready = true;
  } else {
    if (!stats_ready)
      throw std::runtime_error(
          "batch norm evaluated in eval mode before any train-mode update; "
          "train first or seed the running statistics");
    for (int64_t i = 0; i < c; ++i) {
      mean[static_cast<size_t>(i)] = running_mean[i];
      var[static_cast<size_t>(i)] = running_var[i];
    }
  }

  if (cache != nullptr) {
    cache->mean = mean;
    cache->var = var;
  }

  Tensor<T> y(x.shape());
  std::vector<T> scale(static_cast<size_t>(c)), shift(static_cast<size_t>(c));
  for (int64_t i = 0; i < c; ++i) {
    T istd = static_cast<T>(1.0 / std::sqrt(static_cast<double>(var[static_cast<size_t>(i)]) + eps));
    scale[static_cast<size_t>(i)] = gamma[i] * istd;
    shift[static_cast<size_t>(i)] = beta[i] - mean[static_cast<size_t>(i)] * scale[static_cast<size_t>(i)];
  }
  const T* xp = x.data();
  T* yp = y.data();
  for (int64_t r = 0; r < rows; ++r) {
    const T* xr = xp + r * c;
    T* yr = yp + r * c;
    for (int64_t i = 0; i < c; ++i) yr[i] = xr[i] * scale[static_cast<size_t>(i)] + shift[static_cast<size_t>(i)];
  }
  return y;
}

/// Backward through a train-mode batch norm (gradients flow through the
/// batch statistics).
template <typename T>
NormGrads<T> batch_norm_backward(const Tensor<T>& x, const Tensor<T>& gamma, const NormStats<T>& stats,
                                 double eps, const Tensor<T>& gout) {
  ActDims d = act_dims(x);
  require(gout.same_shape(x), "batch norm backward shape mismatch");
  const int64_t rows = d.b * d.t * d.f;
  const int64_t c = d.c;
  const double m = static_cast<double>(rows);

  std::vector<double> istd(static_cast<size_t>(c));
  for (int64_t i = 0; i < c; ++i)
    istd[static_cast<size_t>(i)] = 1.0 / std::sqrt(static_cast<double>(stats.var[static_cast<size_t>(i)]) + eps);

  // s1 = sum(g), s2 = sum(g * xhat) per channel.
  std::vector<double> s1(static_cast<size_t>(c), 0.0), s2(static_cast<size_t>(c), 0.0);
  const T* xp = x.data();
  const T* gp = gout.data();
  for (int64_t r = 0; r < rows; ++r) {
    const T* xr = xp + r * c;
    const T* gr = gp + r * c;
    for (int64_t i = 0; i < c; ++i) {
      double xhat = (static_cast<double>(xr[i]) - stats.mean[static_cast<size_t>(i)]) * istd[static_cast<size_t>(i)];
      s1[static_cast<size_t>(i)] += gr[i];
      s2[static_cast<size_t>(i)] += gr[i] * xhat;
    }
  }

  NormGrads<T> g;
  g.dx = Tensor<T>(x.shape());
  g.dgamma = Tensor<T>({c});
  g.dbeta = Tensor<T>({c});
  for (int64_t i = 0; i < c; ++i) {
    g.dgamma[i] = static_cast<T>(s2[static_cast<size_t>(i)]);
    g.dbeta[i] = static_cast<T>(s1[static_cast<size_t>(i)]);
  }

  T* dxp = g.dx.data();
  for (int64_t r = 0; r < rows; ++r) {
    const T* xr = xp + r * c;
    const T* gr = gp + r * c;
    T* dxr = dxp + r * c;
    for (int64_t i = 0; i < c; ++i) {
      size_t ii = static_cast<size_t>(i);
      double xhat = (static_cast<double>(xr[i]) - stats.mean[ii]) * istd[ii];
      double v = static_cast<double>(gr[i]) - s1[ii] / m - xhat * s2[ii] / m;
      dxr[i] = static_cast<T>(static_cast<double>(gamma[i]) * istd[ii] * v);
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Layer normalization across channels at each (batch, t, f) position.
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, double eps,
                     NormStats<T>* cache) {
  ActDims d = act_dims(x);
  require(gamma.rank() == 1 && gamma.dim(0) == d.c, "layer norm gain must be [C], got " + gamma.shape_str());
  require(beta.same_shape(gamma), "layer norm shift shape mismatch");
  const int64_t rows = d.b * d.t * d.f;
  const int64_t c = d.c;

  Tensor<T> y(x.shape());
  if (cache != nullptr) {
    cache->mean.resize(static_cast<size_t>(rows));
    cache->var.resize(static_cast<size_t>(rows));
  }
  const T* xp = x.data();
  T* yp = y.data();
  for (int64_t r = 0; r < rows; ++r) {
    const T* xr = xp + r * c;
    T* yr = yp + r * c;
    double sum = 0.0, sq = 0.0;
    for (int64_t i = 0; i < c; ++i) {
      sum += xr[i];
      sq += static_cast<double>(xr[i]) * xr[i];
    }
    double m = sum / static_cast<double>(c);
    double v = sq / static_cast<double>(c) - m * m;
    if (v < 0) v = 0;
    if (cache != nullptr) {
      cache->mean[static_cast<size_t>(r)] = static_cast<T>(m);
      cache->var[static_cast<size_t>(r)] = static_cast<T>(v);
    }
    double istd = 1.0 / std::sqrt(v + eps);
    for (int64_t i = 0; i < c; ++i)
      yr[i] = static_cast<T>((static_cast<double>(xr[i]) - m) * istd * gamma[i] + beta[i]);
  }
  return y;
}

template <typename T>
NormGrads<T> layer_norm_backward(const Tensor<T>& x, const Tensor<T>& gamma, const NormStats<T>& stats,
                                 double eps, const Tensor<T>& gout) {
  ActDims d = act_dims(x);
  require(gout.same_shape(x), "layer norm backward shape mismatch");
  const int64_t rows = d.b * d.t * d.f;
  const int64_t c = d.c;
  const double n = static_cast<double>(c);

  NormGrads<T> g;
  g.dx = Tensor<T>(x.shape());
  g.dgamma = Tensor<T>({c});
  g.dbeta = Tensor<T>({c});

  const T* xp = x.data();
  const T* gp = gout.data();
  T* dxp = g.dx.data();
  std::vector<double> dgamma(static_cast<size_t>(c), 0.0), dbeta(static_cast<size_t>(c), 0.0);

  for (int64_t r = 0; r < rows; ++r) {
    const T* xr = xp + r * c;
    const T* gr = gp + r * c;
    T* dxr = dxp + r * c;
    double m = stats.mean[static_cast<size_t>(r)];
    double istd = 1.0 / std::sqrt(static_cast<double>(stats.var[static_cast<size_t>(r)]) + eps);
    double s1 = 0.0, s2 = 0.0;
    for (int64_t i = 0; i < c; ++i) {
      double xhat = (static_cast<double>(xr[i]) - m) * istd;
      double gg = static_cast<double>(gr[i]) * gamma[i];
      s1 += gg;
      s2 += gg * xhat;
      dgamma[static_cast<size_t>(i)] += gr[i] * xhat;
      dbeta[static_cast<size_t>(i)] += gr[i];
    }
    for (int64_t i = 0; i < c; ++i) {
      double xhat = (static_cast<double>(xr[i]) - m) * istd;
      double gg = static_cast<double>(gr[i]) * gamma[i];
      dxr[i] = static_cast<T>(istd * (gg - s1 / n - xhat * s2 / n));
    }
  }
  for (int64_t i = 0; i < c; ++i) {
    g.dgamma[i] = static_cast<T>(dgamma[static_cast<size_t>(i)]);
    g.dbeta[i] = static_cast<T>(dbeta[static_cast<size_t>(i)]);
  }
  return g;
}

}  // namespace conetrx
