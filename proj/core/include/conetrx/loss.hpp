#pragma once

#include <cmath>
#include <cstdint>

#include "conetrx/kernels.hpp"
#include "conetrx/tensor.hpp"

namespace conetrx {

template <typename T>
struct BceResult {
  double loss = 0.0;
  Tensor<T> dlogits;
};

/// Binary cross-entropy on logits, averaged over the bits of unmasked
/// resource elements. `mask` has one entry per RE (leading dims of `logits`
/// minus the bit axis); nonzero selects the RE. Numerically stable for
/// |logit| well beyond 100.
template <typename T>
BceResult<T> bce_with_logits(const Tensor<T>& logits, const Tensor<T>& targets, const Tensor<uint8_t>& mask) {
  require(logits.same_shape(targets), "bce logits/targets shape mismatch: " + logits.shape_str() + " vs " +
                                          targets.shape_str());
  const int64_t bits = logits.dim(logits.rank() - 1);
  require(mask.numel() * bits == logits.numel(),
          "bce mask must cover the leading dims of logits: mask " + mask.shape_str() + ", logits " +
              logits.shape_str());

  int64_t selected = 0;
  for (int64_t i = 0; i < mask.numel(); ++i)
    if (mask[i]) ++selected;
  require(selected > 0, "bce mask selects no resource elements");

  const double inv = 1.0 / static_cast<double>(selected * bits);
  BceResult<T> out;
  out.dlogits = Tensor<T>::zeros_like(logits);

  const T* zp = logits.data();
  const T* yp = targets.data();
  T* gp = out.dlogits.data();
  double acc = 0.0;
  for (int64_t r = 0; r < mask.numel(); ++r) {
    if (!mask[r]) continue;
    const T* z = zp + r * bits;
    const T* y = yp + r * bits;
    T* g = gp + r * bits;
    for (int64_t i = 0; i < bits; ++i) {
      double zv = z[i], yv = y[i];
      // loss = max(z,0) - z*y + log(1 + exp(-|z|))
      acc += (zv > 0 ? zv : 0.0) - zv * yv + std::log1p(std::exp(-std::abs(zv)));
      double sig = zv >= 0 ? 1.0 / (1.0 + std::exp(-zv)) : std::exp(zv) / (1.0 + std::exp(zv));
      g[i] = static_cast<T>((sig - yv) * inv);
    }
  }
  out.loss = acc * inv;
  return out;
}

}  // namespace conetrx
