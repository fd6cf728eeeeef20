#pragma once

#include <algorithm>
#include <optional>
#include <string>

#include "conetrx/tensor.hpp"
#include "conetrx/threading.hpp"

namespace conetrx {

// Spatial dims of an activation tensor, rank 3 [T,F,C] or rank 4 [B,T,F,C].
struct ActDims {
  int64_t b, t, f, c;
};

template <typename T>
inline ActDims act_dims(const Tensor<T>& x) {
  require(x.rank() == 3 || x.rank() == 4, "activation tensor must be [T,F,C] or [B,T,F,C], got " + x.shape_str());
  if (x.rank() == 3) return {1, x.dim(0), x.dim(1), x.dim(2)};
  return {x.dim(0), x.dim(1), x.dim(2), x.dim(3)};
}

template <typename T>
inline std::vector<int64_t> with_channels(const Tensor<T>& x, int64_t c) {
  auto s = x.shape();
  s.back() = c;
  return s;
}

// ---------------------------------------------------------------------------
// 2-D convolution, zero-padded "same", stride 1. Weights are [kh,kw,Cin,Cout].
// ---------------------------------------------------------------------------

template <typename T>
inline void check_conv_args(const ActDims& d, const Tensor<T>& w, const Tensor<T>* bias) {
  require(w.rank() == 4, "conv weights must be [kh,kw,Cin,Cout], got " + w.shape_str());
  require(w.dim(0) % 2 == 1 && w.dim(1) % 2 == 1,
          "conv kernel dims must be odd, got " + w.shape_str());
  require(w.dim(2) == d.c, "conv input has " + std::to_string(d.c) + " channels but weights expect " +
                               std::to_string(w.dim(2)));
  if (bias != nullptr)
    require(bias->rank() == 1 && bias->dim(0) == w.dim(3),
            "conv bias must be [Cout]=" + std::to_string(w.dim(3)) + ", got " + bias->shape_str());
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>* bias = nullptr) {
  ActDims d = act_dims(x);
  check_conv_args(d, w, bias);
  const int64_t kh = w.dim(0), kw = w.dim(1), cin = d.c, cout = w.dim(3);
  const int64_t oh = kh / 2, ow = kw / 2;

  Tensor<T> y(with_channels(x, cout));
  const T* xp = x.data();
  const T* wp = w.data();
  T* yp = y.data();

  auto run = [&](int64_t b0, int64_t b1, int) {
    for (int64_t b = b0; b < b1; ++b) {
      const T* xb = xp + b * d.t * d.f * cin;
      T* yb = yp + b * d.t * d.f * cout;
      for (int64_t to = 0; to < d.t; ++to) {
        for (int64_t fo = 0; fo < d.f; ++fo) {
          T* yrow = yb + (to * d.f + fo) * cout;
          if (bias != nullptr) {
            const T* bp = bias->data();
            for (int64_t co = 0; co < cout; ++co) yrow[co] = bp[co];
          }
          for (int64_t dt = 0; dt < kh; ++dt) {
            int64_t ti = to + dt - oh;
            if (ti < 0 || ti >= d.t) continue;
            for (int64_t df = 0; df < kw; ++df) {
              int64_t fi = fo + df - ow;
              if (fi < 0 || fi >= d.f) continue;
              const T* xrow = xb + (ti * d.f + fi) * cin;
              const T* wbase = wp + (dt * kw + df) * cin * cout;
              for (int64_t ci = 0; ci < cin;++ci) {
                const T xv = xrow[ci];
                const T* wrow = wbase + ci * cout;
                for (int64_t co = 0; co < cout; ++co) yrow[co] += xv * wrow[co];
              }
            }
          }
        }
      }
    }
  };
  parallel_chunks(d.b, Compute::effective_threads(), run);
  return y;
}

template <typename T>
struct ConvGrads {
  Tensor<T> dinput;
  Tensor<T> dweight;
  std::optional<Tensor<T>> dbias;
};

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& x, const Tensor<T>& w, bool has_bias, const Tensor<T>& gout) {
  ActDims d = act_dims(x);
  check_conv_args(d, w, static_cast<const Tensor<T>*>(nullptr));
  const int64_t kh = w.dim(0), kw = w.dim(1), cin = d.c, cout = w.dim(3);
  const int64_t oh = kh / 2, ow = kw / 2;
  require(gout.shape() == with_channels(x, cout),
          "conv upstream gradient shape " + gout.shape_str() + " does not match forward output");

  ConvGrads<T> g;
  g.dinput = Tensor<T>::zeros_like(x);
  g.dweight = Tensor<T>::zeros_like(w);
  if (has_bias) g.dbias = Tensor<T>({cout});

  const T* xp = x.data();
  const T* wp = w.data();
  const T* gp = gout.data();

  int nthreads = Compute::effective_threads();
  int nchunks = static_cast<int>(std::min<int64_t>(nthreads, d.b));
  if (nchunks < 1) nchunks = 1;
  // Per-chunk weight/bias accumulators reduced in chunk order afterwards.
  std::vector<Tensor<T>> dw_part(static_cast<size_t>(nchunks), Tensor<T>::zeros_like(w));
  std::vector<std::vector<T>> db_part(static_cast<size_t>(nchunks), std::vector<T>(static_cast<size_t>(cout), T(0)));

  auto run = [&](int64_t b0, int64_t b1, int chunk) {
    T* dwp = dw_part[static_cast<size_t>(chunk)].data();
    T* dbp = db_part[static_cast<size_t>(chunk)].data();
    T* dxp = g.dinput.data();
    for (int64_t b = b0; b < b1; ++b) {
      const T* xb = xp + b * d.t * d.f * cin;
      const T* gb = gp + b * d.t * d.f * cout;
      T* dxb = dxp + b * d.t * d.f * cin;
      for (int64_t to = 0; to < d.t; ++to) {
        for (int64_t fo = 0; fo < d.f; ++fo) {
          const T* grow = gb + (to * d.f + fo) * cout;
          if (has_bias)
            for (int64_t co = 0; co < cout; ++co) dbp[co] += grow[co];
          for (int64_t dt = 0; dt < kh; ++dt) {
            int64_t ti = to + dt - oh;
            if (ti < 0 || ti >= d.t) continue;
            for (int64_t df = 0; df < kw; ++df) {
              int64_t fi = fo + df - ow;
              if (fi < 0 || fi >= d.f) continue;
              const T* xrow = xb + (ti * d.f + fi) * cin;
              T* dxrow = dxb + (ti * d.f + fi) * cin;
              const T* wbase = wp + (dt * kw + df) * cin * cout;
              T* dwbase = dwp + (dt * kw + df) * cin * cout;
              for (int64_t ci = 0; ci < cin; ++ci) {
                const T xv = xrow[ci];
                const T* wrow = wbase + ci * cout;
                T* dwrow = dwbase + ci * cout;
                T acc = T(0);
                for (int64_t co = 0; co < cout; ++co) {
                  dwrow[co] += xv * grow[co];
                  acc += wrow[co] * grow[co];
                }
                dxrow[ci] += acc;
              }
            }
          }
        }
      }
    }
  };
  parallel_chunks(d.b, nchunks, run);

  T* dwp = g.dweight.data();
  for (int c = 0; c < nchunks; ++c) {
    const T* part = dw_part[static_cast<size_t>(c)].data();
    for (int64_t i = 0; i < w.numel(); ++i) dwp[i] += part[i];
  }
  if (has_bias) {
    T* dbp = g.dbias->data();
    for (int c = 0; c < nchunks; ++c)
      for (int64_t co = 0; co < cout; ++co) dbp[co] += db_part[static_cast<size_t>(c)][static_cast<size_t>(co)];
  }
  return g;
}

// ---------------------------------------------------------------------------
// Depthwise convolution: one [kh,kw] filter per input channel. Weights are
// [kh,kw,C,1]; combined with a 1x1 pointwise conv2d it forms the separable
// convolution variant.
// ---------------------------------------------------------------------------

template <typename T>
inline void check_dwconv_args(const ActDims& d, const Tensor<T>& w, const Tensor<T>* bias) {
  require(w.rank() == 4 && w.dim(3) == 1, "depthwise weights must be [kh,kw,C,1], got " + w.shape_str());
  require(w.dim(0) % 2 == 1 && w.dim(1) % 2 == 1, "depthwise kernel dims must be odd, got " + w.shape_str());
  require(w.dim(2) == d.c, "depthwise stage expects one filter per input channel: input has " +
                               std::to_string(d.c) + " channels, weights " + w.shape_str());
  if (bias != nullptr)
    require(bias->rank() == 1 && bias->dim(0) == d.c, "depthwise bias must be [C], got " + bias->shape_str());
}

template <typename T>
Tensor<T> depthwise_conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>* bias = nullptr) {
  ActDims d = act_dims(x);
  check_dwconv_args(d, w, bias);
  const int64_t kh = w.dim(0), kw = w.dim(1), c = d.c;
  const int64_t oh = kh / 2, ow = kw / 2;

  Tensor<T> y = bias != nullptr ? Tensor<T>(x.shape()) : Tensor<T>::zeros_like(x);
  const T* xp = x.data();
  const T* wp = w.data();
  T* yp = y.data();

  for (int64_t b = 0; b < d.b; ++b) {
    const T* xb = xp + b * d.t * d.f * c;
    T* yb = yp + b * d.t * d.f * c;
    for (int64_t to = 0; to < d.t; ++to) {
      for (int64_t fo = 0; fo < d.f; ++fo) {
        T* yrow = yb + (to * d.f + fo) * c;
        if (bias != nullptr) {
          const T* bp = bias->data();
          for (int64_t ci = 0; ci < c; ++ci) yrow[ci] = bp[ci];
        }
        for (int64_t dt = 0; dt < kh; ++dt) {
          int64_t ti = to + dt - oh;
          if (ti < 0 || ti >= d.t) continue;
          for (int64_t df = 0; df < kw; ++df) {
            int64_t fi = fo + df - ow;
            if (fi < 0 || fi >= d.f) continue;
            const T* xrow = xb + (ti * d.f + fi) * c;
            const T* wrow = wp + (dt * kw + df) * c;
            for (int64_t ci = 0; ci < c; ++ci) yrow[ci] += xrow[ci] * wrow[ci];
          }
        }
      }
    }
  }
  return y;
}

template <typename T>
ConvGrads<T> depthwise_conv2d_backward(const Tensor<T>& x, const Tensor<T>& w, bool has_bias,
                                       const Tensor<T>& gout) {
  ActDims d = act_dims(x);
  check_dwconv_args(d, w, static_cast<const Tensor<T>*>(nullptr));
  require(gout.same_shape(x), "depthwise upstream gradient shape " + gout.shape_str() + " != input " + x.shape_str());
  const int64_t kh = w.dim(0), kw = w.dim(1), c = d.c;
  const int64_t oh = kh / 2, ow = kw / 2;

  ConvGrads<T> g;
  g.dinput = Tensor<T>::zeros_like(x);
  g.dweight = Tensor<T>::zeros_like(w);
  if (has_bias) g.dbias = Tensor<T>({c});

  const T* xp = x.data();
  const T* wp = w.data();
  const T* gp = gout.data();
  T* dxp = g.dinput.data();
  T* dwp = g.dweight.data();

  for (int64_t b = 0; b < d.b; ++b) {
    const T* xb = xp + b * d.t * d.f * c;
    const T* gb = gp + b * d.t * d.f * c;
    T* dxb = dxp + b * d.t * d.f * c;
    for (int64_t to = 0; to < d.t; ++to) {
      for (int64_t fo = 0; fo < d.f; ++fo) {
        const T* grow = gb + (to * d.f + fo) * c;
        if (has_bias) {
          T* dbp = g.dbias->data();
          for (int64_t ci = 0; ci < c; ++ci) dbp[ci] += grow[ci];
        }
        for (int64_t dt = 0; dt < kh; ++dt) {
          int64_t ti = to + dt - oh;
          if (ti < 0 || ti >= d.t) continue;
          for (int64_t df = 0; df < kw; ++df) {
            int64_t fi = fo + df - ow;
            if (fi < 0 || fi >= d.f) continue;
            const T* xrow = xb + (ti * d.f + fi) * c;
            T* dxrow = dxb + (ti * d.f + fi) * c;
            const T* wrow = wp + (dt * kw + df) * c;
            T* dwrow = dwp + (dt * kw + df) * c;
            for (int64_t ci = 0; ci < c; ++ci) {
              dwrow[ci] += xrow[ci] * grow[ci];
              dxrow[ci] += wrow[ci] * grow[ci];
            }
          }
        }
      }
    }
  }
  return g;
}

/// Depthwise stage followed by a 1x1 pointwise conv2d.
template <typename T>
Tensor<T> depthwise_separable_conv(const Tensor<T>& x, const Tensor<T>& w_dw, const Tensor<T>* b_dw,
                                   const Tensor<T>& w_pw, const Tensor<T>* b_pw) {
  require(w_pw.rank() == 4 && w_pw.dim(0) == 1 && w_pw.dim(1) == 1,
          "pointwise stage must be a 1x1 conv, got " + w_pw.shape_str());
  require(w_dw.rank() == 4 && w_pw.dim(2) == w_dw.dim(2),
          "channel mismatch between depthwise and pointwise stages: " + w_dw.shape_str() + " vs " +
              w_pw.shape_str());
  Tensor<T> mid = depthwise_conv2d(x, w_dw, b_dw);
  return conv2d(mid, w_pw, b_pw);
}

// ---------------------------------------------------------------------------
// Pointwise nonlinearity and elementwise fusion ops.
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  Tensor<T> y = x;
  for (auto& v : y.vec()) v = v > T(0) ? v : T(0);
  return y;
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& x, const Tensor<T>& gout) {
  require(x.same_shape(gout), "relu backward shape mismatch: " + x.shape_str() + " vs " + gout.shape_str());
  Tensor<T> g = gout;
  const T* xp = x.data();
  T* gp = g.data();
  for (int64_t i = 0; i < x.numel(); ++i)
    if (xp[i] <= T(0)) gp[i] = T(0);
  return g;
}

enum class EwOp { mul, add };

template <typename T>
Tensor<T> elementwise(EwOp op, const Tensor<T>& a, const Tensor<T>& b) {
  require(a.same_shape(b), "elementwise operands must have identical shapes, got " + a.shape_str() + " and " +
                               b.shape_str());
  Tensor<T> y = a;
  const T* bp = b.data();
  T* yp = y.data();
  if (op == EwOp::mul)
    for (int64_t i = 0; i < y.numel(); ++i) yp[i] *= bp[i];
  else
    for (int64_t i = 0; i < y.numel(); ++i) yp[i] += bp[i];
  return y;
}

template <typename T>
struct BinaryGrads {
  Tensor<T> da, db;
};

template <typename T>
BinaryGrads<T> elementwise_backward(EwOp op, const Tensor<T>& a, const Tensor<T>& b, const Tensor<T>& gout) {
  require(a.same_shape(gout), "elementwise backward shape mismatch");
  BinaryGrads<T> g;
  if (op == EwOp::add) {
    g.da = gout;
    g.db = gout;
    return g;
  }
  g.da = elementwise(EwOp::mul, gout, b);
  g.db = elementwise(EwOp::mul, gout, a);
  return g;
}

/// Concatenation along the channel (last) axis.
template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  ActDims da = act_dims(a), db = act_dims(b);
  require(a.rank() == b.rank() && da.b == db.b && da.t == db.t && da.f == db.f,
          "concat requires matching non-channel dims, got " + a.shape_str() + " and " + b.shape_str() +
              " (channel axis is last)");
  Tensor<T> y(with_channels(a, da.c + db.c));
  const int64_t rows = da.b * da.t * da.f;
  const T* ap = a.data();
  const T* bp = b.data();
  T* yp = y.data();
  for (int64_t r = 0; r < rows; ++r) {
    std::copy(ap + r * da.c, ap + (r + 1) * da.c, yp + r * (da.c + db.c));
    std::copy(bp + r * db.c, bp + (r + 1) * db.c, yp + r * (da.c + db.c) + da.c);
  }
  return y;
}

template <typename T>
BinaryGrads<T> concat_channels_backward(const Tensor<T>& a, const Tensor<T>& b, const Tensor<T>& gout) {
  ActDims da = act_dims(a), db = act_dims(b);
  require(act_dims(gout).c == da.c + db.c, "concat backward channel mismatch");
  BinaryGrads<T> g;
  g.da = Tensor<T>::zeros_like(a);
  g.db = Tensor<T>::zeros_like(b);
  const int64_t rows = da.b * da.t * da.f;
  const T* gp = gout.data();
  T* gap = g.da.data();
  T* gbp = g.db.data();
  for (int64_t r = 0; r < rows; ++r) {
    std::copy(gp + r * (da.c + db.c), gp + r * (da.c + db.c) + da.c, gap + r * da.c);
    std::copy(gp + r * (da.c + db.c) + da.c, gp + (r + 1) * (da.c + db.c), gbp + r * db.c);
  }
  return g;
}

}  // namespace conetrx
