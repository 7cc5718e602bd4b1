// Copyright 2026 The prunelab Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "prunelab/core/errors.hpp"
#include "prunelab/core/rng.hpp"
#include "prunelab/core/tensor.hpp"

namespace prunelab {

enum class LayerKind { dense, conv2d, relu, maxpool2x2, flatten };

inline const char *kind_name(LayerKind k) {
  switch (k) {
  case LayerKind::dense:
    return "dense";
  case LayerKind::conv2d:
    return "conv2d";
  case LayerKind::relu:
    return "relu";
  case LayerKind::maxpool2x2:
    return "maxpool2x2";
  case LayerKind::flatten:
    return "flatten";
  }
  return "?";
}

/// Static description of one layer.  For dense layers in/out count features;
/// for conv2d they count channels and `kernel` is the square kernel side.
struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  int in = 0;
  int out = 0;
  int kernel = 0;
  bool has_bias = true;

  static LayerSpec dense(int in, int out, bool bias = true) {
    return {LayerKind::dense, in, out, 0, bias};
  }
  static LayerSpec conv2d(int in_ch, int out_ch, int kernel, bool bias = true) {
    return {LayerKind::conv2d, in_ch, out_ch, kernel, bias};
  }
  static LayerSpec relu() { return {LayerKind::relu, 0, 0, 0, false}; }
  static LayerSpec maxpool2x2() {
    return {LayerKind::maxpool2x2, 0, 0, 0, false};
  }
  static LayerSpec flatten() { return {LayerKind::flatten, 0, 0, 0, false}; }

  bool prunable() const {
    return kind == LayerKind::dense || kind == LayerKind::conv2d;
  }
};

// ============================================================================
// Layer
// ============================================================================

/// One layer instance: parameters plus the per-call caches backward() needs.
/// forward() must precede backward(); the cache is consumed conceptually but
/// kept until the next forward so repeated backward calls on the same batch
/// are well defined.
class Layer {
public:
  LayerSpec spec;
  Tensor weight; // dense [out,in]; conv2d [out,in,k,k]; else empty
  Tensor bias;   // [out] when has_bias; else empty
  std::string name;

  Layer() = default;
  explicit Layer(LayerSpec s, std::string n = "") : spec(s), name(std::move(n)) {
    if (spec.kind == LayerKind::dense) {
      weight = Tensor({spec.out, spec.in});
      if (spec.has_bias)
        bias = Tensor({spec.out});
    } else if (spec.kind == LayerKind::conv2d) {
      weight = Tensor({spec.out, spec.in, spec.kernel, spec.kernel});
      if (spec.has_bias)
        bias = Tensor({spec.out});
    }
  }

  /// Kaiming-uniform fan-in initialization: U(-b, b) with b = sqrt(6/fan_in).
  /// Biases start at zero.
  void init(Rng &rng) {
    if (!spec.prunable())
      return;
    const int fan_in = spec.kind == LayerKind::dense
                           ? spec.in
                           : spec.in * spec.kernel * spec.kernel;
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (double &w : weight.values)
      w = rng.uniform(-bound, bound);
    std::fill(bias.values.begin(), bias.values.end(), 0.0);
  }

  /// Output channel count for structured pruning (dense: out features).
  int channels() const { return spec.prunable() ? spec.out : 0; }

  Tensor forward(const Tensor &x) {
    input_ = x;
    has_forward_ = true;
    switch (spec.kind) {
    case LayerKind::dense:
      return forward_dense(x);
    case LayerKind::conv2d:
      return forward_conv(x);
    case LayerKind::relu:
      return forward_relu(x);
    case LayerKind::maxpool2x2:
      return forward_pool(x);
    case LayerKind::flatten:
      return forward_flatten(x);
    }
    throw StateError("unknown layer kind");
  }

  /// Accumulates parameter gradients and returns the gradient w.r.t. input.
  Tensor backward(const Tensor &gy) {
    if (!has_forward_)
      throw StateError(name + ": backward called before forward");
    switch (spec.kind) {
    case LayerKind::dense:
      return backward_dense(gy);
    case LayerKind::conv2d:
      return backward_conv(gy);
    case LayerKind::relu:
      return backward_relu(gy);
    case LayerKind::maxpool2x2:
      return backward_pool(gy);
    case LayerKind::flatten:
      return backward_flatten(gy);
    }
    throw StateError("unknown layer kind");
  }

  void zero_grad() {
    weight.zero_grad();
    bias.zero_grad();
  }

private:
  Tensor input_;
  std::vector<std::int32_t> pool_argmax_;
  bool has_forward_ = false;

  void bad_shape(const Tensor &x) const {
    std::string s = name + " (" + kind_name(spec.kind) + "): bad input shape [";
    for (std::size_t i = 0; i < x.shape.size(); ++i)
      s += (i ? "," : "") + std::to_string(x.shape[i]);
    throw ConfigError(s + "]");
  }

  // -- dense -----------------------------------------------------------------

  Tensor forward_dense(const Tensor &x) {
    if (x.shape.size() != 2 || x.shape[1] != spec.in)
      bad_shape(x);
    const int B = x.shape[0], I = spec.in, O = spec.out;
    Tensor y({B, O});
    for (int b = 0; b < B; ++b) {
      const double *xr = &x.values[static_cast<std::size_t>(b) * I];
      double *yr = &y.values[static_cast<std::size_t>(b) * O];
      for (int o = 0; o < O; ++o) {
        const double *wr = &weight.values[static_cast<std::size_t>(o) * I];
        double acc = spec.has_bias ? bias.values[o] : 0.0;
        for (int i = 0; i < I; ++i)
          acc += xr[i] * wr[i];
        yr[o] = acc;
      }
    }
    return y;
  }

  Tensor backward_dense(const Tensor &gy) {
    const int B = input_.shape[0], I = spec.in, O = spec.out;
    weight.ensure_grad();
    if (spec.has_bias)
      bias.ensure_grad();
    Tensor gx({B, I});
    for (int b = 0; b < B; ++b) {
      const double *xr = &input_.values[static_cast<std::size_t>(b) * I];
      const double *gyr = &gy.values[static_cast<std::size_t>(b) * O];
      double *gxr = &gx.values[static_cast<std::size_t>(b) * I];
      for (int o = 0; o < O; ++o) {
        const double g = gyr[o];
        if (g == 0.0)
          continue;
        const double *wr = &weight.values[static_cast<std::size_t>(o) * I];
        double *gwr = &weight.grad[static_cast<std::size_t>(o) * I];
        for (int i = 0; i < I; ++i) {
          gxr[i] += g * wr[i];
          gwr[i] += g * xr[i];
        }
        if (spec.has_bias)
          bias.grad[o] += g;
      }
    }
    return gx;
  }

  // -- conv2d (valid padding, stride 1) ---------------------------------------

  Tensor forward_conv(const Tensor &x) {
    if (x.shape.size() != 4 || x.shape[1] != spec.in)
      bad_shape(x);
    const int B = x.shape[0], C = spec.in, H = x.shape[2], W = x.shape[3];
    const int K = spec.kernel, OC = spec.out, OH = H - K + 1, OW = W - K + 1;
    if (OH <= 0 || OW <= 0)
      bad_shape(x);
    Tensor y({B, OC, OH, OW});
    const std::size_t in_hw = static_cast<std::size_t>(H) * W;
    const std::size_t out_hw = static_cast<std::size_t>(OH) * OW;
    for (int b = 0; b < B; ++b) {
      for (int oc = 0; oc < OC; ++oc) {
        double *yp = &y.values[(static_cast<std::size_t>(b) * OC + oc) * out_hw];
        const double bv = spec.has_bias ? bias.values[oc] : 0.0;
        std::fill(yp, yp + out_hw, bv);
        for (int c = 0; c < C; ++c) {
          const double *xp =
              &x.values[(static_cast<std::size_t>(b) * C + c) * in_hw];
          const double *wp =
              &weight.values[((static_cast<std::size_t>(oc) * C + c) * K) * K];
          for (int ky = 0; ky < K; ++ky) {
            for (int kx = 0; kx < K; ++kx) {
              const double w = wp[ky * K + kx];
              if (w == 0.0)
                continue;
              for (int oy = 0; oy < OH; ++oy) {
                const double *row = xp + (oy + ky) * W + kx;
                double *orow = yp + static_cast<std::size_t>(oy) * OW;
                for (int ox = 0; ox < OW; ++ox)
                  orow[ox] += w * row[ox];
              }
            }
          }
        }
      }
    }
    return y;
  }

  Tensor backward_conv(const Tensor &gy) {
    const int B = input_.shape[0], C = spec.in, H = input_.shape[2],
              W = input_.shape[3];
    const int K = spec.kernel, OC = spec.out, OH = H - K + 1, OW = W - K + 1;
    weight.ensure_grad();
    if (spec.has_bias)
      bias.ensure_grad();
    Tensor gx({B, C, H, W});
    const std::size_t in_hw = static_cast<std::size_t>(H) * W;
    const std::size_t out_hw = static_cast<std::size_t>(OH) * OW;
    for (int b = 0; b < B; ++b) {
      for (int oc = 0; oc < OC; ++oc) {
        const double *gyp =
            &gy.values[(static_cast<std::size_t>(b) * OC + oc) * out_hw];
        if (spec.has_bias) {
          double acc = 0.0;
          for (std::size_t i = 0; i < out_hw; ++i)
            acc += gyp[i];
          bias.grad[oc] += acc;
        }
        for (int c = 0; c < C; ++c) {
          const double *xp =
              &input_.values[(static_cast<std::size_t>(b) * C + c) * in_hw];
          double *gxp = &gx.values[(static_cast<std::size_t>(b) * C + c) * in_hw];
          const std::size_t wbase = (static_cast<std::size_t>(oc) * C + c) *
                                    static_cast<std::size_t>(K) * K;
          for (int ky = 0; ky < K; ++ky) {
            for (int kx = 0; kx < K; ++kx) {
              const double w = weight.values[wbase + ky * K + kx];
              double gw = 0.0;
              for (int oy = 0; oy < OH; ++oy) {
                const double *grow = gyp + static_cast<std::size_t>(oy) * OW;
                const double *xrow = xp + (oy + ky) * W + kx;
                double *gxrow = gxp + (oy + ky) * W + kx;
                for (int ox = 0; ox < OW; ++ox) {
                  gw += grow[ox] * xrow[ox];
                  gxrow[ox] += w * grow[ox];
                }
              }
              weight.grad[wbase + ky * K + kx] += gw;
            }
          }
        }
      }
    }
    return gx;
  }

  // -- relu --------------------------------------------------------------------

  Tensor forward_relu(const Tensor &x) {
    Tensor y = x;
    for (double &v : y.values)
      v = v > 0.0 ? v : 0.0;
    return y;
  }

  Tensor backward_relu(const Tensor &gy) {
    Tensor gx = gy;
    for (std::size_t i = 0; i < gx.values.size(); ++i)
      if (input_.values[i] <= 0.0)
        gx.values[i] = 0.0;
    return gx;
  }

  // -- maxpool2x2 (stride 2, floor) ---------------------------------------------

  Tensor forward_pool(const Tensor &x) {
    if (x.shape.size() != 4 || x.shape[2] < 2 || x.shape[3] < 2)
      bad_shape(x);
    const int B = x.shape[0], C = x.shape[1], H = x.shape[2], W = x.shape[3];
    const int OH = H / 2, OW = W / 2;
    Tensor y({B, C, OH, OW});
    pool_argmax_.assign(y.values.size(), 0);
    const std::size_t in_hw = static_cast<std::size_t>(H) * W;
    std::size_t oi = 0;
    for (int bc = 0; bc < B * C; ++bc) {
      const double *xp = &x.values[static_cast<std::size_t>(bc) * in_hw];
      for (int oy = 0; oy < OH; ++oy) {
        for (int ox = 0; ox < OW; ++ox, ++oi) {
          const int y0 = 2 * oy, x0 = 2 * ox;
          int best = y0 * W + x0;
          double bv = xp[best];
          const int cand[3] = {y0 * W + x0 + 1, (y0 + 1) * W + x0,
                               (y0 + 1) * W + x0 + 1};
          for (int idx : cand)
            if (xp[idx] > bv) {
              bv = xp[idx];
              best = idx;
            }
          y.values[oi] = bv;
          pool_argmax_[oi] = static_cast<std::int32_t>(bc * in_hw + best);
        }
      }
    }
    return y;
  }

  Tensor backward_pool(const Tensor &gy) {
    Tensor gx(input_.shape);
    for (std::size_t i = 0; i < gy.values.size(); ++i)
      gx.values[static_cast<std::size_t>(pool_argmax_[i])] += gy.values[i];
    return gx;
  }

  // -- flatten -------------------------------------------------------------------

  Tensor forward_flatten(const Tensor &x) {
    if (x.shape.size() < 2)
      bad_shape(x);
    int feat = 1;
    for (std::size_t i = 1; i < x.shape.size(); ++i)
      feat *= x.shape[i];
    Tensor y = x;
    y.shape = {x.shape[0], feat};
    return y;
  }

  Tensor backward_flatten(const Tensor &gy) {
    Tensor gx = gy;
    gx.shape = input_.shape;
    return gx;
  }
};

} // namespace prunelab
