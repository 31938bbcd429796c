// Copyright 2026 The segssl Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Four-layer fully convolutional network (3x3 convolutions, ReLU between
// layers, symmetric reflection padding, no downsampling) with hand-derived
// backpropagation.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "segssl/grid.hpp"
#include "segssl/harness/rng.hpp"

namespace segssl::harness {

template <class Scalar>
struct ConvLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  /// [out][in][3][3]
  std::vector<Scalar> weight;
  std::vector<Scalar> bias;

  ConvLayer() = default;
  ConvLayer(std::size_t in_channels, std::size_t out_channels)
      : in(in_channels),
        out(out_channels),
        weight(in_channels * out_channels * 9, Scalar{0}),
        bias(out_channels, Scalar{0}) {}

  std::size_t widx(std::size_t o, std::size_t i, std::size_t ky, std::size_t kx) const {
    return ((o * in + i) * 3 + ky) * 3 + kx;
  }
};

template <class Scalar>
class TinyFcn {
 public:
  static constexpr std::size_t kLayers = 4;
  static constexpr std::size_t kHidden = 16;

  /// Activations kept by forward() for backward().
  struct Cache {
    std::size_t height = 0, width = 0;
    /// Padded input of each layer, [in][(H+2)*(W+2)].
    std::array<std::vector<Scalar>, kLayers> padded;
    /// Pre-activation outputs of the hidden layers.
    std::array<std::vector<Scalar>, kLayers - 1> pre;
  };

  using Gradients = std::array<ConvLayer<Scalar>, kLayers>;

  TinyFcn(std::size_t in_channels, std::size_t classes, std::uint64_t seed) {
    const std::size_t widths[kLayers + 1] = {in_channels, kHidden, kHidden, kHidden, classes};
    Rng rng(seed);
    for (std::size_t l = 0; l < kLayers; ++l) {
      layers_[l] = ConvLayer<Scalar>(widths[l], widths[l + 1]);
      // He-uniform bound from the fan-in.
      const double bound = std::sqrt(6.0 / static_cast<double>(widths[l] * 9));
      for (Scalar &w : layers_[l].weight) w = static_cast<Scalar>(rng.uniform(-bound, bound));
    }
  }

  explicit TinyFcn(std::array<ConvLayer<Scalar>, kLayers> layers) : layers_(std::move(layers)) {
    for (std::size_t l = 0; l + 1 < kLayers; ++l) {
      if (layers_[l].out != layers_[l + 1].in) {
        throw std::invalid_argument("tiny fcn: layer widths do not chain");
      }
    }
  }

  std::size_t in_channels() const { return layers_.front().in; }
  std::size_t classes() const { return layers_.back().out; }
  const std::array<ConvLayer<Scalar>, kLayers> &layers() const { return layers_; }
  std::array<ConvLayer<Scalar>, kLayers> &layers() { return layers_; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto &l : layers_) n += l.weight.size() + l.bias.size();
    return n;
  }

  /// Flat parameter access: layer by layer, weights then biases.
  Scalar &parameter(std::size_t index) { return locate(layers_, index); }
  Scalar parameter(std::size_t index) const {
    return locate(const_cast<std::array<ConvLayer<Scalar>, kLayers> &>(layers_), index);
  }

  static Scalar &locate(std::array<ConvLayer<Scalar>, kLayers> &layers, std::size_t index) {
    for (auto &l : layers) {
      if (index < l.weight.size()) return l.weight[index];
      index -= l.weight.size();
      if (index < l.bias.size()) return l.bias[index];
      index -= l.bias.size();
    }
    throw std::out_of_range("tiny fcn: parameter index out of range");
  }

  /// H x W x in_channels image to H x W x classes logits.
  Grid<Scalar> forward(const Grid<Scalar> &image, Cache *cache = nullptr) const {
    if (image.channels() != in_channels()) {
      throw ShapeError("tiny fcn: expected " + std::to_string(in_channels()) +
                       " input channels, got " + std::to_string(image.channels()));
    }
    const std::size_t h = image.height(), w = image.width();
    Cache local;
    Cache &c = cache ? *cache : local;
    c.height = h;
    c.width = w;
    std::vector<Scalar> act(image.values().begin(), image.values().end());
    for (std::size_t l = 0; l < kLayers; ++l) {
      const ConvLayer<Scalar> &L = layers_[l];
      pad(act, L.in, h, w, c.padded[l]);
      std::vector<Scalar> out(L.out * h * w);
      conv_forward(c.padded[l], L, h, w, out);
      if (l + 1 < kLayers) {
        c.pre[l] = out;
        for (Scalar &v : out) v = v > Scalar{0} ? v : Scalar{0};
      }
      act = std::move(out);
    }
    return Grid<Scalar>({h, w, classes()}, std::move(act));
  }

  /// Parameter gradients given d(loss)/d(logits) and the forward cache.
  Gradients backward(const Cache &cache, const Grid<Scalar> &grad_logits) const {
    const std::size_t h = cache.height, w = cache.width;
    if (grad_logits.height() != h || grad_logits.width() != w ||
        grad_logits.channels() != classes()) {
      throw ShapeError("tiny fcn: gradient shape does not match the forward pass");
    }
    Gradients grads;
    std::vector<Scalar> g(grad_logits.values().begin(), grad_logits.values().end());
    for (std::size_t l = kLayers; l-- > 0;) {
      const ConvLayer<Scalar> &L = layers_[l];
      grads[l] = ConvLayer<Scalar>(L.in, L.out);
      conv_param_grad(cache.padded[l], g, L, h, w, grads[l]);
      if (l == 0) break;
      std::vector<Scalar> gin(L.in * h * w);
      conv_input_grad(g, L, h, w, gin);
      const std::vector<Scalar> &pre = cache.pre[l - 1];
      for (std::size_t i = 0; i < gin.size(); ++i) {
        if (!(pre[i] > Scalar{0})) gin[i] = Scalar{0};
      }
      g = std::move(gin);
    }
    return grads;
  }

 private:
  static void pad(const std::vector<Scalar> &in, std::size_t channels, std::size_t h,
                  std::size_t w, std::vector<Scalar> &out) {
    const std::size_t hp = h + 2, wp = w + 2;
    out.resize(channels * hp * wp);
    for (std::size_t c = 0; c < channels; ++c) {
      const Scalar *src = in.data() + c * h * w;
      Scalar *dst = out.data() + c * hp * wp;
      for (std::size_t yy = 0; yy < hp; ++yy) {
        const Scalar *row = src + reflect_index(static_cast<std::ptrdiff_t>(yy) - 1, h) * w;
        Scalar *drow = dst + yy * wp;
        drow[0] = row[0];
        for (std::size_t x = 0; x < w; ++x) drow[x + 1] = row[x];
        drow[w + 1] = row[w - 1];
      }
    }
  }

  static void conv_forward(const std::vector<Scalar> &padded, const ConvLayer<Scalar> &L,
                           std::size_t h, std::size_t w, std::vector<Scalar> &out) {
    const std::size_t wp = w + 2, plane = (h + 2) * wp;
    for (std::size_t o = 0; o < L.out; ++o) {
      Scalar *op = out.data() + o * h * w;
      for (std::size_t i = 0; i < h * w; ++i) op[i] = L.bias[o];
      for (std::size_t ci = 0; ci < L.in; ++ci) {
        const Scalar *ip = padded.data() + ci * plane;
        for (std::size_t ky = 0; ky < 3; ++ky) {
          for (std::size_t kx = 0; kx < 3; ++kx) {
            const Scalar wt = L.weight[L.widx(o, ci, ky, kx)];
            for (std::size_t y = 0; y < h; ++y) {
              const Scalar *row = ip + (y + ky) * wp + kx;
              Scalar *orow = op + y * w;
              for (std::size_t x = 0; x < w; ++x) orow[x] += wt * row[x];
            }
          }
        }
      }
    }
  }

  static void conv_param_grad(const std::vector<Scalar> &padded, const std::vector<Scalar> &g,
                              const ConvLayer<Scalar> &L, std::size_t h, std::size_t w,
                              ConvLayer<Scalar> &grad) {
    const std::size_t wp = w + 2, plane = (h + 2) * wp;
    std::vector<Scalar> acc(w);
    for (std::size_t o = 0; o < L.out; ++o) {
      const Scalar *gp = g.data() + o * h * w;
      Scalar b{0};
      for (std::size_t i = 0; i < h * w; ++i) b += gp[i];
      grad.bias[o] = b;
      for (std::size_t ci = 0; ci < L.in; ++ci) {
        const Scalar *ip = padded.data() + ci * plane;
        for (std::size_t ky = 0; ky < 3; ++ky) {
          for (std::size_t kx = 0; kx < 3; ++kx) {
            std::fill(acc.begin(), acc.end(), Scalar{0});
            for (std::size_t y = 0; y < h; ++y) {
              const Scalar *row = ip + (y + ky) * wp + kx;
              const Scalar *grow = gp + y * w;
              for (std::size_t x = 0; x < w; ++x) acc[x] += grow[x] * row[x];
            }
            Scalar sum{0};
            for (Scalar v : acc) sum += v;
            grad.weight[L.widx(o, ci, ky, kx)] = sum;
          }
        }
      }
    }
  }

  // Scatter into the padded layout, then fold the reflected border back.
  static void conv_input_grad(const std::vector<Scalar> &g, const ConvLayer<Scalar> &L,
                              std::size_t h, std::size_t w, std::vector<Scalar> &gin) {
    const std::size_t hp = h + 2, wp = w + 2, plane = hp * wp;
    std::vector<Scalar> gpad(L.in * plane, Scalar{0});
    for (std::size_t o = 0; o < L.out; ++o) {
      const Scalar *gp = g.data() + o * h * w;
      for (std::size_t ci = 0; ci < L.in; ++ci) {
        Scalar *dp = gpad.data() + ci * plane;
        for (std::size_t ky = 0; ky < 3; ++ky) {
          for (std::size_t kx = 0; kx < 3; ++kx) {
            const Scalar wt = L.weight[L.widx(o, ci, ky, kx)];
            for (std::size_t y = 0; y < h; ++y) {
              Scalar *drow = dp + (y + ky) * wp + kx;
              const Scalar *grow = gp + y * w;
              for (std::size_t x = 0; x < w; ++x) drow[x] += wt * grow[x];
            }
          }
        }
      }
    }
    std::fill(gin.begin(), gin.end(), Scalar{0});
    for (std::size_t ci = 0; ci < L.in; ++ci) {
      const Scalar *sp = gpad.data() + ci * plane;
      Scalar *dp = gin.data() + ci * h * w;
      for (std::size_t yy = 0; yy < hp; ++yy) {
        Scalar *drow = dp + reflect_index(static_cast<std::ptrdiff_t>(yy) - 1, h) * w;
        const Scalar *srow = sp + yy * wp;
        drow[0] += srow[0];
        for (std::size_t x = 0; x < w; ++x) drow[x] += srow[x + 1];
        drow[w - 1] += srow[w + 1];
      }
    }
  }

  std::array<ConvLayer<Scalar>, kLayers> layers_;
};

/// Converts a double grid to another scalar type.
template <class Scalar>
Grid<Scalar> cast_grid(const Tensor &t) {
  std::vector<Scalar> v(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) v[i] = static_cast<Scalar>(t[i]);
  return Grid<Scalar>(t.shape(), std::move(v));
}

template <class Scalar>
Tensor to_tensor(const Grid<Scalar> &g) {
  std::vector<double> v(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) v[i] = static_cast<double>(g[i]);
  return Tensor(g.shape(), std::move(v));
}

}  // namespace segssl::harness
