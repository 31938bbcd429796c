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

// Gaussian-weighted local statistics. Every statistic is centered on its
// output pixel and borders use symmetric reflection (see reflect_index), so
// fields keep the input resolution.

#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "segssl/grid.hpp"

namespace segssl {

/// k x k circular-symmetric Gaussian weights normalized to unit sum.
class GaussianWindow {
 public:
  explicit GaussianWindow(int size = 3, double sigma = 1.5)
      : size_(size), sigma_(sigma) {
    if (size < 1 || size % 2 == 0) {
      throw std::invalid_argument("gaussian window: size must be odd and >= 1, got " +
                                  std::to_string(size));
    }
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
      throw std::invalid_argument("gaussian window: sigma must be positive");
    }
    const int r = radius();
    const double denom = 2.0 * sigma * sigma;
    profile_.resize(static_cast<std::size_t>(size));
    double sum1 = 0.0;
    for (int d = -r; d <= r; ++d) {
      const double g = std::exp(-static_cast<double>(d * d) / denom);
      profile_[static_cast<std::size_t>(d + r)] = g;
      sum1 += g;
    }
    for (double &g : profile_) g /= sum1;

    weights_.resize(static_cast<std::size_t>(size * size));
    double sum2 = 0.0;
    for (int dy = -r; dy <= r; ++dy) {
      for (int dx = -r; dx <= r; ++dx) {
        const double w = std::exp(-static_cast<double>(dx * dx + dy * dy) / denom);
        weights_[static_cast<std::size_t>((dy + r) * size + (dx + r))] = w;
        sum2 += w;
      }
    }
    for (double &w : weights_) w /= sum2;
  }

  int size() const { return size_; }
  int radius() const { return (size_ - 1) / 2; }
  double sigma() const { return sigma_; }

  /// 2-D weight at offset (dy, dx), each in [-radius, radius].
  double weight(int dy, int dx) const {
    const int r = radius();
    return weights_[static_cast<std::size_t>((dy + r) * size_ + (dx + r))];
  }
  double center_weight() const { return weight(0, 0); }

  /// Row-major k*k weights.
  const std::vector<double> &weights() const { return weights_; }
  /// Normalized 1-D factor; weight(dy,dx) == profile[dy]*profile[dx] up to
  /// rounding.
  const std::vector<double> &profile() const { return profile_; }

 private:
  int size_;
  double sigma_;
  std::vector<double> profile_;
  std::vector<double> weights_;
};

namespace detail {

// out[i] = sum_d g[d] * in[reflect(i + d)] along rows (axis 1) or columns.
inline void correlate_rows(PlaneView<const double> in, const std::vector<double> &g,
                           PlaneView<double> out) {
  const auto r = static_cast<std::ptrdiff_t>(g.size() / 2);
  const std::size_t w = in.width;
  for (std::size_t y = 0; y < in.height; ++y) {
    const double *src = &in(y, 0);
    double *dst = &out(y, 0);
    for (std::size_t x = 0; x < w; ++x) {
      double acc = 0.0;
      const auto xi = static_cast<std::ptrdiff_t>(x);
      if (xi >= r && xi + r < static_cast<std::ptrdiff_t>(w)) {
        for (std::ptrdiff_t d = -r; d <= r; ++d) acc += g[d + r] * src[xi + d];
      } else {
        for (std::ptrdiff_t d = -r; d <= r; ++d) {
          acc += g[d + r] * src[reflect_index(xi + d, w)];
        }
      }
      dst[x] = acc;
    }
  }
}

inline void correlate_cols(PlaneView<const double> in, const std::vector<double> &g,
                           PlaneView<double> out) {
  const auto r = static_cast<std::ptrdiff_t>(g.size() / 2);
  const std::size_t h = in.height;
  const std::size_t w = in.width;
  std::vector<const double *> rows(g.size());
  for (std::size_t y = 0; y < h; ++y) {
    const auto yi = static_cast<std::ptrdiff_t>(y);
    for (std::ptrdiff_t d = -r; d <= r; ++d) {
      rows[static_cast<std::size_t>(d + r)] = &in(reflect_index(yi + d, h), 0);
    }
    double *dst = &out(y, 0);
    for (std::size_t x = 0; x < w; ++x) dst[x] = 0.0;
    for (std::size_t t = 0; t < g.size(); ++t) {
      const double gt = g[t];
      const double *src = rows[t];
      for (std::size_t x = 0; x < w; ++x) dst[x] += gt * src[x];
    }
  }
}

// Adjoints of the two passes above: scatter each output back onto the
// reflected source positions.
inline void correlate_rows_adjoint(PlaneView<const double> grad_out,
                                   const std::vector<double> &g,
                                   PlaneView<double> grad_in) {
  const auto r = static_cast<std::ptrdiff_t>(g.size() / 2);
  const std::size_t w = grad_out.width;
  for (std::size_t y = 0; y < grad_out.height; ++y) {
    double *dst = &grad_in(y, 0);
    for (std::size_t x = 0; x < w; ++x) dst[x] = 0.0;
    const double *src = &grad_out(y, 0);
    for (std::size_t x = 0; x < w; ++x) {
      const auto xi = static_cast<std::ptrdiff_t>(x);
      for (std::ptrdiff_t d = -r; d <= r; ++d) {
        dst[reflect_index(xi + d, w)] += g[d + r] * src[x];
      }
    }
  }
}

inline void correlate_cols_adjoint(PlaneView<const double> grad_out,
                                   const std::vector<double> &g,
                                   PlaneView<double> grad_in) {
  const auto r = static_cast<std::ptrdiff_t>(g.size() / 2);
  const std::size_t h = grad_out.height;
  const std::size_t w = grad_out.width;
  for (double &v : grad_in.data) v = 0.0;
  for (std::size_t y = 0; y < h; ++y) {
    const auto yi = static_cast<std::ptrdiff_t>(y);
    const double *src = &grad_out(y, 0);
    for (std::ptrdiff_t d = -r; d <= r; ++d) {
      double *dst = &grad_in(reflect_index(yi + d, h), 0);
      const double gd = g[d + r];
      for (std::size_t x = 0; x < w; ++x) dst[x] += gd * src[x];
    }
  }
}

}  // namespace detail

/// Weighted local mean, separable row pass then column pass.
inline Field local_mean(PlaneView<const double> plane, const GaussianWindow &win) {
  Field out(plane.height, plane.width, 1);
  if (win.size() == 1) {
    std::copy(plane.data.begin(), plane.data.end(), out.values().begin());
    return out;
  }
  Field tmp(plane.height, plane.width, 1);
  detail::correlate_rows(plane, win.profile(), tmp.plane(0));
  detail::correlate_cols(tmp.plane(0), win.profile(), out.plane(0));
  return out;
}

/// Same statistic evaluated as a direct k x k weighted sum per pixel.
inline Field local_mean_direct(PlaneView<const double> plane,
                               const GaussianWindow &win) {
  Field out(plane.height, plane.width, 1);
  const int r = win.radius();
  for (std::size_t y = 0; y < plane.height; ++y) {
    for (std::size_t x = 0; x < plane.width; ++x) {
      double acc = 0.0;
      for (int dy = -r; dy <= r; ++dy) {
        const std::size_t sy =
            reflect_index(static_cast<std::ptrdiff_t>(y) + dy, plane.height);
        for (int dx = -r; dx <= r; ++dx) {
          const std::size_t sx =
              reflect_index(static_cast<std::ptrdiff_t>(x) + dx, plane.width);
          acc += win.weight(dy, dx) * plane(sy, sx);
        }
      }
      out(y, x) = acc;
    }
  }
  return out;
}

/// Transpose of local_mean: given d(loss)/d(mean), returns d(loss)/d(plane).
inline Field local_mean_adjoint(PlaneView<const double> grad_mean,
                                const GaussianWindow &win) {
  Field out(grad_mean.height, grad_mean.width, 1);
  if (win.size() == 1) {
    std::copy(grad_mean.data.begin(), grad_mean.data.end(), out.values().begin());
    return out;
  }
  Field tmp(grad_mean.height, grad_mean.width, 1);
  detail::correlate_cols_adjoint(grad_mean, win.profile(), tmp.plane(0));
  detail::correlate_rows_adjoint(tmp.plane(0), win.profile(), out.plane(0));
  return out;
}

/// Local mean of the elementwise product a*b.
inline Field local_product_mean(PlaneView<const double> a, PlaneView<const double> b,
                                const GaussianWindow &win) {
  if (a.height != b.height || a.width != b.width) {
    throw ShapeError("local product mean: plane shapes differ");
  }
  Field prod(a.height, a.width, 1);
  for (std::size_t i = 0; i < a.size(); ++i) prod[i] = a.data[i] * b.data[i];
  return local_mean(prod.plane(0), win);
}

/// E_w[x^2] - mean^2 without clamping; may carry tiny negative rounding.
inline Field local_variance_raw(PlaneView<const double> plane,
                                PlaneView<const double> mean,
                                const GaussianWindow &win) {
  Field out = local_product_mean(plane, plane, win);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= mean.data[i] * mean.data[i];
  return out;
}

/// E_w[x^2] - mean^2 clamped at zero.
inline Field local_variance(PlaneView<const double> plane, PlaneView<const double> mean,
                            const GaussianWindow &win) {
  Field out = local_variance_raw(plane, mean, win);
  for (double &v : out.values()) v = std::max(v, 0.0);
  return out;
}

/// E_w[xy] - mean_x * mean_y.
inline Field local_covariance(PlaneView<const double> x, PlaneView<const double> y,
                              PlaneView<const double> mean_x,
                              PlaneView<const double> mean_y,
                              const GaussianWindow &win) {
  Field out = local_product_mean(x, y, win);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= mean_x.data[i] * mean_y.data[i];
  return out;
}

struct LocalStatsField {
  Field mean;
  Field variance;
  GaussianWindow window;
};

inline LocalStatsField local_stats(PlaneView<const double> plane,
                                   const GaussianWindow &win) {
  Field mean = local_mean(plane, win);
  Field variance = local_variance(plane, mean.plane(0), win);
  return {std::move(mean), std::move(variance), win};
}

}  // namespace segssl
