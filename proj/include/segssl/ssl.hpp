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

// Structural similarity loss.
//
// Each class channel is treated as an independent binary plane. Ground
// truth and prediction are standardized with their own Gaussian-weighted
// local mean and deviation,
//
//   y_nor = (y - mu_y + C4) / (sigma_y + C4),
//
// and the structural error e = |y_nor - p_nor| both selects hard examples
// (e > beta * e_max) and reweights their sigmoid cross entropy. e, the mask
// and all local statistics are constants for backpropagation: only the
// cross-entropy factor carries gradient.

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "segssl/grid.hpp"
#include "segssl/local_stats.hpp"
#include "segssl/loss_report.hpp"

namespace segssl {

struct SslParams {
  GaussianWindow window{3, 1.5};
  double c4 = 0.01;
  double beta = 0.1;
  double lambda = 0.5;
  bool ohem = true;
  bool reweight = true;

  void validate() const {
    if (!(c4 > 0.0)) throw std::invalid_argument("ssl: C4 must be positive");
    if (!(beta >= 0.0 && beta < 1.0)) {
      throw std::invalid_argument("ssl: beta must lie in [0, 1)");
    }
    if (!(lambda >= 0.0 && lambda <= 1.0)) {
      throw std::invalid_argument("ssl: lambda must lie in [0, 1]");
    }
  }
};

struct SslReport {
  double total_loss = 0.0;
  Tensor error_map;
  Grid<std::uint8_t> hard_mask;
  std::int64_t hard_count = 0;
  double hard_proportion = 0.0;
  /// Per-element contribution to total_loss.
  Tensor loss_map;
  Tensor gradient;
  double e_max = 0.0;
  /// Non-void pixels times channels.
  std::size_t element_count = 0;
};

/// (x - mean + C4) / (sd + C4), elementwise.
inline Field normalize_plane(PlaneView<const double> plane, PlaneView<const double> mean,
                             PlaneView<const double> sd, double c4) {
  Field out(plane.height, plane.width, 1);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = (plane.data[i] - mean.data[i] + c4) / (sd.data[i] + c4);
  }
  return out;
}

/// Standardizes a plane by its own local statistics.
inline Field standardize(PlaneView<const double> plane, const GaussianWindow &win,
                         double c4) {
  const LocalStatsField stats = local_stats(plane, win);
  Field sd = stats.variance;
  for (double &v : sd.values()) v = std::sqrt(v);
  return normalize_plane(plane, stats.mean.plane(0), sd.plane(0), c4);
}

/// e = |y_nor - p_nor| per channel, each plane standardized independently.
inline Tensor structural_error(const Tensor &truth, const Tensor &probs,
                               const SslParams &params) {
  require_same_shape(truth.shape(), probs.shape(), "structural error");
  Tensor e(truth.height(), truth.width(), truth.channels());
  for (std::size_t c = 0; c < truth.channels(); ++c) {
    const Field yn = standardize(truth.plane(c), params.window, params.c4);
    const Field pn = standardize(probs.plane(c), params.window, params.c4);
    auto out = e.plane(c);
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = std::abs(yn[i] - pn[i]);
  }
  return e;
}

inline Tensor structural_error(const ProbabilityMap &truth, const ProbabilityMap &probs,
                               const SslParams &params) {
  return structural_error(truth.tensor(), probs.tensor(), params);
}

/// Lone-positive minus lone-negative normalized value. Depends only on the
/// window and C4; zero for a 1x1 window.
inline double e_max(const GaussianWindow &win, double c4) {
  const double wc = win.center_weight();
  const double sd = std::sqrt(std::max(wc - wc * wc, 0.0));
  const double y_max = (1.0 - wc + c4) / (sd + c4);
  const double y_min = (0.0 - (1.0 - wc) + c4) / (sd + c4);
  return y_max - y_min;
}

inline double e_max(const SslParams &params) { return e_max(params.window, params.c4); }

struct HardMask {
  Grid<std::uint8_t> mask;
  std::int64_t count = 0;
};

/// f = 1{e > beta * e_max} on valid pixels; every valid element when OHEM
/// is disabled.
inline HardMask hard_mask(const Tensor &error, const std::vector<std::uint8_t> &valid,
                          const SslParams &params) {
  const Shape s = error.shape();
  if (valid.size() != s.pixels()) {
    throw ShapeError("hard mask: valid mask does not match map size");
  }
  const double threshold = params.beta * e_max(params);
  HardMask out{Grid<std::uint8_t>(s.height, s.width, s.channels, 0), 0};
  for (std::size_t c = 0; c < s.channels; ++c) {
    const auto e = error.plane(c);
    auto f = out.mask.plane(c);
    for (std::size_t i = 0; i < s.pixels(); ++i) {
      const bool hard = valid[i] && (!params.ohem || e.data[i] > threshold);
      f.data[i] = hard ? 1 : 0;
      out.count += hard;
    }
  }
  return out;
}

/// Stable sigmoid cross entropy from a logit: max(z,0) - z*y + log1p(exp(-|z|)).
inline double sigmoid_bce(double z, double y) {
  return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
}

/// Cross entropy from a probability, clamped away from log(0).
inline double probability_bce(double p, double y) {
  constexpr double tiny = std::numeric_limits<double>::min();
  return -(y * std::log(std::max(p, tiny)) + (1.0 - y) * std::log(std::max(1.0 - p, tiny)));
}

namespace detail {

// Shared SSL evaluation. `bce(i)` is the element cross entropy and `dbce(i)`
// its derivative with respect to the logit.
template <class Bce, class DBce>
SslReport ssl_evaluate(const LabelMap &labels, const Tensor &probs, const SslParams &params,
                       Bce &&bce, DBce &&dbce) {
  params.validate();
  require_same_shape(labels.shape(), probs.shape(), "ssl");
  const Shape s = probs.shape();
  const Tensor truth = one_hot(labels).tensor();
  const std::vector<std::uint8_t> valid = valid_pixels(labels);

  SslReport r;
  r.e_max = e_max(params);
  r.element_count = labels.non_void_count() * s.channels;
  r.error_map = structural_error(truth, probs, params);
  HardMask f = hard_mask(r.error_map, valid, params);
  r.hard_mask = std::move(f.mask);
  r.hard_count = f.count;
  r.hard_proportion = r.element_count == 0
                          ? 0.0
                          : static_cast<double>(r.hard_count) /
                                static_cast<double>(r.element_count);
  r.loss_map = Tensor(s.height, s.width, s.channels, 0.0);
  r.gradient = Tensor(s.height, s.width, s.channels, 0.0);
  if (r.hard_count == 0) return r;

  const double inv_m = 1.0 / static_cast<double>(r.hard_count);
  for (std::size_t i = 0; i < s.elements(); ++i) {
    if (!r.hard_mask[i]) continue;
    const double weight = params.reweight ? r.error_map[i] : 1.0;
    r.loss_map[i] = inv_m * weight * bce(i, truth[i]);
    r.gradient[i] = inv_m * weight * dbce(i, truth[i]);
  }
  for (double v : r.loss_map.values()) r.total_loss += v;
  return r;
}

}  // namespace detail

/// Batch SSL: (1/M) * sum of e * f * BCE over elements, with M = sum f.
/// M = 0 yields zero loss and zero gradient.
inline SslReport ssl_total(const LabelMap &labels, const LogitMap &logits,
                           const SslParams &params) {
  require_same_shape(labels.shape(), logits.shape(), "ssl");
  const ProbabilityMap probs = sigmoid(logits);
  const Tensor &z = logits.tensor();
  const Tensor &p = probs.tensor();
  return detail::ssl_evaluate(
      labels, p, params, [&](std::size_t i, double y) { return sigmoid_bce(z[i], y); },
      [&](std::size_t i, double y) { return p[i] - y; });
}

/// SSL evaluated directly on probabilities (no logits available). The
/// gradient is still expressed with respect to the implied logits.
inline SslReport ssl_total(const LabelMap &labels, const ProbabilityMap &probs,
                           const SslParams &params) {
  const Tensor &p = probs.tensor();
  return detail::ssl_evaluate(
      labels, p, params, [&](std::size_t i, double y) { return probability_bce(p[i], y); },
      [&](std::size_t i, double y) { return p[i] - y; });
}

/// Plain sigmoid cross entropy averaged over non-void elements.
inline LossReport bce_mean(const LabelMap &labels, const LogitMap &logits) {
  require_same_shape(labels.shape(), logits.shape(), "bce");
  const Shape s = logits.shape();
  LossReport r;
  r.loss_map = Tensor(s.height, s.width, s.channels, 0.0);
  r.gradient = Tensor(s.height, s.width, s.channels, 0.0);
  const std::size_t n = labels.non_void_count() * s.channels;
  if (n == 0) return r;
  const double inv_n = 1.0 / static_cast<double>(n);
  const auto ids = labels.ids();
  const Tensor &z = logits.tensor();
  for (std::size_t c = 0; c < s.channels; ++c) {
    for (std::size_t i = 0; i < s.pixels(); ++i) {
      if (ids[i] == kVoid) continue;
      const std::size_t e = c * s.pixels() + i;
      const double y = ids[i] == c ? 1.0 : 0.0;
      r.loss_map[e] = inv_n * sigmoid_bce(z[e], y);
      r.gradient[e] = inv_n * (sigmoid(z[e]) - y);
    }
  }
  for (double v : r.loss_map.values()) r.loss += v;
  return r;
}

/// lambda * mean BCE + (1 - lambda) * SSL, gradients combined the same way.
inline LossReport combined_loss(const LabelMap &labels, const LogitMap &logits,
                                const SslParams &params) {
  const LossReport bce = bce_mean(labels, logits);
  const SslReport ssl = ssl_total(labels, logits, params);
  const double a = params.lambda;
  const double b = 1.0 - params.lambda;
  LossReport r;
  r.loss = a * bce.loss + b * ssl.total_loss;
  r.loss_map = bce.loss_map;
  r.gradient = bce.gradient;
  for (std::size_t i = 0; i < r.gradient.size(); ++i) {
    r.loss_map[i] = a * bce.loss_map[i] + b * ssl.loss_map[i];
    r.gradient[i] = a * bce.gradient[i] + b * ssl.gradient[i];
  }
  r.hard_count = ssl.hard_count;
  r.hard_proportion = ssl.hard_proportion;
  return r;
}

/// Multiclass softmax cross entropy averaged over non-void pixels.
inline LossReport softmax_ce(const LabelMap &labels, const LogitMap &logits) {
  require_same_shape(labels.shape(), logits.shape(), "softmax ce");
  const Shape s = logits.shape();
  LossReport r;
  r.loss_map = Tensor(s.height, s.width, s.channels, 0.0);
  r.gradient = Tensor(s.height, s.width, s.channels, 0.0);
  const std::size_t n = labels.non_void_count();
  if (n == 0) return r;
  const double inv_n = 1.0 / static_cast<double>(n);
  const auto ids = labels.ids();
  const Tensor &z = logits.tensor();
  std::vector<double> e(s.channels);
  for (std::size_t i = 0; i < s.pixels(); ++i) {
    if (ids[i] == kVoid) continue;
    double zmax = z[i];
    for (std::size_t c = 1; c < s.channels; ++c) zmax = std::max(zmax, z[c * s.pixels() + i]);
    double sum = 0.0;
    for (std::size_t c = 0; c < s.channels; ++c) {
      e[c] = std::exp(z[c * s.pixels() + i] - zmax);
      sum += e[c];
    }
    const double log_sum = std::log(sum) + zmax;
    const std::size_t target = ids[i];
    r.loss_map[target * s.pixels() + i] = inv_n * (log_sum - z[target * s.pixels() + i]);
    for (std::size_t c = 0; c < s.channels; ++c) {
      const double prob = e[c] / sum;
      r.gradient[c * s.pixels() + i] = inv_n * (prob - (c == target ? 1.0 : 0.0));
    }
  }
  for (double v : r.loss_map.values()) r.loss += v;
  return r;
}

}  // namespace segssl
