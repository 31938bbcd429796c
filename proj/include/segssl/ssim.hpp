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

// SSIM index terms, the simplified index S1*S2, and two SSIM-based losses
// used as segmentation baselines.

#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "segssl/grid.hpp"
#include "segssl/local_stats.hpp"
#include "segssl/loss_report.hpp"

namespace segssl {

struct SsimParams {
  double c1 = 0.01 * 0.01;
  double c2 = 0.03 * 0.03;
  // Stored only; the simplified index fixes all three to 1.
  double alpha = 1.0;
  double theta = 1.0;
  double gamma = 1.0;

  double c3() const { return c2 / 2.0; }
  void validate() const {
    if (!(c1 > 0.0) || !(c2 > 0.0)) {
      throw std::invalid_argument("ssim: C1 and C2 must be positive");
    }
    if (!(alpha > 0.0) || !(theta > 0.0) || !(gamma > 0.0)) {
      throw std::invalid_argument("ssim: exponents must be positive");
    }
  }
};

inline double luminance_term(double mean_x, double mean_y, double c1) {
  return (2.0 * mean_x * mean_y + c1) / (mean_x * mean_x + mean_y * mean_y + c1);
}

inline double contrast_term(double sd_x, double sd_y, double c2) {
  return (2.0 * sd_x * sd_y + c2) / (sd_x * sd_x + sd_y * sd_y + c2);
}

inline double structure_term(double cov_xy, double sd_x, double sd_y, double c3) {
  return (cov_xy + c3) / (sd_x * sd_y + c3);
}

namespace detail {

// Simplified index from raw local moments. Variances clamp at zero.
inline double ssim_from_moments(double mx, double my, double mxx, double myy,
                                double mxy, const SsimParams &p) {
  const double vx = std::max(mxx - mx * mx, 0.0);
  const double vy = std::max(myy - my * my, 0.0);
  const double cxy = mxy - mx * my;
  return luminance_term(mx, my, p.c1) * (2.0 * cxy + p.c2) / (vx + vy + p.c2);
}

}  // namespace detail

/// Simplified SSIM between two k x k patches weighted by `win`, evaluated at
/// the patch center.
inline double ssim(PlaneView<const double> x, PlaneView<const double> y,
                   const GaussianWindow &win, const SsimParams &params = {}) {
  const auto k = static_cast<std::size_t>(win.size());
  if (x.height != k || x.width != k || y.height != k || y.width != k) {
    throw ShapeError("ssim: patches must match the window size");
  }
  double mx = 0, my = 0, mxx = 0, myy = 0, mxy = 0;
  for (std::size_t i = 0; i < k * k; ++i) {
    const double w = win.weights()[i];
    const double a = x.data[i];
    const double b = y.data[i];
    mx += w * a;
    my += w * b;
    mxx += w * a * a;
    myy += w * b * b;
    mxy += w * a * b;
  }
  return detail::ssim_from_moments(mx, my, mxx, myy, mxy, params);
}

/// Per-pixel simplified SSIM over whole planes.
inline Field ssim_map(PlaneView<const double> x, PlaneView<const double> y,
                      const GaussianWindow &win, const SsimParams &params = {}) {
  if (x.height != y.height || x.width != y.width) {
    throw ShapeError("ssim map: plane shapes differ");
  }
  const Field mx = local_mean(x, win);
  const Field my = local_mean(y, win);
  const Field mxx = local_product_mean(x, x, win);
  const Field myy = local_product_mean(y, y, win);
  const Field mxy = local_product_mean(x, y, win);
  Field out(x.height, x.width, 1);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = detail::ssim_from_moments(mx[i], my[i], mxx[i], myy[i], mxy[i], params);
  }
  return out;
}

/// Mean SSIM per channel of two equally shaped tensors.
inline std::vector<double> ssim_channel_means(const Tensor &x, const Tensor &y,
                                              const GaussianWindow &win,
                                              const SsimParams &params = {}) {
  require_same_shape(x.shape(), y.shape(), "ssim");
  std::vector<double> means;
  for (std::size_t c = 0; c < x.channels(); ++c) {
    const Field m = ssim_map(x.plane(c), y.plane(c), win, params);
    double sum = 0.0;
    for (double v : m.values()) sum += v;
    means.push_back(sum / static_cast<double>(m.size()));
  }
  return means;
}

namespace detail {

// Partial derivatives of a per-pixel loss with respect to the raw local
// moments of the prediction plane x: mean, mean of x^2, mean of x*y.
struct MomentGrad {
  double d_mean;
  double d_sq;
  double d_cross;
};

// Pulls moment partials back through the local means onto the plane:
// dL/dx_j = A^T(dm)_j + 2 x_j A^T(dsq)_j + y_j A^T(dcross)_j.
inline Field backprop_moments(const Field &d_mean, const Field &d_sq,
                              const Field &d_cross, PlaneView<const double> x,
                              PlaneView<const double> y, const GaussianWindow &win) {
  const Field a = local_mean_adjoint(d_mean.plane(0), win);
  const Field b = local_mean_adjoint(d_sq.plane(0), win);
  const Field c = local_mean_adjoint(d_cross.plane(0), win);
  Field out(x.height, x.width, 1);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = a[i] + 2.0 * x.data[i] * b[i] + y.data[i] * c[i];
  }
  return out;
}

struct MomentLoss {
  double value;
  MomentGrad grad;
};

// 1 - S1*S2 and its moment partials.
inline MomentLoss ssim_loss_at(double mx, double my, double mxx, double myy,
                               double mxy, const SsimParams &p) {
  const double raw_vx = mxx - mx * mx;
  const bool vx_live = raw_vx > 0.0;
  const double vx = vx_live ? raw_vx : 0.0;
  const double vy = std::max(myy - my * my, 0.0);
  const double cxy = mxy - mx * my;
  const double n1 = 2.0 * mx * my + p.c1;
  const double d1 = mx * mx + my * my + p.c1;
  const double n2 = 2.0 * cxy + p.c2;
  const double d2 = vx + vy + p.c2;
  const double l = n1 / d1;
  const double cs = n2 / d2;
  const double dl_dmx = (2.0 * my * d1 - n1 * 2.0 * mx) / (d1 * d1);
  const double dcs_dvx = vx_live ? -n2 / (d2 * d2) : 0.0;
  const double dcs_dcxy = 2.0 / d2;
  const double ds_dmx = cs * dl_dmx + l * (dcs_dvx * (-2.0 * mx) + dcs_dcxy * (-my));
  const double ds_dmxx = l * dcs_dvx;
  const double ds_dmxy = l * dcs_dcxy;
  return {1.0 - l * cs, {-ds_dmx, -ds_dmxx, -ds_dmxy}};
}

// (vx + vy - 2cxy) / (vx + vy + C2) and its moment partials.
inline MomentLoss ssim_ms_loss_at(double mx, double my, double mxx, double myy,
                                  double mxy, double c2) {
  const double raw_vx = mxx - mx * mx;
  const bool vx_live = raw_vx > 0.0;
  const double vx = vx_live ? raw_vx : 0.0;
  const double vy = std::max(myy - my * my, 0.0);
  const double cxy = mxy - mx * my;
  const double num = vx + vy - 2.0 * cxy;
  const double den = vx + vy + c2;
  const double dl_dvx = vx_live ? (den - num) / (den * den) : 0.0;
  const double dl_dcxy = -2.0 / den;
  return {num / den,
          {dl_dvx * (-2.0 * mx) + dl_dcxy * (-my), dl_dvx, dl_dcxy}};
}

template <class PerPixel>
LossReport moment_loss(const Tensor &truth, const LogitMap &logits,
                       const std::vector<std::uint8_t> &valid,
                       const GaussianWindow &win, PerPixel &&per_pixel) {
  require_same_shape(truth.shape(), logits.shape(), "ssim loss");
  const Shape s = truth.shape();
  if (valid.size() != s.pixels()) {
    throw ShapeError("ssim loss: valid mask does not match map size");
  }
  std::size_t valid_count = 0;
  for (std::uint8_t v : valid) valid_count += v;
  LossReport report;
  report.loss_map = Tensor(s.height, s.width, s.channels, 0.0);
  report.gradient = Tensor(s.height, s.width, s.channels, 0.0);
  if (valid_count == 0) return report;
  const double scale = 1.0 / static_cast<double>(valid_count * s.channels);
  const ProbabilityMap probs = sigmoid(logits);

  for (std::size_t c = 0; c < s.channels; ++c) {
    const auto x = probs.plane(c);
    const auto y = truth.plane(c);
    const Field mx = local_mean(x, win);
    const Field my = local_mean(y, win);
    const Field mxx = local_product_mean(x, x, win);
    const Field myy = local_product_mean(y, y, win);
    const Field mxy = local_product_mean(x, y, win);
    Field d_mean(s.height, s.width, 1), d_sq(s.height, s.width, 1),
        d_cross(s.height, s.width, 1);
    auto loss_plane = report.loss_map.plane(c);
    for (std::size_t i = 0; i < s.pixels(); ++i) {
      if (!valid[i]) continue;
      const MomentLoss at = per_pixel(mx[i], my[i], mxx[i], myy[i], mxy[i]);
      loss_plane.data[i] = scale * at.value;
      d_mean[i] = scale * at.grad.d_mean;
      d_sq[i] = scale * at.grad.d_sq;
      d_cross[i] = scale * at.grad.d_cross;
    }
    const Field dx = backprop_moments(d_mean, d_sq, d_cross, x, y, win);
    auto grad_plane = report.gradient.plane(c);
    for (std::size_t i = 0; i < s.pixels(); ++i) {
      grad_plane.data[i] = dx[i] * x.data[i] * (1.0 - x.data[i]);
    }
  }
  for (double v : report.loss_map.values()) report.loss += v;
  return report;
}

}  // namespace detail

/// Mean of 1 - SSIM between the truth planes and sigmoid(logits), over valid
/// pixels and all channels; gradient through the full local-statistics path.
inline LossReport ssim_loss(const Tensor &truth, const LogitMap &logits,
                            const std::vector<std::uint8_t> &valid,
                            const GaussianWindow &win, const SsimParams &params = {}) {
  params.validate();
  return detail::moment_loss(truth, logits, valid, win,
                             [&](double mx, double my, double mxx, double myy,
                                 double mxy) {
                               return detail::ssim_loss_at(mx, my, mxx, myy, mxy,
                                                           params);
                             });
}

inline LossReport ssim_loss(const LabelMap &labels, const LogitMap &logits,
                            const GaussianWindow &win, const SsimParams &params = {}) {
  return ssim_loss(one_hot(labels).tensor(), logits, valid_pixels(labels), win,
                   params);
}

/// Mean-subtracted SSIM loss, 1 - S2 on mean-removed patches, in its
/// weighted form (vx + vy - 2 cov) / (vx + vy + C2).
inline LossReport ssim_ms_loss(const Tensor &truth, const LogitMap &logits,
                               const std::vector<std::uint8_t> &valid,
                               const GaussianWindow &win, double c2 = 0.03 * 0.03) {
  if (!(c2 > 0.0)) throw std::invalid_argument("ssim_ms: C2 must be positive");
  return detail::moment_loss(truth, logits, valid, win,
                             [&](double mx, double my, double mxx, double myy,
                                 double mxy) {
                               return detail::ssim_ms_loss_at(mx, my, mxx, myy, mxy,
                                                              c2);
                             });
}

inline LossReport ssim_ms_loss(const LabelMap &labels, const LogitMap &logits,
                               const GaussianWindow &win, double c2 = 0.03 * 0.03) {
  return ssim_ms_loss(one_hot(labels).tensor(), logits, valid_pixels(labels), win, c2);
}

}  // namespace segssl
