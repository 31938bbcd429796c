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

// Procedural thin-structure scenes. Each foreground object is a noisy
// ellipse with one or two thin appendages; the first object is partly
// covered by a background-colored rectangle that keeps the object's label.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "segssl/grid.hpp"
#include "segssl/harness/rng.hpp"

namespace segssl::harness {

struct SceneConfig {
  std::size_t height = 64;
  std::size_t width = 64;
  /// Background plus foreground classes.
  std::size_t class_count = 3;
  int appendage_min_width = 1;
  int appendage_max_width = 2;
  std::size_t max_objects = 3;
  /// Half-width of the uniform per-pixel color noise.
  double noise = 0.2;

  void validate() const {
    if (height < 32 || width < 32) {
      throw std::invalid_argument("scene: height and width must be >= 32");
    }
    if (class_count < 2 || class_count > 254) {
      throw std::invalid_argument("scene: need 2..254 classes");
    }
    if (appendage_min_width < 1 || appendage_max_width > 2 ||
        appendage_min_width > appendage_max_width) {
      throw std::invalid_argument("scene: appendage width must be 1 or 2");
    }
    if (max_objects < 1) throw std::invalid_argument("scene: max_objects must be >= 1");
    if (!(noise >= 0.0 && noise <= 0.5)) {
      throw std::invalid_argument("scene: noise must lie in [0, 0.5]");
    }
  }
};

struct DatasetConfig {
  SceneConfig scene;
  std::size_t train_count = 200;
  std::size_t val_count = 50;
};

struct SyntheticScene {
  /// H x W x 3 colors in [0,1].
  Tensor image;
  LabelMap labels;
  std::uint64_t seed = 0;
};

struct Dataset {
  std::vector<SyntheticScene> train;
  std::vector<SyntheticScene> val;
};

namespace detail {

struct Rgb {
  double r, g, b;
};

inline Rgb class_color(std::size_t cls) {
  switch (cls) {
    case 1:
      return {0.72, 0.38, 0.32};
    case 2:
      return {0.34, 0.42, 0.72};
    default: {
      const double hue = std::fmod(0.13 * static_cast<double>(cls), 1.0);
      return {0.45 + 0.25 * std::cos(2 * std::numbers::pi * hue),
              0.45 + 0.25 * std::cos(2 * std::numbers::pi * (hue + 1.0 / 3)),
              0.45 + 0.25 * std::cos(2 * std::numbers::pi * (hue + 2.0 / 3))};
    }
  }
}

struct Canvas {
  std::size_t h, w;
  std::vector<Rgb> color;
  std::vector<std::uint8_t> label;

  void set(std::ptrdiff_t y, std::ptrdiff_t x, Rgb c, std::uint8_t id) {
    if (y < 0 || x < 0 || y >= static_cast<std::ptrdiff_t>(h) ||
        x >= static_cast<std::ptrdiff_t>(w)) {
      return;
    }
    const auto i = static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x);
    color[i] = c;
    label[i] = id;
  }
};

// Bresenham segment with a 1- or 2-pixel brush perpendicular to the major axis.
inline void draw_line(Canvas &cv, std::ptrdiff_t y0, std::ptrdiff_t x0, std::ptrdiff_t y1,
                      std::ptrdiff_t x1, int width, Rgb c, std::uint8_t id) {
  const std::ptrdiff_t dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
  const std::ptrdiff_t dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
  const bool steep = -dy > dx;
  std::ptrdiff_t err = dx + dy;
  std::ptrdiff_t y = y0, x = x0;
  for (;;) {
    cv.set(y, x, c, id);
    if (width == 2) {
      if (steep) {
        cv.set(y, x + 1, c, id);
      } else {
        cv.set(y + 1, x, c, id);
      }
    }
    if (y == y1 && x == x1) break;
    const std::ptrdiff_t e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y += sy;
    }
  }
}

}  // namespace detail

/// One scene as a deterministic function of (config, seed).
inline SyntheticScene generate_scene(const SceneConfig &cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  const std::size_t h = cfg.height, w = cfg.width;
  const double gray = rng.uniform(0.35, 0.6);
  const detail::Rgb background{gray + rng.uniform(-0.05, 0.05),
                               gray + rng.uniform(-0.05, 0.05),
                               gray + rng.uniform(-0.05, 0.05)};
  detail::Canvas cv{h, w, std::vector<detail::Rgb>(h * w, background),
                    std::vector<std::uint8_t>(h * w, 0)};

  struct Object {
    double cy, cx, ry, rx;
    std::uint8_t id;
    detail::Rgb color;
  };
  const auto count = static_cast<std::size_t>(
      rng.integer(1, static_cast<std::int64_t>(cfg.max_objects)));
  std::vector<Object> objects;
  const double margin = 12.0;
  for (std::size_t k = 0; k < count; ++k) {
    Object o;
    o.ry = rng.uniform(5.0, 10.0);
    o.rx = rng.uniform(5.0, 10.0);
    o.cy = rng.uniform(margin, static_cast<double>(h) - margin);
    o.cx = rng.uniform(margin, static_cast<double>(w) - margin);
    o.id = static_cast<std::uint8_t>(
        rng.integer(1, static_cast<std::int64_t>(cfg.class_count) - 1));
    const detail::Rgb base = detail::class_color(o.id);
    o.color = {base.r + rng.uniform(-0.06, 0.06), base.g + rng.uniform(-0.06, 0.06),
               base.b + rng.uniform(-0.06, 0.06)};
    objects.push_back(o);
  }

  for (const Object &o : objects) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const double ny = (static_cast<double>(y) - o.cy) / o.ry;
        const double nx = (static_cast<double>(x) - o.cx) / o.rx;
        if (ny * ny + nx * nx <= 1.0) {
          cv.set(static_cast<std::ptrdiff_t>(y), static_cast<std::ptrdiff_t>(x), o.color,
                 o.id);
        }
      }
    }
  }

  for (const Object &o : objects) {
    const auto limbs = rng.integer(1, 2);
    for (std::int64_t l = 0; l < limbs; ++l) {
      const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const double length = std::max(o.ry, o.rx) + rng.uniform(6.0, 14.0);
      const int width = static_cast<int>(
          rng.integer(cfg.appendage_min_width, cfg.appendage_max_width));
      const auto clampd = [](double v, double hi) { return std::clamp(v, 1.0, hi - 3.0); };
      const double ey = clampd(o.cy + length * std::sin(angle), static_cast<double>(h));
      const double ex = clampd(o.cx + length * std::cos(angle), static_cast<double>(w));
      detail::draw_line(cv, std::lround(o.cy), std::lround(o.cx), std::lround(ey),
                        std::lround(ex), width, o.color, o.id);
    }
  }

  {
    // Occluder over the first object's body; its label is retained.
    const Object &o = objects.front();
    const double half_y = std::floor(rng.uniform(1.5, 0.6 * o.ry));
    const double half_x = std::floor(rng.uniform(1.5, 0.6 * o.rx));
    const double shade = rng.uniform(0.35, 0.6);
    const detail::Rgb occ{shade, shade, shade};
    for (auto y = std::lround(o.cy - half_y); y <= std::lround(o.cy + half_y); ++y) {
      for (auto x = std::lround(o.cx - half_x); x <= std::lround(o.cx + half_x); ++x) {
        cv.set(y, x, occ, o.id);
      }
    }
  }

  Tensor image(h, w, 3);
  for (std::size_t i = 0; i < h * w; ++i) {
    const detail::Rgb c = cv.color[i];
    const double channels[3] = {c.r, c.g, c.b};
    for (std::size_t ch = 0; ch < 3; ++ch) {
      image[ch * h * w + i] =
          std::clamp(channels[ch] + rng.uniform(-cfg.noise, cfg.noise), 0.0, 1.0);
    }
  }
  return {std::move(image), LabelMap(h, w, cfg.class_count, std::move(cv.label)), seed};
}

/// Train/val split; scene i of the split uses a seed derived from (seed, i).
inline Dataset generate_dataset(const DatasetConfig &cfg, std::uint64_t seed) {
  Dataset ds;
  const std::uint64_t train_root = mix_seed(seed ^ 0x747261696eull);
  const std::uint64_t val_root = mix_seed(seed ^ 0x76616cull);
  for (std::size_t i = 0; i < cfg.train_count; ++i) {
    ds.train.push_back(generate_scene(cfg.scene, mix_seed(train_root + i)));
  }
  for (std::size_t i = 0; i < cfg.val_count; ++i) {
    ds.val.push_back(generate_scene(cfg.scene, mix_seed(val_root + i)));
  }
  return ds;
}

/// Pixel count per class over a set of scenes.
inline std::vector<std::int64_t> label_histogram(const std::vector<SyntheticScene> &scenes,
                                                 std::size_t class_count) {
  std::vector<std::int64_t> counts(class_count, 0);
  for (const auto &s : scenes) {
    for (std::uint8_t id : s.labels.ids()) {
      if (id != kVoid) ++counts[id];
    }
  }
  return counts;
}

}  // namespace segssl::harness
