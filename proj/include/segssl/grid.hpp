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

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace segssl {

/// Label id marking pixels that take no part in losses or metrics.
inline constexpr std::uint8_t kVoid = 255;

struct Shape {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;

  std::size_t pixels() const { return height * width; }
  std::size_t elements() const { return height * width * channels; }
  std::string str() const {
    return std::to_string(height) + "x" + std::to_string(width) + "x" +
           std::to_string(channels);
  }
  friend bool operator==(const Shape &, const Shape &) = default;
};

/// Raised whenever two maps that must agree in shape do not.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline void require_same_shape(const Shape &a, const Shape &b,
                               const char *what) {
  if (a != b) {
    throw ShapeError(std::string(what) + ": shape mismatch " + a.str() +
                     " vs " + b.str());
  }
}

/// Row-major view over one H x W plane.
template <class T>
struct PlaneView {
  std::span<T> data;
  std::size_t height = 0;
  std::size_t width = 0;

  T &operator()(std::size_t row, std::size_t col) const {
    return data[row * width + col];
  }
  std::size_t size() const { return data.size(); }
  operator PlaneView<const T>() const { return {data, height, width}; }
};

/// Dense H x W x C grid, channel-outermost: index = (ch * H + row) * W + col.
template <class T>
class Grid {
 public:
  Grid() = default;
  Grid(std::size_t height, std::size_t width, std::size_t channels,
       T fill = T{})
      : shape_{height, width, channels},
        data_(height * width * channels, fill) {}
  Grid(Shape shape, std::vector<T> values)
      : shape_(shape), data_(std::move(values)) {
    if (data_.size() != shape_.elements()) {
      throw ShapeError("grid: " + std::to_string(data_.size()) +
                       " values do not fill shape " + shape_.str());
    }
  }

  const Shape &shape() const { return shape_; }
  std::size_t height() const { return shape_.height; }
  std::size_t width() const { return shape_.width; }
  std::size_t channels() const { return shape_.channels; }
  std::size_t size() const { return data_.size(); }

  T &operator()(std::size_t row, std::size_t col, std::size_t ch = 0) {
    return data_[index(row, col, ch)];
  }
  const T &operator()(std::size_t row, std::size_t col,
                      std::size_t ch = 0) const {
    return data_[index(row, col, ch)];
  }
  T &operator[](std::size_t i) { return data_[i]; }
  const T &operator[](std::size_t i) const { return data_[i]; }

  std::size_t index(std::size_t row, std::size_t col, std::size_t ch) const {
    return (ch * shape_.height + row) * shape_.width + col;
  }

  PlaneView<T> plane(std::size_t ch) {
    return {std::span<T>(data_).subspan(ch * shape_.pixels(), shape_.pixels()),
            shape_.height, shape_.width};
  }
  PlaneView<const T> plane(std::size_t ch) const {
    return {std::span<const T>(data_).subspan(ch * shape_.pixels(),
                                              shape_.pixels()),
            shape_.height, shape_.width};
  }

  std::span<T> values() & { return data_; }
  std::span<const T> values() const & { return data_; }
  // Rvalue overload keeps range-for over a temporary grid well-defined.
  std::vector<T> values() && { return std::move(data_); }
  const std::vector<T> &vector() const & { return data_; }
  std::vector<T> vector() && { return std::move(data_); }

  friend bool operator==(const Grid &, const Grid &) = default;

 private:
  Shape shape_{};
  std::vector<T> data_;
};

using Tensor = Grid<double>;
/// Single-channel real field (local statistics, SSIM maps).
using Field = Grid<double>;

/// Copies a plane into a one-channel field.
template <class T>
Field to_field(PlaneView<const T> plane) {
  return Field({plane.height, plane.width, 1},
               std::vector<double>(plane.data.begin(), plane.data.end()));
}

/// Per-pixel class ids in {0..C-1} plus kVoid.
class LabelMap {
 public:
  LabelMap() = default;
  LabelMap(std::size_t height, std::size_t width, std::size_t class_count,
           std::vector<std::uint8_t> ids)
      : ids_({height, width, 1}, std::move(ids)), class_count_(class_count) {
    if (class_count_ < 1 || class_count_ > kVoid) {
      throw std::invalid_argument("label map: class count must be in 1..255");
    }
    for (std::uint8_t id : ids_.values()) {
      if (id != kVoid && id >= class_count_) {
        throw std::invalid_argument("label map: id " + std::to_string(id) +
                                    " out of range for " +
                                    std::to_string(class_count_) + " classes");
      }
    }
  }

  std::size_t height() const { return ids_.height(); }
  std::size_t width() const { return ids_.width(); }
  std::size_t class_count() const { return class_count_; }
  std::size_t pixels() const { return ids_.size(); }
  /// Shape of the one-hot expansion.
  Shape shape() const { return {height(), width(), class_count_}; }

  std::uint8_t operator()(std::size_t row, std::size_t col) const {
    return ids_(row, col);
  }
  bool is_void(std::size_t row, std::size_t col) const {
    return ids_(row, col) == kVoid;
  }
  std::span<const std::uint8_t> ids() const { return ids_.values(); }
  PlaneView<const std::uint8_t> view() const { return ids_.plane(0); }

  std::size_t non_void_count() const {
    return static_cast<std::size_t>(
        std::count_if(ids_.values().begin(), ids_.values().end(),
                      [](std::uint8_t id) { return id != kVoid; }));
  }

  friend bool operator==(const LabelMap &, const LabelMap &) = default;

 private:
  Grid<std::uint8_t> ids_;
  std::size_t class_count_ = 1;
};

/// H x W x C values in [0,1]; channels are independent one-vs-rest planes.
class ProbabilityMap {
 public:
  ProbabilityMap() = default;
  explicit ProbabilityMap(Tensor values) : values_(std::move(values)) {
    for (double v : values_.values()) {
      if (!(v >= 0.0 && v <= 1.0)) {
        throw std::invalid_argument("probability map: value outside [0,1]");
      }
    }
  }

  const Tensor &tensor() const { return values_; }
  const Shape &shape() const { return values_.shape(); }
  double operator()(std::size_t row, std::size_t col, std::size_t ch) const {
    return values_(row, col, ch);
  }
  PlaneView<const double> plane(std::size_t ch) const {
    return values_.plane(ch);
  }

 private:
  Tensor values_;
};

/// H x W x C finite pre-activation values.
class LogitMap {
 public:
  LogitMap() = default;
  explicit LogitMap(Tensor values) : values_(std::move(values)) {
    for (double v : values_.values()) {
      if (!std::isfinite(v)) {
        throw std::invalid_argument("logit map: non-finite value");
      }
    }
  }

  const Tensor &tensor() const { return values_; }
  const Shape &shape() const { return values_.shape(); }
  double operator()(std::size_t row, std::size_t col, std::size_t ch) const {
    return values_(row, col, ch);
  }
  PlaneView<const double> plane(std::size_t ch) const {
    return values_.plane(ch);
  }

 private:
  Tensor values_;
};

/// Logistic function, stable over the whole double range.
inline double sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline ProbabilityMap sigmoid(const LogitMap &logits) {
  Tensor out(logits.shape().height, logits.shape().width,
             logits.shape().channels);
  const auto in = logits.tensor().values();
  for (std::size_t i = 0; i < in.size(); ++i) {
    out[i] = sigmoid(in[i]);
  }
  return ProbabilityMap(std::move(out));
}

/// C binary planes; void pixels are zero in every plane.
inline ProbabilityMap one_hot(const LabelMap &labels) {
  Tensor out(labels.height(), labels.width(), labels.class_count(), 0.0);
  for (std::size_t r = 0; r < labels.height(); ++r) {
    for (std::size_t c = 0; c < labels.width(); ++c) {
      const std::uint8_t id = labels(r, c);
      if (id != kVoid) {
        out(r, c, id) = 1.0;
      }
    }
  }
  return ProbabilityMap(std::move(out));
}

/// Per-pixel argmax over channels; ties go to the lowest index.
inline LabelMap argmax_labels(const Tensor &scores) {
  const Shape &s = scores.shape();
  if (s.channels < 1 || s.channels > kVoid) {
    throw std::invalid_argument("argmax: channel count must be in 1..255");
  }
  std::vector<std::uint8_t> ids(s.pixels(), 0);
  for (std::size_t r = 0; r < s.height; ++r) {
    for (std::size_t c = 0; c < s.width; ++c) {
      std::size_t best = 0;
      double best_value = scores(r, c, 0);
      for (std::size_t ch = 1; ch < s.channels; ++ch) {
        if (scores(r, c, ch) > best_value) {
          best_value = scores(r, c, ch);
          best = ch;
        }
      }
      ids[r * s.width + c] = static_cast<std::uint8_t>(best);
    }
  }
  return LabelMap(s.height, s.width, s.channels, std::move(ids));
}

inline LabelMap argmax_labels(const ProbabilityMap &probs) {
  return argmax_labels(probs.tensor());
}

/// Maps any integer offset into [0, n) by symmetric (edge-repeating)
/// reflection: -1 -> 0, -2 -> 1, n -> n-1, n+1 -> n-2.
inline std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) {
  const auto period = static_cast<std::ptrdiff_t>(2 * n);
  std::ptrdiff_t m = i % period;
  if (m < 0) {
    m += period;
  }
  if (m >= static_cast<std::ptrdiff_t>(n)) {
    m = period - 1 - m;
  }
  return static_cast<std::size_t>(m);
}

}  // namespace segssl
