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

#include <cstdint>
#include <iomanip>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "segssl/grid.hpp"

namespace segssl {

/// Rows are ground-truth classes, columns predicted classes. Void ground
/// truth pixels are never counted.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t class_count)
      : class_count_(class_count), counts_(class_count * class_count, 0) {
    if (class_count == 0) throw std::invalid_argument("confusion matrix: zero classes");
  }

  std::size_t class_count() const { return class_count_; }
  std::int64_t operator()(std::size_t truth, std::size_t pred) const {
    return counts_[truth * class_count_ + pred];
  }
  std::int64_t &at(std::size_t truth, std::size_t pred) {
    return counts_[truth * class_count_ + pred];
  }

  std::int64_t total() const {
    std::int64_t t = 0;
    for (auto v : counts_) t += v;
    return t;
  }
  std::int64_t trace() const {
    std::int64_t t = 0;
    for (std::size_t c = 0; c < class_count_; ++c) t += (*this)(c, c);
    return t;
  }

  void accumulate(const LabelMap &truth, const LabelMap &pred) {
    if (truth.height() != pred.height() || truth.width() != pred.width()) {
      throw ShapeError("confusion matrix: label maps differ in size");
    }
    if (truth.class_count() != class_count_ || pred.class_count() != class_count_) {
      throw std::invalid_argument("confusion matrix: class count mismatch");
    }
    const auto t = truth.ids();
    const auto p = pred.ids();
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t[i] == kVoid) continue;
      // A void prediction has no column.
      if (p[i] == kVoid) continue;
      ++at(t[i], p[i]);
    }
  }

  void merge(const ConfusionMatrix &other) {
    if (other.class_count_ != class_count_) {
      throw std::invalid_argument("confusion matrix: class count mismatch");
    }
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  }

  /// TP / (TP + FP + FN); nullopt where the denominator is zero.
  std::vector<std::optional<double>> per_class_iou() const {
    std::vector<std::optional<double>> iou(class_count_);
    for (std::size_t c = 0; c < class_count_; ++c) {
      std::int64_t row = 0, col = 0;
      for (std::size_t k = 0; k < class_count_; ++k) {
        row += (*this)(c, k);
        col += (*this)(k, c);
      }
      const std::int64_t tp = (*this)(c, c);
      const std::int64_t denom = row + col - tp;
      if (denom > 0) iou[c] = static_cast<double>(tp) / static_cast<double>(denom);
    }
    return iou;
  }

  /// Mean IoU over classes with a defined IoU.
  double miou() const {
    require_nonempty();
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto &v : per_class_iou()) {
      if (v) {
        sum += *v;
        ++n;
      }
    }
    return sum / static_cast<double>(n);
  }

  double pixel_accuracy() const {
    require_nonempty();
    return static_cast<double>(trace()) / static_cast<double>(total());
  }

  friend bool operator==(const ConfusionMatrix &, const ConfusionMatrix &) = default;

 private:
  void require_nonempty() const {
    if (total() == 0) throw std::domain_error("no pixels evaluated");
  }

  std::size_t class_count_;
  std::vector<std::int64_t> counts_;
};

/// name,value rows: one per class ("excluded" when undefined), then mIoU and
/// pixel_accuracy.
inline void write_metrics_csv(std::ostream &out, const ConfusionMatrix &cm,
                              const std::vector<std::string> &class_names = {}) {
  const auto iou = cm.per_class_iou();
  out << "name,value\n" << std::setprecision(17);
  for (std::size_t c = 0; c < iou.size(); ++c) {
    const std::string name =
        c < class_names.size() ? class_names[c] : "class_" + std::to_string(c);
    out << name << ',';
    if (iou[c]) {
      out << *iou[c];
    } else {
      out << "excluded";
    }
    out << '\n';
  }
  out << "mIoU," << cm.miou() << '\n';
  out << "pixel_accuracy," << cm.pixel_accuracy() << '\n';
}

}  // namespace segssl
