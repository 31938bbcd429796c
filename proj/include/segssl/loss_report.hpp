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
#include <vector>

#include "segssl/grid.hpp"

namespace segssl {

/// Result of evaluating a loss on one map pair.
///
/// `loss_map` holds each element's contribution to `loss` (so the map sums
/// to `loss`), and `gradient` is d(loss)/d(logits) in the logit layout.
/// Losses without a hard-example mask report hard_count = 0.
struct LossReport {
  double loss = 0.0;
  Tensor loss_map;
  Tensor gradient;
  std::int64_t hard_count = 0;
  double hard_proportion = 0.0;
};

/// 1 for pixels that take part in loss sums, 0 for void pixels.
inline std::vector<std::uint8_t> valid_pixels(const LabelMap &labels) {
  std::vector<std::uint8_t> valid(labels.pixels());
  const auto ids = labels.ids();
  for (std::size_t i = 0; i < ids.size(); ++i) valid[i] = ids[i] != kVoid;
  return valid;
}

}  // namespace segssl
