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


#include <catch_amalgamated.hpp>

#include "segssl/harness/dataset.hpp"
#include "segssl/harness/rng.hpp"

using namespace segssl;
using namespace segssl::harness;

namespace {

// Foreground pixels with at least two background 4-neighbors (out-of-image
// neighbors do not count).
std::size_t thin_pixels(const LabelMap &labels) {
  const auto view = labels.view();
  std::size_t n = 0;
  for (std::size_t y = 0; y < labels.height(); ++y) {
    for (std::size_t x = 0; x < labels.width(); ++x) {
      if (view(y, x) == 0) continue;
      int bg = 0;
      if (y > 0 && view(y - 1, x) == 0) ++bg;
      if (y + 1 < labels.height() && view(y + 1, x) == 0) ++bg;
      if (x > 0 && view(y, x - 1) == 0) ++bg;
      if (x + 1 < labels.width() && view(y, x + 1) == 0) ++bg;
      n += bg >= 2;
    }
  }
  return n;
}

}  // namespace

TEST_CASE("rng is deterministic and in range", "[dataset]") {
  Rng a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform();
    CHECK(u == b.uniform());
    differs |= u != c.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const auto k = a.integer(-3, 4);
    b.integer(-3, 4);
    CHECK(k >= -3);
    CHECK(k <= 4);
  }
  CHECK(differs);
  CHECK(mix_seed(1) != mix_seed(2));
}

TEST_CASE("datasets are reproducible from the seed", "[dataset]") {
  DatasetConfig cfg;
  cfg.train_count = 6;
  cfg.val_count = 3;
  const Dataset a = generate_dataset(cfg, 7);
  const Dataset b = generate_dataset(cfg, 7);
  const Dataset c = generate_dataset(cfg, 8);
  REQUIRE(a.train.size() == 6);
  REQUIRE(a.val.size() == 3);
  bool any_diff = false;
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(a.train[i].image == b.train[i].image);
    CHECK(a.train[i].labels == b.train[i].labels);
    any_diff |= !(a.train[i].image == c.train[i].image);
  }
  CHECK(any_diff);
  CHECK_FALSE(a.train[0].labels == a.val[0].labels);
}

TEST_CASE("scenes respect the generator contract", "[dataset]") {
  SceneConfig cfg;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const SyntheticScene s = generate_scene(cfg, seed);
    CHECK(s.seed == seed);
    CHECK(s.image.shape() == Shape{64, 64, 3});
    CHECK(s.labels.class_count() == 3);
    for (double v : s.image.values()) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    std::size_t fg = 0;
    for (auto id : s.labels.ids()) fg += id != 0;
    CHECK(fg > 0);
  }
}

TEST_CASE("width-1 appendages leave thin foreground pixels", "[dataset][oracle]") {
  SceneConfig cfg;
  cfg.appendage_min_width = 1;
  cfg.appendage_max_width = 1;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    CHECK(thin_pixels(generate_scene(cfg, seed).labels) >= 1);
  }
}

TEST_CASE("label histogram covers every pixel", "[dataset]") {
  DatasetConfig cfg;
  cfg.train_count = 4;
  cfg.val_count = 0;
  const Dataset ds = generate_dataset(cfg, 3);
  const auto h = label_histogram(ds.train, 3);
  CHECK(h[0] + h[1] + h[2] == 4 * 64 * 64);
  CHECK(h[0] > h[1]);
}

TEST_CASE("scene config is validated", "[dataset]") {
  SceneConfig cfg;
  cfg.appendage_max_width = 3;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.class_count = 1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.height = 8;
  CHECK_THROWS_AS(generate_scene(cfg, 1), std::invalid_argument);
}
