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

#include <cmath>
#include <limits>
#include <random>

#include "oracles.hpp"
#include "segssl/grid.hpp"

using namespace segssl;
using Catch::Matchers::WithinAbs;

TEST_CASE("one_hot expands ids into binary planes", "[grid]") {
  SECTION("single pixel") {
    const ProbabilityMap p = one_hot(LabelMap(1, 1, 2, {0}));
    CHECK(p(0, 0, 0) == 1.0);
    CHECK(p(0, 0, 1) == 0.0);
  }
  SECTION("void pixel is zero in every plane") {
    const ProbabilityMap p = one_hot(LabelMap(1, 1, 2, {kVoid}));
    CHECK(p(0, 0, 0) == 0.0);
    CHECK(p(0, 0, 1) == 0.0);
  }
  SECTION("2x2 checkerboard") {
    const ProbabilityMap p = one_hot(LabelMap(2, 2, 2, {0, 1, 1, 0}));
    CHECK(p.tensor().vector() == std::vector<double>{1, 0, 0, 1, 0, 1, 1, 0});
  }
}

TEST_CASE("one_hot then argmax recovers non-void ids", "[grid][property]") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t h = 1 + rng() % 9, w = 1 + rng() % 9, c = 1 + rng() % 6;
    std::vector<std::uint8_t> ids(h * w);
    for (auto &id : ids) id = static_cast<std::uint8_t>(rng() % c);
    const LabelMap labels(h, w, c, ids);
    CHECK(argmax_labels(one_hot(labels)) == labels);
  }
}

TEST_CASE("one_hot has exactly one 1 per non-void pixel", "[grid][property]") {
  std::mt19937_64 rng(5);
  std::vector<std::uint8_t> ids(64);
  for (auto &id : ids) id = rng() % 5 == 0 ? kVoid : static_cast<std::uint8_t>(rng() % 4);
  const LabelMap labels(8, 8, 4, ids);
  const ProbabilityMap p = one_hot(labels);
  for (std::size_t r = 0; r < 8; ++r) {
    for (std::size_t c = 0; c < 8; ++c) {
      double sum = 0;
      for (std::size_t ch = 0; ch < 4; ++ch) sum += p(r, c, ch);
      CHECK(sum == (labels.is_void(r, c) ? 0.0 : 1.0));
    }
  }
}

TEST_CASE("sigmoid", "[grid]") {
  CHECK(sigmoid(0.0) == 0.5);
  const double tiny = sigmoid(-100.0);
  CHECK(tiny >= 0.0);
  CHECK(tiny <= 1e-40);
  CHECK(std::isfinite(sigmoid(-700.0)));
  CHECK(std::isfinite(sigmoid(700.0)));

  SECTION("matches extended-precision evaluation on a random 4x4x3 map") {
    std::mt19937_64 rng(3);
    const auto z = oracle::random_vec(rng, 48, -20.0, 20.0);
    const ProbabilityMap p = sigmoid(LogitMap(Tensor({4, 4, 3}, z)));
    for (std::size_t i = 0; i < z.size(); ++i) {
      const long double ref = 1.0L / (1.0L + std::exp(-static_cast<long double>(z[i])));
      CHECK_THAT(p.tensor()[i], WithinAbs(static_cast<double>(ref), 1e-12));
    }
  }

  SECTION("strictly inside (0,1) and monotone where doubles can resolve it") {
    // sigmoid(z) rounds to exactly 1.0 in double once z > ~36.7.
    double prev = 0.0;
    for (double z = -30.0; z <= 30.0; z += 0.01) {
      const double s = sigmoid(z);
      CHECK(s > 0.0);
      CHECK(s < 1.0);
      CHECK(s >= prev);
      prev = s;
    }
  }
}

TEST_CASE("argmax_labels", "[grid]") {
  CHECK(argmax_labels(ProbabilityMap(Tensor({1, 1, 2}, {0.2, 0.9})))(0, 0) == 1);
  CHECK(argmax_labels(ProbabilityMap(Tensor({1, 1, 2}, {0.5, 0.5})))(0, 0) == 0);

  SECTION("random 8x8x4 map matches a brute-force scan") {
    std::mt19937_64 rng(9);
    auto v = oracle::random_vec(rng, 8 * 8 * 4, 0.0, 1.0);
    // Force some ties.
    for (std::size_t i = 0; i < 64; i += 7) v[64 + i] = v[i];
    const LabelMap got = argmax_labels(ProbabilityMap(Tensor({8, 8, 4}, v)));
    for (std::size_t px = 0; px < 64; ++px) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < 4; ++c) {
        if (v[c * 64 + px] > v[best * 64 + px]) best = c;
      }
      CHECK(got.ids()[px] == best);
    }
  }
}

TEST_CASE("constructors reject invalid input", "[grid]") {
  CHECK_THROWS_AS(LabelMap(2, 2, 2, {0, 1, 2, 0}), std::invalid_argument);
  CHECK_THROWS_AS(LabelMap(2, 2, 2, {0, 1, 0}), ShapeError);
  CHECK_THROWS_AS(LabelMap(1, 1, 0, {0}), std::invalid_argument);
  CHECK_NOTHROW(LabelMap(1, 2, 2, {kVoid, 1}));
  CHECK_THROWS_AS(ProbabilityMap(Tensor({1, 1, 1}, {1.5})), std::invalid_argument);
  CHECK_THROWS_AS(ProbabilityMap(Tensor({1, 1, 1}, {std::nan("")})), std::invalid_argument);
  CHECK_THROWS_AS(LogitMap(Tensor({1, 1, 1}, {std::numeric_limits<double>::infinity()})),
                  std::invalid_argument);
  CHECK_THROWS_AS(Tensor({2, 2, 1}, {1.0}), ShapeError);
}

TEST_CASE("reflect_index mirrors with edge repetition", "[grid]") {
  CHECK(reflect_index(-1, 5) == 0);
  CHECK(reflect_index(-2, 5) == 1);
  CHECK(reflect_index(5, 5) == 4);
  CHECK(reflect_index(6, 5) == 3);
  CHECK(reflect_index(2, 5) == 2);
  CHECK(reflect_index(-3, 1) == 0);
  for (long i = -20; i < 20; ++i) {
    for (long n = 1; n < 6; ++n) {
      CHECK(static_cast<long>(reflect_index(i, static_cast<std::size_t>(n))) ==
            oracle::reflect(i, n));
    }
  }
}
