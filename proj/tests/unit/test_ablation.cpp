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

#include <sstream>

#include "segssl/harness/ablation.hpp"

using namespace segssl;
using namespace segssl::harness;
using Catch::Matchers::WithinAbs;

namespace {

DatasetConfig tiny_data() {
  DatasetConfig d;
  d.scene.height = 32;
  d.scene.width = 32;
  d.train_count = 3;
  d.val_count = 2;
  return d;
}

TrainConfig tiny_train() {
  TrainConfig t;
  t.max_iter = 6;
  t.slow_start_steps = 2;
  return t;
}

}  // namespace

TEST_CASE("axis parsing and settings", "[ablation]") {
  CHECK(parse_axis("region_size") == AblationAxis::region_size);
  CHECK_THROWS_AS(parse_axis("depth"), std::invalid_argument);
  CHECK(parse_switch("on"));
  CHECK_FALSE(parse_switch("off"));
  CHECK_THROWS_AS(parse_switch("maybe"), std::invalid_argument);

  const TrainConfig base;
  CHECK(apply_setting(base, AblationAxis::beta, "0.06").ssl.beta == 0.06);
  CHECK(apply_setting(base, AblationAxis::region_size, "7").ssl.window.size() == 7);
  CHECK(apply_setting(base, AblationAxis::region_size, "7").ssl.window.sigma() == 1.5);
  CHECK(apply_setting(base, AblationAxis::sigma, "2.5").ssl.window.sigma() == 2.5);
  CHECK_FALSE(apply_setting(base, AblationAxis::ohem, "off").ssl.ohem);
  CHECK_FALSE(apply_setting(base, AblationAxis::reweight, "off").ssl.reweight);
  CHECK(apply_setting(base, AblationAxis::loss_kind, "ce").loss == LossKind::ce);
  CHECK_THROWS_AS(apply_setting(base, AblationAxis::beta, "1.5"), std::invalid_argument);
  CHECK_THROWS_AS(apply_setting(base, AblationAxis::region_size, "4"), std::invalid_argument);
}

TEST_CASE("ohem ablation gives two rows per seed", "[ablation]") {
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  std::size_t streamed = 0;
  const auto rows = run_ablation(AblationAxis::ohem, {"on", "off"}, seeds, tiny_train(),
                                 tiny_data(), [&](const AblationRow &) { ++streamed; });
  REQUIRE(rows.size() == 6);
  CHECK(streamed == 6);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].axis == "ohem");
    CHECK(rows[i].seed == seeds[i / 2]);
    CHECK(rows[i].value == (i % 2 ? "off" : "on"));
    CHECK(rows[i].miou >= 0.0);
    CHECK(rows[i].miou <= 1.0);
  }
  // With OHEM off every valid element is hard.
  CHECK(rows[1].mean_hard_proportion == 1.0);
  CHECK(rows[0].mean_hard_proportion < 1.0);

  const auto summary = summarize(rows);
  REQUIRE(summary.size() == 2);
  CHECK(summary[0].runs == 3);
  CHECK(summary[0].value == "on");

  SECTION("reloaded table re-aggregates to the same summary") {
    std::stringstream csv;
    write_ablation_csv(csv, rows);
    const auto back = read_ablation_csv(csv);
    CHECK(back == rows);
    CHECK(summarize(back) == summary);
    std::ostringstream a, b;
    write_summary_csv(a, summary);
    write_summary_csv(b, summarize(back));
    CHECK(a.str() == b.str());
  }
}

TEST_CASE("summary statistics", "[ablation]") {
  const std::vector<AblationRow> rows{{"beta", "0.1", 1, 0.5, 0.9, 0.2},
                                      {"beta", "0.2", 1, 0.1, 0.9, 0.1},
                                      {"beta", "0.1", 2, 0.7, 0.9, 0.4},
                                      {"beta", "0.1", 3, 0.6, 0.9, 0.3}};
  const auto s = summarize(rows);
  REQUIRE(s.size() == 2);
  CHECK(s[0].runs == 3);
  CHECK_THAT(s[0].miou_mean, WithinAbs(0.6, 1e-15));
  CHECK_THAT(s[0].miou_std, WithinAbs(0.1, 1e-15));
  CHECK_THAT(s[0].hard_proportion_mean, WithinAbs(0.3, 1e-15));
  CHECK(s[1].runs == 1);
  CHECK(s[1].miou_std == 0.0);
}

TEST_CASE("ablation input validation", "[ablation]") {
  CHECK_THROWS_AS(run_ablation(AblationAxis::beta, {"0.1"}, {1, 2}, tiny_train(), tiny_data()),
                  std::invalid_argument);
  CHECK_THROWS_AS(run_ablation(AblationAxis::beta, {}, {1, 2, 3}, tiny_train(), tiny_data()),
                  std::invalid_argument);
  std::istringstream bad("seed,miou\n");
  CHECK_THROWS_AS(read_ablation_csv(bad), std::invalid_argument);
}

TEST_CASE("frozen-model hard proportion falls as beta grows", "[ablation]") {
  DatasetConfig d = tiny_data();
  const Dataset ds = generate_dataset(d, 4);
  const Model m(3, 3, 12);
  const auto pts = hard_proportion_sweep(m, ds.val, SslParams{}, {0.0, 0.06, 0.1, 0.14, 0.5});
  REQUIRE(pts.size() == 5);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    CHECK(pts[i].hard_proportion <= pts[i - 1].hard_proportion);
    CHECK(pts[i].element_count == pts[0].element_count);
  }
  CHECK(pts[0].element_count == 2 * 32 * 32 * 3);
  CHECK(pts.front().hard_proportion > pts.back().hard_proportion);
}
