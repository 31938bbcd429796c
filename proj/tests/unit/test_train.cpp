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
#include <filesystem>
#include <sstream>

#include "segssl/harness/checkpoint.hpp"
#include "segssl/harness/train.hpp"

using namespace segssl;
using namespace segssl::harness;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::vector<SyntheticScene> small_scenes(std::size_t n, std::uint64_t seed) {
  DatasetConfig cfg;
  cfg.scene.height = 32;
  cfg.scene.width = 32;
  cfg.train_count = n;
  cfg.val_count = 0;
  return generate_dataset(cfg, seed).train;
}

TrainConfig short_config(LossKind kind, std::size_t iters) {
  TrainConfig cfg;
  cfg.loss = kind;
  cfg.max_iter = iters;
  cfg.slow_start_steps = 2;
  cfg.verify_gradients = false;
  return cfg;
}

}  // namespace

TEST_CASE("poly learning rate", "[train]") {
  CHECK_THAT(poly_lr(1000, 2000, 1.0), WithinAbs(0.5359, 1e-4));
  CHECK_THAT(poly_lr(1000, 2000, 0.01), WithinRel(0.01 * std::pow(0.5, 0.9), 1e-15));
  CHECK(poly_lr(2000, 2000, 0.01) == 0.0);
  CHECK(poly_lr(0, 2000, 0.01) == 0.01);
  CHECK_THROWS_AS(poly_lr(2001, 2000, 0.01), std::invalid_argument);

  const LrSchedule s{0.007, 2000, 0.9, 100, 1.0 / 7.0};
  CHECK_THAT(s.at(0), WithinAbs(0.001, 1e-15));
  CHECK_THAT(s.at(99), WithinAbs(0.001, 1e-15));
  CHECK(s.at(100) == poly_lr(100, 2000, 0.007));
  CHECK_THAT(s.at(100), WithinRel(0.007 * std::pow(1.0 - 100.0 / 2000.0, 0.9), 1e-15));
  CHECK(s.at(2000) == 0.0);
}

TEST_CASE("momentum SGD converges on a quadratic", "[train]") {
  // f(w) = (w - 3)^2 / 2, gradient w - 3.
  double w = -5.0;
  MomentumSgd<double> opt(1, 0.9);
  for (int i = 0; i < 2000; ++i) {
    opt.step([&](std::size_t) -> double & { return w; }, [&](std::size_t) { return w - 3.0; },
             0.05);
  }
  CHECK_THAT(w, WithinAbs(3.0, 1e-6));
}

TEST_CASE("zero learning rate leaves parameters unchanged", "[train]") {
  auto cfg = short_config(LossKind::combined, 12);
  cfg.base_lr = 0.0;
  const Model init(3, 3, 4);
  const TrainResult r = train(init, small_scenes(3, 1), cfg);
  CHECK(r.log.size() == 12);
  for (std::size_t i = 0; i < init.parameter_count(); ++i) {
    CHECK(r.model.parameter(i) == init.parameter(i));
  }
}

TEST_CASE("training is bit-reproducible", "[train]") {
  const auto scenes = small_scenes(4, 2);
  const auto cfg = short_config(LossKind::ssl, 10);
  const TrainResult a = train(Model(3, 3, 5), scenes, cfg);
  const TrainResult b = train(Model(3, 3, 5), scenes, cfg);
  std::ostringstream la, lb;
  write_log_csv(la, a.log);
  write_log_csv(lb, b.log);
  CHECK(la.str() == lb.str());
  for (std::size_t i = 0; i < a.model.parameter_count(); ++i) {
    CHECK(a.model.parameter(i) == b.model.parameter(i));
  }
  CHECK(la.str().rfind(std::string(kLogHeader) + "\n", 0) == 0);
}

TEST_CASE("combined loss with lambda one tracks BCE exactly", "[train]") {
  const auto scenes = small_scenes(3, 3);
  auto combined = short_config(LossKind::combined, 8);
  combined.ssl.lambda = 1.0;
  const auto bce = short_config(LossKind::bce, 8);
  const TrainResult a = train(Model(3, 3, 6), scenes, combined);
  const TrainResult b = train(Model(3, 3, 6), scenes, bce);
  for (std::size_t i = 0; i < a.log.size(); ++i) CHECK(a.log[i].loss == b.log[i].loss);
  for (std::size_t i = 0; i < a.model.parameter_count(); ++i) {
    CHECK(a.model.parameter(i) == b.model.parameter(i));
  }
}

TEST_CASE("every loss kind trains without error", "[train]") {
  const auto scenes = small_scenes(2, 4);
  for (LossKind k : {LossKind::ce, LossKind::bce, LossKind::ssim, LossKind::ssim_ms,
                     LossKind::ssl, LossKind::combined}) {
    const auto cfg = short_config(k, 4);
    const TrainResult r = train(Model(3, 3, 7), scenes, cfg);
    for (const auto &row : r.log) CHECK(std::isfinite(row.loss));
    CHECK(parse_loss_kind(to_string(k)) == k);
  }
  CHECK_THROWS_AS(parse_loss_kind("dice"), std::invalid_argument);
}

TEST_CASE("initial gradient check runs and passes", "[train]") {
  auto cfg = short_config(LossKind::bce, 3);
  cfg.verify_gradients = true;
  const TrainResult r = train(Model(3, 3, 8), small_scenes(1, 5), cfg);
  CHECK(r.gradient_check_error >= 0.0);
  CHECK(r.gradient_check_error <= 1e-4);
}

TEST_CASE("non-finite loss aborts with a state dump", "[train]") {
  Model m(3, 3, 9);
  m.layers()[3].bias[0] = std::nan("");
  try {
    train(m, small_scenes(1, 6), short_config(LossKind::bce, 3));
    FAIL("expected NonFiniteLoss");
  } catch (const NonFiniteLoss &e) {
    CHECK(e.iter() == 0);
    CHECK(std::string(e.what()).find("non-finite loss at iter 0") != std::string::npos);
    CHECK(std::string(e.what()).find("conv4.weight_norm=") != std::string::npos);
  }
}

TEST_CASE("config validation", "[train]") {
  TrainConfig cfg;
  cfg.max_iter = 100;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.momentum = 1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  CHECK_THROWS_AS(train(Model(3, 3, 1), {}, TrainConfig{}), std::invalid_argument);
}

TEST_CASE("run config round trip", "[train][io]") {
  const auto path = std::filesystem::temp_directory_path() / "segssl_run.cfg";
  RunConfig rc;
  rc.train.loss = LossKind::ssim_ms;
  rc.train.ssl.window = GaussianWindow(5, 2.5);
  rc.train.ssl.beta = 0.12;
  rc.train.ssl.reweight = false;
  rc.train.base_lr = 0.003;
  rc.train.seed = 77;
  rc.data.train_count = 12;
  rc.data.scene.appendage_max_width = 1;
  rc.data_seed = 78;
  write_run_config(path, rc);
  const RunConfig back = read_run_config(path);
  CHECK(back.train.loss == LossKind::ssim_ms);
  CHECK(back.train.ssl.window.size() == 5);
  CHECK(back.train.ssl.window.sigma() == 2.5);
  CHECK(back.train.ssl.beta == 0.12);
  CHECK_FALSE(back.train.ssl.reweight);
  CHECK(back.train.ssl.ohem);
  CHECK(back.train.base_lr == 0.003);
  CHECK(back.train.seed == 77);
  CHECK(back.data.train_count == 12);
  CHECK(back.data.scene.appendage_max_width == 1);
  CHECK(back.data_seed == 78);
}

TEST_CASE("evaluate scores a model on scenes", "[train]") {
  const auto scenes = small_scenes(2, 7);
  const ConfusionMatrix cm = evaluate(Model(3, 3, 1), scenes);
  CHECK(cm.total() == 2 * 32 * 32);
}
