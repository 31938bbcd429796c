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
#include <cstdint>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "segssl/grid.hpp"
#include "segssl/harness/dataset.hpp"
#include "segssl/harness/model.hpp"
#include "segssl/harness/rng.hpp"
#include "segssl/harness/schedule.hpp"
#include "segssl/loss_report.hpp"
#include "segssl/metrics.hpp"
#include "segssl/ssim.hpp"
#include "segssl/ssl.hpp"

namespace segssl::harness {

enum class LossKind { ce, bce, ssim, ssim_ms, ssl, combined };

inline std::string_view to_string(LossKind k) {
  switch (k) {
    case LossKind::ce: return "ce";
    case LossKind::bce: return "bce";
    case LossKind::ssim: return "ssim";
    case LossKind::ssim_ms: return "ssim_ms";
    case LossKind::ssl: return "ssl";
    case LossKind::combined: return "combined";
  }
  return "?";
}

inline LossKind parse_loss_kind(std::string_view s) {
  for (LossKind k : {LossKind::ce, LossKind::bce, LossKind::ssim, LossKind::ssim_ms,
                     LossKind::ssl, LossKind::combined}) {
    if (to_string(k) == s) return k;
  }
  throw std::invalid_argument("unknown loss kind '" + std::string(s) + "'");
}

struct TrainConfig {
  LossKind loss = LossKind::combined;
  SslParams ssl;
  SsimParams ssim;
  double base_lr = 0.01;
  std::size_t max_iter = 2000;
  double momentum = 0.9;
  double power = 0.9;
  std::size_t slow_start_steps = 100;
  double slow_start_ratio = 1.0 / 7.0;
  std::uint64_t seed = 1;
  /// Finite-difference check of the model gradient before the first step.
  bool verify_gradients = true;

  LrSchedule schedule() const {
    return {base_lr, max_iter, power, slow_start_steps, slow_start_ratio};
  }
  void validate() const {
    ssl.validate();
    ssim.validate();
    if (max_iter <= slow_start_steps) {
      throw std::invalid_argument("train: max_iter must exceed slow_start_steps");
    }
    if (!(base_lr >= 0.0)) throw std::invalid_argument("train: base_lr must be >= 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) {
      throw std::invalid_argument("train: momentum must lie in [0, 1)");
    }
  }
};

/// Evaluates the configured loss on one prediction.
inline LossReport compute_loss(const TrainConfig &cfg, const LabelMap &labels,
                               const LogitMap &logits) {
  switch (cfg.loss) {
    case LossKind::ce: return softmax_ce(labels, logits);
    case LossKind::bce: return bce_mean(labels, logits);
    case LossKind::ssim: return ssim_loss(labels, logits, cfg.ssl.window, cfg.ssim);
    case LossKind::ssim_ms: return ssim_ms_loss(labels, logits, cfg.ssl.window, cfg.ssim.c2);
    case LossKind::ssl: {
      SslReport s = ssl_total(labels, logits, cfg.ssl);
      LossReport r;
      r.loss = s.total_loss;
      r.loss_map = std::move(s.loss_map);
      r.gradient = std::move(s.gradient);
      r.hard_count = s.hard_count;
      r.hard_proportion = s.hard_proportion;
      return r;
    }
    case LossKind::combined: return combined_loss(labels, logits, cfg.ssl);
  }
  throw std::logic_error("compute_loss: unhandled loss kind");
}

struct LogRow {
  std::size_t iter = 0;
  double lr = 0.0;
  double loss = 0.0;
  std::int64_t hard_count = 0;
  double hard_proportion = 0.0;

  friend bool operator==(const LogRow &, const LogRow &) = default;
};

inline constexpr std::string_view kLogHeader = "iter,lr,loss,hard_count,hard_proportion";

inline void write_log_csv(std::ostream &out, const std::vector<LogRow> &log) {
  out << kLogHeader << '\n' << std::setprecision(17);
  for (const LogRow &r : log) {
    out << r.iter << ',' << r.lr << ',' << r.loss << ',' << r.hard_count << ','
        << r.hard_proportion << '\n';
  }
}

/// Raised when a step produces a non-finite loss; what() carries a dump of
/// the optimizer state at that step.
class NonFiniteLoss : public std::runtime_error {
 public:
  NonFiniteLoss(const std::string &dump, std::size_t iter)
      : std::runtime_error(dump), iter_(iter) {}
  std::size_t iter() const { return iter_; }

 private:
  std::size_t iter_;
};

/// Largest relative error between backprop and central differences over
/// `coords` random parameters, for the probe loss sum(r * logits) with a
/// fixed random r. Relative error is |a - n| / max(|a|, |n|, floor).
template <class Scalar>
double model_gradient_check(TinyFcn<Scalar> model, const Tensor &image, std::size_t coords,
                            std::uint64_t seed, double step, double floor = 1e-6) {
  const Grid<Scalar> input = cast_grid<Scalar>(image);
  typename TinyFcn<Scalar>::Cache cache;
  const Grid<Scalar> out = model.forward(input, &cache);
  Rng rng(seed);
  Grid<Scalar> probe(out.height(), out.width(), out.channels());
  for (std::size_t i = 0; i < probe.size(); ++i) probe[i] = static_cast<Scalar>(rng.uniform(-1, 1));
  const auto probe_loss = [&](const TinyFcn<Scalar> &m) {
    const Grid<Scalar> o = m.forward(input);
    double s = 0.0;
    for (std::size_t i = 0; i < o.size(); ++i) {
      s += static_cast<double>(probe[i]) * static_cast<double>(o[i]);
    }
    return s;
  };
  auto grads = model.backward(cache, probe);
  double worst = 0.0;
  for (std::size_t k = 0; k < coords; ++k) {
    const auto idx = static_cast<std::size_t>(
        rng.integer(0, static_cast<std::int64_t>(model.parameter_count()) - 1));
    const double analytic = static_cast<double>(TinyFcn<Scalar>::locate(grads, idx));
    const Scalar original = model.parameter(idx);
    model.parameter(idx) = static_cast<Scalar>(static_cast<double>(original) + step);
    const double up = probe_loss(model);
    model.parameter(idx) = static_cast<Scalar>(static_cast<double>(original) - step);
    const double down = probe_loss(model);
    model.parameter(idx) = original;
    const double numeric = (up - down) / (2.0 * step);
    const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
    worst = std::max(worst, std::abs(analytic - numeric) / denom);
  }
  return worst;
}

using Model = TinyFcn<double>;

struct TrainResult {
  Model model;
  std::vector<LogRow> log;
  /// Worst relative error of the initial gradient check, or -1 if skipped.
  double gradient_check_error = -1.0;
};

/// Momentum SGD over the scenes, one scene per step, visiting them in a
/// seeded shuffled order each epoch. Single-threaded and bit-reproducible
/// from (model, scenes, cfg).
inline TrainResult train(Model model, const std::vector<SyntheticScene> &scenes,
                         const TrainConfig &cfg,
                         const std::function<void(const LogRow &)> &on_step = {}) {
  cfg.validate();
  if (scenes.empty()) throw std::invalid_argument("train: no scenes");
  TrainResult result{std::move(model), {}, -1.0};
  Model &m = result.model;
  if (cfg.verify_gradients) {
    result.gradient_check_error =
        model_gradient_check(m, scenes.front().image, 10, mix_seed(cfg.seed ^ 0x6763ull), 1e-6);
    if (!(result.gradient_check_error <= 1e-4)) {
      throw std::runtime_error("train: model gradient check failed, relative error " +
                               std::to_string(result.gradient_check_error));
    }
  }

  std::vector<double *> params;
  for (auto &layer : m.layers()) {
    for (double &w : layer.weight) params.push_back(&w);
    for (double &b : layer.bias) params.push_back(&b);
  }
  MomentumSgd<double> opt(params.size(), cfg.momentum);
  const LrSchedule schedule = cfg.schedule();
  Rng order_rng(mix_seed(cfg.seed ^ 0x6f72646572ull));
  std::vector<std::size_t> order(scenes.size());
  std::vector<double> flat(params.size());

  for (std::size_t iter = 0; iter < cfg.max_iter; ++iter) {
    const std::size_t slot = iter % scenes.size();
    if (slot == 0) {
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1],
                  order[static_cast<std::size_t>(order_rng.integer(0, static_cast<std::int64_t>(i) - 1))]);
      }
    }
    const SyntheticScene &scene = scenes[order[slot]];
    const double lr = schedule.at(iter);

    Model::Cache cache;
    const Tensor logits = m.forward(scene.image, &cache);
    bool finite = true;
    for (double v : logits.values()) finite = finite && std::isfinite(v);
    LossReport rep;
    if (finite) rep = compute_loss(cfg, scene.labels, LogitMap(logits));
    if (!finite || !std::isfinite(rep.loss)) {
      std::ostringstream dump;
      dump << std::setprecision(17) << "non-finite loss at iter " << iter << "\n"
           << "lr=" << lr << "\nloss=" << (finite ? rep.loss : NAN) << "\nscene_seed="
           << scene.seed << "\nloss_kind=" << to_string(cfg.loss) << '\n';
      for (std::size_t l = 0; l < Model::kLayers; ++l) {
        double norm = 0.0;
        for (double w : m.layers()[l].weight) norm += w * w;
        dump << "conv" << l + 1 << ".weight_norm=" << std::sqrt(norm) << '\n';
      }
      throw NonFiniteLoss(dump.str(), iter);
    }
    const auto grads = m.backward(cache, rep.gradient);
    std::size_t k = 0;
    for (const auto &layer : grads) {
      for (double g : layer.weight) flat[k++] = g;
      for (double g : layer.bias) flat[k++] = g;
    }
    opt.step([&](std::size_t i) -> double & { return *params[i]; },
             [&](std::size_t i) { return flat[i]; }, lr);

    LogRow row{iter, lr, rep.loss, rep.hard_count, rep.hard_proportion};
    result.log.push_back(row);
    if (on_step) on_step(row);
  }
  return result;
}

/// Confusion matrix of argmax predictions over the scenes.
inline ConfusionMatrix evaluate(const Model &model, const std::vector<SyntheticScene> &scenes) {
  ConfusionMatrix cm(model.classes());
  for (const auto &s : scenes) {
    cm.accumulate(s.labels, argmax_labels(model.forward(s.image)));
  }
  return cm;
}

}  // namespace segssl::harness
