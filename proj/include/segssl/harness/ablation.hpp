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

#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "segssl/harness/dataset.hpp"
#include "segssl/harness/train.hpp"
#include "segssl/ssl.hpp"

namespace segssl::harness {

enum class AblationAxis { beta, sigma, region_size, ohem, reweight, loss_kind };

inline std::string_view to_string(AblationAxis a) {
  switch (a) {
    case AblationAxis::beta: return "beta";
    case AblationAxis::sigma: return "sigma";
    case AblationAxis::region_size: return "region_size";
    case AblationAxis::ohem: return "ohem";
    case AblationAxis::reweight: return "reweight";
    case AblationAxis::loss_kind: return "loss_kind";
  }
  return "?";
}

inline AblationAxis parse_axis(std::string_view s) {
  for (AblationAxis a : {AblationAxis::beta, AblationAxis::sigma, AblationAxis::region_size,
                         AblationAxis::ohem, AblationAxis::reweight, AblationAxis::loss_kind}) {
    if (to_string(a) == s) return a;
  }
  throw std::invalid_argument("unknown ablation axis '" + std::string(s) + "'");
}

inline bool parse_switch(std::string_view v) {
  if (v == "on" || v == "1" || v == "true") return true;
  if (v == "off" || v == "0" || v == "false") return false;
  throw std::invalid_argument("expected on/off, got '" + std::string(v) + "'");
}

/// Returns `base` with one axis set to `value`.
inline TrainConfig apply_setting(TrainConfig cfg, AblationAxis axis, const std::string &value) {
  switch (axis) {
    case AblationAxis::beta: cfg.ssl.beta = std::stod(value); break;
    case AblationAxis::sigma:
      cfg.ssl.window = GaussianWindow(cfg.ssl.window.size(), std::stod(value));
      break;
    case AblationAxis::region_size:
      cfg.ssl.window = GaussianWindow(std::stoi(value), cfg.ssl.window.sigma());
      break;
    case AblationAxis::ohem: cfg.ssl.ohem = parse_switch(value); break;
    case AblationAxis::reweight: cfg.ssl.reweight = parse_switch(value); break;
    case AblationAxis::loss_kind: cfg.loss = parse_loss_kind(value); break;
  }
  cfg.validate();
  return cfg;
}

struct AblationRow {
  std::string axis;
  std::string value;
  std::uint64_t seed = 0;
  double miou = 0.0;
  double pixel_accuracy = 0.0;
  /// Mean logged hard-example proportion over all training steps.
  double mean_hard_proportion = 0.0;

  friend bool operator==(const AblationRow &, const AblationRow &) = default;
};

struct AblationSummary {
  std::string axis;
  std::string value;
  std::size_t runs = 0;
  double miou_mean = 0.0;
  double miou_std = 0.0;
  double hard_proportion_mean = 0.0;

  friend bool operator==(const AblationSummary &, const AblationSummary &) = default;
};

/// Trains one model per (value, seed). The dataset for each seed is shared by
/// all values so settings are compared on identical data and initialization.
inline std::vector<AblationRow> run_ablation(
    AblationAxis axis, const std::vector<std::string> &values,
    const std::vector<std::uint64_t> &seeds, const TrainConfig &base,
    const DatasetConfig &data,
    const std::function<void(const AblationRow &)> &on_row = {}) {
  if (seeds.size() < 3) throw std::invalid_argument("ablation: need at least 3 seeds");
  if (values.empty()) throw std::invalid_argument("ablation: no values");
  std::vector<TrainConfig> configs;
  for (const auto &v : values) configs.push_back(apply_setting(base, axis, v));
  std::vector<AblationRow> rows;
  for (std::uint64_t seed : seeds) {
    const Dataset ds = generate_dataset(data, seed);
    for (std::size_t i = 0; i < values.size(); ++i) {
      TrainConfig cfg = configs[i];
      cfg.seed = seed;
      const Model init(3, data.scene.class_count, mix_seed(seed ^ 0x696e6974ull));
      const TrainResult tr = train(init, ds.train, cfg);
      const ConfusionMatrix cm = evaluate(tr.model, ds.val);
      double hp = 0.0;
      for (const LogRow &r : tr.log) hp += r.hard_proportion;
      AblationRow row{std::string(to_string(axis)), values[i], seed, cm.miou(),
                      cm.pixel_accuracy(), hp / static_cast<double>(tr.log.size())};
      if (on_row) on_row(row);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

/// Mean and sample standard deviation of mIoU per setting, in order of first
/// appearance.
inline std::vector<AblationSummary> summarize(const std::vector<AblationRow> &rows) {
  std::vector<AblationSummary> out;
  std::vector<std::vector<const AblationRow *>> groups;
  for (const auto &r : rows) {
    std::size_t g = 0;
    while (g < out.size() && !(out[g].axis == r.axis && out[g].value == r.value)) ++g;
    if (g == out.size()) {
      out.push_back({r.axis, r.value, 0, 0.0, 0.0, 0.0});
      groups.emplace_back();
    }
    groups[g].push_back(&r);
  }
  for (std::size_t g = 0; g < out.size(); ++g) {
    const auto &grp = groups[g];
    const auto n = static_cast<double>(grp.size());
    double mean = 0.0, hp = 0.0;
    for (const auto *r : grp) {
      mean += r->miou;
      hp += r->mean_hard_proportion;
    }
    mean /= n;
    double var = 0.0;
    for (const auto *r : grp) var += (r->miou - mean) * (r->miou - mean);
    out[g].runs = grp.size();
    out[g].miou_mean = mean;
    out[g].miou_std = grp.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
    out[g].hard_proportion_mean = hp / n;
  }
  return out;
}

inline constexpr std::string_view kAblationHeader =
    "axis,value,seed,miou,pixel_accuracy,mean_hard_proportion";
inline constexpr std::string_view kSummaryHeader =
    "axis,value,runs,miou_mean,miou_std,hard_proportion_mean";

inline void write_ablation_csv(std::ostream &out, const std::vector<AblationRow> &rows) {
  out << kAblationHeader << '\n' << std::setprecision(17);
  for (const auto &r : rows) {
    out << r.axis << ',' << r.value << ',' << r.seed << ',' << r.miou << ',' << r.pixel_accuracy
        << ',' << r.mean_hard_proportion << '\n';
  }
}

inline std::vector<AblationRow> read_ablation_csv(std::istream &in) {
  std::string line;
  if (!std::getline(in, line) || line != kAblationHeader) {
    throw std::invalid_argument("ablation csv: unexpected header");
  }
  std::vector<AblationRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() != 6) throw std::invalid_argument("ablation csv: bad row '" + line + "'");
    rows.push_back({f[0], f[1], std::stoull(f[2]), std::stod(f[3]), std::stod(f[4]),
                    std::stod(f[5])});
  }
  return rows;
}

inline void write_summary_csv(std::ostream &out, const std::vector<AblationSummary> &rows) {
  out << kSummaryHeader << '\n' << std::setprecision(17);
  for (const auto &s : rows) {
    out << s.axis << ',' << s.value << ',' << s.runs << ',' << s.miou_mean << ',' << s.miou_std
        << ',' << s.hard_proportion_mean << '\n';
  }
}

struct BetaPoint {
  double beta = 0.0;
  std::int64_t hard_count = 0;
  std::size_t element_count = 0;
  double hard_proportion = 0.0;
};

/// Hard-example proportion of a frozen model's predictions for each beta.
/// The structural error is computed once per scene; only the threshold moves.
inline std::vector<BetaPoint> hard_proportion_sweep(const Model &model,
                                                    const std::vector<SyntheticScene> &scenes,
                                                    const SslParams &base,
                                                    const std::vector<double> &betas) {
  std::vector<BetaPoint> points;
  for (double b : betas) {
    SslParams p = base;
    p.beta = b;
    p.ohem = true;
    p.validate();
    points.push_back({b, 0, 0, 0.0});
  }
  for (const auto &s : scenes) {
    const ProbabilityMap probs = sigmoid(LogitMap(model.forward(s.image)));
    const Tensor truth = one_hot(s.labels).tensor();
    const Tensor e = structural_error(truth, probs.tensor(), base);
    const auto valid = valid_pixels(s.labels);
    for (auto &pt : points) {
      SslParams p = base;
      p.beta = pt.beta;
      p.ohem = true;
      pt.hard_count += hard_mask(e, valid, p).count;
      pt.element_count += s.labels.non_void_count() * s.labels.class_count();
    }
  }
  for (auto &pt : points) {
    pt.hard_proportion = pt.element_count == 0 ? 0.0
                                               : static_cast<double>(pt.hard_count) /
                                                     static_cast<double>(pt.element_count);
  }
  return points;
}

}  // namespace segssl::harness
