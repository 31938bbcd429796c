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


// segssl command-line tool. Every subcommand is a thin adapter over the
// library; stdout carries key=value lines or CSV only.
//
// Exit codes:
//   0  success
//   1  usage error or invalid flag combination
//   2  missing input file
//   3  malformed input file
//   4  shape mismatch between inputs
//   5  runtime failure (non-finite loss, failed gradient check, ...)

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "segssl/segssl.hpp"

namespace fs = std::filesystem;
using namespace segssl;
using namespace segssl::harness;

namespace {

enum Exit : int {
  kOk = 0,
  kUsage = 1,
  kMissingFile = 2,
  kBadFormat = 3,
  kShapeMismatch = 4,
  kRuntime = 5,
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::ofstream open_out(const fs::path &path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  return out;
}

std::vector<std::string> split_list(const std::string &s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Peeks the channel count of a SEGT file; 0 for anything else.
std::size_t segt_channels(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  char magic[4] = {};
  if (!in.read(magic, 4) || std::string(magic, 4) != "SEGT") return 0;
  try {
    return io::read_segt(path).channels();
  } catch (const io::IoError &) {
    return 0;
  }
}

// PGM label files count classes from the other operand when it is a tensor.
std::pair<io::LoadedMap, io::LoadedMap> load_pair(const fs::path &a, const fs::path &b,
                                                  std::size_t classes) {
  if (classes == 0) classes = std::max(segt_channels(a), segt_channels(b));
  if (classes == 0) {
    const auto max_classes = [](const fs::path &p) {
      const auto raw = io::read_pgm(p);
      std::size_t m = 0;
      for (auto id : raw.values()) {
        if (id != kVoid) m = std::max<std::size_t>(m, id + 1u);
      }
      return m;
    };
    // Both PGM: read_map rejects anything else before this matters.
    try {
      classes = std::max(max_classes(a), max_classes(b));
    } catch (const io::IoError &e) {
      if (e.kind() == io::IoErrorKind::missing_file) throw;
      classes = 0;
    }
  }
  return {io::read_map(a, classes), io::read_map(b, classes)};
}

void require_shapes(const Shape &a, const Shape &b) {
  if (a != b) throw ShapeError("shape mismatch: " + a.str() + " vs " + b.str());
}

// Linear map of a field onto 0..255; a flat field maps to 0.
Grid<std::uint8_t> heatmap(PlaneView<const double> plane, double &lo, double &hi) {
  lo = *std::min_element(plane.data.begin(), plane.data.end());
  hi = *std::max_element(plane.data.begin(), plane.data.end());
  Grid<std::uint8_t> img(plane.height, plane.width, 1, 0);
  const double span = hi - lo;
  for (std::size_t i = 0; i < img.size(); ++i) {
    img[i] = span > 0.0
                 ? static_cast<std::uint8_t>(std::lround(255.0 * (plane.data[i] - lo) / span))
                 : 0;
  }
  return img;
}

struct SslFlags {
  int k = 3;
  double sigma = 1.5;
  double c4 = 0.01;
  double beta = 0.1;
  double lambda = 0.5;
  std::string ohem = "on";
  std::string reweight = "on";

  void add(CLI::App *cmd, bool with_lambda) {
    cmd->add_option("--k", k, "Window size (odd)")->capture_default_str();
    cmd->add_option("--sigma", sigma, "Window Gaussian sigma")->capture_default_str();
    cmd->add_option("--c4", c4, "Normalization stability constant")->capture_default_str();
    cmd->add_option("--beta", beta, "Hard-example threshold factor")->capture_default_str();
    cmd->add_option("--ohem", ohem, "Hard-example mining on/off")->capture_default_str();
    cmd->add_option("--reweight", reweight, "Error reweighting on/off")->capture_default_str();
    if (with_lambda) {
      cmd->add_option("--lambda", lambda, "BCE weight in the combined loss")
          ->capture_default_str();
    }
  }
  SslParams params() const {
    SslParams p;
    p.window = GaussianWindow(k, sigma);
    p.c4 = c4;
    p.beta = beta;
    p.lambda = lambda;
    p.ohem = parse_switch(ohem);
    p.reweight = parse_switch(reweight);
    p.validate();
    return p;
  }
};

struct TrainFlags {
  std::string loss = "combined";
  std::uint64_t seed = 1;
  std::int64_t data_seed = -1;
  std::size_t iters = 2000;
  double lr = 0.01;
  double momentum = 0.9;
  std::size_t slow_start = 100;
  double c1 = 0.01 * 0.01;
  double c2 = 0.03 * 0.03;
  std::size_t train_count = 200;
  std::size_t val_count = 50;
  std::size_t size = 64;
  std::size_t classes = 3;
  int appendage_max = 2;
  SslFlags ssl;

  void add(CLI::App *cmd) {
    cmd->add_option("--loss", loss, "ce|bce|ssim|ssim_ms|ssl|combined")->capture_default_str();
    cmd->add_option("--seed", seed, "Training seed")->capture_default_str();
    cmd->add_option("--data-seed", data_seed, "Dataset seed (default: --seed)");
    cmd->add_option("--iters", iters, "Training iterations")->capture_default_str();
    cmd->add_option("--lr", lr, "Base learning rate")->capture_default_str();
    cmd->add_option("--momentum", momentum, "SGD momentum")->capture_default_str();
    cmd->add_option("--slow-start", slow_start, "Slow-start steps at lr/7")
        ->capture_default_str();
    cmd->add_option("--c1", c1, "SSIM C1")->capture_default_str();
    cmd->add_option("--c2", c2, "SSIM C2")->capture_default_str();
    cmd->add_option("--train-count", train_count, "Training scenes")->capture_default_str();
    cmd->add_option("--val-count", val_count, "Validation scenes")->capture_default_str();
    cmd->add_option("--size", size, "Scene height and width")->capture_default_str();
    cmd->add_option("--classes", classes, "Classes including background")
        ->capture_default_str();
    cmd->add_option("--appendage-max-width", appendage_max, "1 or 2")->capture_default_str();
    ssl.add(cmd, true);
  }
  RunConfig config() const {
    RunConfig rc;
    rc.train.loss = parse_loss_kind(loss);
    rc.train.ssl = ssl.params();
    rc.train.ssim.c1 = c1;
    rc.train.ssim.c2 = c2;
    rc.train.base_lr = lr;
    rc.train.max_iter = iters;
    rc.train.momentum = momentum;
    rc.train.slow_start_steps = slow_start;
    rc.train.seed = seed;
    rc.data.scene.height = size;
    rc.data.scene.width = size;
    rc.data.scene.class_count = classes;
    rc.data.scene.appendage_max_width = appendage_max;
    rc.data.scene.appendage_min_width = 1;
    rc.data.train_count = train_count;
    rc.data.val_count = val_count;
    rc.data_seed = data_seed < 0 ? seed : static_cast<std::uint64_t>(data_seed);
    rc.train.validate();
    rc.data.scene.validate();
    return rc;
  }
};

Model initial_model(const RunConfig &rc) {
  return Model(3, rc.data.scene.class_count, mix_seed(rc.train.seed ^ 0x696e6974ull));
}

// ---- ssim ----------------------------------------------------------------

struct SsimCmd {
  std::string ref, pred, map_out;
  int k = 3;
  double sigma = 1.5;
  double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  std::size_t classes = 0;

  int run() const {
    auto [a, b] = load_pair(ref, pred, classes);
    require_shapes(a.values.shape(), b.values.shape());
    const GaussianWindow win(k, sigma);
    SsimParams params;
    params.c1 = c1;
    params.c2 = c2;
    params.validate();
    const auto means = ssim_channel_means(a.values, b.values, win, params);
    double overall = 0.0;
    std::cout << std::setprecision(17);
    for (std::size_t c = 0; c < means.size(); ++c) {
      std::cout << "ssim_c" << c << '=' << means[c] << '\n';
      overall += means[c];
    }
    std::cout << "ssim_mean=" << overall / static_cast<double>(means.size()) << '\n';
    if (!map_out.empty()) {
      const Shape s = a.values.shape();
      Tensor out(s.height, s.width, s.channels);
      for (std::size_t c = 0; c < s.channels; ++c) {
        const Field m = ssim_map(a.values.plane(c), b.values.plane(c), win, params);
        std::copy(m.values().begin(), m.values().end(), out.plane(c).data.begin());
      }
      io::write_segt(fs::path(map_out), out);
    }
    return kOk;
  }
};

// ---- ssl-map --------------------------------------------------------------

struct SslMapCmd {
  std::string labels_path, probs_path, out = "ssl_map";
  SslFlags ssl;

  int run() const {
    const SslParams params = ssl.params();
    const std::size_t channels = segt_channels(probs_path);
    Tensor probs_t = io::read_segt(fs::path(probs_path));
    const LabelMap labels = io::read_labels(labels_path, channels ? channels : 0);
    require_shapes(labels.shape(), probs_t.shape());
    ProbabilityMap probs = [&] {
      try {
        return ProbabilityMap(std::move(probs_t));
      } catch (const std::invalid_argument &e) {
        throw io::IoError(io::IoErrorKind::bad_format, probs_path + ": " + e.what());
      }
    }();
    const SslReport r = ssl_total(labels, probs, params);

    const fs::path dir(out);
    fs::create_directories(dir);
    for (std::size_t c = 0; c < r.error_map.channels(); ++c) {
      double lo = 0, hi = 0;
      const auto img = heatmap(r.error_map.plane(c), lo, hi);
      const std::string stem = "error_c" + std::to_string(c);
      io::write_pgm(dir / (stem + ".pgm"), img.plane(0));
      open_out(dir / (stem + ".txt")) << std::setprecision(17) << "min=" << lo << "\nmax=" << hi
                                       << '\n';
      Grid<std::uint8_t> mask(r.hard_mask.height(), r.hard_mask.width(), 1, 0);
      const auto f = r.hard_mask.plane(c);
      for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = f.data[i] ? 255 : 0;
      io::write_pgm(dir / ("mask_c" + std::to_string(c) + ".pgm"), mask.plane(0));
    }
    std::ostringstream csv;
    csv << std::setprecision(17) << "total,hard_count,hard_proportion,e_max\n"
        << r.total_loss << ',' << r.hard_count << ',' << r.hard_proportion << ',' << r.e_max
        << '\n';
    open_out(dir / "ssl.csv") << csv.str();
    std::cout << csv.str();
    return kOk;
  }
};

// ---- train ------------------------------------------------------------------

struct TrainCmd {
  TrainFlags flags;
  std::string out = "run";

  int run() const {
    const RunConfig rc = flags.config();
    const Dataset ds = generate_dataset(rc.data, rc.data_seed);
    const fs::path dir(out);
    fs::create_directories(dir);
    write_run_config(dir / kRunConfigFile, rc);
    const TrainResult tr = train(initial_model(rc), ds.train, rc.train);
    {
      auto log = open_out(dir / "log.csv");
      write_log_csv(log, tr.log);
    }
    save_checkpoint(dir, tr.model);
    std::cout << std::setprecision(17) << "out=" << dir.string() << '\n'
              << "gradient_check_error=" << tr.gradient_check_error << '\n'
              << "final_loss=" << (tr.log.empty() ? 0.0 : tr.log.back().loss) << '\n';
    if (!ds.val.empty()) {
      const ConfusionMatrix cm = evaluate(tr.model, ds.val);
      auto metrics = open_out(dir / "metrics.csv");
      write_metrics_csv(metrics, cm);
      std::cout << "miou=" << cm.miou() << '\n' << "pixel_accuracy=" << cm.pixel_accuracy() << '\n';
    }
    return kOk;
  }
};

// ---- eval -------------------------------------------------------------------

struct EvalCmd {
  std::string checkpoint, truth, pred, out, split = "val";
  std::size_t classes = 0;

  int run() const {
    const bool files = !truth.empty() || !pred.empty();
    if (checkpoint.empty() == !files || (files && (truth.empty() || pred.empty()))) {
      throw UsageError("eval: give either --checkpoint DIR or both --truth and --pred");
    }
    ConfusionMatrix cm(1);
    if (!checkpoint.empty()) {
      const fs::path dir(checkpoint);
      const RunConfig rc = read_run_config(dir / kRunConfigFile);
      const Model model = load_checkpoint(dir);
      const Dataset ds = generate_dataset(rc.data, rc.data_seed);
      if (split != "val" && split != "train") throw UsageError("eval: --split is val or train");
      cm = evaluate(model, split == "val" ? ds.val : ds.train);
    } else {
      std::size_t c = classes ? classes : segt_channels(pred);
      const LabelMap t0 = io::read_labels(truth, c);
      if (c == 0) c = t0.class_count();
      LabelMap p = [&] {
        if (segt_channels(pred)) {
          const Tensor scores = io::read_segt(fs::path(pred));
          require_shapes(Shape{t0.height(), t0.width(), c}, scores.shape());
          return argmax_labels(scores);
        }
        return io::read_labels(pred, 0);
      }();
      c = std::max(c, p.class_count());
      const LabelMap t(t0.height(), t0.width(), c, {t0.ids().begin(), t0.ids().end()});
      if (p.height() != t.height() || p.width() != t.width()) {
        throw ShapeError("shape mismatch: " + t.shape().str() + " vs " + p.shape().str());
      }
      p = LabelMap(p.height(), p.width(), c, {p.ids().begin(), p.ids().end()});
      cm = ConfusionMatrix(c);
      cm.accumulate(t, p);
    }
    std::ostringstream csv;
    write_metrics_csv(csv, cm);
    std::cout << csv.str();
    if (!out.empty()) open_out(out) << csv.str();
    return kOk;
  }
};

// ---- sweep ------------------------------------------------------------------

struct SweepCmd {
  std::string param = "beta", values, checkpoint, seeds, out, split = "val";
  TrainFlags flags;

  int run() const {
    const auto vals = split_list(values);
    if (vals.empty()) throw UsageError("sweep: --values needs at least one entry");
    std::ostringstream csv;
    if (!checkpoint.empty()) {
      if (param != "beta") throw UsageError("sweep: --checkpoint supports only --param beta");
      if (!seeds.empty()) throw UsageError("sweep: --seeds and --checkpoint are exclusive");
      const fs::path dir(checkpoint);
      const RunConfig rc = read_run_config(dir / kRunConfigFile);
      const Model model = load_checkpoint(dir);
      const Dataset ds = generate_dataset(rc.data, rc.data_seed);
      std::vector<double> betas;
      for (const auto &v : vals) betas.push_back(std::stod(v));
      const auto pts =
          hard_proportion_sweep(model, split == "val" ? ds.val : ds.train, rc.train.ssl, betas);
      csv << std::setprecision(17) << "beta,hard_count,element_count,hard_proportion\n";
      for (const auto &p : pts) {
        csv << p.beta << ',' << p.hard_count << ',' << p.element_count << ','
            << p.hard_proportion << '\n';
      }
    } else {
      const auto seed_list = split_list(seeds);
      if (seed_list.size() < 3) {
        throw UsageError("sweep: training sweeps need --seeds with at least 3 entries");
      }
      std::vector<std::uint64_t> s;
      for (const auto &v : seed_list) s.push_back(std::stoull(v));
      const RunConfig rc = flags.config();
      const auto rows = run_ablation(parse_axis(param), vals, s, rc.train, rc.data,
                                     [](const AblationRow &r) {
                                       std::cerr << r.axis << '=' << r.value << " seed=" << r.seed
                                                 << " miou=" << r.miou << '\n';
                                     });
      write_ablation_csv(csv, rows);
      if (!out.empty()) {
        fs::path summary(out);
        summary.replace_extension(".summary.csv");
        auto sout = open_out(summary);
        write_summary_csv(sout, summarize(rows));
      }
    }
    std::cout << csv.str();
    if (!out.empty()) open_out(out) << csv.str();
    return kOk;
  }
};

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Structural similarity loss toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "segssl 1.0.0");

  SsimCmd ssim_cmd;
  auto *ssim = app.add_subcommand("ssim", "Mean SSIM per channel between two maps");
  ssim->add_option("ref", ssim_cmd.ref, "Reference map (PGM labels or SEGT)")->required();
  ssim->add_option("pred", ssim_cmd.pred, "Compared map (PGM labels or SEGT)")->required();
  ssim->add_option("--k", ssim_cmd.k, "Window size (odd)")->capture_default_str();
  ssim->add_option("--sigma", ssim_cmd.sigma, "Window Gaussian sigma")->capture_default_str();
  ssim->add_option("--c1", ssim_cmd.c1, "Luminance constant")->capture_default_str();
  ssim->add_option("--c2", ssim_cmd.c2, "Contrast constant")->capture_default_str();
  ssim->add_option("--classes", ssim_cmd.classes, "Class count for PGM inputs");
  ssim->add_option("--map", ssim_cmd.map_out, "Write the per-pixel SSIM map (SEGT)");

  SslMapCmd ssl_cmd;
  auto *ssl = app.add_subcommand("ssl-map", "Structural error maps, hard-example masks and SSL");
  ssl->add_option("labels", ssl_cmd.labels_path, "Label PGM")->required();
  ssl->add_option("probs", ssl_cmd.probs_path, "Probability SEGT (H x W x C)")->required();
  ssl->add_option("--out", ssl_cmd.out, "Output directory")->capture_default_str();
  ssl_cmd.ssl.add(ssl, false);

  TrainCmd train_cmd;
  auto *tr = app.add_subcommand("train", "Train the small FCN on synthetic scenes");
  train_cmd.flags.add(tr);
  tr->add_option("--out", train_cmd.out, "Output directory")->capture_default_str();

  EvalCmd eval_cmd;
  auto *ev = app.add_subcommand("eval", "Confusion-matrix metrics");
  ev->add_option("--checkpoint", eval_cmd.checkpoint, "Directory written by train");
  ev->add_option("--split", eval_cmd.split, "val or train")->capture_default_str();
  ev->add_option("--truth", eval_cmd.truth, "Ground-truth label PGM");
  ev->add_option("--pred", eval_cmd.pred, "Prediction PGM or score SEGT");
  ev->add_option("--classes", eval_cmd.classes, "Class count");
  ev->add_option("--out", eval_cmd.out, "Also write the CSV here");

  SweepCmd sweep_cmd;
  auto *sw = app.add_subcommand("sweep", "Frozen-checkpoint beta sweep or training ablation");
  sw->add_option("--param", sweep_cmd.param,
                 "beta|sigma|region_size|ohem|reweight|loss_kind")
      ->capture_default_str();
  sw->add_option("--values", sweep_cmd.values, "Comma-separated values")->required();
  sw->add_option("--checkpoint", sweep_cmd.checkpoint, "Frozen checkpoint directory");
  sw->add_option("--split", sweep_cmd.split, "val or train (frozen sweeps)")
      ->capture_default_str();
  sw->add_option("--seeds", sweep_cmd.seeds, "Comma-separated seeds (training sweeps)");
  sw->add_option("--out", sweep_cmd.out, "Also write the CSV here");
  sweep_cmd.flags.add(sw);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kUsage;
  }

  try {
    if (*ssim) return ssim_cmd.run();
    if (*ssl) return ssl_cmd.run();
    if (*tr) return train_cmd.run();
    if (*ev) return eval_cmd.run();
    if (*sw) return sweep_cmd.run();
  } catch (const UsageError &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const io::IoError &e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.kind() == io::IoErrorKind::missing_file ? kMissingFile : kBadFormat;
  } catch (const ShapeError &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kShapeMismatch;
  } catch (const std::invalid_argument &e) {
    // Bad flag values (window size, beta range, loss name, ...).
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kUsage;
}
