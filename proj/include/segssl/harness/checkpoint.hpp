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

// Checkpoint layout inside a run directory:
//
//   checkpoint.segt  - concatenated SEGT records, one per parameter tensor.
//                      Conv weights [out][in][3][3] are stored as H=3, W=3,
//                      C=out*in; biases as H=1, W=1, C=out.
//   manifest.txt     - "name shape byte_offset" per record, e.g.
//                      "conv1.weight 16x3x3x3 0".
//   run.cfg          - key=value training and dataset settings.

#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "segssl/harness/dataset.hpp"
#include "segssl/harness/model.hpp"
#include "segssl/harness/train.hpp"
#include "segssl/io.hpp"

namespace segssl::harness {

inline constexpr const char *kCheckpointFile = "checkpoint.segt";
inline constexpr const char *kManifestFile = "manifest.txt";
inline constexpr const char *kRunConfigFile = "run.cfg";

struct ManifestEntry {
  std::string name;
  std::vector<std::size_t> shape;
  std::size_t offset = 0;
};

inline std::string shape_string(const std::vector<std::size_t> &shape) {
  std::string s;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += 'x';
    s += std::to_string(shape[i]);
  }
  return s;
}

inline void save_checkpoint(const std::filesystem::path &dir, const Model &model) {
  std::filesystem::create_directories(dir);
  std::ofstream bin(dir / kCheckpointFile, std::ios::binary | std::ios::trunc);
  std::ofstream manifest(dir / kManifestFile, std::ios::trunc);
  if (!bin || !manifest) throw std::runtime_error("cannot write checkpoint in " + dir.string());
  manifest << "# name shape byte_offset\n";
  std::size_t offset = 0;
  for (std::size_t l = 0; l < Model::kLayers; ++l) {
    const auto &L = model.layers()[l];
    const std::string base = "conv" + std::to_string(l + 1);
    const Tensor w({3, 3, L.out * L.in}, L.weight);
    const Tensor b({1, 1, L.out}, L.bias);
    io::write_segt(bin, w);
    manifest << base << ".weight " << shape_string({L.out, L.in, 3, 3}) << ' ' << offset << '\n';
    offset += io::segt_size(w.shape());
    io::write_segt(bin, b);
    manifest << base << ".bias " << shape_string({L.out}) << ' ' << offset << '\n';
    offset += io::segt_size(b.shape());
  }
}

inline std::vector<ManifestEntry> read_manifest(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw io::IoError(io::IoErrorKind::missing_file, "cannot open " + path.string());
  std::vector<ManifestEntry> entries;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    ManifestEntry e;
    std::string shape;
    if (!(ls >> e.name >> shape >> e.offset)) {
      throw io::IoError(io::IoErrorKind::bad_format, "manifest: bad line '" + line + "'");
    }
    std::istringstream ss(shape);
    std::string dim;
    while (std::getline(ss, dim, 'x')) e.shape.push_back(std::stoul(dim));
    entries.push_back(std::move(e));
  }
  return entries;
}

/// Loads a checkpoint written by save_checkpoint (float32 precision).
inline Model load_checkpoint(const std::filesystem::path &dir) {
  const auto entries = read_manifest(dir / kManifestFile);
  if (entries.size() != 2 * Model::kLayers) {
    throw io::IoError(io::IoErrorKind::bad_format, "manifest: expected 8 tensors");
  }
  std::ifstream bin(dir / kCheckpointFile, std::ios::binary);
  if (!bin) {
    throw io::IoError(io::IoErrorKind::missing_file,
                      "cannot open " + (dir / kCheckpointFile).string());
  }
  std::array<ConvLayer<double>, Model::kLayers> layers;
  for (std::size_t l = 0; l < Model::kLayers; ++l) {
    const ManifestEntry &we = entries[2 * l];
    const ManifestEntry &be = entries[2 * l + 1];
    if (we.shape.size() != 4 || be.shape.size() != 1 || be.shape[0] != we.shape[0]) {
      throw io::IoError(io::IoErrorKind::bad_format, "manifest: bad shapes for " + we.name);
    }
    layers[l] = ConvLayer<double>(we.shape[1], we.shape[0]);
    bin.seekg(static_cast<std::streamoff>(we.offset));
    const Tensor w = io::read_segt(bin);
    bin.seekg(static_cast<std::streamoff>(be.offset));
    const Tensor b = io::read_segt(bin);
    if (w.size() != layers[l].weight.size() || b.size() != layers[l].bias.size()) {
      throw io::IoError(io::IoErrorKind::bad_format, "checkpoint: size mismatch for " + we.name);
    }
    std::copy(w.values().begin(), w.values().end(), layers[l].weight.begin());
    std::copy(b.values().begin(), b.values().end(), layers[l].bias.begin());
  }
  return Model(std::move(layers));
}

/// Everything needed to regenerate a run's data and losses.
struct RunConfig {
  TrainConfig train;
  DatasetConfig data;
  std::uint64_t data_seed = 1;
};

inline void write_run_config(const std::filesystem::path &path, const RunConfig &rc) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const TrainConfig &t = rc.train;
  out << std::setprecision(17) << "loss=" << to_string(t.loss) << '\n'
      << "k=" << t.ssl.window.size() << '\n'
      << "sigma=" << t.ssl.window.sigma() << '\n'
      << "c4=" << t.ssl.c4 << '\n'
      << "beta=" << t.ssl.beta << '\n'
      << "lambda=" << t.ssl.lambda << '\n'
      << "ohem=" << t.ssl.ohem << '\n'
      << "reweight=" << t.ssl.reweight << '\n'
      << "c1=" << t.ssim.c1 << '\n'
      << "c2=" << t.ssim.c2 << '\n'
      << "lr=" << t.base_lr << '\n'
      << "iters=" << t.max_iter << '\n'
      << "momentum=" << t.momentum << '\n'
      << "power=" << t.power << '\n'
      << "slow_start_steps=" << t.slow_start_steps << '\n'
      << "slow_start_ratio=" << t.slow_start_ratio << '\n'
      << "seed=" << t.seed << '\n'
      << "data_seed=" << rc.data_seed << '\n'
      << "height=" << rc.data.scene.height << '\n'
      << "width=" << rc.data.scene.width << '\n'
      << "classes=" << rc.data.scene.class_count << '\n'
      << "appendage_min_width=" << rc.data.scene.appendage_min_width << '\n'
      << "appendage_max_width=" << rc.data.scene.appendage_max_width << '\n'
      << "max_objects=" << rc.data.scene.max_objects << '\n'
      << "noise=" << rc.data.scene.noise << '\n'
      << "train_count=" << rc.data.train_count << '\n'
      << "val_count=" << rc.data.val_count << '\n';
}

inline RunConfig read_run_config(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw io::IoError(io::IoErrorKind::missing_file, "cannot open " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  const auto get = [&](const char *key) -> const std::string & {
    const auto it = kv.find(key);
    if (it == kv.end()) {
      throw io::IoError(io::IoErrorKind::bad_format,
                        path.string() + ": missing key '" + key + "'");
    }
    return it->second;
  };
  RunConfig rc;
  TrainConfig &t = rc.train;
  t.loss = parse_loss_kind(get("loss"));
  t.ssl.window = GaussianWindow(std::stoi(get("k")), std::stod(get("sigma")));
  t.ssl.c4 = std::stod(get("c4"));
  t.ssl.beta = std::stod(get("beta"));
  t.ssl.lambda = std::stod(get("lambda"));
  t.ssl.ohem = get("ohem") == "1";
  t.ssl.reweight = get("reweight") == "1";
  t.ssim.c1 = std::stod(get("c1"));
  t.ssim.c2 = std::stod(get("c2"));
  t.base_lr = std::stod(get("lr"));
  t.max_iter = std::stoul(get("iters"));
  t.momentum = std::stod(get("momentum"));
  t.power = std::stod(get("power"));
  t.slow_start_steps = std::stoul(get("slow_start_steps"));
  t.slow_start_ratio = std::stod(get("slow_start_ratio"));
  t.seed = std::stoull(get("seed"));
  rc.data_seed = std::stoull(get("data_seed"));
  rc.data.scene.height = std::stoul(get("height"));
  rc.data.scene.width = std::stoul(get("width"));
  rc.data.scene.class_count = std::stoul(get("classes"));
  rc.data.scene.appendage_min_width = std::stoi(get("appendage_min_width"));
  rc.data.scene.appendage_max_width = std::stoi(get("appendage_max_width"));
  rc.data.scene.max_objects = std::stoul(get("max_objects"));
  rc.data.scene.noise = std::stod(get("noise"));
  rc.data.train_count = std::stoul(get("train_count"));
  rc.data.val_count = std::stoul(get("val_count"));
  return rc;
}

}  // namespace segssl::harness
