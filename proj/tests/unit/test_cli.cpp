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

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "oracles.hpp"
#include "segssl/segssl.hpp"

using namespace segssl;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code = -1;
  std::string out;
};

RunResult run(const std::string &args, bool merge_stderr = false) {
  const std::string cmd =
      std::string(SEGSSL_CLI_PATH) + " " + args + (merge_stderr ? " 2>&1" : " 2>/dev/null");
  RunResult r;
  FILE *pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::map<std::string, std::string> key_values(const std::string &text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

std::vector<std::vector<std::string>> csv_rows(const std::string &text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

fs::path workdir() {
  const fs::path d = fs::temp_directory_path() / "segssl_test_cli";
  fs::create_directories(d);
  return d;
}

std::string q(const fs::path &p) { return "'" + p.string() + "'"; }

// Two-class 6x6 labels with a vertical bar and a void corner.
LabelMap fixture_labels() {
  std::vector<std::uint8_t> ids(36, 0);
  for (std::size_t y = 0; y < 6; ++y) ids[y * 6 + 2] = 1;
  ids[35] = kVoid;
  return LabelMap(6, 6, 2, ids);
}

}  // namespace

TEST_CASE("cli usage and error exit codes", "[cli]") {
  const fs::path d = workdir();
  io::write_labels(d / "a.pgm", LabelMap(4, 4, 2, std::vector<std::uint8_t>(16, 1)));
  io::write_labels(d / "b.pgm", LabelMap(5, 5, 2, std::vector<std::uint8_t>(25, 0)));
  {
    std::ofstream junk(d / "junk.bin", std::ios::binary);
    junk << "NOPE1234";
  }
  CHECK(run("").code == 1);
  CHECK(run("frobnicate").code == 1);
  CHECK(run("ssim " + q(d / "a.pgm")).code == 1);
  CHECK(run("ssim " + q(d / "a.pgm") + " " + q(d / "a.pgm") + " --k 4").code == 1);
  CHECK(run("ssim " + q(d / "nope.pgm") + " " + q(d / "a.pgm")).code == 2);
  CHECK(run("ssim " + q(d / "junk.bin") + " " + q(d / "a.pgm")).code == 3);
  const RunResult mismatch = run("ssim " + q(d / "a.pgm") + " " + q(d / "b.pgm"), true);
  CHECK(mismatch.code == 4);
  CHECK(mismatch.out.find("4x4x2") != std::string::npos);
  CHECK(mismatch.out.find("5x5x2") != std::string::npos);
  CHECK(run("eval").code == 1);
  CHECK(run("sweep --values 0.1").code == 1);
  CHECK(run("--help").code == 0);
}

TEST_CASE("cli ssim equals the library value", "[cli]") {
  const fs::path d = workdir();
  const LabelMap labels = fixture_labels();
  io::write_labels(d / "truth.pgm", labels);
  std::mt19937_64 rng(1);
  io::write_segt(d / "probs.segt", Tensor({6, 6, 2}, oracle::random_vec(rng, 72, 0.0, 1.0)));

  const RunResult same = run("ssim " + q(d / "truth.pgm") + " " + q(d / "truth.pgm"));
  REQUIRE(same.code == 0);
  CHECK(std::abs(std::stod(key_values(same.out).at("ssim_mean")) - 1.0) <= 1e-12);

  const RunResult r = run("ssim " + q(d / "truth.pgm") + " " + q(d / "probs.segt") + " --map " +
                          q(d / "ssim_map.segt"));
  REQUIRE(r.code == 0);
  const Tensor probs = io::read_segt(d / "probs.segt");
  const auto means =
      ssim_channel_means(one_hot(labels).tensor(), probs, GaussianWindow(3, 1.5), SsimParams{});
  const auto kv = key_values(r.out);
  CHECK(kv.at("ssim_c0") == fmt(means[0]));
  CHECK(kv.at("ssim_c1") == fmt(means[1]));
  CHECK(kv.at("ssim_mean") == fmt((means[0] + means[1]) / 2.0));
  CHECK(io::read_segt(d / "ssim_map.segt").shape() == Shape{6, 6, 2});
}

TEST_CASE("cli ssl-map", "[cli]") {
  const fs::path d = workdir();
  const LabelMap labels = fixture_labels();
  io::write_labels(d / "truth.pgm", labels);

  SECTION("agreeing inputs give no hard examples") {
    io::write_segt(d / "exact.segt", one_hot(labels).tensor());
    const RunResult r =
        run("ssl-map " + q(d / "truth.pgm") + " " + q(d / "exact.segt") + " --out " + q(d / "agree"));
    REQUIRE(r.code == 0);
    const auto rows = csv_rows(slurp(d / "agree" / "ssl.csv"));
    REQUIRE(rows.size() == 2);
    CHECK(rows[0] == std::vector<std::string>{"total", "hard_count", "hard_proportion", "e_max"});
    CHECK(rows[1][1] == "0");
    CHECK(rows[1][0] == "0");
    CHECK(rows[1][3] == fmt(e_max(SslParams{})));
    CHECK(r.out == slurp(d / "agree" / "ssl.csv"));
  }

  SECTION("one flipped pixel sets exactly the oracle mask") {
    Tensor p = one_hot(labels).tensor();
    p(3, 2, 1) = 0.0;
    p(3, 2, 0) = 1.0;
    io::write_segt(d / "flip.segt", p);
    const RunResult r =
        run("ssl-map " + q(d / "truth.pgm") + " " + q(d / "flip.segt") + " --out " + q(d / "flip"));
    REQUIRE(r.code == 0);

    const auto g = oracle::gaussian(3, 1.5L);
    const long double wc = g[4];
    const double emax = static_cast<double>(2 * (1 - wc) / (std::sqrt(wc - wc * wc) + 0.01L));
    const Tensor y = one_hot(labels).tensor();
    std::int64_t expected_m = 0;
    for (std::size_t c = 0; c < 2; ++c) {
      const oracle::Vec yc(y.plane(c).data.begin(), y.plane(c).data.end());
      const oracle::Vec pc(p.plane(c).data.begin(), p.plane(c).data.end());
      const auto my = oracle::local_mean(yc, 6, 6, 3, 1.5), vy = oracle::local_variance(yc, 6, 6, 3, 1.5);
      const auto mp = oracle::local_mean(pc, 6, 6, 3, 1.5), vp = oracle::local_variance(pc, 6, 6, 3, 1.5);
      const Grid<std::uint8_t> mask = io::read_pgm(d / "flip" / ("mask_c" + std::to_string(c) + ".pgm"));
      for (std::size_t i = 0; i < 36; ++i) {
        const double yn = (yc[i] - my[i] + 0.01) / (std::sqrt(vy[i]) + 0.01);
        const double pn = (pc[i] - mp[i] + 0.01) / (std::sqrt(vp[i]) + 0.01);
        const bool hard = labels.ids()[i] != kVoid && std::abs(yn - pn) > 0.1 * emax;
        CHECK(mask[i] == (hard ? 255 : 0));
        expected_m += hard;
      }
      const auto sidecar = key_values(slurp(d / "flip" / ("error_c" + std::to_string(c) + ".txt")));
      CHECK(std::stod(sidecar.at("min")) <= std::stod(sidecar.at("max")));
    }
    CHECK(expected_m > 0);
    const auto rows = csv_rows(r.out);
    CHECK(rows[1][1] == std::to_string(expected_m));
    const SslReport lib = ssl_total(labels, ProbabilityMap(io::read_segt(d / "flip.segt")), SslParams{});
    CHECK(rows[1][0] == fmt(lib.total_loss));
    CHECK(rows[1][2] == fmt(lib.hard_proportion));
  }

  SECTION("probabilities outside [0,1] are a format error") {
    io::write_segt(d / "bad.segt", Tensor(6, 6, 2, 2.0));
    CHECK(run("ssl-map " + q(d / "truth.pgm") + " " + q(d / "bad.segt") + " --out " + q(d / "bad"))
              .code == 3);
  }
}

TEST_CASE("cli eval on perfect predictions", "[cli]") {
  const fs::path d = workdir();
  io::write_labels(d / "truth.pgm", fixture_labels());
  const RunResult r = run("eval --truth " + q(d / "truth.pgm") + " --pred " + q(d / "truth.pgm"));
  REQUIRE(r.code == 0);
  const auto rows = csv_rows(r.out);
  CHECK(rows[0] == std::vector<std::string>{"name", "value"});
  CHECK(rows[3] == std::vector<std::string>{"mIoU", "1"});
  CHECK(rows[4] == std::vector<std::string>{"pixel_accuracy", "1"});
}

TEST_CASE("cli train, eval and sweep on a small run", "[cli]") {
  const fs::path d = workdir();
  const std::string common =
      "train --loss bce --seed 7 --iters 30 --slow-start 5 --train-count 3 --val-count 2 "
      "--size 32 --out ";
  const RunResult a = run(common + q(d / "run_a"));
  const RunResult b = run(common + q(d / "run_b"));
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  for (const char *f : {"checkpoint.segt", "manifest.txt", "log.csv", "run.cfg", "metrics.csv"}) {
    INFO(f);
    REQUIRE(fs::exists(d / "run_a" / f));
    CHECK(slurp(d / "run_a" / f) == slurp(d / "run_b" / f));
  }
  CHECK(csv_rows(slurp(d / "run_a" / "log.csv")).size() == 31);

  const RunResult ev = run("eval --checkpoint " + q(d / "run_a"));
  REQUIRE(ev.code == 0);
  CHECK(key_values(a.out).at("miou").size() > 0);
  CHECK(csv_rows(ev.out).size() == 6);

  const RunResult sw =
      run("sweep --checkpoint " + q(d / "run_a") + " --param beta --values 0.06,0.08,0.10,0.12");
  REQUIRE(sw.code == 0);
  const auto rows = csv_rows(sw.out);
  REQUIRE(rows.size() == 5);
  CHECK(rows[0][0] == "beta");
  for (std::size_t i = 2; i < rows.size(); ++i) CHECK(std::stod(rows[i][3]) <= std::stod(rows[i - 1][3]));

  CHECK(run("sweep --checkpoint " + q(d / "run_a") + " --param sigma --values 1,2").code == 1);
  CHECK(run("sweep --checkpoint " + q(d / "run_a") + " --values 0.1 --seeds 1,2,3").code == 1);
  CHECK(run("sweep --param ohem --values on,off --seeds 1,2").code == 1);
  CHECK(run("train --loss dice --out " + q(d / "bad")).code == 1);
  CHECK(run("eval --checkpoint " + q(d / "nowhere")).code == 2);
}
