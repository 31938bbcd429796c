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

// File formats:
//   labels  - binary PGM (P5), maxval <= 255, one byte per pixel = class id,
//             255 = void.
//   tensors - "SEGT", then H, W, C as uint32 little-endian, then H*W*C
//             float32 little-endian values, channel-outermost row-major.

#pragma once

#include <array>
#include <bit>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "segssl/grid.hpp"

namespace segssl::io {

enum class IoErrorKind { missing_file, bad_format };

class IoError : public std::runtime_error {
 public:
  IoError(IoErrorKind kind, const std::string &what)
      : std::runtime_error(what), kind_(kind) {}
  IoErrorKind kind() const { return kind_; }

 private:
  IoErrorKind kind_;
};

inline constexpr std::array<char, 4> kSegtMagic = {'S', 'E', 'G', 'T'};

namespace detail {

inline std::ifstream open_input(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError(IoErrorKind::missing_file,
                  "cannot open '" + path.string() + "'");
  }
  return in;
}

inline std::ofstream open_output(const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot write '" + path.string() + "'");
  }
  return out;
}

inline void put_u32(std::ostream &out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xffu),
                         static_cast<char>((v >> 8) & 0xffu),
                         static_cast<char>((v >> 16) & 0xffu),
                         static_cast<char>((v >> 24) & 0xffu)};
  out.write(bytes, 4);
}

inline std::uint32_t get_u32(std::istream &in) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char *>(bytes), 4)) {
    throw IoError(IoErrorKind::bad_format, "SEGT: truncated header");
  }
  return static_cast<std::uint32_t>(bytes[0]) |
         (static_cast<std::uint32_t>(bytes[1]) << 8) |
         (static_cast<std::uint32_t>(bytes[2]) << 16) |
         (static_cast<std::uint32_t>(bytes[3]) << 24);
}

// Reads one whitespace-delimited PNM header token, skipping '#' comments.
inline std::string pnm_token(std::istream &in) {
  std::string token;
  int ch = in.get();
  while (ch != EOF) {
    if (ch == '#') {
      while (ch != EOF && ch != '\n') ch = in.get();
    } else if (std::isspace(ch)) {
      ch = in.get();
    } else {
      break;
    }
  }
  while (ch != EOF && !std::isspace(ch) && ch != '#') {
    token.push_back(static_cast<char>(ch));
    ch = in.get();
  }
  if (ch == '#') in.unget();
  return token;
}

inline std::size_t pnm_number(std::istream &in, const char *field) {
  const std::string token = pnm_token(in);
  if (token.empty() ||
      token.find_first_not_of("0123456789") != std::string::npos ||
      token.size() > 9) {
    throw IoError(IoErrorKind::bad_format,
                  std::string("PGM: bad ") + field + " '" + token + "'");
  }
  return static_cast<std::size_t>(std::stoul(token));
}

}  // namespace detail

/// Raw 8-bit P5 image as a one-channel grid.
inline Grid<std::uint8_t> read_pgm(std::istream &in) {
  char magic[2] = {0, 0};
  if (!in.read(magic, 2) || magic[0] != 'P' || magic[1] != '5') {
    throw IoError(IoErrorKind::bad_format, "PGM: expected P5 magic");
  }
  const std::size_t width = detail::pnm_number(in, "width");
  const std::size_t height = detail::pnm_number(in, "height");
  const std::size_t maxval = detail::pnm_number(in, "maxval");
  if (width == 0 || height == 0) {
    throw IoError(IoErrorKind::bad_format, "PGM: zero dimension");
  }
  if (maxval == 0 || maxval > 255) {
    throw IoError(IoErrorKind::bad_format, "PGM: only 8-bit maps supported");
  }
  // pnm_token consumed the single whitespace byte after maxval.
  std::vector<std::uint8_t> pixels(width * height);
  if (!in.read(reinterpret_cast<char *>(pixels.data()),
               static_cast<std::streamsize>(pixels.size()))) {
    throw IoError(IoErrorKind::bad_format, "PGM: truncated pixel data");
  }
  return Grid<std::uint8_t>({height, width, 1}, std::move(pixels));
}

inline Grid<std::uint8_t> read_pgm(const std::filesystem::path &path) {
  auto in = detail::open_input(path);
  return read_pgm(in);
}

inline void write_pgm(std::ostream &out, PlaneView<const std::uint8_t> image) {
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char *>(image.data.data()),
            static_cast<std::streamsize>(image.data.size()));
}

inline void write_pgm(const std::filesystem::path &path,
                      PlaneView<const std::uint8_t> image) {
  auto out = detail::open_output(path);
  write_pgm(out, image);
}

/// Reads a label PGM. class_count == 0 infers max non-void id + 1.
inline LabelMap read_labels(const std::filesystem::path &path,
                            std::size_t class_count = 0) {
  const Grid<std::uint8_t> raw = read_pgm(path);
  if (class_count == 0) {
    std::size_t max_id = 0;
    for (std::uint8_t id : raw.values()) {
      if (id != kVoid) max_id = std::max<std::size_t>(max_id, id);
    }
    class_count = max_id + 1;
  }
  try {
    return LabelMap(raw.height(), raw.width(), class_count,
                    std::vector<std::uint8_t>(raw.values().begin(),
                                              raw.values().end()));
  } catch (const std::invalid_argument &e) {
    throw IoError(IoErrorKind::bad_format,
                  path.string() + ": " + std::string(e.what()));
  }
}

inline void write_labels(const std::filesystem::path &path,
                         const LabelMap &labels) {
  write_pgm(path, labels.view());
}

inline void write_segt(std::ostream &out, const Tensor &tensor) {
  out.write(kSegtMagic.data(), 4);
  detail::put_u32(out, static_cast<std::uint32_t>(tensor.height()));
  detail::put_u32(out, static_cast<std::uint32_t>(tensor.width()));
  detail::put_u32(out, static_cast<std::uint32_t>(tensor.channels()));
  for (double v : tensor.values()) {
    detail::put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
}

inline void write_segt(const std::filesystem::path &path,
                       const Tensor &tensor) {
  auto out = detail::open_output(path);
  write_segt(out, tensor);
}

/// Bytes occupied by a SEGT record of the given shape.
inline std::size_t segt_size(const Shape &shape) {
  return 16 + 4 * shape.elements();
}

inline Tensor read_segt(std::istream &in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), 4) || magic != kSegtMagic) {
    throw IoError(IoErrorKind::bad_format, "SEGT: bad magic");
  }
  const std::size_t h = detail::get_u32(in);
  const std::size_t w = detail::get_u32(in);
  const std::size_t c = detail::get_u32(in);
  if (h == 0 || w == 0 || c == 0 || h * w * c > (std::size_t{1} << 31)) {
    throw IoError(IoErrorKind::bad_format, "SEGT: invalid dimensions");
  }
  std::vector<unsigned char> bytes(4 * h * w * c);
  if (!in.read(reinterpret_cast<char *>(bytes.data()),
               static_cast<std::streamsize>(bytes.size()))) {
    throw IoError(IoErrorKind::bad_format, "SEGT: truncated payload");
  }
  std::vector<double> values(h * w * c);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::uint32_t bits =
        static_cast<std::uint32_t>(bytes[4 * i]) |
        (static_cast<std::uint32_t>(bytes[4 * i + 1]) << 8) |
        (static_cast<std::uint32_t>(bytes[4 * i + 2]) << 16) |
        (static_cast<std::uint32_t>(bytes[4 * i + 3]) << 24);
    values[i] = static_cast<double>(std::bit_cast<float>(bits));
  }
  return Tensor({h, w, c}, std::move(values));
}

inline Tensor read_segt(const std::filesystem::path &path) {
  auto in = detail::open_input(path);
  return read_segt(in);
}

/// A map read from either format: PGM labels become one-hot planes.
struct LoadedMap {
  Tensor values;
  bool from_labels = false;
};

/// Dispatches on the leading magic bytes.
inline LoadedMap read_map(const std::filesystem::path &path,
                          std::size_t class_count = 0) {
  char magic[4] = {0, 0, 0, 0};
  {
    auto in = detail::open_input(path);
    in.read(magic, 4);
  }
  if (magic[0] == 'P' && magic[1] == '5') {
    return {one_hot(read_labels(path, class_count)).tensor(), true};
  }
  if (std::memcmp(magic, kSegtMagic.data(), 4) == 0) {
    return {read_segt(path), false};
  }
  throw IoError(IoErrorKind::bad_format,
                path.string() + ": neither PGM (P5) nor SEGT magic");
}

}  // namespace segssl::io
