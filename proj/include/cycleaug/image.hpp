// Copyright 2026 The cycleaug Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Grayscale images, 8-bit PNG/PGM codecs and resampling.

#pragma once

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace cycleaug {

/// Raised for unreadable or malformed image files; the message names the path.
class ImageIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Single-channel float image, row-major.
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> pixels;

  Image() = default;
  Image(std::size_t h, std::size_t w, float fill = 0.0f) : height(h), width(w), pixels(h * w, fill) {}

  float& at(std::size_t y, std::size_t x) { return pixels[y * width + x]; }
  float at(std::size_t y, std::size_t x) const { return pixels[y * width + x]; }

  std::size_t size() const { return pixels.size(); }
  bool same_dims(const Image& o) const { return height == o.height && width == o.width; }

  friend bool operator==(const Image&, const Image&) = default;
};

/// 8-bit grayscale raster as stored on disk.
struct Gray8 {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> pixels;
};

namespace png_detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

inline std::uint32_t get_u32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | p[3];
}

inline void put_chunk(std::vector<std::uint8_t>& out, const char* type, const std::vector<std::uint8_t>& data) {
  put_u32(out, static_cast<std::uint32_t>(data.size()));
  const std::size_t start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  const auto crc = crc32(0L, out.data() + start, static_cast<uInt>(out.size() - start));
  put_u32(out, static_cast<std::uint32_t>(crc));
}

inline constexpr std::array<std::uint8_t, 8> kSignature{0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

inline int paeth(int a, int b, int c) {
  const int p = a + b - c;
  const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

}  // namespace png_detail

/// Encodes an 8-bit grayscale PNG. Output bytes depend only on the pixels.
inline std::vector<std::uint8_t> encode_png(const Gray8& img) {
  using namespace png_detail;
  std::vector<std::uint8_t> raw;
  raw.reserve(img.height * (img.width + 1));
  for (std::size_t y = 0; y < img.height; ++y) {
    raw.push_back(0);
    raw.insert(raw.end(), img.pixels.begin() + static_cast<std::ptrdiff_t>(y * img.width),
               img.pixels.begin() + static_cast<std::ptrdiff_t>((y + 1) * img.width));
  }
  uLongf zlen = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> z(zlen);
  if (compress2(z.data(), &zlen, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK) {
    throw ImageIoError("png: deflate failed");
  }
  z.resize(zlen);
  std::vector<std::uint8_t> out(kSignature.begin(), kSignature.end());
  std::vector<std::uint8_t> ihdr;
  put_u32(ihdr, static_cast<std::uint32_t>(img.width));
  put_u32(ihdr, static_cast<std::uint32_t>(img.height));
  ihdr.insert(ihdr.end(), {8, 0, 0, 0, 0});  // depth 8, grayscale, deflate, adaptive, no interlace
  put_chunk(out, "IHDR", ihdr);
  put_chunk(out, "IDAT", z);
  put_chunk(out, "IEND", {});
  return out;
}

/// Decodes non-interlaced 8-bit PNGs (gray, gray+alpha, RGB, RGBA) to gray.
inline Gray8 decode_png(const std::vector<std::uint8_t>& bytes, const std::string& name = "<memory>") {
  using namespace png_detail;
  const auto fail = [&](const std::string& why) { return ImageIoError(name + ": " + why); };
  if (bytes.size() < 8 || !std::equal(kSignature.begin(), kSignature.end(), bytes.begin())) {
    throw fail("not a PNG file");
  }
  std::size_t pos = 8;
  std::uint32_t width = 0, height = 0;
  int color = -1;
  std::vector<std::uint8_t> idat;
  bool seen_end = false;
  while (pos + 12 <= bytes.size()) {
    const std::uint32_t len = get_u32(&bytes[pos]);
    if (pos + 12 + len > bytes.size()) throw fail("truncated chunk");
    const std::string type(reinterpret_cast<const char*>(&bytes[pos + 4]), 4);
    const std::uint8_t* data = &bytes[pos + 8];
    if (type == "IHDR") {
      if (len != 13) throw fail("bad IHDR");
      width = get_u32(data);
      height = get_u32(data + 4);
      const int depth = data[8];
      color = data[9];
      if (depth != 8) throw fail("unsupported bit depth " + std::to_string(depth));
      if (data[12] != 0) throw fail("interlaced PNG not supported");
      if (color != 0 && color != 2 && color != 4 && color != 6) {
        throw fail("unsupported color type " + std::to_string(color));
      }
    } else if (type == "IDAT") {
      idat.insert(idat.end(), data, data + len);
    } else if (type == "IEND") {
      seen_end = true;
      break;
    }
    pos += 12 + len;
  }
  if (!seen_end || width == 0 || height == 0) throw fail("missing IHDR/IEND");
  const std::size_t channels = color == 0 ? 1 : color == 4 ? 2 : color == 2 ? 3 : 4;
  const std::size_t stride = width * channels;
  std::vector<std::uint8_t> raw(height * (stride + 1));
  uLongf rawlen = static_cast<uLongf>(raw.size());
  if (uncompress(raw.data(), &rawlen, idat.data(), static_cast<uLong>(idat.size())) != Z_OK || rawlen != raw.size()) {
    throw fail("corrupt image data");
  }
  std::vector<std::uint8_t> cur(stride), prev(stride, 0);
  Gray8 out{height, width, std::vector<std::uint8_t>(std::size_t{width} * height)};
  for (std::size_t y = 0; y < height; ++y) {
    const std::uint8_t filter = raw[y * (stride + 1)];
    const std::uint8_t* src = &raw[y * (stride + 1) + 1];
    for (std::size_t i = 0; i < stride; ++i) {
      const int a = i >= channels ? cur[i - channels] : 0;
      const int b = prev[i];
      const int c = i >= channels ? prev[i - channels] : 0;
      int pred = 0;
      switch (filter) {
        case 0: pred = 0; break;
        case 1: pred = a; break;
        case 2: pred = b; break;
        case 3: pred = (a + b) / 2; break;
        case 4: pred = paeth(a, b, c); break;
        default: throw fail("bad filter type");
      }
      cur[i] = static_cast<std::uint8_t>(src[i] + pred);
    }
    for (std::size_t x = 0; x < width; ++x) {
      const std::uint8_t* px = &cur[x * channels];
      std::uint8_t g = px[0];
      if (channels >= 3) g = static_cast<std::uint8_t>(std::lround(0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2]));
      out.pixels[y * width + x] = g;
    }
    std::swap(cur, prev);
  }
  return out;
}

/// Binary (P5) or ASCII (P2) PGM with maxval <= 255.
inline Gray8 decode_pgm(const std::vector<std::uint8_t>& bytes, const std::string& name = "<memory>") {
  const auto fail = [&](const std::string& why) { return ImageIoError(name + ": " + why); };
  std::size_t pos = 0;
  const auto token = [&]() {
    std::string t;
    while (pos < bytes.size()) {
      const char c = static_cast<char>(bytes[pos]);
      if (c == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        if (!t.empty()) break;
        ++pos;
      } else {
        t.push_back(c);
        ++pos;
      }
    }
    return t;
  };
  const std::string magic = token();
  if (magic != "P5" && magic != "P2") throw fail("not a PGM file");
  std::size_t w = 0, h = 0, maxval = 0;
  try {
    w = std::stoul(token());
    h = std::stoul(token());
    maxval = std::stoul(token());
  } catch (const std::exception&) {
    throw fail("bad PGM header");
  }
  if (w == 0 || h == 0 || maxval == 0 || maxval > 255) throw fail("unsupported PGM header");
  Gray8 out{h, w, std::vector<std::uint8_t>(w * h)};
  const auto rescale = [&](std::size_t v) {
    return static_cast<std::uint8_t>(std::lround(static_cast<double>(std::min(v, maxval)) * 255.0 / maxval));
  };
  if (magic == "P5") {
    ++pos;  // single whitespace after maxval
    if (pos + w * h > bytes.size()) throw fail("truncated PGM data");
    for (std::size_t i = 0; i < w * h; ++i) out.pixels[i] = rescale(bytes[pos + i]);
  } else {
    for (std::size_t i = 0; i < w * h; ++i) {
      const std::string t = token();
      if (t.empty()) throw fail("truncated PGM data");
      out.pixels[i] = rescale(std::stoul(t));
    }
  }
  return out;
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageIoError(path.string() + ": cannot open file");
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

inline void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ImageIoError(path.string() + ": cannot open for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ImageIoError(path.string() + ": write failed");
}

/// Reads a PNG or PGM file, picked by content.
inline Gray8 read_gray8(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '2')) {
    return decode_pgm(bytes, path.string());
  }
  return decode_png(bytes, path.string());
}

inline void write_png(const std::filesystem::path& path, const Gray8& img) { write_file_bytes(path, encode_png(img)); }

/// [0, 255] -> [-1, 1].
inline Image gray8_to_signed(const Gray8& g) {
  Image img(g.height, g.width);
  for (std::size_t i = 0; i < g.pixels.size(); ++i) img.pixels[i] = static_cast<float>(g.pixels[i]) / 127.5f - 1.0f;
  return img;
}

/// [-1, 1] -> [0, 255], clamped and rounded.
inline Gray8 signed_to_gray8(const Image& img) {
  Gray8 g{img.height, img.width, std::vector<std::uint8_t>(img.size())};
  for (std::size_t i = 0; i < img.size(); ++i) {
    const double v = std::clamp((static_cast<double>(img.pixels[i]) + 1.0) * 127.5, 0.0, 255.0);
    g.pixels[i] = static_cast<std::uint8_t>(std::lround(v));
  }
  return g;
}

/// Binary mask {0,1} <-> {0,255}; decoding thresholds at half range.
inline Image gray8_to_mask(const Gray8& g) {
  Image m(g.height, g.width);
  for (std::size_t i = 0; i < g.pixels.size(); ++i) m.pixels[i] = g.pixels[i] >= 128 ? 1.0f : 0.0f;
  return m;
}

inline Gray8 mask_to_gray8(const Image& m) {
  Gray8 g{m.height, m.width, std::vector<std::uint8_t>(m.size())};
  for (std::size_t i = 0; i < m.size(); ++i) g.pixels[i] = m.pixels[i] >= 0.5f ? 255 : 0;
  return g;
}

/// Bilinear resampling with half-pixel centres and edge clamping.
inline Image resize_bilinear(const Image& src, std::size_t h, std::size_t w) {
  if (src.height == h && src.width == w) return src;
  Image out(h, w);
  const double sy = static_cast<double>(src.height) / static_cast<double>(h);
  const double sx = static_cast<double>(src.width) / static_cast<double>(w);
  for (std::size_t y = 0; y < h; ++y) {
    const double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0, static_cast<double>(src.height - 1));
    const auto y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, src.height - 1);
    const double ty = fy - static_cast<double>(y0);
    for (std::size_t x = 0; x < w; ++x) {
      const double fx = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0, static_cast<double>(src.width - 1));
      const auto x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, src.width - 1);
      const double tx = fx - static_cast<double>(x0);
      const double top = src.at(y0, x0) * (1.0 - tx) + src.at(y0, x1) * tx;
      const double bot = src.at(y1, x0) * (1.0 - tx) + src.at(y1, x1) * tx;
      out.at(y, x) = static_cast<float>(top * (1.0 - ty) + bot * ty);
    }
  }
  return out;
}

/// Nearest-neighbour resampling followed by a 0.5 threshold, for masks.
inline Image resize_mask(const Image& src, std::size_t h, std::size_t w) {
  Image out(h, w);
  for (std::size_t y = 0; y < h; ++y) {
    const std::size_t sy = std::min(src.height - 1, y * src.height / h);
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t sx = std::min(src.width - 1, x * src.width / w);
      out.at(y, x) = src.at(sy, sx) >= 0.5f ? 1.0f : 0.0f;
    }
  }
  return out;
}

}  // namespace cycleaug
