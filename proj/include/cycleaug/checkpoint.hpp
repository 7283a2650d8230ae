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

// Versioned binary model container.
//
// Layout, all integers little-endian:
//   "CAUG"  u32 version  str kind  u64 step  str config  u64 rng_key  u64 rng_counter
//   u32 n_counters  { str name  u64 value }*
//   u32 n_blobs     { str name  u32 rank  u32 dim*  f32 data* }*
// where str is u32 length followed by the bytes.

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "cycleaug/image.hpp"
#include "cycleaug/random.hpp"
#include "cycleaug/tensor.hpp"

namespace cycleaug {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  struct Blob {
    std::string name;
    Shape shape;
    std::vector<float> data;
    friend bool operator==(const Blob&, const Blob&) = default;
  };

  std::string kind;
  std::uint64_t step = 0;
  std::string config;
  Rng rng;
  std::map<std::string, std::uint64_t> counters;
  std::vector<Blob> blobs;

  template <typename T>
  void add(const std::string& name, const Tensor<T>& t) {
    if (find(name)) throw CheckpointError("checkpoint: duplicate blob '" + name + "'");
    Blob b{name, t.shape(), {}};
    b.data.reserve(t.numel());
    for (T v : t.data()) b.data.push_back(static_cast<float>(v));
    blobs.push_back(std::move(b));
  }

  const Blob* find(const std::string& name) const {
    for (const auto& b : blobs) {
      if (b.name == name) return &b;
    }
    return nullptr;
  }

  template <typename T>
  Tensor<T> get(const std::string& name) const {
    const Blob* b = find(name);
    if (!b) throw CheckpointError("checkpoint: missing blob '" + name + "'");
    std::vector<T> v(b->data.begin(), b->data.end());
    return Tensor<T>(b->shape, std::move(v));
  }

  /// Copies a stored blob into an existing tensor of the same shape.
  template <typename T>
  void restore(const std::string& name, Tensor<T>& into) const {
    Tensor<T> t = get<T>(name);
    if (t.shape() != into.shape()) {
      throw CheckpointError("checkpoint: blob '" + name + "' has shape " + shape_str(t.shape()) + ", expected " +
                            shape_str(into.shape()));
    }
    into = std::move(t);
  }

  std::uint64_t counter(const std::string& name) const {
    auto it = counters.find(name);
    if (it == counters.end()) throw CheckpointError("checkpoint: missing counter '" + name + "'");
    return it->second;
  }

  std::vector<std::uint8_t> serialize() const {
    std::vector<std::uint8_t> out{'C', 'A', 'U', 'G'};
    const auto u32 = [&](std::uint32_t v) {
      for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    };
    const auto u64 = [&](std::uint64_t v) {
      for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    };
    const auto str = [&](const std::string& s) {
      u32(static_cast<std::uint32_t>(s.size()));
      out.insert(out.end(), s.begin(), s.end());
    };
    u32(kVersion);
    str(kind);
    u64(step);
    str(config);
    u64(rng.key());
    u64(rng.counter());
    u32(static_cast<std::uint32_t>(counters.size()));
    for (const auto& [k, v] : counters) {
      str(k);
      u64(v);
    }
    u32(static_cast<std::uint32_t>(blobs.size()));
    for (const auto& b : blobs) {
      str(b.name);
      u32(static_cast<std::uint32_t>(b.shape.size()));
      for (std::size_t d : b.shape) u32(static_cast<std::uint32_t>(d));
      for (float f : b.data) u32(std::bit_cast<std::uint32_t>(f));
    }
    return out;
  }

  static Checkpoint deserialize(const std::vector<std::uint8_t>& bytes, const std::string& origin = "<memory>") {
    std::size_t pos = 0;
    const auto need = [&](std::size_t n) {
      if (pos + n > bytes.size()) throw CheckpointError(origin + ": truncated checkpoint");
    };
    const auto u32 = [&]() {
      need(4);
      std::uint32_t v = 0;
      for (int i = 0; i < 4; ++i) v |= std::uint32_t{bytes[pos++]} << (8 * i);
      return v;
    };
    const auto u64 = [&]() {
      need(8);
      std::uint64_t v = 0;
      for (int i = 0; i < 8; ++i) v |= std::uint64_t{bytes[pos++]} << (8 * i);
      return v;
    };
    const auto str = [&]() {
      const std::uint32_t n = u32();
      need(n);
      std::string s(reinterpret_cast<const char*>(bytes.data() + pos), n);
      pos += n;
      return s;
    };
    need(4);
    if (std::memcmp(bytes.data(), "CAUG", 4) != 0) throw CheckpointError(origin + ": not a checkpoint (bad magic)");
    pos = 4;
    const std::uint32_t version = u32();
    if (version != kVersion) {
      throw CheckpointError(origin + ": unsupported checkpoint version " + std::to_string(version));
    }
    Checkpoint c;
    c.kind = str();
    c.step = u64();
    c.config = str();
    const std::uint64_t key = u64();
    const std::uint64_t ctr = u64();
    c.rng = Rng(key, ctr);
    for (std::uint32_t n = u32(); n > 0; --n) {
      std::string k = str();
      c.counters[k] = u64();
    }
    for (std::uint32_t n = u32(); n > 0; --n) {
      Blob b;
      b.name = str();
      const std::uint32_t rank = u32();
      for (std::uint32_t i = 0; i < rank; ++i) b.shape.push_back(u32());
      const std::size_t count = shape_numel(b.shape);
      need(4 * count);
      b.data.resize(count);
      for (float& f : b.data) f = std::bit_cast<float>(u32());
      c.blobs.push_back(std::move(b));
    }
    if (pos != bytes.size()) throw CheckpointError(origin + ": trailing bytes after checkpoint");
    return c;
  }

  /// Writes via a temporary file and rename, so readers never see a partial file.
  void save(const std::filesystem::path& path) const {
    const std::filesystem::path tmp = path.string() + ".tmp";
    write_file_bytes(tmp, serialize());
    std::filesystem::rename(tmp, path);
  }

  static Checkpoint load(const std::filesystem::path& path) {
    std::vector<std::uint8_t> bytes;
    try {
      bytes = read_file_bytes(path);
    } catch (const ImageIoError&) {
      throw CheckpointError(path.string() + ": cannot open checkpoint");
    }
    return deserialize(bytes, path.string());
  }

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

}  // namespace cycleaug
