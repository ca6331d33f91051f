// Copyright 2026 The cdpbench Authors
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

#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cdp/nn.hpp"
#include "cdp/optim.hpp"

namespace cdp {

// Model checkpoint, little-endian binary:
//   magic   8 bytes "CDPCKPT\n"
//   u32     format version (currently 1)
//   u32     layer count, then per layer: u32 kind + 5 x i32 fields
//   i32     head_index
//   u32     parameter tensor count, then per tensor: rank, extents, f64 data
//   u8      optimizer-present flag; if 1: i64 step count, then first and
//           second moment tensors in parameter order
//   u64     epoch counter
//   u64     RNG state byte length + mt19937_64 stream (textual encoding)

inline constexpr char kCheckpointMagic[8] = {'C', 'D', 'P', 'C', 'K', 'P', 'T', '\n'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelSpec spec;
  std::vector<Tensor> params;
  bool has_optimizer = false;
  std::int64_t adam_step = 0;
  std::vector<Tensor> adam_m, adam_v;
  std::uint64_t epoch = 0;
  std::string rng_state;
};

namespace ckpt_detail {

template <typename T>
void write_pod(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return v;
}

inline void write_tensor(std::ostream& os, const Tensor& t) {
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(t.shape.size()));
  for (int e : t.shape) write_pod<std::int32_t>(os, e);
  os.write(reinterpret_cast<const char*>(t.data.data()),
           static_cast<std::streamsize>(t.data.size() * sizeof(double)));
}

inline Tensor read_tensor(std::istream& is) {
  const auto rank = read_pod<std::uint32_t>(is);
  if (rank > 8) throw std::runtime_error("checkpoint: implausible tensor rank");
  std::vector<int> shape(rank);
  for (auto& e : shape) e = read_pod<std::int32_t>(is);
  Tensor t(shape);
  is.read(reinterpret_cast<char*>(t.data.data()),
          static_cast<std::streamsize>(t.data.size() * sizeof(double)));
  if (!is) throw std::runtime_error("checkpoint: truncated tensor data");
  return t;
}

}  // namespace ckpt_detail

inline void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  using namespace ckpt_detail;
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("checkpoint: cannot open for writing: " + path);
  os.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  write_pod<std::uint32_t>(os, kCheckpointVersion);

  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(ck.spec.layers.size()));
  for (const auto& l : ck.spec.layers) {
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(l.kind));
    write_pod<std::int32_t>(os, l.a);
    write_pod<std::int32_t>(os, l.b);
    write_pod<std::int32_t>(os, l.c);
    write_pod<std::int32_t>(os, l.d);
    write_pod<std::int32_t>(os, l.e);
  }
  write_pod<std::int32_t>(os, ck.spec.head_index);

  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(ck.params.size()));
  for (const auto& t : ck.params) write_tensor(os, t);

  write_pod<std::uint8_t>(os, ck.has_optimizer ? 1 : 0);
  if (ck.has_optimizer) {
    write_pod<std::int64_t>(os, ck.adam_step);
    for (const auto& t : ck.adam_m) write_tensor(os, t);
    for (const auto& t : ck.adam_v) write_tensor(os, t);
  }

  write_pod<std::uint64_t>(os, ck.epoch);
  write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(ck.rng_state.size()));
  os.write(ck.rng_state.data(), static_cast<std::streamsize>(ck.rng_state.size()));
  if (!os) throw std::runtime_error("checkpoint: write failed: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  using namespace ckpt_detail;
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open: " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
    throw std::runtime_error("checkpoint: bad magic bytes: " + path);
  const auto version = read_pod<std::uint32_t>(is);
  if (version != kCheckpointVersion)
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));

  Checkpoint ck;
  const auto n_layers = read_pod<std::uint32_t>(is);
  for (std::uint32_t i = 0; i < n_layers; ++i) {
    LayerSpec l{static_cast<LayerKind>(read_pod<std::uint32_t>(is))};
    l.a = read_pod<std::int32_t>(is);
    l.b = read_pod<std::int32_t>(is);
    l.c = read_pod<std::int32_t>(is);
    l.d = read_pod<std::int32_t>(is);
    l.e = read_pod<std::int32_t>(is);
    ck.spec.layers.push_back(l);
  }
  ck.spec.head_index = read_pod<std::int32_t>(is);

  const auto n_params = read_pod<std::uint32_t>(is);
  for (std::uint32_t i = 0; i < n_params; ++i) ck.params.push_back(read_tensor(is));

  ck.has_optimizer = read_pod<std::uint8_t>(is) != 0;
  if (ck.has_optimizer) {
    ck.adam_step = read_pod<std::int64_t>(is);
    for (std::uint32_t i = 0; i < n_params; ++i) ck.adam_m.push_back(read_tensor(is));
    for (std::uint32_t i = 0; i < n_params; ++i) ck.adam_v.push_back(read_tensor(is));
  }

  ck.epoch = read_pod<std::uint64_t>(is);
  const auto rng_len = read_pod<std::uint64_t>(is);
  ck.rng_state.resize(rng_len);
  is.read(ck.rng_state.data(), static_cast<std::streamsize>(rng_len));
  if (!is) throw std::runtime_error("checkpoint: truncated rng state");
  return ck;
}

/// Builds a model from a checkpoint and loads its parameters.
inline Model model_from_checkpoint(const Checkpoint& ck) {
  Model model(ck.spec);
  model.restore_params(ck.params);
  return model;
}

}  // namespace cdp
