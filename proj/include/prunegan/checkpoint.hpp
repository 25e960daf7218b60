// Copyright 2026 The prunegan Authors. All Rights Reserved.
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

// Checkpoint archive.
//
// Layout (all integers little-endian):
//   8 bytes   magic "PRUNEGAN"
//   u32       format version
//   u64       header length H
//   H bytes   JSON header: manifest, step, metrics, tensor index
//   u32       CRC-32 of the header bytes
//   ...       blobs, at the offsets recorded in the index
//
// Parameters are stored as raw f32; masks are bit-packed, LSB first, with
// their shape and granularity in the index. Every blob carries a CRC-32.

#include <zlib.h>

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "prunegan/errors.hpp"
#include "prunegan/nn/network.hpp"
#include "prunegan/nn/optim.hpp"
#include "prunegan/pruning.hpp"
#include "prunegan/tensor.hpp"

namespace prunegan {

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::array<char, 8> kCheckpointMagic = {'P', 'R', 'U', 'N', 'E', 'G', 'A', 'N'};

struct Checkpoint {
  nlohmann::json manifest = nlohmann::json::object();
  std::map<std::string, Tensor> parameters;
  std::map<std::string, PruningMask> masks;
  std::int64_t step = 0;
  std::map<std::string, double> metrics;

  bool operator==(const Checkpoint&) const = default;
};

/// Masks must name existing parameters of the same shape, and masked
/// positions must hold exact zeros.
inline void validate_checkpoint(const Checkpoint& ckpt) {
  for (const auto& [name, mask] : ckpt.masks) {
    auto it = ckpt.parameters.find(name);
    if (it == ckpt.parameters.end()) {
      throw ValidationError("mask '" + name + "' has no matching parameter");
    }
    if (it->second.shape() != mask.shape || mask.bits.size() != it->second.size()) {
      throw ValidationError("mask '" + name + "' shape " + mask.shape.str() +
                            " conflicts with parameter shape " + it->second.shape().str());
    }
    for (std::size_t i = 0; i < mask.bits.size(); ++i) {
      if (mask.bits[i] == 0 && it->second[i] != 0.0f) {
        throw ValidationError("parameter '" + name + "' is non-zero at masked index " +
                              std::to_string(i));
      }
    }
  }
}

inline std::uint32_t crc32_of(const void* data, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  const auto* p = static_cast<const Bytef*>(data);
  while (n > 0) {
    const uInt chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    crc = crc32(crc, p, chunk);
    p += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline std::uint64_t get_le(const unsigned char* p, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= std::uint64_t{p[i]} << (8 * i);
  return v;
}

inline std::string encode_f32(const Tensor& t) {
  std::string out;
  out.reserve(t.size() * 4);
  for (float v : t.values()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

inline std::string pack_bits(const std::vector<std::uint8_t>& bits) {
  std::string out((bits.size() + 7) / 8, '\0');
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i]) out[i / 8] = static_cast<char>(out[i / 8] | (1u << (i % 8)));
  }
  return out;
}

inline std::vector<std::uint8_t> unpack_bits(const unsigned char* p, std::size_t count) {
  std::vector<std::uint8_t> bits(count);
  for (std::size_t i = 0; i < count; ++i) bits[i] = (p[i / 8] >> (i % 8)) & 1u;
  return bits;
}

inline nlohmann::json shape_json(const Shape4& s) { return {s.n, s.c, s.h, s.w}; }

inline Shape4 shape_from(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 4) throw IoError("checkpoint index has a malformed shape");
  return {j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
}

}  // namespace detail

inline std::string serialize_checkpoint(const Checkpoint& ckpt) {
  nlohmann::json index = nlohmann::json::array();
  std::string blobs;
  auto add_blob = [&](nlohmann::json entry, const std::string& bytes) {
    entry["offset"] = blobs.size();
    entry["nbytes"] = bytes.size();
    entry["crc32"] = crc32_of(bytes.data(), bytes.size());
    index.push_back(std::move(entry));
    blobs += bytes;
  };
  for (const auto& [name, t] : ckpt.parameters) {
    add_blob({{"name", name}, {"kind", "param"}, {"dtype", "f32le"},
              {"shape", detail::shape_json(t.shape())}},
             detail::encode_f32(t));
  }
  for (const auto& [name, m] : ckpt.masks) {
    add_blob({{"name", name}, {"kind", "mask"}, {"dtype", "bits"},
              {"shape", detail::shape_json(m.shape)},
              {"granularity", std::string(to_string(m.granularity))}},
             detail::pack_bits(m.bits));
  }
  nlohmann::json metrics = nlohmann::json::object();
  for (const auto& [k, v] : ckpt.metrics) {
    if (!std::isfinite(v)) throw ValidationError("checkpoint metric '" + k + "' is not finite");
    metrics[k] = v;
  }
  const nlohmann::json header = {
      {"manifest", ckpt.manifest}, {"step", ckpt.step}, {"metrics", metrics}, {"tensors", index}};
  const std::string head = header.dump();

  std::string out(kCheckpointMagic.begin(), kCheckpointMagic.end());
  detail::put_u32(out, kCheckpointVersion);
  detail::put_u64(out, head.size());
  out += head;
  detail::put_u32(out, crc32_of(head.data(), head.size()));
  out += blobs;
  return out;
}

inline Checkpoint deserialize_checkpoint(const std::string& bytes, const std::string& origin) {
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t fixed = kCheckpointMagic.size() + 4 + 8;
  if (bytes.size() < fixed ||
      std::memcmp(bytes.data(), kCheckpointMagic.data(), kCheckpointMagic.size()) != 0) {
    throw IoError(origin + " is not a checkpoint archive");
  }
  const auto version = static_cast<std::uint32_t>(detail::get_le(p + 8, 4));
  if (version != kCheckpointVersion) {
    throw IoError(origin + " has checkpoint version " + std::to_string(version) + ", expected " +
                  std::to_string(kCheckpointVersion));
  }
  const std::uint64_t head_len = detail::get_le(p + 12, 8);
  if (bytes.size() < fixed + head_len + 4) throw IoError(origin + " is truncated");
  const std::string head = bytes.substr(fixed, head_len);
  const auto head_crc = static_cast<std::uint32_t>(detail::get_le(p + fixed + head_len, 4));
  if (crc32_of(head.data(), head.size()) != head_crc) {
    throw IoError(origin + " header checksum mismatch");
  }
  const std::size_t blob_base = fixed + head_len + 4;

  Checkpoint ckpt;
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(head);
    ckpt.manifest = header.at("manifest");
    ckpt.step = header.at("step").get<std::int64_t>();
    for (const auto& [k, v] : header.at("metrics").items()) ckpt.metrics[k] = v.get<double>();

    for (const auto& entry : header.at("tensors")) {
      const auto name = entry.at("name").get<std::string>();
      const auto offset = entry.at("offset").get<std::size_t>();
      const auto nbytes = entry.at("nbytes").get<std::size_t>();
      if (blob_base + offset + nbytes > bytes.size()) {
        throw IoError(origin + ": blob '" + name + "' extends past end of file");
      }
      const auto* blob = p + blob_base + offset;
      if (crc32_of(blob, nbytes) != entry.at("crc32").get<std::uint32_t>()) {
        throw IoError(origin + ": checksum mismatch for '" + name + "'");
      }
      const Shape4 shape = detail::shape_from(entry.at("shape"));
      const auto kind = entry.at("kind").get<std::string>();
      if (kind == "param") {
        if (nbytes != shape.numel() * 4) throw IoError(origin + ": bad size for '" + name + "'");
        Tensor t(shape);
        for (std::size_t i = 0; i < t.size(); ++i) {
          t[i] = std::bit_cast<float>(static_cast<std::uint32_t>(detail::get_le(blob + 4 * i, 4)));
        }
        ckpt.parameters.emplace(name, std::move(t));
      } else if (kind == "mask") {
        if (nbytes != (shape.numel() + 7) / 8) {
          throw IoError(origin + ": bad size for mask '" + name + "'");
        }
        PruningMask m;
        m.shape = shape;
        m.granularity = parse_granularity(entry.at("granularity").get<std::string>());
        m.bits = detail::unpack_bits(blob, shape.numel());
        m.sparsity = sparsity_of(m);
        ckpt.masks.emplace(name, std::move(m));
      } else {
        throw IoError(origin + ": unknown blob kind '" + kind + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(origin + ": malformed checkpoint header: " + e.what());
  }
  validate_checkpoint(ckpt);
  return ckpt;
}

/// Writes via a temporary file and rename, so readers never observe a
/// partially written archive.
inline void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  validate_checkpoint(ckpt);
  const std::string bytes = serialize_checkpoint(ckpt);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes, path.string());
}

/// CRC-32 over names and raw bytes of the given tensors, in map order.
inline std::uint32_t parameter_checksum(const std::map<std::string, Tensor>& params) {
  uLong crc = crc32(0L, Z_NULL, 0);
  for (const auto& [name, t] : params) {
    crc = crc32(crc, reinterpret_cast<const Bytef*>(name.data()), static_cast<uInt>(name.size()));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(t.data()),
                static_cast<uInt>(t.size() * sizeof(float)));
  }
  return static_cast<std::uint32_t>(crc);
}

/// Copies every parameter of a network into `out`, keyed by parameter name.
inline void export_network(const nn::Network& net, std::map<std::string, Tensor>& out) {
  for (const auto* p : net.parameters()) out[p->name] = p->value;
}

/// Loads every parameter of `net` from `params`; missing names or shape
/// differences are errors.
inline void import_network(nn::Network& net, const std::map<std::string, Tensor>& params) {
  for (auto* p : net.parameters()) {
    auto it = params.find(p->name);
    if (it == params.end()) throw IoError("checkpoint lacks parameter '" + p->name + "'");
    if (it->second.shape() != p->value.shape()) {
      throw IoError("checkpoint parameter '" + p->name + "' has shape " +
                    it->second.shape().str() + ", network expects " + p->value.shape().str());
    }
    p->value = it->second;
  }
}

/// Adam moments stored as "<prefix>.m/<param>" and "<prefix>.v/<param>"
/// tensors; the step count goes into the metrics map as "<prefix>.steps".
inline void export_optimizer(const nn::Adam& opt, const nn::Network& net,
                             const std::string& prefix, Checkpoint& ckpt) {
  for (const auto* p : net.parameters()) {
    auto it = opt.state().find(p->name);
    if (it == opt.state().end()) continue;
    ckpt.parameters[prefix + ".m/" + p->name] = Tensor(p->value.shape(), it->second.first);
    ckpt.parameters[prefix + ".v/" + p->name] = Tensor(p->value.shape(), it->second.second);
  }
  ckpt.metrics[prefix + ".steps"] = static_cast<double>(opt.steps());
}

inline void import_optimizer(nn::Adam& opt, const nn::Network& net, const std::string& prefix,
                             const Checkpoint& ckpt) {
  std::map<std::string, std::pair<std::vector<float>, std::vector<float>>> state;
  for (const auto* p : net.parameters()) {
    auto m = ckpt.parameters.find(prefix + ".m/" + p->name);
    auto v = ckpt.parameters.find(prefix + ".v/" + p->name);
    if (m == ckpt.parameters.end() || v == ckpt.parameters.end()) continue;
    state[p->name] = {m->second.storage(), v->second.storage()};
  }
  auto steps = ckpt.metrics.find(prefix + ".steps");
  opt.restore(steps == ckpt.metrics.end() ? 0 : static_cast<std::int64_t>(steps->second),
              std::move(state));
}

}  // namespace prunegan
