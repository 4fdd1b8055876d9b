// src/nn/checkpoint.cc

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "cefa/nn/checkpoint.h"

#include <cstring>
#include <fstream>
#include <unordered_map>

namespace cefa::nn {

namespace {

constexpr char kMagic[8] = {'C', 'E', 'F', 'A', 'C', 'K', 'P', '1'};

void WriteU64(std::ofstream& out, std::uint64_t v) {
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(buf, 8);
}

std::uint64_t ReadU64(std::ifstream& in) {
  char buf[8];
  in.read(buf, 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[i]))
         << (8 * i);
  return v;
}

}  // namespace

void SaveCheckpoint(const std::string& path, const ParamList& params,
                    std::uint64_t fingerprint) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw CheckpointError("cannot open checkpoint for writing: " + path);
  out.write(kMagic, 8);
  WriteU64(out, fingerprint);
  WriteU64(out, params.size());
  for (const Parameter* p : params) {
    WriteU64(out, p->name.size());
    out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    WriteU64(out, static_cast<std::uint64_t>(p->value.rows()));
    WriteU64(out, static_cast<std::uint64_t>(p->value.cols()));
    out.write(reinterpret_cast<const char*>(p->value.data()),
              static_cast<std::streamsize>(sizeof(double) * p->value.size()));
  }
  if (!out) throw CheckpointError("write failed: " + path);
}

void LoadCheckpoint(const std::string& path, const ParamList& params,
                    std::uint64_t expected_fingerprint) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0)
    throw CheckpointError("not a checkpoint file: " + path);
  std::uint64_t fingerprint = ReadU64(in);
  if (fingerprint != expected_fingerprint)
    throw CheckpointError(
        "checkpoint was written under a different architecture "
        "(fingerprint " + std::to_string(fingerprint) + ", expected " +
        std::to_string(expected_fingerprint) + "): " + path);

  std::unordered_map<std::string, Parameter*> by_name;
  for (Parameter* p : params) by_name[p->name] = p;

  std::uint64_t count = ReadU64(in);
  if (count != params.size())
    throw CheckpointError("checkpoint holds " + std::to_string(count) +
                          " tensors, model has " +
                          std::to_string(params.size()) + ": " + path);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::uint64_t name_len = ReadU64(in);
    std::string name(name_len, '\0');
    in.read(name.data(), static_cast<std::streamsize>(name_len));
    auto rows = static_cast<Eigen::Index>(ReadU64(in));
    auto cols = static_cast<Eigen::Index>(ReadU64(in));
    auto it = by_name.find(name);
    if (it == by_name.end())
      throw CheckpointError("checkpoint tensor `" + name +
                            "` has no counterpart in the model: " + path);
    Parameter* p = it->second;
    if (p->value.rows() != rows || p->value.cols() != cols)
      throw CheckpointError(
          "shape mismatch for `" + name + "`: checkpoint " +
          std::to_string(rows) + "x" + std::to_string(cols) + ", model " +
          std::to_string(p->value.rows()) + "x" +
          std::to_string(p->value.cols()) + ": " + path);
    in.read(reinterpret_cast<char*>(p->value.data()),
            static_cast<std::streamsize>(sizeof(double) * p->value.size()));
    if (!in) throw CheckpointError("truncated checkpoint: " + path);
  }
}

std::uint64_t ParameterChecksum(const ParamList& params) {
  std::uint64_t h = 1469598103934665603ull;  // FNV offset basis
  auto mix = [&h](const void* data, size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ull;  // FNV prime
    }
  };
  for (const Parameter* p : params) {
    mix(p->name.data(), p->name.size());
    mix(p->value.data(), sizeof(double) * p->value.size());
  }
  return h;
}

}  // namespace cefa::nn
