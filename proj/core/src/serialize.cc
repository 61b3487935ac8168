// Copyright 2026 The KAHM Authors
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

#include "kahm/serialize.h"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <utility>
#include <vector>

#include "kahm/error.h"

namespace kahm {
namespace {

constexpr std::array<char, 4> kMagic = {'K', 'A', 'H', 'M'};
// Guards against absurd sizes in corrupt files.
constexpr std::uint64_t kMaxCount = std::uint64_t{1} << 40;

template <typename T>
void PutRaw(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<unsigned char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <typename T>
T GetRaw(std::istream& in) {
  std::array<unsigned char, sizeof(T)> bytes;
  if (!in.read(reinterpret_cast<char*>(bytes.data()), sizeof(T))) {
    throw Error("model stream is truncated");
  }
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

void PutU32(std::ostream& out, std::uint32_t v) { PutRaw(out, v); }
void PutU64(std::ostream& out, std::uint64_t v) { PutRaw(out, v); }
void PutF64(std::ostream& out, double v) { PutRaw(out, v); }
std::uint32_t GetU32(std::istream& in) { return GetRaw<std::uint32_t>(in); }
std::uint64_t GetU64(std::istream& in) { return GetRaw<std::uint64_t>(in); }
double GetF64(std::istream& in) { return GetRaw<double>(in); }

std::uint64_t GetCount(std::istream& in, const char* what) {
  const std::uint64_t n = GetU64(in);
  if (n > kMaxCount) throw Error(std::string("implausible ") + what + " in model stream");
  return n;
}

void PutMatrix(std::ostream& out, const Matrix& m) {
  PutU64(out, static_cast<std::uint64_t>(m.rows()));
  PutU64(out, static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) PutF64(out, m(r, c));
  }
}

Matrix GetMatrix(std::istream& in) {
  const std::uint64_t rows = GetCount(in, "matrix size");
  const std::uint64_t cols = GetCount(in, "matrix size");
  if (rows * cols > kMaxCount) throw Error("implausible matrix size in model stream");
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = GetF64(in);
  }
  return m;
}

void PutHeader(std::ostream& out, RecordKind kind) {
  out.write(kMagic.data(), kMagic.size());
  PutU32(out, kFormatVersion);
  PutU32(out, static_cast<std::uint32_t>(kind));
}

void ExpectHeader(std::istream& in, RecordKind kind) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size())) throw Error("model stream is truncated");
  if (magic != kMagic) throw Error("not a KAHM model (bad magic)");
  const std::uint32_t version = GetU32(in);
  if (version != kFormatVersion) {
    throw Error("unsupported model format version " + std::to_string(version));
  }
  const std::uint32_t got = GetU32(in);
  if (got != static_cast<std::uint32_t>(kind)) {
    throw Error("unexpected record kind " + std::to_string(got) + ", wanted " +
                std::to_string(static_cast<std::uint32_t>(kind)));
  }
}

void ExpectIndex(std::istream& in, std::uint64_t want) {
  if (GetU64(in) != want) throw Error("model records out of order");
}

}  // namespace

void WriteKahm(std::ostream& out, const KahmModel& model) {
  PutHeader(out, RecordKind::kKahm);
  PutMatrix(out, model.data());
  PutMatrix(out, model.encoding());
  PutMatrix(out, model.shape().theta());
  PutF64(out, model.lambda_star());
  PutU32(out, static_cast<std::uint32_t>(model.solve_kind()));
  PutMatrix(out, model.solve_operator());
  PutF64(out, model.mu_min());
  PutF64(out, model.mu_max());
}

KahmModel ReadKahm(std::istream& in) {
  ExpectHeader(in, RecordKind::kKahm);
  Matrix data = GetMatrix(in);
  Matrix encoding = GetMatrix(in);
  Matrix theta = GetMatrix(in);
  const double lambda = GetF64(in);
  const std::uint32_t kind = GetU32(in);
  if (kind > 1) throw Error("unknown solve kind " + std::to_string(kind));
  Matrix solve = GetMatrix(in);
  const double mu_min = GetF64(in);
  const double mu_max = GetF64(in);
  return KahmModel::FromParts(std::move(data), std::move(encoding), std::move(theta), lambda,
                              static_cast<KahmModel::SolveKind>(kind), std::move(solve), mu_min,
                              mu_max);
}

void WriteDeep(std::ostream& out, const DeepKahm& model) {
  PutHeader(out, RecordKind::kDeep);
  PutU64(out, model.layers().size());
  for (std::size_t l = 0; l < model.layers().size(); ++l) {
    PutU64(out, l);
    WriteKahm(out, model.layers()[l]);
  }
}

DeepKahm ReadDeep(std::istream& in) {
  ExpectHeader(in, RecordKind::kDeep);
  const std::uint64_t count = GetCount(in, "layer count");
  std::vector<KahmModel> layers;
  for (std::uint64_t l = 0; l < count; ++l) {
    ExpectIndex(in, l);
    layers.push_back(ReadKahm(in));
  }
  return DeepKahm::FromLayers(std::move(layers));
}

void WriteWide(std::ostream& out, const WideKahm& model) {
  PutHeader(out, RecordKind::kWide);
  PutU64(out, model.branches().size());
  const auto& assignments = model.partition().assignments;
  PutU64(out, assignments.size());
  for (int a : assignments) PutU64(out, static_cast<std::uint64_t>(a));
  for (std::size_t s = 0; s < model.branches().size(); ++s) {
    PutU64(out, s);
    WriteDeep(out, model.branches()[s]);
  }
}

WideKahm ReadWide(std::istream& in) {
  ExpectHeader(in, RecordKind::kWide);
  const std::uint64_t count = GetCount(in, "branch count");
  Partition partition;
  partition.num_clusters = static_cast<int>(count);
  const std::uint64_t rows = GetCount(in, "partition size");
  for (std::uint64_t i = 0; i < rows; ++i) {
    const std::uint64_t a = GetU64(in);
    if (a >= count) throw Error("cluster assignment out of range");
    partition.assignments.push_back(static_cast<int>(a));
  }
  std::vector<DeepKahm> branches;
  for (std::uint64_t s = 0; s < count; ++s) {
    ExpectIndex(in, s);
    branches.push_back(ReadDeep(in));
  }
  return WideKahm::FromParts(std::move(partition), std::move(branches));
}

void WriteClassifier(std::ostream& out, const ClassifierModel& model) {
  PutHeader(out, RecordKind::kClassifier);
  const auto count = static_cast<std::size_t>(model.num_classes());
  PutU64(out, count);
  const ClassifierConfig& config = model.config();
  PutU64(out, static_cast<std::uint64_t>(config.subspace_dim));
  PutU64(out, static_cast<std::uint64_t>(config.layers));
  PutU64(out, config.seed);
  for (std::size_t c = 0; c < count; ++c) {
    PutU64(out, static_cast<std::uint64_t>(c < config.branches.size() ? config.branches[c] : 0));
  }
  const Provenance& prov = model.provenance();
  PutU32(out, static_cast<std::uint32_t>(prov.kind));
  PutF64(out, prov.spec.epsilon);
  PutF64(out, prov.spec.delta);
  PutF64(out, prov.spec.d);
  PutU64(out, prov.spec.seed);
  PutU64(out, static_cast<std::uint64_t>(prov.max_steps));
  for (const std::string& name : model.class_names()) {
    PutU64(out, name.size());
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
  }
  for (std::size_t c = 0; c < count; ++c) {
    PutU64(out, c);
    WriteWide(out, model.classes()[c]);
  }
}

ClassifierModel ReadClassifier(std::istream& in) {
  ExpectHeader(in, RecordKind::kClassifier);
  const std::uint64_t count = GetCount(in, "class count");
  ClassifierConfig config;
  config.subspace_dim = static_cast<int>(GetCount(in, "subspace dimension"));
  config.layers = static_cast<int>(GetCount(in, "layer count"));
  config.seed = GetU64(in);
  for (std::uint64_t c = 0; c < count; ++c) {
    config.branches.push_back(static_cast<int>(GetCount(in, "branch count")));
  }
  Provenance prov;
  const std::uint32_t kind = GetU32(in);
  if (kind > 2) throw Error("unknown provenance kind " + std::to_string(kind));
  prov.kind = static_cast<Provenance::Kind>(kind);
  prov.spec.epsilon = GetF64(in);
  prov.spec.delta = GetF64(in);
  prov.spec.d = GetF64(in);
  prov.spec.seed = GetU64(in);
  prov.max_steps = static_cast<int>(GetCount(in, "step cap"));
  std::vector<std::string> names;
  for (std::uint64_t c = 0; c < count; ++c) {
    const std::uint64_t len = GetCount(in, "name length");
    std::string name(len, '\0');
    if (!in.read(name.data(), static_cast<std::streamsize>(len))) {
      throw Error("model stream is truncated");
    }
    names.push_back(std::move(name));
  }
  std::vector<WideKahm> classes;
  for (std::uint64_t c = 0; c < count; ++c) {
    ExpectIndex(in, c);
    classes.push_back(ReadWide(in));
  }
  return ClassifierModel::FromParts(std::move(classes), std::move(names), std::move(config), prov);
}

void SaveClassifier(const std::string& path, const ClassifierModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  WriteClassifier(out, model);
  if (!out.flush()) throw Error("failed writing " + path);
}

ClassifierModel LoadClassifier(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return ReadClassifier(in);
}

}  // namespace kahm
