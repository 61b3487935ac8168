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

#ifndef KAHM_RANDOM_H_
#define KAHM_RANDOM_H_

#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace kahm {

// Seeded generator with reproducible draws on every platform.
//
// The engine is std::mt19937_64, whose output sequence is pinned by the C++
// standard. The standard distributions are not pinned, so the conversions
// to uniform, integer and normal variates are written out here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t Next() { return engine_(); }

  // Uniform on the open interval (0, 1): 53 random bits, offset by half an
  // ulp so that neither endpoint is reachable.
  double UniformOpen() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Uniform on [0, n) by rejection; n must be positive.
  std::uint64_t Index(std::uint64_t n);

  // Standard normal via Box-Muller (one variate per call).
  double Normal();

  template <typename T>
  void Shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::swap(values[i - 1], values[Index(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// splitmix64 finalizer.
std::uint64_t MixSeed(std::uint64_t value);

// Derives a stage seed from a master seed and a stage name by stable hashing
// (FNV-1a of the name, mixed with the master through splitmix64).
std::uint64_t DeriveSeed(std::uint64_t master, std::string_view stage);
std::uint64_t DeriveSeed(std::uint64_t master, std::string_view stage,
                         std::uint64_t index);

}  // namespace kahm

#endif  // KAHM_RANDOM_H_
