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

#include "kahm/random.h"

#include <cmath>
#include <numbers>

#include "kahm/error.h"

namespace kahm {

ParseError::ParseError(const std::string& message, std::size_t line,
                       std::size_t column)
    : Error(message), line_(line), column_(column) {}

std::uint64_t Rng::Index(std::uint64_t n) {
  if (n == 0) throw Error("Rng::Index: empty range");
  // Largest multiple of n representable, so the accepted range is unbiased.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

double Rng::Normal() {
  const double u1 = UniformOpen();
  const double u2 = UniformOpen();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t MixSeed(std::uint64_t value) {
  value += 0x9e3779b97f4a7c15ULL;
  value = (value ^ (value >> 30)) * 0xbf58476d1ce4e5b9ULL;
  value = (value ^ (value >> 27)) * 0x94d049bb133111ebULL;
  return value ^ (value >> 31);
}

std::uint64_t DeriveSeed(std::uint64_t master, std::string_view stage) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char ch : stage) {
    hash ^= ch;
    hash *= 0x100000001b3ULL;
  }
  return MixSeed(MixSeed(master) ^ hash);
}

std::uint64_t DeriveSeed(std::uint64_t master, std::string_view stage,
                         std::uint64_t index) {
  return MixSeed(DeriveSeed(master, stage) ^ MixSeed(index));
}

}  // namespace kahm
