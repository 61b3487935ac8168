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

#ifndef KAHM_PRIVACY_H_
#define KAHM_PRIVACY_H_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "kahm/dataset.h"
#include "kahm/random.h"

namespace kahm {

// (epsilon, delta)-differential privacy under d-adjacency: neighbouring data
// matrices differ in one entry by at most d.
struct PrivacySpec {
  double epsilon = 1.0;
  double delta = 1e-5;
  double d = 2.0;
  std::uint64_t seed = 0;

  // Throws unless epsilon > 0, 0 < delta < 1 and d > 0.
  void Validate() const;
  double Scale() const { return d / epsilon; }
};

// Quantile function of the optimal noise law: an atom of mass delta at zero
// plus (1 - delta) times a Laplace law of scale d / epsilon. t must lie in
// (0, 1); the closed middle interval [(1-delta)/2, (1+delta)/2] maps to 0.
double InverseCdf(double t, const PrivacySpec& spec);

// Distribution function of the same law (right-continuous at the atom).
double NoiseCdf(double x, const PrivacySpec& spec);

// Draws noise by inverse transform from the given generator.
class NoiseSampler {
 public:
  NoiseSampler(const PrivacySpec& spec, std::uint64_t seed);
  double operator()() { return InverseCdf(rng_.UniformOpen(), spec_); }

 private:
  PrivacySpec spec_;
  Rng rng_;
};

// `count` draws seeded by spec.seed.
std::vector<double> SampleNoise(const PrivacySpec& spec, std::size_t count);

// Adds independent noise to every entry. Row i draws from a generator seeded
// by DeriveSeed(spec.seed, "privatize", i), so the result does not depend on
// the thread count.
Matrix PrivatizeMatrix(const Matrix& data, const PrivacySpec& spec);

}  // namespace kahm

#endif  // KAHM_PRIVACY_H_
