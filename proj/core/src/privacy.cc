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

#include "kahm/privacy.h"

#include <cmath>
#include <string>

#include "kahm/error.h"
#include "kahm/parallel.h"

namespace kahm {

void PrivacySpec::Validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw Error("epsilon must be positive, got " + std::to_string(epsilon));
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw Error("delta must lie in (0, 1), got " + std::to_string(delta));
  }
  if (!(d > 0.0) || !std::isfinite(d)) throw Error("d must be positive, got " + std::to_string(d));
}

double InverseCdf(double t, const PrivacySpec& spec) {
  if (!(t > 0.0 && t < 1.0)) throw Error("inverse CDF argument must lie in (0, 1)");
  const double mass = 1.0 - spec.delta;
  if (t < 0.5 * mass) return spec.Scale() * std::log(2.0 * t / mass);
  if (t > 0.5 * (1.0 + spec.delta)) return -spec.Scale() * std::log(2.0 * (1.0 - t) / mass);
  return 0.0;
}

double NoiseCdf(double x, const PrivacySpec& spec) {
  const double mass = 1.0 - spec.delta;
  if (x < 0.0) return 0.5 * mass * std::exp(x / spec.Scale());
  return 1.0 - 0.5 * mass * std::exp(-x / spec.Scale());
}

NoiseSampler::NoiseSampler(const PrivacySpec& spec, std::uint64_t seed) : spec_(spec), rng_(seed) {
  spec_.Validate();
}

std::vector<double> SampleNoise(const PrivacySpec& spec, std::size_t count) {
  NoiseSampler sampler(spec, spec.seed);
  std::vector<double> out(count);
  for (double& v : out) v = sampler();
  return out;
}

Matrix PrivatizeMatrix(const Matrix& data, const PrivacySpec& spec) {
  spec.Validate();
  Matrix out = data;
  ParallelFor(static_cast<std::size_t>(data.rows()), [&](std::size_t i) {
    NoiseSampler sampler(spec, DeriveSeed(spec.seed, "privatize", i));
    const auto r = static_cast<Eigen::Index>(i);
    for (Eigen::Index j = 0; j < data.cols(); ++j) out(r, j) += sampler();
  });
  return out;
}

}  // namespace kahm
