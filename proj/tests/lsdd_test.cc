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

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "kahm/error.h"
#include "kahm/lsdd.h"
#include "kahm/random.h"

namespace kahm {
namespace {

std::vector<double> Normal(std::size_t count, double mean, double sd, Rng& rng) {
  std::vector<double> out(count);
  for (double& v : out) v = mean + sd * rng.Normal();
  return out;
}

// Squared L2 distance between N(m1, s1^2) and N(m2, s2^2).
double GaussianL2(double m1, double s1, double m2, double s2) {
  const auto cross = [](double ma, double sa, double mb, double sb) {
    const double v = sa * sa + sb * sb;
    return std::exp(-(ma - mb) * (ma - mb) / (2 * v)) / std::sqrt(2 * M_PI * v);
  };
  return cross(m1, s1, m1, s1) + cross(m2, s2, m2, s2) - 2 * cross(m1, s1, m2, s2);
}

TEST(Lsdd, ClosedFormShiftedNormals) {
  Rng rng(91);
  const auto a = Normal(2000, 0.0, 1.0, rng);
  const auto b = Normal(2000, 4.0, 1.0, rng);
  EXPECT_NEAR(GaussianL2(0, 1, 4, 1), (1 - std::exp(-4.0)) / std::sqrt(M_PI), 1e-14);
  EXPECT_NEAR(Lsdd(a, b, 1).estimate, GaussianL2(0, 1, 4, 1), 0.05);
}

TEST(Lsdd, ClosedFormDifferentWidths) {
  Rng rng(92);
  const auto a = Normal(3000, 0.0, 1.0, rng);
  const auto b = Normal(3000, 0.0, 2.0, rng);
  EXPECT_NEAR(Lsdd(a, b, 2).estimate, GaussianL2(0, 1, 0, 2), 0.03);
}

TEST(Lsdd, IdenticalSetsGiveZero) {
  Rng rng(93);
  const auto a = Normal(1000, 1.0, 0.5, rng);
  EXPECT_LT(std::abs(Lsdd(a, a, 3).estimate), 0.01);
}

TEST(Lsdd, SymmetricUnderSwap) {
  Rng rng(94);
  const auto a = Normal(700, 0.0, 1.0, rng);
  const auto b = Normal(500, 1.0, 1.5, rng);
  const LsddResult ab = Lsdd(a, b, 4);
  const LsddResult ba = Lsdd(b, a, 4);
  EXPECT_LE(std::abs(ab.estimate - ba.estimate), 1e-9);
  EXPECT_EQ(ab.sigma, ba.sigma);
  EXPECT_EQ(ab.lambda, ba.lambda);
}

TEST(Lsdd, ClampedAndBasisCapped) {
  Rng rng(95);
  for (int t = 0; t < 10; ++t) {
    const auto a = Normal(400, 0.0, 1.0, rng);
    const auto b = Normal(400, 0.0, 1.0, rng);
    const LsddResult r = Lsdd(a, b, t);
    EXPECT_GE(r.estimate, 0.0);
    EXPECT_EQ(r.estimate, std::max(r.raw, 0.0));
    EXPECT_LE(r.centers, 300);
  }
}

TEST(Lsdd, DegenerateAndEmptyInputs) {
  const std::vector<double> same(50, 2.5);
  EXPECT_EQ(Lsdd(same, same, 1).estimate, 0.0);
  EXPECT_THROW(Lsdd(std::vector<double>{}, same, 1), Error);
}

}  // namespace
}  // namespace kahm
