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

#ifndef KAHM_LSDD_H_
#define KAHM_LSDD_H_

#include <cstdint>
#include <span>

namespace kahm {

struct LsddResult {
  double estimate = 0.0;  // max(raw, 0)
  double raw = 0.0;
  double sigma = 0.0;
  double lambda = 0.0;
  int centers = 0;
};

// Least-squares density-difference estimate of the squared L2 distance
// between the densities behind two scalar samples.
//
// g(r) = sum_b theta_b exp(-(r - c_b)^2 / (2 sigma^2)) is fitted to f_a - f_b
// with centers c_b drawn (with `seed`) from the sorted pooled sample, at most
// 300 of them. theta = (H + lambda I)^-1 h where H is the Gram matrix of the
// basis in L2 and h the difference of basis means over a and b; the estimate
// is 2 h^T theta - theta^T H theta. sigma (a multiple of the median pairwise
// center distance in {0.25, 0.5, 1, 2, 4}) and lambda (in {1e-3, 1e-2, 1e-1,
// 1}) are chosen by 5-fold cross-validation, fold of sample i being i mod 5.
// Swapping a and b gives the same estimate.
LsddResult Lsdd(std::span<const double> a, std::span<const double> b, std::uint64_t seed);

}  // namespace kahm

#endif  // KAHM_LSDD_H_
