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

#include "kahm/lsdd.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "kahm/error.h"
#include "kahm/parallel.h"
#include "kahm/random.h"

namespace kahm {
namespace {

constexpr int kMaxCenters = 300;
constexpr int kFolds = 5;
constexpr std::array<double, 5> kSigmaFactors = {0.25, 0.5, 1.0, 2.0, 4.0};
constexpr std::array<double, 4> kLambdas = {1e-3, 1e-2, 1e-1, 1.0};

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Per-fold sums of the basis functions over one sample.
struct FoldSums {
  MatrixXd sums;  // centers x folds
  std::array<double, kFolds> counts{};
};

FoldSums BasisSums(std::span<const double> x, const VectorXd& centers, double sigma) {
  FoldSums out;
  out.sums = MatrixXd::Zero(centers.size(), kFolds);
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const int fold = static_cast<int>(i % kFolds);
    out.sums.col(fold).array() += (-(centers.array() - x[i]).square() * inv).exp();
    out.counts[static_cast<std::size_t>(fold)] += 1.0;
  }
  return out;
}

struct SigmaScore {
  double score = std::numeric_limits<double>::infinity();
  double lambda = 0.0;
};

double Quadratic(const VectorXd& theta, const VectorXd& eigvals, const MatrixXd& eigvecs) {
  const VectorXd rotated = eigvecs.transpose() * theta;
  return rotated.dot(eigvals.asDiagonal() * rotated);
}

}  // namespace

LsddResult Lsdd(std::span<const double> a, std::span<const double> b, std::uint64_t seed) {
  if (a.empty() || b.empty()) throw Error("density difference needs two non-empty samples");
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  for (double v : pooled) {
    if (!std::isfinite(v)) throw Error("density difference samples must be finite");
  }
  std::sort(pooled.begin(), pooled.end());
  LsddResult result;
  if (pooled.front() == pooled.back()) return result;

  std::vector<std::size_t> picks(pooled.size());
  for (std::size_t i = 0; i < picks.size(); ++i) picks[i] = i;
  if (picks.size() > static_cast<std::size_t>(kMaxCenters)) {
    Rng rng(seed);
    for (std::size_t i = 0; i < static_cast<std::size_t>(kMaxCenters); ++i) {
      std::swap(picks[i], picks[i + rng.Index(picks.size() - i)]);
    }
    picks.resize(kMaxCenters);
    std::sort(picks.begin(), picks.end());
  }
  const auto nc = static_cast<Eigen::Index>(picks.size());
  VectorXd centers(nc);
  for (Eigen::Index i = 0; i < nc; ++i) centers(i) = pooled[picks[static_cast<std::size_t>(i)]];

  std::vector<double> gaps;
  gaps.reserve(static_cast<std::size_t>(nc * (nc - 1) / 2));
  for (Eigen::Index i = 0; i < nc; ++i) {
    for (Eigen::Index j = i + 1; j < nc; ++j) gaps.push_back(std::abs(centers(i) - centers(j)));
  }
  auto mid = gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2);
  std::nth_element(gaps.begin(), mid, gaps.end());
  double median = gaps.empty() ? 0.0 : *mid;
  if (!(median > 0.0)) median = (pooled.back() - pooled.front()) / 2.0;

  struct Prepared {
    double sigma;
    VectorXd eigvals;
    MatrixXd eigvecs;
    FoldSums sa, sb;
  };
  std::vector<Prepared> prepared(kSigmaFactors.size());
  std::vector<SigmaScore> scores(kSigmaFactors.size());
  ParallelFor(kSigmaFactors.size(), [&](std::size_t k) {
    Prepared& p = prepared[k];
    p.sigma = kSigmaFactors[k] * median;
    MatrixXd h_mat(nc, nc);
    const double scale = std::sqrt(std::numbers::pi) * p.sigma;
    for (Eigen::Index i = 0; i < nc; ++i) {
      for (Eigen::Index j = 0; j < nc; ++j) {
        const double diff = centers(i) - centers(j);
        h_mat(i, j) = scale * std::exp(-diff * diff / (4.0 * p.sigma * p.sigma));
      }
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(h_mat);
    p.eigvals = eig.eigenvalues().cwiseMax(0.0);
    p.eigvecs = eig.eigenvectors();
    p.sa = BasisSums(a, centers, p.sigma);
    p.sb = BasisSums(b, centers, p.sigma);

    const VectorXd total_a = p.sa.sums.rowwise().sum();
    const VectorXd total_b = p.sb.sums.rowwise().sum();
    const double count_a = static_cast<double>(a.size());
    const double count_b = static_cast<double>(b.size());
    for (double lambda : kLambdas) {
      double score = 0.0;
      int used = 0;
      for (int f = 0; f < kFolds; ++f) {
        const double in_a = p.sa.counts[static_cast<std::size_t>(f)];
        const double in_b = p.sb.counts[static_cast<std::size_t>(f)];
        if (in_a == 0.0 || in_b == 0.0 || in_a == count_a || in_b == count_b) continue;
        const VectorXd h_train = (total_a - p.sa.sums.col(f)) / (count_a - in_a) -
                                 (total_b - p.sb.sums.col(f)) / (count_b - in_b);
        const VectorXd h_test = p.sa.sums.col(f) / in_a - p.sb.sums.col(f) / in_b;
        const VectorXd rotated = p.eigvecs.transpose() * h_train;
        const VectorXd theta =
            p.eigvecs * (rotated.array() / (p.eigvals.array() + lambda)).matrix();
        score += Quadratic(theta, p.eigvals, p.eigvecs) - 2.0 * theta.dot(h_test);
        ++used;
      }
      if (used == 0) continue;
      score /= used;
      if (score < scores[k].score) scores[k] = {score, lambda};
    }
  });

  // Grid order decides ties; without usable folds fall back to the median
  // width and a moderate ridge.
  std::size_t best = 2;
  double lambda = 1e-1;
  double best_score = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < scores.size(); ++k) {
    if (scores[k].score < best_score) {
      best_score = scores[k].score;
      best = k;
      lambda = scores[k].lambda;
    }
  }
  const Prepared& p = prepared[best];
  const VectorXd h = p.sa.sums.rowwise().sum() / static_cast<double>(a.size()) -
                     p.sb.sums.rowwise().sum() / static_cast<double>(b.size());
  const VectorXd rotated = p.eigvecs.transpose() * h;
  const VectorXd theta = p.eigvecs * (rotated.array() / (p.eigvals.array() + lambda)).matrix();
  result.raw = 2.0 * h.dot(theta) - Quadratic(theta, p.eigvals, p.eigvecs);
  result.estimate = std::max(result.raw, 0.0);
  result.sigma = p.sigma;
  result.lambda = lambda;
  result.centers = static_cast<int>(nc);
  return result;
}

}  // namespace kahm
