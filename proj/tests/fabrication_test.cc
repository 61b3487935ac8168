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

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "kahm/error.h"
#include "kahm/fabrication.h"
#include "kahm/kahm.h"
#include "kahm/privacy.h"
#include "test_support.h"

namespace kahm {
namespace {

// Data {0, 1} in one dimension: theta = 1/2, K = [[1, 1/e], [1/e, 1]],
// tau = 1, and the fixed point solved by bisection on the 2x2 closed form.
struct TwoPoint {
  Matrix y = (Matrix(2, 1) << 0.0, 1.0).finished();
  double lambda = 0.0;
  Matrix h;  // (K + lambda I)^-1 K
};

TwoPoint SolveTwoPoint() {
  TwoPoint tp;
  const double k = std::exp(-1.0);
  const double tau = 1.0;
  // (I + K/s)^-1 applied to (0, 1), with s = e + tau.
  const auto map = [&](double e) {
    const double s = e + tau;
    const double a = 1.0 + 1.0 / s, b = k / s;
    const double det = a * a - b * b;
    const double r0 = -b / det, r1 = a / det;
    return 0.5 * (r0 * r0 + r1 * r1);
  };
  double lo = 0.0, hi = 0.5;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (map(mid) > mid ? lo : hi) = mid;
  }
  tp.lambda = 0.5 * (lo + hi) + tau;
  const double a = 1.0 + tp.lambda, det = a * a - k * k;
  Matrix inv(2, 2);
  inv << a / det, -k / det, -k / det, a / det;
  Matrix kernel(2, 2);
  kernel << 1.0, k, k, 1.0;
  tp.h = inv * kernel;
  return tp;
}

TEST(ModelingError, TwoPointHandOracle) {
  const TwoPoint tp = SolveTwoPoint();
  const KahmModel model = KahmModel::Fit(tp.y, 1);
  EXPECT_NEAR(model.lambda_star(), tp.lambda, 1e-10);
  double r = 0.0;
  for (int i = 0; i < 2; ++i) {
    const Vector w = tp.h.col(i);  // symmetric H, column i is (K + lambda I)^-1 kappa(y^i)
    r += std::abs(tp.y(i, 0) - tp.y.col(0).dot(w) / w.sum());
  }
  EXPECT_NEAR(ModelingError(tp.y, 1), r, 1e-10);
  EXPECT_EQ(ModelingError(tp.y, 1), ModelingError(model));
}

TEST(ModelingError, NonNegativeAndDeterministic) {
  Rng rng(71);
  const Matrix data = testing::UniformMatrix(50, 3, rng);
  const double r = ModelingError(data, 2);
  EXPECT_GE(r, 0.0);
  EXPECT_EQ(r, ModelingError(data, 2));
}

TEST(SmoothStep, TwoPointHandOracle) {
  const TwoPoint tp = SolveTwoPoint();
  EXPECT_LT(testing::RelativeError(SmoothStep(tp.y, 1), tp.h * tp.y), 1e-10);
}

TEST(SmoothStep, MatrixIdentityAndContractions) {
  Rng rng(72);
  for (int t = 0; t < 10; ++t) {
    const int p = 2 + static_cast<int>(rng.Index(4));
    const Eigen::Index n_rows = 10 + rng.Index(20);
    const Matrix noisy =
        PrivatizeMatrix(testing::UniformMatrix(n_rows, p, rng), {4.0, 1e-5, 2.0, rng.Next()});
    const SmootherTrace trace = Smooth(noisy, 1 + static_cast<int>(rng.Index(p)), 4);
    for (std::size_t m = 0; m + 1 < trace.iterates.size(); ++m) {
      const KahmModel& model = trace.models[m];
      const Matrix kernel = model.TrainingKernel();
      Matrix shifted = kernel;
      shifted.diagonal().array() += model.lambda_star();
      const Matrix h = shifted.llt().solve(kernel);
      EXPECT_LT(testing::RelativeError(trace.iterates[m + 1], h * trace.iterates[m]), 1e-10);
      EXPECT_LT(SpectralNorm(h), 1.0);
      EXPECT_LE(trace.iterates[m + 1].norm(), SpectralNorm(h) * trace.iterates[m].norm() * (1 + 1e-12));
      // Membership sums of training rows lie in (0, sqrt(N)).
      const Eigen::RowVectorXd sums = model.MembershipMatrix(trace.iterates[m]).colwise().sum();
      EXPECT_GT(sums.minCoeff(), 0.0);
      EXPECT_LT(sums.maxCoeff(), std::sqrt(static_cast<double>(n_rows)));
    }
  }
}

// ||I - H|| = lambda / (lambda + mu_min) sits within rounding of 1 once K is
// nearly singular, so the strict gap is checked on well-spread points.
TEST(SmoothStep, ComplementContractsOnWellConditionedKernels) {
  Rng rng(85);
  for (int t = 0; t < 10; ++t) {
    const Eigen::Index n_rows = 4 + rng.Index(5);
    const Matrix noisy =
        PrivatizeMatrix(testing::UniformMatrix(n_rows, 3, rng, -3, 3), {4.0, 1e-5, 2.0, rng.Next()});
    const SmootherTrace trace = Smooth(noisy, 3, 3);
    for (std::size_t m = 0; m + 1 < trace.iterates.size(); ++m) {
      const KahmModel& model = trace.models[m];
      const Matrix kernel = model.TrainingKernel();
      Matrix shifted = kernel;
      shifted.diagonal().array() += model.lambda_star();
      const Matrix h = shifted.llt().solve(kernel);
      const double mu_min = Eigen::SelfAdjointEigenSolver<Matrix>(kernel).eigenvalues().minCoeff();
      ASSERT_GT(mu_min, 1e-8);
      const double complement = SpectralNorm(Matrix::Identity(n_rows, n_rows) - h);
      EXPECT_LT(complement, 1.0);
      EXPECT_NEAR(complement, model.lambda_star() / (model.lambda_star() + mu_min), 1e-10);
    }
  }
}

TEST(Smooth, SingleIterateIsIdentity) {
  Rng rng(73);
  const Matrix data = testing::UniformMatrix(12, 2, rng);
  const SmootherTrace trace = Smooth(data, 1, 1);
  ASSERT_EQ(trace.iterates.size(), 1u);
  EXPECT_EQ(trace.iterates[0], data);
  EXPECT_EQ(trace.errors.size(), 1u);
  EXPECT_THROW(Smooth(data, 1, 0), Error);
}

TEST(Smooth, ErrorsDecayAndIteratesShrink) {
  const LabeledDataset blobs = testing::Blobs(50, 0.15, 74);
  const Matrix noisy = PrivatizeMatrix(blobs.data, {2.0, 1e-5, 2.0, 75});
  const SmootherTrace trace = Smooth(noisy, 2, 51);
  EXPECT_LT(trace.errors[50], trace.errors[5]);
  EXPECT_LT(trace.errors[5], trace.errors[1]);
  for (std::size_t m = 1; m < trace.iterates.size(); ++m) {
    EXPECT_LE(trace.iterates[m].norm(), trace.iterates[m - 1].norm());
  }
}

TEST(Fabricate, NoiselessDataMeetsBudgetImmediately) {
  const LabeledDataset blobs = testing::Blobs(30, 0.15, 76);
  const Matrix same = PrivatizeMatrix(blobs.data, {1.0, 1.0 - 1e-12, 2.0, 1});
  ASSERT_EQ(same, blobs.data);
  const KahmModel model = KahmModel::Fit(blobs.data, 2);
  const FabricationResult result = Fabricate(same, 2, ModelingError(model));
  EXPECT_EQ(result.m_tilde, 1);
  EXPECT_EQ(result.fabricated, model.EvaluateRows(blobs.data).images);
}

TEST(Fabricate, StopsAtFirstIterateWithinBudget) {
  const LabeledDataset blobs = testing::Blobs(60, 0.15, 77);
  const double budget = ModelingError(blobs.data, 2);
  for (double epsilon : {1.0, 4.0, 16.0}) {
    const Matrix noisy = PrivatizeMatrix(blobs.data, {epsilon, 1e-5, 2.0, 78});
    const FabricationResult result = Fabricate(noisy, 2, budget);
    EXPECT_GE(result.m_tilde, 1);
    EXPECT_LE(result.achieved_error, budget);
    ASSERT_EQ(result.error_trace.size(), static_cast<std::size_t>(result.m_tilde));
    for (int m = 0; m + 1 < result.m_tilde; ++m) EXPECT_GT(result.error_trace[static_cast<std::size_t>(m)], budget);
    EXPECT_EQ(result.fabricated.rows(), noisy.rows());
  }
}

TEST(Fabricate, BudgetFailureCarriesTrace) {
  const LabeledDataset blobs = testing::Blobs(20, 0.15, 79);
  const Matrix noisy = PrivatizeMatrix(blobs.data, {1.0, 1e-5, 2.0, 80});
  try {
    Fabricate(noisy, 2, 0.0, 3);
    FAIL() << "expected the budget to be exceeded";
  } catch (const BudgetExceededError& e) {
    EXPECT_EQ(e.error_trace().size(), 3u);
  }
}

TEST(FabricateBig, SmallDataIsOneFabrication) {
  const LabeledDataset blobs = testing::Blobs(40, 0.15, 81);
  const PrivacySpec spec{8.0, 1e-5, 2.0, 82};
  const BigFabricationResult big = FabricateBig(blobs.data, 2, spec);
  ASSERT_EQ(big.subsets.size(), 1u);
  PrivacySpec local = spec;
  local.seed = DeriveSeed(spec.seed, "subset", 0);
  const FabricationResult single =
      Fabricate(PrivatizeMatrix(blobs.data, local), 2, ModelingError(blobs.data, 2));
  EXPECT_EQ(big.fabricated, single.fabricated);
  EXPECT_EQ(big.subsets[0].m_tilde, single.m_tilde);
}

TEST(FabricateBig, SplitsLargeDataAndMeetsEachBudget) {
  Rng rng(83);
  const Matrix data = testing::UniformMatrix(2500, 2, rng);
  const BigFabricationResult big = FabricateBig(data, 1, {16.0, 1e-5, 2.0, 84});
  EXPECT_EQ(big.subsets.size(), 3u);
  EXPECT_EQ(big.fabricated.rows(), 2500);
  for (const FabricationResult& s : big.subsets) EXPECT_LE(s.achieved_error, s.original_error);
}

}  // namespace
}  // namespace kahm
