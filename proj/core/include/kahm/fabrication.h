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

#ifndef KAHM_FABRICATION_H_
#define KAHM_FABRICATION_H_

#include <string>
#include <utility>
#include <vector>

#include "kahm/dataset.h"
#include "kahm/error.h"
#include "kahm/kahm.h"
#include "kahm/privacy.h"

namespace kahm {

// Sum over the training rows of ||y^i - A(y^i)||.
double ModelingError(const KahmModel& model);
// Fits A_{Y,n} first; rows must be distinct.
double ModelingError(const Matrix& data, int subspace_dim);

// One smoother step: row i of the result is Y^T (K + lambda* I)^-1 kappa(P y^i),
// the KAHM image of y^i scaled by its membership sum.
Matrix SmoothStep(const KahmModel& model);
Matrix SmoothStep(const Matrix& current, int subspace_dim);

// iterates[m] is the m-th smoother iterate, models[m] the KAHM fitted on it
// and errors[m] its modeling error. Smooth(Y, n, M) returns M iterates, so
// M = 1 leaves the input unchanged.
struct SmootherTrace {
  std::vector<Matrix> iterates;
  std::vector<KahmModel> models;
  std::vector<double> errors;
};
SmootherTrace Smooth(const Matrix& noisy, int subspace_dim, int steps);

struct FabricationResult {
  Matrix fabricated;
  int m_tilde = 1;
  double original_error = 0.0;
  double achieved_error = 0.0;
  std::vector<double> error_trace;  // err(0), ..., err(m_tilde - 1)
};

// Raised when the error budget is still unmet after max_steps iterates.
class BudgetExceededError : public Error {
 public:
  BudgetExceededError(const std::string& what, std::vector<double> error_trace)
      : Error(what), error_trace_(std::move(error_trace)) {}
  const std::vector<double>& error_trace() const { return error_trace_; }

 private:
  std::vector<double> error_trace_;
};

inline constexpr int kDefaultMaxSteps = 256;

// Smooths the privatized matrix until its modeling error drops to `budget`
// (the error of the original data, passed in as a number only) and returns
// the KAHM reconstruction of the final iterate.
FabricationResult Fabricate(const Matrix& noisy, int subspace_dim, double budget,
                            int max_steps = kDefaultMaxSteps);

struct BigFabricationResult {
  Matrix fabricated;  // subsets concatenated in cluster order
  Partition partition;
  std::vector<FabricationResult> subsets;
};

// Large-data pipeline: split the distinct rows into ceil(N / 1000) k-means
// subsets; per subset take the budget from the original rows, privatize and
// fabricate. Subset s draws its noise with DeriveSeed(spec.seed, "subset", s).
BigFabricationResult FabricateBig(const Matrix& data, int subspace_dim, const PrivacySpec& spec,
                                  int max_steps = kDefaultMaxSteps);

}  // namespace kahm

#endif  // KAHM_FABRICATION_H_
