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

#include "kahm/fabrication.h"

#include <optional>
#include <string>
#include <utility>

#include "kahm/compositions.h"
#include "kahm/parallel.h"
#include "kahm/random.h"

namespace kahm {
namespace {

// Smoother iterates need not stay pairwise distinct, so they skip the
// duplicate check of KahmModel::Fit.
KahmModel FitIterate(const Matrix& current, int subspace_dim) {
  return KahmModel::FitWithEncoding(current, PcaEncoding(current, subspace_dim));
}

Matrix Reconstruct(const KahmModel& model) {
  BatchImages batch = model.EvaluateRows(model.data());
  for (bool ok : batch.valid) {
    if (!ok) throw EvaluationError("membership sum vanished on a training row");
  }
  return std::move(batch.images);
}

}  // namespace

double ModelingError(const KahmModel& model) {
  return (model.data() - Reconstruct(model)).rowwise().norm().sum();
}

double ModelingError(const Matrix& data, int subspace_dim) {
  return ModelingError(KahmModel::Fit(data, subspace_dim));
}

Matrix SmoothStep(const KahmModel& model) {
  return model.MembershipMatrix(model.data()).transpose() * model.data();
}

Matrix SmoothStep(const Matrix& current, int subspace_dim) {
  return SmoothStep(FitIterate(current, subspace_dim));
}

SmootherTrace Smooth(const Matrix& noisy, int subspace_dim, int steps) {
  ValidateDataMatrix(noisy, "smoother input");
  if (steps < 1) throw Error("smoother needs at least one iterate");
  SmootherTrace trace;
  trace.iterates.push_back(noisy);
  for (int m = 0; m < steps; ++m) {
    trace.models.push_back(FitIterate(trace.iterates.back(), subspace_dim));
    trace.errors.push_back(ModelingError(trace.models.back()));
    if (m + 1 < steps) trace.iterates.push_back(SmoothStep(trace.models.back()));
  }
  return trace;
}

FabricationResult Fabricate(const Matrix& noisy, int subspace_dim, double budget,
                            int max_steps) {
  ValidateDataMatrix(noisy, "privatized data");
  if (max_steps < 1) throw Error("max_steps must be at least 1");
  if (!(budget >= 0.0)) throw Error("error budget must be non-negative");
  FabricationResult result;
  result.original_error = budget;
  Matrix current = noisy;
  for (int m = 1; m <= max_steps; ++m) {
    const KahmModel model = FitIterate(current, subspace_dim);
    const Matrix images = Reconstruct(model);
    const double err = (current - images).rowwise().norm().sum();
    result.error_trace.push_back(err);
    if (err <= budget) {
      result.fabricated = images;
      result.m_tilde = m;
      result.achieved_error = err;
      return result;
    }
    if (m < max_steps) current = SmoothStep(model);
  }
  const std::string message = "error budget " + std::to_string(budget) + " not met within " +
                              std::to_string(max_steps) + " smoother iterates (last error " +
                              std::to_string(result.error_trace.back()) + ")";
  throw BudgetExceededError(message, std::move(result.error_trace));
}

BigFabricationResult FabricateBig(const Matrix& data, int subspace_dim, const PrivacySpec& spec,
                                  int max_steps) {
  spec.Validate();
  ValidateDataMatrix(data, "data to fabricate");
  const Matrix distinct = DedupeRows(data);
  if (distinct.rows() < 2) throw Error("fabrication needs at least 2 distinct rows");
  BigFabricationResult out;
  out.partition = ClusterRows(distinct, DefaultBranchCount(static_cast<std::size_t>(distinct.rows())),
                              DeriveSeed(spec.seed, "subsets"));
  const auto count = static_cast<std::size_t>(out.partition.num_clusters);
  std::vector<std::optional<FabricationResult>> results(count);
  ParallelFor(count, [&](std::size_t s) {
    const Matrix subset = SelectRows(distinct, out.partition.Members(static_cast<int>(s)));
    try {
      const double budget = ModelingError(subset, subspace_dim);
      PrivacySpec local = spec;
      local.seed = DeriveSeed(spec.seed, "subset", s);
      results[s].emplace(Fabricate(PrivatizeMatrix(subset, local), subspace_dim, budget, max_steps));
    } catch (const BudgetExceededError& e) {
      throw BudgetExceededError("subset " + std::to_string(s) + ": " + e.what(), e.error_trace());
    } catch (const Error& e) {
      throw Error("subset " + std::to_string(s) + ": " + e.what());
    }
  });
  Eigen::Index rows = 0;
  for (const auto& r : results) rows += r->fabricated.rows();
  out.fabricated.resize(rows, data.cols());
  Eigen::Index offset = 0;
  for (auto& r : results) {
    out.fabricated.middleRows(offset, r->fabricated.rows()) = r->fabricated;
    offset += r->fabricated.rows();
    out.subsets.push_back(std::move(*r));
  }
  return out;
}

}  // namespace kahm
