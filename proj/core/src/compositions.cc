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

#include "kahm/compositions.h"

#include <limits>
#include <string>
#include <utility>

#include "kahm/error.h"
#include "kahm/parallel.h"

namespace kahm {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Shared by the single and batch paths so both give identical numbers.
// layer_distances, when given, receives one row per query and one column
// per depth.
DeepBatch RunDeep(const std::vector<KahmModel>& layers, const Matrix& queries,
                  Matrix* layer_distances) {
  const Eigen::Index m = queries.rows();
  DeepBatch out;
  out.layer.assign(static_cast<std::size_t>(m), -1);
  out.distance = Vector::Constant(m, kInf);
  out.image = Matrix::Constant(m, queries.cols(), std::numeric_limits<double>::quiet_NaN());
  if (layer_distances != nullptr) {
    *layer_distances = Matrix::Constant(m, static_cast<Eigen::Index>(layers.size()), kInf);
  }
  Matrix current = queries;
  std::vector<bool> alive(static_cast<std::size_t>(m), true);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const BatchImages batch = layers[l].EvaluateRows(current);
    for (Eigen::Index r = 0; r < m; ++r) {
      const auto ru = static_cast<std::size_t>(r);
      if (!alive[ru]) continue;
      if (!batch.valid[ru]) {
        // Deeper compositions are undefined once a layer fails.
        alive[ru] = false;
        current.row(r) = queries.row(r);
        continue;
      }
      // Contiguous copies, so the norm sums in the same order as KahmModel::Distance.
      const Vector image = batch.images.row(r).transpose();
      const double d = (Vector(queries.row(r).transpose()) - image).norm();
      if (layer_distances != nullptr) (*layer_distances)(r, static_cast<Eigen::Index>(l)) = d;
      if (d < out.distance(r)) {
        out.distance(r) = d;
        out.layer[ru] = static_cast<int>(l);
        out.image.row(r) = image.transpose();
      }
      current.row(r) = image.transpose();
    }
  }
  return out;
}

}  // namespace

DeepKahm DeepKahm::Fit(const Matrix& data, int subspace_dim, int layers) {
  ValidateDataMatrix(data, "deep KAHM training data");
  if (layers < 1 || layers > subspace_dim) {
    throw Error("layer count " + std::to_string(layers) + " must lie in [1, " +
                std::to_string(subspace_dim) + "]");
  }
  if (data.rows() < 2) throw Error("a KAHM needs at least 2 training samples");
  if (DistinctRowIndices(data).size() != static_cast<std::size_t>(data.rows())) {
    throw Error("KAHM training data has duplicate rows; deduplicate before fitting");
  }
  // Principal directions are nested, so one decomposition serves all layers.
  const Matrix encoding = PcaEncoding(data, subspace_dim);
  std::vector<std::optional<KahmModel>> fitted(static_cast<std::size_t>(layers));
  ParallelFor(fitted.size(), [&](std::size_t l) {
    const auto dim = static_cast<Eigen::Index>(subspace_dim) - static_cast<Eigen::Index>(l);
    fitted[l].emplace(KahmModel::FitWithEncoding(data, encoding.topRows(dim)));
  });
  DeepKahm model;
  for (auto& layer : fitted) model.layers_.push_back(std::move(*layer));
  return model;
}

DeepKahm DeepKahm::FromLayers(std::vector<KahmModel> layers) {
  if (layers.empty()) throw Error("a deep KAHM needs at least one layer");
  for (std::size_t l = 1; l < layers.size(); ++l) {
    if (layers[l].dim() != layers[0].dim()) throw Error("deep KAHM layers disagree in dimension");
  }
  DeepKahm model;
  model.layers_ = std::move(layers);
  return model;
}

DeepEvaluation DeepKahm::Evaluate(const Vector& y) const {
  Matrix per_layer;
  const DeepBatch batch = RunDeep(layers_, y.transpose(), &per_layer);
  if (batch.layer[0] < 0) throw EvaluationError("evaluation point too far from data");
  DeepEvaluation out;
  out.layer = batch.layer[0];
  out.image = batch.image.row(0).transpose();
  out.distance = batch.distance(0);
  out.layer_distances.assign(per_layer.data(), per_layer.data() + per_layer.size());
  return out;
}

DeepBatch DeepKahm::EvaluateRows(const Matrix& queries) const {
  if (queries.cols() != dim()) throw Error("query dimension does not match the model");
  return RunDeep(layers_, queries, nullptr);
}

Partition ClusterRows(const Matrix& data, int clusters, std::uint64_t seed) {
  ValidateDataMatrix(data);
  Partition out;
  const auto n = static_cast<std::size_t>(data.rows());
  if (clusters < 1 || static_cast<std::size_t>(clusters) > n) {
    throw Error("cluster count " + std::to_string(clusters) + " must lie in [1, " +
                std::to_string(n) + "]");
  }
  out.assignments.assign(n, 0);
  out.num_clusters = 1;
  if (clusters == 1) return out;

  const KMeansResult km = KMeans(data, clusters, seed);
  std::vector<std::size_t> counts(static_cast<std::size_t>(clusters), 0);
  for (int a : km.partition.assignments) ++counts[static_cast<std::size_t>(a)];
  std::vector<int> renumber(static_cast<std::size_t>(clusters), -1);
  int kept = 0;
  for (int c = 0; c < clusters; ++c) {
    if (counts[static_cast<std::size_t>(c)] >= 2) renumber[static_cast<std::size_t>(c)] = kept++;
  }
  if (kept == 0) return out;
  for (std::size_t i = 0; i < n; ++i) {
    const int a = km.partition.assignments[i];
    if (renumber[static_cast<std::size_t>(a)] >= 0) {
      out.assignments[i] = renumber[static_cast<std::size_t>(a)];
      continue;
    }
    double best = kInf;
    int target = 0;
    for (int c = 0; c < clusters; ++c) {
      if (renumber[static_cast<std::size_t>(c)] < 0) continue;
      const double d = (data.row(static_cast<Eigen::Index>(i)) - km.centroids.row(c)).squaredNorm();
      if (d < best) {
        best = d;
        target = renumber[static_cast<std::size_t>(c)];
      }
    }
    out.assignments[i] = target;
  }
  out.num_clusters = kept;
  return out;
}

WideKahm WideKahm::Fit(const Matrix& data, int subspace_dim, int layers,
                       std::optional<int> branches, std::uint64_t seed) {
  ValidateDataMatrix(data, "wide KAHM training data");
  const Matrix distinct = DedupeRows(data);
  if (distinct.rows() < 2) throw Error("a KAHM needs at least 2 distinct training samples");
  const int count = branches.value_or(DefaultBranchCount(static_cast<std::size_t>(distinct.rows())));
  WideKahm model;
  model.partition_ = ClusterRows(distinct, count, seed);
  std::vector<std::optional<DeepKahm>> fitted(static_cast<std::size_t>(model.partition_.num_clusters));
  ParallelFor(fitted.size(), [&](std::size_t s) {
    const auto members = model.partition_.Members(static_cast<int>(s));
    fitted[s].emplace(DeepKahm::Fit(SelectRows(distinct, members), subspace_dim, layers));
  });
  for (auto& branch : fitted) model.branches_.push_back(std::move(*branch));
  return model;
}

WideKahm WideKahm::FromParts(Partition partition, std::vector<DeepKahm> branches) {
  if (branches.empty() || static_cast<int>(branches.size()) != partition.num_clusters) {
    throw Error("wide KAHM partition and branches disagree");
  }
  WideKahm model;
  model.partition_ = std::move(partition);
  model.branches_ = std::move(branches);
  return model;
}

Eigen::Index WideKahm::size() const {
  Eigen::Index total = 0;
  for (const auto& b : branches_) total += b.data().rows();
  return total;
}

WideEvaluation WideKahm::Evaluate(const Vector& y) const {
  WideEvaluation out;
  out.branch = -1;
  out.distance = kInf;
  for (std::size_t s = 0; s < branches_.size(); ++s) {
    const DeepBatch b = branches_[s].EvaluateRows(y.transpose());
    if (b.layer[0] >= 0 && b.distance(0) < out.distance) {
      out.branch = static_cast<int>(s);
      out.layer = b.layer[0];
      out.distance = b.distance(0);
      out.image = b.image.row(0).transpose();
    }
  }
  if (out.branch < 0) throw EvaluationError("evaluation point too far from data");
  return out;
}

WideBatch WideKahm::DistanceRows(const Matrix& queries) const {
  std::vector<Vector> per_branch(branches_.size());
  ParallelFor(branches_.size(), [&](std::size_t s) {
    per_branch[s] = branches_[s].EvaluateRows(queries).distance;
  });
  WideBatch out;
  out.branch.assign(static_cast<std::size_t>(queries.rows()), -1);
  out.distance = Vector::Constant(queries.rows(), kInf);
  for (std::size_t s = 0; s < per_branch.size(); ++s) {
    for (Eigen::Index r = 0; r < queries.rows(); ++r) {
      if (per_branch[s](r) < out.distance(r)) {
        out.distance(r) = per_branch[s](r);
        out.branch[static_cast<std::size_t>(r)] = static_cast<int>(s);
      }
    }
  }
  return out;
}

}  // namespace kahm
