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

#ifndef KAHM_COMPOSITIONS_H_
#define KAHM_COMPOSITIONS_H_

#include <cstdint>
#include <optional>
#include <vector>

#include "kahm/dataset.h"
#include "kahm/kahm.h"

namespace kahm {

struct DeepEvaluation {
  int layer = 0;  // 0-based index of the selected composition depth
  Vector image;
  double distance = 0.0;
  // Distance of every cumulative composition; +inf where a layer failed.
  std::vector<double> layer_distances;
};

// Per-row results of a batch evaluation. layer is -1 and distance +inf for
// rows on which every depth failed.
struct DeepBatch {
  std::vector<int> layer;
  Vector distance;
  Matrix image;
};

// Conditionally deep KAHM: layers A_{Y,n}, A_{Y,n-1}, ..., A_{Y,n-L+1}, all
// fitted on the same data. Depth l applies the first l layers in turn, and a
// query is answered by the depth whose output is nearest to it.
class DeepKahm {
 public:
  // Requires 1 <= layers <= subspace_dim <= p and distinct rows.
  static DeepKahm Fit(const Matrix& data, int subspace_dim, int layers);
  static DeepKahm FromLayers(std::vector<KahmModel> layers);

  // Throws EvaluationError when every depth fails.
  DeepEvaluation Evaluate(const Vector& y) const;
  double Distance(const Vector& y) const { return Evaluate(y).distance; }
  DeepBatch EvaluateRows(const Matrix& queries) const;

  const std::vector<KahmModel>& layers() const { return layers_; }
  int num_layers() const { return static_cast<int>(layers_.size()); }
  int subspace_dim() const { return layers_.front().subspace_dim(); }
  const Matrix& data() const { return layers_.front().data(); }
  Eigen::Index dim() const { return layers_.front().dim(); }

 private:
  DeepKahm() = default;
  std::vector<KahmModel> layers_;
};

// k-means partition of `data` into `clusters` groups in which every group
// holds at least two rows: members of smaller groups move to the nearest
// centroid of a large enough group, and the surviving groups are renumbered
// contiguously in their original order. Collapses to one group when no group
// qualifies.
Partition ClusterRows(const Matrix& data, int clusters, std::uint64_t seed);

struct WideEvaluation {
  int branch = 0;
  int layer = 0;
  double distance = 0.0;
  Vector image;
};

struct WideBatch {
  std::vector<int> branch;  // -1 where every branch failed
  Vector distance;
};

// Wide conditionally deep KAHM: one DeepKahm per k-means cluster of the
// (deduplicated) data; a query is answered by the nearest branch.
class WideKahm {
 public:
  // branches defaults to ceil(N / 1000) over the distinct rows.
  static WideKahm Fit(const Matrix& data, int subspace_dim, int layers,
                      std::optional<int> branches, std::uint64_t seed);
  static WideKahm FromParts(Partition partition, std::vector<DeepKahm> branches);

  WideEvaluation Evaluate(const Vector& y) const;
  double Distance(const Vector& y) const { return Evaluate(y).distance; }
  WideBatch DistanceRows(const Matrix& queries) const;

  const std::vector<DeepKahm>& branches() const { return branches_; }
  // Assignments refer to the distinct rows of the training data.
  const Partition& partition() const { return partition_; }
  int num_branches() const { return static_cast<int>(branches_.size()); }
  Eigen::Index dim() const { return branches_.front().dim(); }
  Eigen::Index size() const;

 private:
  WideKahm() = default;
  Partition partition_;
  std::vector<DeepKahm> branches_;
};

}  // namespace kahm

#endif  // KAHM_COMPOSITIONS_H_
