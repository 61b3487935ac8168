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

#ifndef KAHM_DATASET_H_
#define KAHM_DATASET_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace kahm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Data matrices hold one sample per row (N x p).

// Throws unless the matrix has at least one row and one column and every
// entry is finite.
void ValidateDataMatrix(const Matrix& data, std::string_view what = "data");

// Labeled samples. Class indices are 0-based and contiguous in [0, C);
// class_names[c] keeps the label text the class was read from.
struct LabeledDataset {
  Matrix data;
  std::vector<int> labels;
  int num_classes = 0;
  std::vector<std::string> class_names;

  // Original CSV layout, used when writing the data back out. header is
  // empty when the source had none; label_column is -1 when unlabeled.
  std::vector<std::string> header;
  int label_column = -1;

  std::size_t size() const { return static_cast<std::size_t>(data.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(data.cols()); }

  std::vector<std::size_t> ClassIndices(int c) const;
  Matrix ClassRows(int c) const;
  LabeledDataset Subset(std::span<const std::size_t> rows) const;

  // Throws when labels and data disagree or a label is out of range.
  void Validate() const;
};

// Cluster memberships, 0-based in [0, S). Every cluster is non-empty.
struct Partition {
  std::vector<int> assignments;
  int num_clusters = 0;

  std::vector<std::size_t> Members(int cluster) const;
};

struct KMeansResult {
  Partition partition;
  Matrix centroids;  // S x p
  // Sum of squared distances to the assigned centroid after each Lloyd
  // iteration.
  std::vector<double> objective_history;
  int iterations = 0;
};

// Parses CSV text ('.' decimal separator, comma delimiter, optional header
// row). label_column selects a column by 0-based index, negative index from
// the end, or header name. Label text is mapped to contiguous classes in
// sorted order (numeric order when every label parses as a number).
LabeledDataset ParseCsv(std::string_view text,
                        const std::optional<std::string>& label_column = {});
LabeledDataset LoadCsv(const std::string& path,
                       const std::optional<std::string>& label_column = {});

// Writes rows in the layout of `schema` (header and label position), with
// labels given as class indices into schema.class_names. Pass an empty
// label vector for unlabeled output.
void WriteCsv(const std::string& path, const Matrix& data,
              std::span<const int> labels, const LabeledDataset& schema);

// Reads MNIST-style IDX image and label files (gzip-compressed or plain).
// Images are flattened row-major and divided by 255.
LabeledDataset LoadIdx(const std::string& images_path,
                       const std::string& labels_path);

// Maps every column affinely onto [-1, 1]; constant columns map to 0.
Matrix NormalizeMinMax(const Matrix& data);

// Lloyd's algorithm with k-means++ seeding, at most 100 iterations, stopping
// when assignments no longer change. Empty clusters are re-seeded with the
// point farthest from its centroid. Ties go to the smallest cluster index.
KMeansResult KMeans(const Matrix& data, int clusters, std::uint64_t seed);

// ceil(N / 1000).
int DefaultBranchCount(std::size_t samples);

// Indices of the first occurrence of every distinct row, in input order.
std::vector<std::size_t> DistinctRowIndices(const Matrix& data);
Matrix DedupeRows(const Matrix& data);

Matrix SelectRows(const Matrix& data, std::span<const std::size_t> rows);

}  // namespace kahm

#endif  // KAHM_DATASET_H_
