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

// Fixtures shared by the unit tests and the acceptance runner.
#ifndef KAHM_TESTS_TEST_SUPPORT_H_
#define KAHM_TESTS_TEST_SUPPORT_H_

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "kahm/dataset.h"
#include "kahm/random.h"

namespace kahm::testing {

// Entries uniform in [lo, hi).
inline Matrix UniformMatrix(Eigen::Index rows, Eigen::Index cols, Rng& rng, double lo = -1.0,
                            double hi = 1.0) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = lo + (hi - lo) * rng.UniformOpen();
  }
  return m;
}

inline Vector UniformVector(Eigen::Index size, Rng& rng, double lo = -1.0, double hi = 1.0) {
  return UniformMatrix(1, size, rng, lo, hi).row(0).transpose();
}

// Three separated Gaussian blobs in the plane, classes in blob order.
inline constexpr std::array<std::array<double, 2>, 3> kBlobCenters{
    {{-0.6, -0.5}, {0.6, -0.5}, {0.0, 0.6}}};

inline LabeledDataset Blobs(int per_class, double sd, std::uint64_t seed) {
  Rng rng(seed);
  LabeledDataset out;
  out.data.resize(3 * per_class, 2);
  for (int c = 0; c < 3; ++c) {
    for (int i = 0; i < per_class; ++i) {
      const Eigen::Index r = c * per_class + i;
      out.data(r, 0) = kBlobCenters[c][0] + sd * rng.Normal();
      out.data(r, 1) = kBlobCenters[c][1] + sd * rng.Normal();
      out.labels.push_back(c);
    }
  }
  out.num_classes = 3;
  out.class_names = {"a", "b", "c"};
  out.header = {"x", "y", "label"};
  out.label_column = 2;
  return out;
}

// p x N matrix [y - y^1 ... y - y^N].
inline Matrix Differences(const Matrix& data, const Vector& y) {
  return (-data).rowwise() + y.transpose();
}

inline double RelativeError(const Matrix& got, const Matrix& want) {
  const double scale = want.norm();
  return scale > 0.0 ? (got - want).norm() / scale : (got - want).norm();
}

inline std::string MnistImages() { return std::string(KAHM_TEST_DATA_DIR) + "/mnist/mnist10k-images-idx3-ubyte.gz"; }
inline std::string MnistLabels() { return std::string(KAHM_TEST_DATA_DIR) + "/mnist/mnist10k-labels-idx1-ubyte.gz"; }

}  // namespace kahm::testing

#endif  // KAHM_TESTS_TEST_SUPPORT_H_
