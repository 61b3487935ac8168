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

#ifndef KAHM_KAHM_H_
#define KAHM_KAHM_H_

#include <cstdint>
#include <vector>

#include "kahm/dataset.h"
#include "kahm/kernel_rls.h"

namespace kahm {

// Rows are the top-n eigenvectors of the sample covariance of `data`, in
// descending eigenvalue order, each with its largest-magnitude entry made
// positive. Directions beyond the rank of the data are completed with an
// orthonormal basis of the null space.
Matrix PcaEncoding(const Matrix& data, int subspace_dim);

// Guarantees of a fitted machine: the image norm is below
// norm_bound and the distance-to-data ratio below ratio_bound_tight, which
// never exceeds ratio_bound_loose.
struct BoundCertificate {
  double mu_min = 0.0;
  double mu_max = 0.0;
  double ratio_bound_tight = 0.0;  // (lambda* + mu_max) / (lambda* + mu_min)
  double ratio_bound_loose = 0.0;  // 1 + p N^2 / (2 ||Y||_F^2)
  double norm_bound = 0.0;         // ||Y||_2 * ratio_bound_tight
};

// Images of a batch of query rows. valid[i] is false where the membership
// sum vanished and the row of `images` is meaningless.
struct BatchImages {
  Matrix images;
  std::vector<bool> valid;
};

// Kernel affine hull machine: maps y to the affine combination of the
// training rows weighted by kernel-RLS approximations h^i of the indicator
// functions of the (encoded) training points,
//   A(y) = sum_i h^i(Py) y^i / sum_i h^i(Py).
// Immutable after Fit; evaluation is safe from many threads.
class KahmModel {
 public:
  // Solve operators up to this size are stored as an explicit inverse;
  // larger ones keep the Cholesky factor of K + lambda* I.
  static constexpr Eigen::Index kExplicitInverseLimit = 4096;

  enum class SolveKind : std::uint32_t { kExplicitInverse = 0, kCholeskyFactor = 1 };

  // Requires N >= 2 pairwise distinct rows and 1 <= n <= p.
  static KahmModel Fit(const Matrix& data, int subspace_dim);
  // Fit with a given encoding matrix (n x p, orthonormal rows).
  static KahmModel FitWithEncoding(const Matrix& data, const Matrix& encoding);
  // Rebuilds a model from its stored parts (see serialize.h).
  static KahmModel FromParts(Matrix data, Matrix encoding, Matrix theta, double lambda_star,
                             SolveKind kind, Matrix solve_operator, double mu_min,
                             double mu_max);

  Vector Evaluate(const Vector& y) const;
  double Distance(const Vector& y) const;
  BatchImages EvaluateRows(const Matrix& queries) const;

  // Unnormalized memberships h^i(Py) = ((K + lambda* I)^-1 kappa(Py))_i.
  Vector MembershipWeights(const Vector& y) const;
  // The same for a batch: column j belongs to query row j (N x M).
  Matrix MembershipMatrix(const Matrix& queries) const;

  BoundCertificate Certificate() const;

  const Matrix& data() const { return data_; }
  const Matrix& encoding() const { return encoding_; }
  const KernelShape& shape() const { return shape_; }
  double lambda_star() const { return lambda_star_; }
  SolveKind solve_kind() const { return solve_kind_; }
  const Matrix& solve_operator() const { return solve_operator_; }
  // Extreme eigenvalues of the training kernel matrix.
  double mu_min() const { return mu_min_; }
  double mu_max() const { return mu_max_; }
  int subspace_dim() const { return static_cast<int>(encoding_.rows()); }
  Eigen::Index size() const { return data_.rows(); }
  Eigen::Index dim() const { return data_.cols(); }
  // Kernel matrix of the encoded training points.
  Matrix TrainingKernel() const { return KernelMatrixWhitened(whitened_); }
  // Fixed-point diagnostics; only populated by Fit.
  const FixedPointResult& fixed_point() const { return fixed_point_; }

 private:
  KahmModel() = default;
  void Prepare();
  // (K + lambda* I)^-1 applied to the columns of rhs.
  Matrix ApplySolve(const Matrix& rhs) const;
  // exp(-0.5 (q - min_i q)) for each query column; also returns min q.
  Matrix StabilizedKernelColumns(const Matrix& queries, Vector* shift) const;

  Matrix data_;
  Matrix encoding_;
  KernelShape shape_;
  double lambda_star_ = 0.0;
  SolveKind solve_kind_ = SolveKind::kExplicitInverse;
  Matrix solve_operator_;

  Matrix query_map_;  // W P, maps a data-space point to whitened coordinates
  Matrix whitened_;   // encoded and whitened training rows
  double mu_min_ = 0.0;
  double mu_max_ = 0.0;
  FixedPointResult fixed_point_;
};

// Spectral norm ||M||_2.
double SpectralNorm(const Matrix& m);

}  // namespace kahm

#endif  // KAHM_KAHM_H_
