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

#ifndef KAHM_KERNEL_RLS_H_
#define KAHM_KERNEL_RLS_H_

#include <vector>

#include <Eigen/Dense>

#include "kahm/dataset.h"

namespace kahm {

// Covariance of a Gaussian kernel, k(u, v) = exp(-0.5 (u-v)^T theta^-1 (u-v)).
//
// The inverse enters only through a whitening matrix W with
// W^T W = theta^-1, so that the quadratic form is ||W (u - v)||^2. When theta
// is not numerically positive definite (smallest eigenvalue <= 0 or condition
// number > 1e12) a ridge of 1e-10 * trace(theta) / n + 1e-30 is added first.
class KernelShape {
 public:
  KernelShape() = default;
  // With apply_jitter = false theta is taken as already regularized, which is
  // how stored models are restored bit for bit.
  explicit KernelShape(const Matrix& theta, bool apply_jitter = true);

  const Matrix& theta() const { return theta_; }
  const Matrix& whitening() const { return whitening_; }
  bool jittered() const { return jittered_; }
  Eigen::Index dim() const { return theta_.rows(); }

  double QuadraticForm(const Vector& diff) const { return (whitening_ * diff).squaredNorm(); }
  // Rows of `points` mapped through W.
  Matrix WhitenRows(const Matrix& points) const { return points * whitening_.transpose(); }

 private:
  Matrix theta_;
  Matrix whitening_;
  bool jittered_ = false;
};

double GaussianKernel(const Vector& u, const Vector& v, const KernelShape& shape);

// Gram matrix of the rows of `points`; symmetric with an exact unit diagonal.
Matrix KernelMatrix(const Matrix& points, const KernelShape& shape);
// Same, for points that are already whitened.
Matrix KernelMatrixWhitened(const Matrix& whitened);

// W = (K + lambda I)^-1 Y via Cholesky. The fitted regressor is
// f(x) = W^T kappa(x) with kappa(x)_i = k(x, x^i).
Matrix RlsSolve(const Matrix& kernel, const Matrix& targets, double lambda);

// Mean squared training error of kernel RLS at regularization e + tau:
//   (1/pN) sum_j || Y_:,j - K (K + (e+tau) I)^-1 Y_:,j ||^2.
double MseMap(const Matrix& kernel, const Matrix& targets, double e, double tau);
// The same quantity through the resolvent form
//   (1/pN) sum_j || (I + K/(e+tau))^-1 Y_:,j ||^2.
double MseMapResolvent(const Matrix& kernel, const Matrix& targets, double e, double tau);

// MseMap prepared for repeated evaluation: K = Q T Q^T is reduced to
// tridiagonal form once, after which each evaluation is a tridiagonal solve
// against Q^T Y in O(N p).
class MseSpectrum {
 public:
  MseSpectrum(const Matrix& kernel, const Matrix& targets);

  double operator()(double e, double tau) const;

  // ||Y||_F^2 / (pN), the upper end of the range of the map.
  double scale() const { return scale_; }
  double mu_min() const { return mu_min_; }
  double mu_max() const { return mu_max_; }

 private:
  Vector diag_;
  Vector subdiag_;
  Matrix rotated_;  // Q^T Y
  double scale_ = 0.0;
  double mu_min_ = 0.0;
  double mu_max_ = 0.0;
  double norm_ = 1.0;  // 1 / (pN)
};

struct FixedPointResult {
  double e_hat = 0.0;
  double lambda_star = 0.0;
  double tau = 0.0;
  int iterations = 0;
  double residual = 0.0;
  // |e_{it+1} - e_it| for every iteration.
  std::vector<double> step_sizes;
};

// Iterates e <- MseMap(e, tau) with tau = 2 ||Y||_F^2 / (pN) from
// e_0 = start_fraction * ||Y||_F^2 / (pN) until |de| <= 1e-12 (e + ||Y||_F^2/(pN))
// or 1000 iterations; lambda* = e_hat + tau.
FixedPointResult FindLambdaStar(const MseSpectrum& spectrum, double start_fraction = 0.5);
FixedPointResult FindLambdaStar(const Matrix& kernel, const Matrix& targets,
                                double start_fraction = 0.5);

}  // namespace kahm

#endif  // KAHM_KERNEL_RLS_H_
