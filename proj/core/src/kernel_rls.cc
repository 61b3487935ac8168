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

#include "kahm/kernel_rls.h"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "kahm/error.h"

namespace kahm {
namespace {

constexpr double kMaxCondition = 1e12;
constexpr double kRelativeTolerance = 1e-12;
constexpr int kMaxIterations = 1000;

double SquaredFrobenius(const Matrix& m) { return m.squaredNorm(); }

Eigen::LLT<Matrix> FactorShifted(const Matrix& kernel, double shift) {
  Matrix shifted = kernel;
  shifted.diagonal().array() += shift;
  Eigen::LLT<Matrix> llt(shifted);
  if (llt.info() != Eigen::Success) {
    throw Error("K + lambda I is not numerically positive definite (lambda = " +
                std::to_string(shift) + ")");
  }
  return llt;
}

void CheckMseArguments(const Matrix& kernel, const Matrix& targets, double e, double tau) {
  if (kernel.rows() != kernel.cols() || kernel.rows() != targets.rows()) {
    throw Error("MseMap: kernel and targets do not conform");
  }
  if (!(e > 0.0) || !(tau > 0.0)) throw Error("MseMap: e and tau must be positive");
}

}  // namespace

KernelShape::KernelShape(const Matrix& theta, bool apply_jitter) : theta_(theta) {
  if (theta.rows() != theta.cols() || theta.rows() == 0) {
    throw Error("kernel covariance must be a non-empty square matrix");
  }
  if (!theta.allFinite()) throw Error("kernel covariance has non-finite entries");
  theta_ = 0.5 * (theta + theta.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(theta_);
  if (apply_jitter) {
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (lo <= 0.0 || hi / lo > kMaxCondition) {
      const double ridge =
          1e-10 * theta_.trace() / static_cast<double>(theta_.rows()) + 1e-30;
      theta_.diagonal().array() += ridge;
      jittered_ = true;
      // Factor the stored matrix itself so a restored model whitens
      // identically.
      eig.compute(theta_);
    }
  }
  const Vector values = eig.eigenvalues();
  if (values.minCoeff() <= 0.0) {
    throw Error("kernel covariance is not positive definite even after jitter");
  }
  whitening_ = values.cwiseSqrt().cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
}

double GaussianKernel(const Vector& u, const Vector& v, const KernelShape& shape) {
  if (u.size() != shape.dim() || v.size() != shape.dim()) {
    throw Error("GaussianKernel: dimension mismatch");
  }
  if (!u.allFinite() || !v.allFinite()) throw Error("GaussianKernel: non-finite input");
  return std::exp(-0.5 * shape.QuadraticForm(u - v));
}

Matrix KernelMatrix(const Matrix& points, const KernelShape& shape) {
  if (points.cols() != shape.dim()) throw Error("KernelMatrix: dimension mismatch");
  if (!points.allFinite()) throw Error("KernelMatrix: non-finite input");
  return KernelMatrixWhitened(shape.WhitenRows(points));
}

Matrix KernelMatrixWhitened(const Matrix& whitened) {
  const Eigen::Index n = whitened.rows();
  Matrix k(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    k(j, j) = 1.0;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double value = std::exp(-0.5 * (whitened.row(i) - whitened.row(j)).squaredNorm());
      k(i, j) = value;
      k(j, i) = value;
    }
  }
  return k;
}

Matrix RlsSolve(const Matrix& kernel, const Matrix& targets, double lambda) {
  if (!(lambda > 0.0)) throw Error("RlsSolve: lambda must be positive");
  if (kernel.rows() != kernel.cols() || kernel.rows() != targets.rows()) {
    throw Error("RlsSolve: kernel and targets do not conform");
  }
  return FactorShifted(kernel, lambda).solve(targets);
}

double MseMap(const Matrix& kernel, const Matrix& targets, double e, double tau) {
  CheckMseArguments(kernel, targets, e, tau);
  const Matrix residual = targets - kernel * FactorShifted(kernel, e + tau).solve(targets);
  return SquaredFrobenius(residual) /
         static_cast<double>(targets.rows() * targets.cols());
}

double MseMapResolvent(const Matrix& kernel, const Matrix& targets, double e, double tau) {
  CheckMseArguments(kernel, targets, e, tau);
  // I + K/s is symmetric positive definite for s > 0.
  Matrix system = kernel / (e + tau);
  system.diagonal().array() += 1.0;
  Eigen::LLT<Matrix> llt(system);
  if (llt.info() != Eigen::Success) throw Error("I + K/(e+tau) is not positive definite");
  return SquaredFrobenius(llt.solve(targets)) /
         static_cast<double>(targets.rows() * targets.cols());
}

MseSpectrum::MseSpectrum(const Matrix& kernel, const Matrix& targets) {
  if (kernel.rows() != kernel.cols() || kernel.rows() != targets.rows()) {
    throw Error("MseSpectrum: kernel and targets do not conform");
  }
  const double count = static_cast<double>(targets.rows() * targets.cols());
  norm_ = 1.0 / count;
  scale_ = SquaredFrobenius(targets) * norm_;
  if (kernel.rows() == 1) {
    diag_ = kernel.diagonal();
    subdiag_.resize(0);
    rotated_ = targets;
  } else {
    Eigen::Tridiagonalization<Matrix> tri(kernel);
    diag_ = tri.diagonal();
    subdiag_ = tri.subDiagonal();
    rotated_ = tri.matrixQ().adjoint() * targets;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig;
  eig.computeFromTridiagonal(diag_, subdiag_, Eigen::EigenvaluesOnly);
  mu_min_ = eig.eigenvalues().minCoeff();
  mu_max_ = eig.eigenvalues().maxCoeff();
}

double MseSpectrum::operator()(double e, double tau) const {
  if (!(e > 0.0) || !(tau > 0.0)) throw Error("MseMap: e and tau must be positive");
  const double s = e + tau;
  const Eigen::Index n = diag_.size();
  // Thomas algorithm on (I + T/s) X = Q^T Y; the system is symmetric
  // positive definite and diagonally dominant enough for no pivoting.
  Vector c_prime(n);
  Vector denom(n);
  double prev_c = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double a = i > 0 ? subdiag_(i - 1) / s : 0.0;
    const double b = 1.0 + diag_(i) / s;
    denom(i) = b - a * prev_c;
    prev_c = i + 1 < n ? (subdiag_(i) / s) / denom(i) : 0.0;
    c_prime(i) = prev_c;
  }
  double total = 0.0;
  Vector x(n);
  for (Eigen::Index col = 0; col < rotated_.cols(); ++col) {
    double prev = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double a = i > 0 ? subdiag_(i - 1) / s : 0.0;
      x(i) = (rotated_(i, col) - a * prev) / denom(i);
      prev = x(i);
    }
    for (Eigen::Index i = n - 2; i >= 0; --i) x(i) -= c_prime(i) * x(i + 1);
    total += x.squaredNorm();
  }
  return total * norm_;
}

FixedPointResult FindLambdaStar(const MseSpectrum& spectrum, double start_fraction) {
  const double scale = spectrum.scale();
  if (!(scale > 0.0)) throw Error("FindLambdaStar: targets are zero, so tau would be 0");
  if (!(start_fraction > 0.0 && start_fraction < 1.0)) {
    throw Error("FindLambdaStar: start fraction must lie in (0, 1)");
  }
  FixedPointResult result;
  result.tau = 2.0 * scale;
  double e = start_fraction * scale;
  for (int it = 0; it < kMaxIterations; ++it) {
    const double next = spectrum(e, result.tau);
    const double step = std::abs(next - e);
    result.step_sizes.push_back(step);
    result.iterations = it + 1;
    result.residual = step;
    e = next;
    if (step <= kRelativeTolerance * (e + scale)) break;
  }
  result.e_hat = e;
  result.lambda_star = e + result.tau;
  return result;
}

FixedPointResult FindLambdaStar(const Matrix& kernel, const Matrix& targets,
                                double start_fraction) {
  return FindLambdaStar(MseSpectrum(kernel, targets), start_fraction);
}

}  // namespace kahm
