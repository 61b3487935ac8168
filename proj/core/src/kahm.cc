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

#include "kahm/kahm.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>

#include "kahm/error.h"

namespace kahm {
namespace {

// Modified Gram-Schmidt of `candidate` against the accepted rows; returns
// false when the remainder is numerically zero.
bool OrthonormalizeAgainst(const Matrix& basis, Eigen::Index accepted, Vector& candidate) {
  const double original = candidate.norm();
  if (!(original > 0.0)) return false;
  candidate /= original;
  for (int pass = 0; pass < 2; ++pass) {
    for (Eigen::Index r = 0; r < accepted; ++r) {
      candidate -= basis.row(r).dot(candidate) * basis.row(r).transpose();
    }
  }
  const double remaining = candidate.norm();
  if (remaining < 1e-6) return false;
  candidate /= remaining;
  return true;
}

void FixSign(Matrix& rows, Eigen::Index r) {
  Eigen::Index arg = 0;
  for (Eigen::Index j = 1; j < rows.cols(); ++j) {
    if (std::abs(rows(r, j)) > std::abs(rows(r, arg))) arg = j;
  }
  if (rows(r, arg) < 0.0) rows.row(r) *= -1.0;
}

}  // namespace

double SpectralNorm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  const Matrix gram = m.rows() >= m.cols() ? Matrix(m.transpose() * m) : Matrix(m * m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, eig.eigenvalues().maxCoeff()));
}

Matrix PcaEncoding(const Matrix& data, int subspace_dim) {
  ValidateDataMatrix(data);
  const Eigen::Index n_rows = data.rows();
  const Eigen::Index p = data.cols();
  if (n_rows < 2) throw Error("PCA encoding needs at least 2 samples");
  if (subspace_dim < 1 || subspace_dim > p) {
    throw Error("subspace dimension " + std::to_string(subspace_dim) + " outside [1, " +
                std::to_string(p) + "]");
  }
  const Eigen::RowVectorXd mean = data.colwise().mean();
  const Matrix centered = data.rowwise() - mean;

  // Candidate principal directions as columns, strongest first.
  Matrix candidates;
  if (n_rows - 1 < p) {
    // Fewer samples than dimensions: diagonalize the N x N Gram matrix and
    // map its eigenvectors back to data space.
    Eigen::SelfAdjointEigenSolver<Matrix> eig(centered * centered.transpose());
    const Vector& values = eig.eigenvalues();
    const double top = std::max(values.maxCoeff(), 0.0);
    candidates.resize(p, n_rows);
    Eigen::Index count = 0;
    for (Eigen::Index k = n_rows - 1; k >= 0 && count < subspace_dim; --k) {
      if (!(values(k) > 1e-12 * top)) break;
      candidates.col(count++) = centered.transpose() * eig.eigenvectors().col(k) / std::sqrt(values(k));
    }
    candidates.conservativeResize(p, count);
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(centered.transpose() * centered);
    candidates = eig.eigenvectors().rowwise().reverse().leftCols(subspace_dim);
  }

  Matrix encoding(subspace_dim, p);
  Eigen::Index accepted = 0;
  for (Eigen::Index k = 0; k < candidates.cols() && accepted < subspace_dim; ++k) {
    Vector v = candidates.col(k);
    if (OrthonormalizeAgainst(encoding, accepted, v)) encoding.row(accepted++) = v.transpose();
  }
  // Complete with null-space directions taken from the standard basis.
  for (Eigen::Index j = 0; j < p && accepted < subspace_dim; ++j) {
    Vector v = Vector::Unit(p, j);
    if (OrthonormalizeAgainst(encoding, accepted, v)) encoding.row(accepted++) = v.transpose();
  }
  for (Eigen::Index r = 0; r < subspace_dim; ++r) FixSign(encoding, r);
  return encoding;
}

KahmModel KahmModel::Fit(const Matrix& data, int subspace_dim) {
  ValidateDataMatrix(data, "KAHM training data");
  if (data.rows() < 2) throw Error("a KAHM needs at least 2 training samples");
  if (DistinctRowIndices(data).size() != static_cast<std::size_t>(data.rows())) {
    throw Error("KAHM training data has duplicate rows; deduplicate before fitting");
  }
  return FitWithEncoding(data, PcaEncoding(data, subspace_dim));
}

KahmModel KahmModel::FitWithEncoding(const Matrix& data, const Matrix& encoding) {
  ValidateDataMatrix(data, "KAHM training data");
  if (data.rows() < 2) throw Error("a KAHM needs at least 2 training samples");
  if (encoding.cols() != data.cols() || encoding.rows() < 1 || encoding.rows() > data.cols()) {
    throw Error("encoding matrix does not conform to the data");
  }
  KahmModel model;
  model.data_ = data;
  model.encoding_ = encoding;

  const Matrix projected = data * encoding.transpose();
  const Matrix centered = projected.rowwise() - projected.colwise().mean();
  const Matrix theta =
      centered.transpose() * centered / static_cast<double>(data.rows() - 1);
  model.shape_ = KernelShape(theta);
  model.Prepare();

  const Matrix kernel = model.TrainingKernel();
  const MseSpectrum spectrum(kernel, data);
  model.fixed_point_ = FindLambdaStar(spectrum);
  model.lambda_star_ = model.fixed_point_.lambda_star;
  model.mu_min_ = spectrum.mu_min();
  model.mu_max_ = spectrum.mu_max();

  Matrix shifted = kernel;
  shifted.diagonal().array() += model.lambda_star_;
  Eigen::LLT<Matrix> llt(shifted);
  if (llt.info() != Eigen::Success) {
    throw Error("K + lambda* I is not numerically positive definite");
  }
  const Eigen::Index n = data.rows();
  if (n <= kExplicitInverseLimit) {
    model.solve_kind_ = SolveKind::kExplicitInverse;
    model.solve_operator_ = llt.solve(Matrix::Identity(n, n));
  } else {
    model.solve_kind_ = SolveKind::kCholeskyFactor;
    model.solve_operator_ = llt.matrixL();
  }
  return model;
}

KahmModel KahmModel::FromParts(Matrix data, Matrix encoding, Matrix theta, double lambda_star,
                               SolveKind kind, Matrix solve_operator, double mu_min,
                               double mu_max) {
  ValidateDataMatrix(data, "stored KAHM data");
  const Eigen::Index n = data.rows();
  if (encoding.cols() != data.cols() || theta.rows() != encoding.rows() ||
      solve_operator.rows() != n || solve_operator.cols() != n || !(lambda_star > 0.0)) {
    throw Error("stored KAHM parts do not conform");
  }
  KahmModel model;
  model.data_ = std::move(data);
  model.encoding_ = std::move(encoding);
  model.shape_ = KernelShape(theta, /*apply_jitter=*/false);
  model.lambda_star_ = lambda_star;
  model.solve_kind_ = kind;
  model.solve_operator_ = std::move(solve_operator);
  model.Prepare();
  model.mu_min_ = mu_min;
  model.mu_max_ = mu_max;
  return model;
}

void KahmModel::Prepare() {
  query_map_ = shape_.whitening() * encoding_;
  whitened_ = shape_.WhitenRows(data_ * encoding_.transpose());
}

Matrix KahmModel::ApplySolve(const Matrix& rhs) const {
  if (solve_kind_ == SolveKind::kExplicitInverse) return solve_operator_ * rhs;
  const auto lower = solve_operator_.triangularView<Eigen::Lower>();
  return lower.transpose().solve(lower.solve(rhs));
}

Matrix KahmModel::StabilizedKernelColumns(const Matrix& queries, Vector* shift) const {
  const Matrix z = queries * query_map_.transpose();
  const Eigen::Index n = whitened_.rows();
  const Eigen::Index m = z.rows();
  Matrix kappa(n, m);
  shift->resize(m);
  for (Eigen::Index c = 0; c < m; ++c) {
    for (Eigen::Index i = 0; i < n; ++i) {
      kappa(i, c) = (whitened_.row(i) - z.row(c)).squaredNorm();
    }
    const double lowest = kappa.col(c).minCoeff();
    (*shift)(c) = lowest;
    kappa.col(c) = (-0.5 * (kappa.col(c).array() - lowest)).exp();
  }
  return kappa;
}

BatchImages KahmModel::EvaluateRows(const Matrix& queries) const {
  if (queries.cols() != dim()) throw Error("query dimension does not match the KAHM");
  BatchImages out;
  out.valid.assign(static_cast<std::size_t>(queries.rows()), true);
  if (!queries.allFinite()) {
    for (Eigen::Index r = 0; r < queries.rows(); ++r) {
      if (!queries.row(r).allFinite()) throw Error("KAHM evaluation: non-finite query");
    }
  }
  Vector shift;
  const Matrix weights = ApplySolve(StabilizedKernelColumns(queries, &shift));
  const Eigen::RowVectorXd sums = weights.colwise().sum();
  out.images = (data_.transpose() * weights).transpose();
  for (Eigen::Index r = 0; r < queries.rows(); ++r) {
    const double s = sums(r);
    if (!(s > 0.0) || !std::isfinite(s)) {
      out.valid[static_cast<std::size_t>(r)] = false;
      out.images.row(r).setConstant(std::numeric_limits<double>::quiet_NaN());
    } else {
      out.images.row(r) /= s;
    }
  }
  return out;
}

Vector KahmModel::Evaluate(const Vector& y) const {
  BatchImages batch = EvaluateRows(y.transpose());
  if (!batch.valid[0]) throw EvaluationError("evaluation point too far from data");
  return batch.images.row(0).transpose();
}

double KahmModel::Distance(const Vector& y) const { return (y - Evaluate(y)).norm(); }

Vector KahmModel::MembershipWeights(const Vector& y) const {
  return MembershipMatrix(y.transpose()).col(0);
}

Matrix KahmModel::MembershipMatrix(const Matrix& queries) const {
  if (queries.cols() != dim()) throw Error("query dimension does not match the KAHM");
  const Matrix z = queries * query_map_.transpose();
  Matrix kappa(whitened_.rows(), z.rows());
  for (Eigen::Index c = 0; c < z.rows(); ++c) {
    for (Eigen::Index i = 0; i < whitened_.rows(); ++i) {
      kappa(i, c) = std::exp(-0.5 * (whitened_.row(i) - z.row(c)).squaredNorm());
    }
  }
  return ApplySolve(kappa);
}

BoundCertificate KahmModel::Certificate() const {
  BoundCertificate cert;
  cert.mu_min = mu_min_;
  cert.mu_max = mu_max_;
  cert.ratio_bound_tight = (lambda_star_ + mu_max_) / (lambda_star_ + mu_min_);
  const double n = static_cast<double>(data_.rows());
  const double p = static_cast<double>(data_.cols());
  cert.ratio_bound_loose = 1.0 + p * n * n / (2.0 * data_.squaredNorm());
  cert.norm_bound = SpectralNorm(data_) * cert.ratio_bound_tight;
  return cert;
}

}  // namespace kahm
