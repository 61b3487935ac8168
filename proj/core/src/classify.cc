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

#include "kahm/classify.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include "kahm/error.h"
#include "kahm/lsdd.h"
#include "kahm/parallel.h"
#include "kahm/random.h"

namespace kahm {

const char* ProvenanceName(Provenance::Kind kind) {
  switch (kind) {
    case Provenance::Kind::kPlain: return "plain";
    case Provenance::Kind::kDpNoisy: return "dp_noisy";
    case Provenance::Kind::kDpFabricated: return "dp_fabricated";
  }
  return "unknown";
}

int ArgminIndex(std::span<const double> values) {
  int best = -1;
  double low = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] < low) {
      low = values[i];
      best = static_cast<int>(i);
    }
  }
  return best;
}

ClassifierModel ClassifierModel::FromParts(std::vector<WideKahm> classes,
                                           std::vector<std::string> names,
                                           ClassifierConfig config, Provenance provenance) {
  if (classes.size() < 2) throw Error("a classifier needs at least 2 classes");
  if (names.size() != classes.size()) throw Error("class names do not match the class models");
  for (const auto& c : classes) {
    if (c.dim() != classes.front().dim()) throw Error("class models disagree in dimension");
  }
  ClassifierModel model;
  model.classes_ = std::move(classes);
  model.names_ = std::move(names);
  model.config_ = std::move(config);
  model.provenance_ = provenance;
  return model;
}

Matrix ClassifierModel::DistanceMatrix(const Matrix& queries) const {
  if (queries.cols() != dim()) {
    throw Error("query dimension " + std::to_string(queries.cols()) +
                " does not match the model dimension " + std::to_string(dim()));
  }
  Matrix out(queries.rows(), num_classes());
  ParallelFor(classes_.size(), [&](std::size_t c) {
    out.col(static_cast<Eigen::Index>(c)) = classes_[c].DistanceRows(queries).distance;
  });
  return out;
}

Prediction ClassifierModel::Predict(const Vector& y) const {
  Prediction p;
  p.distances = DistanceMatrix(y.transpose()).row(0).transpose();
  p.label = ArgminIndex(std::span<const double>(p.distances.data(), p.distances.size()));
  if (p.label < 0) throw EvaluationError("evaluation point too far from data");
  return p;
}

std::vector<int> ClassifierModel::PredictRows(const Matrix& queries) const {
  const Matrix d = DistanceMatrix(queries);
  std::vector<int> labels(static_cast<std::size_t>(d.rows()));
  std::vector<double> row(static_cast<std::size_t>(d.cols()));
  for (Eigen::Index r = 0; r < d.rows(); ++r) {
    for (Eigen::Index c = 0; c < d.cols(); ++c) row[static_cast<std::size_t>(c)] = d(r, c);
    labels[static_cast<std::size_t>(r)] = ArgminIndex(row);
  }
  return labels;
}

ClassifierModel FitClassifierOnClasses(const std::vector<Matrix>& class_data,
                                       std::vector<std::string> names, int subspace_dim,
                                       int layers, const std::vector<int>& branches,
                                       std::uint64_t seed, Provenance provenance) {
  const std::size_t count = class_data.size();
  if (count < 2) throw Error("a classifier needs at least 2 classes");
  if (!branches.empty() && branches.size() != 1 && branches.size() != count) {
    throw Error("branch counts must be given once or once per class");
  }
  for (std::size_t c = 0; c < count; ++c) {
    if (class_data[c].rows() == 0 || DedupeRows(class_data[c]).rows() < 2) {
      throw Error("class '" + names[c] + "' has fewer than 2 distinct samples");
    }
  }
  std::vector<std::optional<WideKahm>> fitted(count);
  ParallelFor(count, [&](std::size_t c) {
    std::optional<int> s;
    if (!branches.empty()) s = branches.size() == 1 ? branches[0] : branches[c];
    try {
      fitted[c].emplace(WideKahm::Fit(class_data[c], subspace_dim, layers, s,
                                      DeriveSeed(seed, "class", c)));
    } catch (const Error& e) {
      throw Error("class '" + names[c] + "': " + e.what());
    }
  });
  ClassifierConfig config{subspace_dim, layers, {}, seed};
  std::vector<WideKahm> classes;
  for (auto& f : fitted) {
    config.branches.push_back(f->num_branches());
    classes.push_back(std::move(*f));
  }
  return ClassifierModel::FromParts(std::move(classes), std::move(names), std::move(config),
                                    provenance);
}

ClassifierModel FitClassifier(const LabeledDataset& data, int subspace_dim, int layers,
                              const std::vector<int>& branches, std::uint64_t seed) {
  data.Validate();
  std::vector<Matrix> class_data;
  for (int c = 0; c < data.num_classes; ++c) class_data.push_back(data.ClassRows(c));
  return FitClassifierOnClasses(class_data, data.class_names, subspace_dim, layers, branches,
                                seed);
}

ClassifierModel FitDpClassifier(const LabeledDataset& data, const PrivacySpec& spec,
                                int subspace_dim, int layers, DpMode mode, std::uint64_t seed,
                                int max_steps, const std::vector<int>& branches) {
  data.Validate();
  spec.Validate();
  const auto count = static_cast<std::size_t>(data.num_classes);
  std::vector<Matrix> class_data(count);
  ParallelFor(count, [&](std::size_t c) {
    PrivacySpec local = spec;
    local.seed = DeriveSeed(spec.seed, "class", c);
    const Matrix rows = data.ClassRows(static_cast<int>(c));
    try {
      class_data[c] = mode == DpMode::kNoisy
                          ? PrivatizeMatrix(rows, local)
                          : FabricateBig(rows, subspace_dim, local, max_steps).fabricated;
    } catch (const BudgetExceededError& e) {
      throw BudgetExceededError("class '" + data.class_names[c] + "': " + e.what(),
                                e.error_trace());
    } catch (const Error& e) {
      throw Error("class '" + data.class_names[c] + "': " + e.what());
    }
  });
  Provenance provenance;
  provenance.kind =
      mode == DpMode::kNoisy ? Provenance::Kind::kDpNoisy : Provenance::Kind::kDpFabricated;
  provenance.spec = spec;
  provenance.max_steps = max_steps;
  return FitClassifierOnClasses(class_data, data.class_names, subspace_dim, layers, branches, seed,
                                provenance);
}

Vector MatchingScores(const Vector& distances) {
  const double total = distances.squaredNorm();
  if (total == 0.0) return Vector::Ones(distances.size());
  return (-distances.array().square() / total).exp();
}

ClassificationReport EvaluateClassifier(const ClassifierModel& model, const LabeledDataset& data) {
  if (data.size() == 0) throw Error("accuracy of an empty dataset is undefined");
  data.Validate();
  if (data.num_classes > model.num_classes()) {
    throw Error("dataset has more classes than the model");
  }
  ClassificationReport report;
  report.predictions = model.PredictRows(data.data);
  const auto c = static_cast<std::size_t>(model.num_classes());
  report.confusion.assign(c, std::vector<long>(c, 0));
  std::vector<long> support(c, 0);
  long correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int truth = data.labels[i];
    const int guess = report.predictions[i];
    ++support[static_cast<std::size_t>(truth)];
    if (guess >= 0) ++report.confusion[static_cast<std::size_t>(truth)][static_cast<std::size_t>(guess)];
    if (guess == truth) ++correct;
  }
  report.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  for (std::size_t k = 0; k < c; ++k) {
    report.per_class_accuracy.push_back(
        support[k] == 0 ? std::numeric_limits<double>::quiet_NaN()
                        : static_cast<double>(report.confusion[k][k]) / static_cast<double>(support[k]));
  }
  return report;
}

double Accuracy(const ClassifierModel& model, const LabeledDataset& data) {
  return EvaluateClassifier(model, data).accuracy;
}

namespace {

std::vector<double> SmallestDistances(const ClassifierModel& model, const Matrix& rows) {
  const Matrix d = model.DistanceMatrix(rows);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(d.rows()));
  for (Eigen::Index r = 0; r < d.rows(); ++r) {
    const double v = d.row(r).minCoeff();
    if (std::isfinite(v)) out.push_back(v);
  }
  return out;
}

}  // namespace

MisReport MembershipInferenceScore(const ClassifierModel& model, const LabeledDataset& train,
                                   const LabeledDataset& test, std::uint64_t seed) {
  if (train.size() == 0 || test.size() == 0) throw Error("membership inference needs train and test data");
  MisReport report;
  report.train_distances = SmallestDistances(model, train.data);
  report.test_distances = SmallestDistances(model, test.data);
  if (report.train_distances.empty() || report.test_distances.empty()) {
    throw EvaluationError("no finite class distance in a sample set");
  }
  const LsddResult lsdd = Lsdd(report.train_distances, report.test_distances, seed);
  report.mis = lsdd.estimate;
  report.sigma = lsdd.sigma;
  report.lambda = lsdd.lambda;
  return report;
}

RocCurve ComputeRoc(std::span<const double> scores, const std::vector<bool>& positive) {
  if (scores.size() != positive.size() || scores.empty()) {
    throw Error("ROC needs one label per score");
  }
  const auto pos = static_cast<double>(std::count(positive.begin(), positive.end(), true));
  const double neg = static_cast<double>(positive.size()) - pos;
  if (pos == 0.0 || neg == 0.0) throw Error("ROC needs both positive and negative samples");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return scores[x] > scores[y]; });
  RocCurve roc;
  roc.fpr.push_back(0.0);
  roc.tpr.push_back(0.0);
  double tp = 0.0;
  double fp = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (positive[order[k]]) tp += 1.0; else fp += 1.0;
    if (k + 1 < order.size() && scores[order[k + 1]] == scores[order[k]]) continue;
    roc.fpr.push_back(fp / neg);
    roc.tpr.push_back(tp / pos);
    const std::size_t n = roc.fpr.size();
    roc.auc += (roc.fpr[n - 1] - roc.fpr[n - 2]) * (roc.tpr[n - 1] + roc.tpr[n - 2]) / 2.0;
  }
  return roc;
}

}  // namespace kahm
