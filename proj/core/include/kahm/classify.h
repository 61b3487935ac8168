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

#ifndef KAHM_CLASSIFY_H_
#define KAHM_CLASSIFY_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kahm/compositions.h"
#include "kahm/dataset.h"
#include "kahm/fabrication.h"
#include "kahm/privacy.h"

namespace kahm {

// How the training data of a classifier was produced.
struct Provenance {
  enum class Kind : std::uint32_t { kPlain = 0, kDpNoisy = 1, kDpFabricated = 2 };
  Kind kind = Kind::kPlain;
  PrivacySpec spec;  // meaningful for the DP kinds only
  int max_steps = kDefaultMaxSteps;
};

const char* ProvenanceName(Provenance::Kind kind);

struct ClassifierConfig {
  int subspace_dim = 0;
  int layers = 0;
  std::vector<int> branches;  // effective branch count per class
  std::uint64_t seed = 0;
};

struct Prediction {
  int label = -1;
  Vector distances;  // one per class, +inf where the class model failed
};

// One wide KAHM per class; a point gets the class at the smallest distance.
class ClassifierModel {
 public:
  static ClassifierModel FromParts(std::vector<WideKahm> classes, std::vector<std::string> names,
                                   ClassifierConfig config, Provenance provenance);

  // Throws EvaluationError when every class fails on y.
  Prediction Predict(const Vector& y) const;
  // M x C distances of a batch; classes are evaluated in parallel.
  Matrix DistanceMatrix(const Matrix& queries) const;
  // Labels of a batch; -1 for rows on which every class failed.
  std::vector<int> PredictRows(const Matrix& queries) const;

  const std::vector<WideKahm>& classes() const { return classes_; }
  const std::vector<std::string>& class_names() const { return names_; }
  int num_classes() const { return static_cast<int>(classes_.size()); }
  Eigen::Index dim() const { return classes_.front().dim(); }
  const ClassifierConfig& config() const { return config_; }
  const Provenance& provenance() const { return provenance_; }

 private:
  ClassifierModel() = default;
  std::vector<WideKahm> classes_;
  std::vector<std::string> names_;
  ClassifierConfig config_;
  Provenance provenance_;
};

// Index of the smallest finite value, first on ties; -1 if none is finite.
int ArgminIndex(std::span<const double> values);

// Fits class c on class_data[c] with seed DeriveSeed(seed, "class", c).
// branches holds one count per class, a single count for all classes, or is
// empty for the ceil(N_c / 1000) default.
ClassifierModel FitClassifierOnClasses(const std::vector<Matrix>& class_data,
                                       std::vector<std::string> names, int subspace_dim,
                                       int layers, const std::vector<int>& branches,
                                       std::uint64_t seed, Provenance provenance = {});

ClassifierModel FitClassifier(const LabeledDataset& data, int subspace_dim, int layers,
                              const std::vector<int>& branches, std::uint64_t seed);

enum class DpMode { kNoisy, kFabricated };

// kNoisy privatizes every class matrix and fits on it. kFabricated runs the
// fabrication pipeline per class and fits on the fabricated rows. Class c
// uses privacy seed DeriveSeed(spec.seed, "class", c).
ClassifierModel FitDpClassifier(const LabeledDataset& data, const PrivacySpec& spec,
                                int subspace_dim, int layers, DpMode mode, std::uint64_t seed,
                                int max_steps = kDefaultMaxSteps,
                                const std::vector<int>& branches = {});

// exp(-G_c^2 / sum G^2) per class; all ones when every distance is zero.
Vector MatchingScores(const Vector& distances);

struct ClassificationReport {
  double accuracy = 0.0;
  std::vector<double> per_class_accuracy;  // NaN for classes absent from the data
  std::vector<std::vector<long>> confusion;  // [true][predicted]
  std::vector<int> predictions;
};

ClassificationReport EvaluateClassifier(const ClassifierModel& model, const LabeledDataset& data);
double Accuracy(const ClassifierModel& model, const LabeledDataset& data);

struct MisReport {
  double mis = 0.0;
  std::vector<double> train_distances;
  std::vector<double> test_distances;
  double sigma = 0.0;
  double lambda = 0.0;
};

// Density difference between the smallest class distances of training and
// of test points.
MisReport MembershipInferenceScore(const ClassifierModel& model, const LabeledDataset& train,
                                   const LabeledDataset& test, std::uint64_t seed);

struct RocCurve {
  std::vector<double> fpr;
  std::vector<double> tpr;
  double auc = 0.0;
};

// Threshold sweep over scores, positives ranked first; ties share a point.
RocCurve ComputeRoc(std::span<const double> scores, const std::vector<bool>& positive);

}  // namespace kahm

#endif  // KAHM_CLASSIFY_H_
