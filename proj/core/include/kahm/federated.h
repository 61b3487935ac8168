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

#ifndef KAHM_FEDERATED_H_
#define KAHM_FEDERATED_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "kahm/classify.h"
#include "kahm/compositions.h"
#include "kahm/dataset.h"
#include "kahm/privacy.h"

namespace kahm {

// A data holder with an optional model per class (absent when it holds too
// few samples of that class).
struct Party {
  int id = 0;
  std::vector<std::optional<WideKahm>> class_models;
};

// Distances reported by the parties: gamma(query, party, class), +inf where
// the party has no model for the class or the model failed.
class DistanceTable {
 public:
  DistanceTable() = default;
  DistanceTable(std::size_t queries, std::size_t parties, std::size_t classes);

  double& at(std::size_t query, std::size_t party, std::size_t cls) {
    return gamma_[(query * parties_ + party) * classes_ + cls];
  }
  double at(std::size_t query, std::size_t party, std::size_t cls) const {
    return gamma_[(query * parties_ + party) * classes_ + cls];
  }
  std::size_t num_queries() const { return queries_; }
  std::size_t num_parties() const { return parties_; }
  std::size_t num_classes() const { return classes_; }

 private:
  std::size_t queries_ = 0;
  std::size_t parties_ = 0;
  std::size_t classes_ = 0;
  std::vector<double> gamma_;
};

// CSV with header query_id,party,class,gamma; indices are 0-based and gamma
// is written in shortest round-trip form, "inf" for missing models. Reading
// infers the table size from the largest indices; absent cells are +inf.
void WriteDistanceTable(std::ostream& out, const DistanceTable& table);
DistanceTable ReadDistanceTable(std::istream& in);
void SaveDistanceTable(const std::string& path, const DistanceTable& table);
DistanceTable LoadDistanceTable(const std::string& path);

// label(query) = argmin_c min_party gamma; smallest index wins ties; -1 when
// a query has no finite distance.
std::vector<int> AggregateLabels(const DistanceTable& table);

struct Combination {
  int party = -1;
  double distance = 0.0;
  Vector image;
};

// Answers y with the party model nearest to it; null entries are missing
// models. Throws when no model is present or all fail.
Combination CombineKahms(const std::vector<const WideKahm*>& models, const Vector& y);

class GlobalClassifier {
 public:
  // Every class must be covered by at least one party.
  GlobalClassifier(std::vector<Party> parties, int num_classes);

  // The only thing the aggregator sees: each party's scalar distances.
  DistanceTable Distances(const Matrix& queries) const;
  std::vector<int> PredictRows(const Matrix& queries) const {
    return AggregateLabels(Distances(queries));
  }

  const std::vector<Party>& parties() const { return parties_; }
  int num_classes() const { return num_classes_; }

 private:
  std::vector<Party> parties_;
  int num_classes_ = 0;
};

// Row indices of `train` held by each party.
//   1: party c holds class c (requires parties == classes);
//   2: each class is shuffled and halved between parties 2c and 2c+1
//      (requires parties == 2 * classes);
//   3: every row goes to a uniformly drawn party (parties >= 2).
std::vector<std::vector<std::size_t>> ScenarioPartition(const LabeledDataset& train, int scenario,
                                                        int parties, std::uint64_t seed);

struct ScenarioConfig {
  int scenario = 1;
  int parties = 0;
  PrivacySpec spec;
  int subspace_dim = 0;
  int layers = 1;
  std::uint64_t seed = 0;
  int max_steps = kDefaultMaxSteps;
};

struct ScenarioResult {
  double global_accuracy = 0.0;
  double centralized_accuracy = 0.0;
  double delta = 0.0;  // global - centralized
  std::vector<int> global_labels;
  std::vector<int> centralized_labels;
  DistanceTable table;
  // rows[q][c]: training rows of class c at party q.
  std::vector<std::vector<std::size_t>> rows;
  // models[q][c]: whether party q fitted a model for class c.
  std::vector<std::vector<bool>> models;
};

// Each party fabricates its class matrices (seed DeriveSeed(spec.seed,
// "party-class", q * C + c)) and fits local models; the centralized
// reference pools the same fabricated rows. Party q fits class c with seed
// DeriveSeed(seed, "class", c), exactly as the centralized classifier does.
ScenarioResult SimulateScenario(const LabeledDataset& train, const LabeledDataset& test,
                                const ScenarioConfig& config);

}  // namespace kahm

#endif  // KAHM_FEDERATED_H_
