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

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "kahm/classify.h"
#include "kahm/dataset.h"
#include "kahm/error.h"
#include "kahm/federated.h"
#include "test_support.h"

namespace kahm {
namespace {

using testing::Blobs;
constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<Party> PartiesFrom(const ClassifierModel& model) {
  Party p;
  for (const WideKahm& w : model.classes()) p.class_models.emplace_back(w);
  return {p};
}

TEST(Global, SinglePartyMatchesLocalClassifier) {
  const LabeledDataset train = Blobs(80, 0.2, 201);
  const LabeledDataset test = Blobs(60, 0.2, 202);
  const ClassifierModel local = FitClassifier(train, 2, 2, {}, 3);
  const GlobalClassifier global(PartiesFrom(local), 3);
  EXPECT_EQ(global.PredictRows(test.data), local.PredictRows(test.data));
  const DistanceTable t = global.Distances(test.data);
  const Matrix d = local.DistanceMatrix(test.data);
  for (std::size_t q = 0; q < t.num_queries(); ++q) {
    for (std::size_t c = 0; c < 3; ++c) {
      EXPECT_EQ(t.at(q, 0, c), d(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(c)));
    }
  }
}

TEST(Global, EmptyPartyNeverChangesPredictions) {
  const LabeledDataset train = Blobs(80, 0.2, 203);
  const LabeledDataset test = Blobs(60, 0.2, 204);
  const ClassifierModel local = FitClassifier(train, 2, 1, {}, 3);
  std::vector<Party> parties = PartiesFrom(local);
  Party idle;
  idle.id = 1;
  idle.class_models.resize(3);
  parties.push_back(idle);
  const GlobalClassifier global(parties, 3);
  const DistanceTable t = global.Distances(test.data);
  for (std::size_t q = 0; q < t.num_queries(); ++q) {
    for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(t.at(q, 1, c), kInf);
  }
  EXPECT_EQ(AggregateLabels(t), local.PredictRows(test.data));
}

TEST(Global, UncoveredClassIsRejected) {
  Party empty;
  empty.class_models.resize(2);
  EXPECT_THROW(GlobalClassifier({empty}, 2), Error);
}

TEST(AggregateLabels, MinimumOverPartiesThenClasses) {
  DistanceTable t(3, 2, 2);
  // query 0: party 1 holds the closest class-1 model.
  t.at(0, 0, 0) = 0.5;
  t.at(0, 0, 1) = 0.9;
  t.at(0, 1, 0) = kInf;
  t.at(0, 1, 1) = 0.1;
  // query 1: tie between classes goes to class 0.
  t.at(1, 0, 0) = 0.3;
  t.at(1, 0, 1) = 0.3;
  t.at(1, 1, 0) = kInf;
  t.at(1, 1, 1) = kInf;
  // query 2: nothing finite.
  for (std::size_t q = 0; q < 2; ++q) {
    for (std::size_t c = 0; c < 2; ++c) t.at(2, q, c) = kInf;
  }
  EXPECT_EQ(AggregateLabels(t), (std::vector<int>{1, 0, -1}));
}

TEST(CombineKahms, NearestPartyModelAnswers) {
  const LabeledDataset blobs = Blobs(60, 0.1, 205);
  std::vector<WideKahm> models;
  for (int c = 0; c < 3; ++c) {
    models.push_back(WideKahm::Fit(blobs.ClassRows(c), 2, 1, std::nullopt, 11));
  }
  Vector y(2);
  y << testing::kBlobCenters[1][0], testing::kBlobCenters[1][1];
  const Combination all = CombineKahms({&models[0], &models[1], &models[2]}, y);
  EXPECT_EQ(all.party, 1);
  EXPECT_EQ(all.distance, models[1].Distance(y));
  EXPECT_EQ(all.image, models[1].Evaluate(y).image);
  const Combination missing = CombineKahms({&models[0], nullptr, &models[2]}, y);
  EXPECT_NE(missing.party, 1);
  EXPECT_THROW(CombineKahms({nullptr, nullptr}, y), Error);
}

TEST(DistanceTable, RoundTripsExactly) {
  DistanceTable t(4, 3, 2);
  Rng rng(206);
  for (std::size_t q = 0; q < 4; ++q) {
    for (std::size_t p = 0; p < 3; ++p) {
      for (std::size_t c = 0; c < 2; ++c) t.at(q, p, c) = rng.UniformOpen() / 3.0;
    }
  }
  t.at(2, 1, 0) = kInf;
  t.at(3, 2, 1) = 0.0;
  std::stringstream s;
  WriteDistanceTable(s, t);
  EXPECT_NE(s.str().find("inf"), std::string::npos);
  const DistanceTable back = ReadDistanceTable(s);
  ASSERT_EQ(back.num_queries(), 4u);
  ASSERT_EQ(back.num_parties(), 3u);
  ASSERT_EQ(back.num_classes(), 2u);
  for (std::size_t q = 0; q < 4; ++q) {
    for (std::size_t p = 0; p < 3; ++p) {
      for (std::size_t c = 0; c < 2; ++c) EXPECT_EQ(back.at(q, p, c), t.at(q, p, c));
    }
  }
}

TEST(DistanceTable, MalformedInputFails) {
  const char* bad[] = {
      "query_id,party,class,gamma\n0,0,0\n",
      "query_id,party,class,gamma\n0,0,x,1.0\n",
      "query_id,party,class,gamma\n0,0,0,abc\n",
      "query_id,party,class,gamma\n-1,0,0,1.0\n",
      "q,p,c,g\n0,0,0,1.0\n",
  };
  for (const char* text : bad) {
    std::stringstream s(text);
    EXPECT_THROW(ReadDistanceTable(s), ParseError) << text;
  }
}

TEST(ScenarioPartition, FollowsScenarioRules) {
  const LabeledDataset train = Blobs(41, 0.2, 207);
  const auto one = ScenarioPartition(train, 1, 3, 1);
  ASSERT_EQ(one.size(), 3u);
  for (int q = 0; q < 3; ++q) {
    EXPECT_EQ(one[q].size(), 41u);
    for (std::size_t r : one[q]) EXPECT_EQ(train.labels[r], q);
  }
  const auto two = ScenarioPartition(train, 2, 6, 1);
  ASSERT_EQ(two.size(), 6u);
  for (int c = 0; c < 3; ++c) {
    EXPECT_EQ(two[2 * c].size() + two[2 * c + 1].size(), 41u);
    EXPECT_LE(std::abs(static_cast<long>(two[2 * c].size()) -
                       static_cast<long>(two[2 * c + 1].size())),
              1);
    for (std::size_t r : two[2 * c]) EXPECT_EQ(train.labels[r], c);
    for (std::size_t r : two[2 * c + 1]) EXPECT_EQ(train.labels[r], c);
  }
  const auto three = ScenarioPartition(train, 3, 5, 1);
  std::vector<int> seen(train.size(), 0);
  for (const auto& rows : three) {
    for (std::size_t r : rows) ++seen[r];
  }
  EXPECT_EQ(seen, std::vector<int>(train.size(), 1));
  EXPECT_EQ(ScenarioPartition(train, 3, 5, 1), three);
  EXPECT_THROW(ScenarioPartition(train, 1, 4, 1), Error);
  EXPECT_THROW(ScenarioPartition(train, 2, 3, 1), Error);
  EXPECT_THROW(ScenarioPartition(train, 4, 3, 1), Error);
}

TEST(Scenario, ClassPerPartyMatchesCentralizedExactly) {
  const LabeledDataset train = Blobs(60, 0.25, 208);
  const LabeledDataset test = Blobs(100, 0.25, 209);
  ScenarioConfig config;
  config.scenario = 1;
  config.parties = 3;
  config.spec = {4.0, 1e-5, 2.0, 210};
  config.subspace_dim = 2;
  config.seed = 211;
  const ScenarioResult r = SimulateScenario(train, test, config);
  EXPECT_EQ(r.delta, 0.0);
  EXPECT_EQ(r.global_labels, r.centralized_labels);
  EXPECT_EQ(AggregateLabels(r.table), r.global_labels);
}

// Splitting each class between two parties costs little accuracy.
TEST(Scenario, HalvedClassesStayCloseToCentralized) {
  const LabeledDataset images = LoadIdx(testing::MnistImages(), testing::MnistLabels());
  std::vector<std::size_t> train_rows(1000), test_rows(500);
  for (std::size_t i = 0; i < 1000; ++i) train_rows[i] = i;
  for (std::size_t i = 0; i < 500; ++i) test_rows[i] = 5000 + i;
  const LabeledDataset train = images.Subset(train_rows);
  const LabeledDataset test = images.Subset(test_rows);
  double drop = 0.0;
  const int repeats = 2;
  for (int k = 0; k < repeats; ++k) {
    ScenarioConfig config;
    config.scenario = 2;
    config.parties = 20;
    config.spec = {16.0, 1e-5, 1.0, 300u + k};
    config.subspace_dim = 10;
    config.seed = 400u + k;
    const ScenarioResult r = SimulateScenario(train, test, config);
    drop += (r.centralized_accuracy - r.global_accuracy) / repeats;
  }
  EXPECT_LE(drop, 0.02);
}

}  // namespace
}  // namespace kahm
