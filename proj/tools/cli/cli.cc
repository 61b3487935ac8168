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

#include "cli.h"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "kahm/classify.h"
#include "kahm/dataset.h"
#include "kahm/error.h"
#include "kahm/fabrication.h"
#include "kahm/federated.h"
#include "kahm/kahm.h"
#include "kahm/parallel.h"
#include "kahm/privacy.h"
#include "kahm/random.h"
#include "kahm/serialize.h"

namespace kahm::cli {
namespace {

using Json = nlohmann::ordered_json;

std::vector<std::string> Split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t at = text.find(sep, start);
    out.push_back(text.substr(start, at - start));
    if (at == std::string::npos) return out;
    start = at + 1;
  }
}

std::size_t ParseSize(const std::string& text, const std::string& what) {
  std::size_t used = 0;
  unsigned long long value = 0;
  try {
    value = std::stoull(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) throw Error("bad " + what + " '" + text + "'");
  return static_cast<std::size_t>(value);
}

// A CSV path, or idx:IMAGES:LABELS[:START:COUNT] for IDX files.
LabeledDataset LoadData(const std::string& spec, const std::string& label_column) {
  if (spec.rfind("idx:", 0) == 0) {
    const auto parts = Split(spec.substr(4), ':');
    if (parts.size() != 2 && parts.size() != 4) {
      throw Error("IDX data must be given as idx:IMAGES:LABELS[:START:COUNT]");
    }
    LabeledDataset data = LoadIdx(parts[0], parts[1]);
    if (parts.size() == 4) {
      const std::size_t start = ParseSize(parts[2], "row offset");
      const std::size_t count = ParseSize(parts[3], "row count");
      if (start + count > data.size() || count == 0) {
        throw Error("rows " + parts[2] + ":" + parts[3] + " exceed the " +
                    std::to_string(data.size()) + " available");
      }
      std::vector<std::size_t> rows(count);
      for (std::size_t i = 0; i < count; ++i) rows[i] = start + i;
      data = data.Subset(rows);
    }
    return data;
  }
  std::optional<std::string> selector;
  if (label_column != "none") selector = label_column;
  return LoadCsv(spec, selector);
}

// Re-indexes labels to the class order of a model, matching by name.
LabeledDataset AlignClasses(LabeledDataset data, const std::vector<std::string>& names) {
  std::map<std::string, int> index;
  for (std::size_t c = 0; c < names.size(); ++c) index.emplace(names[c], static_cast<int>(c));
  for (int& label : data.labels) {
    const std::string& name = data.class_names[static_cast<std::size_t>(label)];
    const auto it = index.find(name);
    if (it == index.end()) throw Error("label '" + name + "' is not a class of the model");
    label = it->second;
  }
  data.class_names = names;
  data.num_classes = static_cast<int>(names.size());
  return data;
}

Json NumberOrNull(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json ProvenanceJson(const ClassifierModel& model) {
  const Provenance& p = model.provenance();
  Json out;
  out["kind"] = ProvenanceName(p.kind);
  if (p.kind != Provenance::Kind::kPlain) {
    out["epsilon"] = p.spec.epsilon;
    out["delta"] = p.spec.delta;
    out["d"] = p.spec.d;
    out["privacy_seed"] = p.spec.seed;
    out["max_steps"] = p.max_steps;
  }
  out["fit_seed"] = model.config().seed;
  out["subspace_dim"] = model.config().subspace_dim;
  out["layers"] = model.config().layers;
  out["branches"] = model.config().branches;
  return out;
}

Json PerClass(const std::vector<double>& values, const std::vector<std::string>& names) {
  Json out = Json::object();
  for (std::size_t c = 0; c < values.size(); ++c) out[names[c]] = NumberOrNull(values[c]);
  return out;
}

void WriteJson(const std::string& path, const Json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << doc.dump(2) << '\n';
  if (!out) throw Error("failed writing " + path);
}

void WriteConfusion(const std::string& path, const ClassificationReport& report,
                    const std::vector<std::string>& names) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << "true\\predicted";
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  for (std::size_t t = 0; t < names.size(); ++t) {
    out << names[t];
    for (long v : report.confusion[t]) out << ',' << v;
    out << '\n';
  }
}

Json MetricsSkeleton(const std::string& command) {
  Json doc;
  doc["command"] = command;
  doc["accuracy"] = nullptr;
  doc["mis"] = nullptr;
  doc["per_class_accuracy"] = Json::object();
  return doc;
}

PrivacySpec MakeSpec(double epsilon, double delta, double d, std::uint64_t seed) {
  PrivacySpec spec{epsilon, delta, d, DeriveSeed(seed, "privacy")};
  spec.Validate();
  return spec;
}

struct DataOptions {
  std::string label_column = "-1";
};

struct PrivacyOptions {
  double epsilon = 1.0;
  double delta = 1e-5;
  double d = 2.0;
  int max_steps = kDefaultMaxSteps;
};

void AddPrivacyOptions(CLI::App* cmd, PrivacyOptions& o) {
  cmd->add_option("--epsilon", o.epsilon, "Privacy-loss bound")->capture_default_str();
  cmd->add_option("--delta", o.delta, "Failure probability")->capture_default_str();
  cmd->add_option("--d", o.d, "Adjacency bound on a single entry")->capture_default_str();
  cmd->add_option("--max-steps", o.max_steps, "Smoother iterate cap")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
}

Json PrivacyConfig(const PrivacyOptions& o) {
  return Json{{"epsilon", o.epsilon}, {"delta", o.delta}, {"d", o.d}, {"max_steps", o.max_steps}};
}

// --- train ---------------------------------------------------------------

struct TrainOptions {
  std::string data, out, metrics, mode = "plain";
  DataOptions data_options;
  PrivacyOptions privacy;
  int n = 0;
  int layers = 1;
  std::vector<int> branches;
  std::uint64_t seed = 0;
};

int RunTrain(const TrainOptions& o) {
  const LabeledDataset data = LoadData(o.data, o.data_options.label_column);
  const std::uint64_t fit_seed = DeriveSeed(o.seed, "fit");
  std::optional<ClassifierModel> model;
  if (o.mode == "plain") {
    model.emplace(FitClassifier(data, o.n, o.layers, o.branches, fit_seed));
  } else {
    const PrivacySpec spec = MakeSpec(o.privacy.epsilon, o.privacy.delta, o.privacy.d, o.seed);
    model.emplace(FitDpClassifier(data, spec, o.n, o.layers,
                                  o.mode == "noisy" ? DpMode::kNoisy : DpMode::kFabricated,
                                  fit_seed, o.privacy.max_steps, o.branches));
  }
  SaveClassifier(o.out, *model);
  std::cout << "trained " << model->num_classes() << " classes on " << data.size()
            << " rows -> " << o.out << '\n';
  if (!o.metrics.empty()) {
    const ClassificationReport report = EvaluateClassifier(*model, data);
    Json doc = MetricsSkeleton("train");
    doc["accuracy"] = report.accuracy;
    doc["per_class_accuracy"] = PerClass(report.per_class_accuracy, model->class_names());
    doc["config"] = {{"data", o.data},
                     {"label_column", o.data_options.label_column},
                     {"n", o.n},
                     {"layers", o.layers},
                     {"branches", o.branches},
                     {"mode", o.mode},
                     {"seed", o.seed},
                     {"privacy", PrivacyConfig(o.privacy)},
                     {"out", o.out}};
    doc["provenance"] = ProvenanceJson(*model);
    WriteJson(o.metrics, doc);
  }
  return 0;
}

// --- classify ------------------------------------------------------------

struct ClassifyOptions {
  std::string model, data, metrics, confusion, predictions;
  DataOptions data_options;
};

int RunClassify(const ClassifyOptions& o) {
  const ClassifierModel model = LoadClassifier(o.model);
  const LabeledDataset data =
      AlignClasses(LoadData(o.data, o.data_options.label_column), model.class_names());
  const ClassificationReport report = EvaluateClassifier(model, data);
  std::cout << "accuracy " << report.accuracy << " on " << data.size() << " rows\n";
  if (!o.predictions.empty()) {
    std::ofstream out(o.predictions, std::ios::binary);
    if (!out) throw Error("cannot write " + o.predictions);
    out << "row,predicted,true\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
      const int p = report.predictions[i];
      out << i << ',' << (p >= 0 ? model.class_names()[static_cast<std::size_t>(p)] : "") << ','
          << model.class_names()[static_cast<std::size_t>(data.labels[i])] << '\n';
    }
  }
  if (!o.confusion.empty()) WriteConfusion(o.confusion, report, model.class_names());
  if (!o.metrics.empty()) {
    Json doc = MetricsSkeleton("classify");
    doc["accuracy"] = report.accuracy;
    doc["per_class_accuracy"] = PerClass(report.per_class_accuracy, model.class_names());
    doc["config"] = {{"model", o.model},
                     {"data", o.data},
                     {"label_column", o.data_options.label_column}};
    doc["provenance"] = ProvenanceJson(model);
    WriteJson(o.metrics, doc);
  }
  return 0;
}

// --- mis -----------------------------------------------------------------

struct MisOptions {
  std::string model, train, test, metrics;
  DataOptions data_options;
  std::uint64_t seed = 0;
};

int RunMis(const MisOptions& o) {
  const ClassifierModel model = LoadClassifier(o.model);
  const LabeledDataset train =
      AlignClasses(LoadData(o.train, o.data_options.label_column), model.class_names());
  const LabeledDataset test =
      AlignClasses(LoadData(o.test, o.data_options.label_column), model.class_names());
  const MisReport mis = MembershipInferenceScore(model, train, test, DeriveSeed(o.seed, "mis"));
  const ClassificationReport report = EvaluateClassifier(model, test);
  std::cout << "mis " << mis.mis << ", test accuracy " << report.accuracy << '\n';
  if (!o.metrics.empty()) {
    Json doc = MetricsSkeleton("mis");
    doc["accuracy"] = report.accuracy;
    doc["mis"] = mis.mis;
    doc["per_class_accuracy"] = PerClass(report.per_class_accuracy, model.class_names());
    doc["mis_estimator"] = {{"sigma", mis.sigma},
                            {"lambda", mis.lambda},
                            {"train_points", mis.train_distances.size()},
                            {"test_points", mis.test_distances.size()}};
    doc["config"] = {{"model", o.model},
                     {"train", o.train},
                     {"test", o.test},
                     {"label_column", o.data_options.label_column},
                     {"seed", o.seed}};
    doc["provenance"] = ProvenanceJson(model);
    WriteJson(o.metrics, doc);
  }
  return 0;
}

// --- fabricate -----------------------------------------------------------

struct FabricateOptions {
  std::string data, out, metrics;
  DataOptions data_options;
  PrivacyOptions privacy;
  int n = 0;
  std::uint64_t seed = 0;
};

int RunFabricate(const FabricateOptions& o) {
  const LabeledDataset data = LoadData(o.data, o.data_options.label_column);
  const PrivacySpec spec = MakeSpec(o.privacy.epsilon, o.privacy.delta, o.privacy.d, o.seed);
  const auto classes = static_cast<std::size_t>(data.num_classes);
  std::vector<std::optional<BigFabricationResult>> results(classes);
  // Class c uses the same noise seed as a fabricated-mode classifier fit.
  ParallelFor(classes, [&](std::size_t c) {
    PrivacySpec local = spec;
    local.seed = DeriveSeed(spec.seed, "class", c);
    try {
      results[c].emplace(
          FabricateBig(data.ClassRows(static_cast<int>(c)), o.n, local, o.privacy.max_steps));
    } catch (const Error& e) {
      throw Error("class '" + data.class_names[c] + "': " + e.what());
    }
  });
  Eigen::Index rows = 0;
  for (const auto& r : results) rows += r->fabricated.rows();
  Matrix out(rows, data.data.cols());
  std::vector<int> labels;
  Json per_class = Json::object();
  Eigen::Index offset = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    const Matrix& fab = results[c]->fabricated;
    out.middleRows(offset, fab.rows()) = fab;
    offset += fab.rows();
    labels.insert(labels.end(), static_cast<std::size_t>(fab.rows()), static_cast<int>(c));
    Json subsets = Json::array();
    for (const auto& s : results[c]->subsets) {
      subsets.push_back({{"rows", s.fabricated.rows()},
                         {"m_tilde", s.m_tilde},
                         {"original_error", s.original_error},
                         {"achieved_error", s.achieved_error}});
    }
    per_class[data.class_names[c]] = subsets;
  }
  const bool labeled = o.data.rfind("idx:", 0) == 0 || o.data_options.label_column != "none";
  WriteCsv(o.out, out, labeled ? std::span<const int>(labels) : std::span<const int>(), data);
  std::cout << "fabricated " << out.rows() << " rows -> " << o.out << '\n';
  if (!o.metrics.empty()) {
    Json doc = MetricsSkeleton("fabricate");
    doc["fabrication"] = per_class;
    doc["config"] = {{"data", o.data},
                     {"label_column", o.data_options.label_column},
                     {"n", o.n},
                     {"seed", o.seed},
                     {"privacy", PrivacyConfig(o.privacy)},
                     {"out", o.out}};
    doc["provenance"] = {{"kind", "dp_fabricated"},
                         {"epsilon", spec.epsilon},
                         {"delta", spec.delta},
                         {"d", spec.d},
                         {"privacy_seed", spec.seed},
                         {"max_steps", o.privacy.max_steps}};
    WriteJson(o.metrics, doc);
  }
  return 0;
}

// --- fedsim --------------------------------------------------------------

struct FedsimOptions {
  std::string train, test, metrics, table, replay;
  DataOptions data_options;
  PrivacyOptions privacy;
  int scenario = 1;
  int parties = 0;
  int n = 0;
  int layers = 1;
  std::uint64_t seed = 0;
};

int RunFedsim(const FedsimOptions& o) {
  if (!o.replay.empty()) {
    // Aggregation from exchanged distances alone; no model is involved.
    const DistanceTable table = LoadDistanceTable(o.replay);
    const std::vector<int> labels = AggregateLabels(table);
    std::optional<double> accuracy;
    if (!o.test.empty()) {
      const LabeledDataset test = LoadData(o.test, o.data_options.label_column);
      if (test.size() != labels.size()) {
        throw Error("distance table has " + std::to_string(labels.size()) + " queries but test data " +
                    std::to_string(test.size()) + " rows");
      }
      long ok = 0;
      for (std::size_t i = 0; i < labels.size(); ++i) ok += labels[i] == test.labels[i];
      accuracy = static_cast<double>(ok) / static_cast<double>(labels.size());
      std::cout << "replayed accuracy " << *accuracy << '\n';
    }
    if (!o.metrics.empty()) {
      Json doc = MetricsSkeleton("fedsim");
      if (accuracy) doc["accuracy"] = *accuracy;
      doc["labels"] = labels;
      doc["config"] = {{"replay", o.replay}, {"test", o.test}};
      doc["provenance"] = {{"kind", "distance_table"}};
      WriteJson(o.metrics, doc);
    }
    return 0;
  }
  if (o.train.empty() || o.test.empty()) throw Error("fedsim needs --train and --test");
  const LabeledDataset train = LoadData(o.train, o.data_options.label_column);
  const LabeledDataset test =
      AlignClasses(LoadData(o.test, o.data_options.label_column), train.class_names);
  ScenarioConfig config;
  config.scenario = o.scenario;
  config.parties = o.parties;
  if (config.parties == 0) {
    config.parties = o.scenario == 1 ? train.num_classes
                     : o.scenario == 2 ? 2 * train.num_classes
                                        : 10;
  }
  config.spec = MakeSpec(o.privacy.epsilon, o.privacy.delta, o.privacy.d, o.seed);
  config.subspace_dim = o.n;
  config.layers = o.layers;
  config.seed = DeriveSeed(o.seed, "fit");
  config.max_steps = o.privacy.max_steps;
  const ScenarioResult result = SimulateScenario(train, test, config);
  std::cout << "scenario " << o.scenario << ": global " << result.global_accuracy
            << ", centralized " << result.centralized_accuracy << ", delta " << result.delta
            << '\n';
  if (!o.table.empty()) SaveDistanceTable(o.table, result.table);
  if (!o.metrics.empty()) {
    Json doc = MetricsSkeleton("fedsim");
    doc["accuracy"] = result.global_accuracy;
    doc["per_scenario_accuracy"] = {{std::to_string(o.scenario), result.global_accuracy}};
    doc["centralized_accuracy"] = result.centralized_accuracy;
    doc["delta"] = result.delta;
    Json models = Json::array();
    for (std::size_t p = 0; p < result.models.size(); ++p) {
      Json row = Json::array();
      for (std::size_t c = 0; c < result.models[p].size(); ++c) {
        row.push_back(result.models[p][c] ? Json(result.rows[p][c]) : Json(nullptr));
      }
      models.push_back(row);
    }
    doc["party_class_rows"] = models;
    doc["config"] = {{"train", o.train},
                     {"test", o.test},
                     {"label_column", o.data_options.label_column},
                     {"scenario", o.scenario},
                     {"parties", config.parties},
                     {"n", o.n},
                     {"layers", o.layers},
                     {"seed", o.seed},
                     {"privacy", PrivacyConfig(o.privacy)}};
    doc["provenance"] = {{"kind", "dp_fabricated"},
                         {"epsilon", config.spec.epsilon},
                         {"delta", config.spec.delta},
                         {"d", config.spec.d},
                         {"privacy_seed", config.spec.seed},
                         {"fit_seed", config.seed},
                         {"max_steps", config.max_steps}};
    WriteJson(o.metrics, doc);
  }
  return 0;
}

// --- bench ---------------------------------------------------------------

struct BenchOptions {
  std::string sizes = "100..1000";
  int p = 784;
  int n = 20;
  int repeats = 3;
  std::uint64_t seed = 0;
  std::string out;
};

// Comma-separated items: N, A..B (step A) or A..B:STEP.
std::vector<std::size_t> ParseSizes(const std::string& text) {
  std::vector<std::size_t> out;
  for (const std::string& item : Split(text, ',')) {
    const std::size_t dots = item.find("..");
    if (dots == std::string::npos) {
      out.push_back(ParseSize(item, "size"));
      continue;
    }
    const std::size_t start = ParseSize(item.substr(0, dots), "size");
    std::string rest = item.substr(dots + 2);
    std::size_t step = start;
    if (const std::size_t colon = rest.find(':'); colon != std::string::npos) {
      step = ParseSize(rest.substr(colon + 1), "step");
      rest = rest.substr(0, colon);
    }
    const std::size_t stop = ParseSize(rest, "size");
    if (step == 0 || stop < start) throw Error("bad size range '" + item + "'");
    for (std::size_t v = start; v <= stop; v += step) out.push_back(v);
  }
  if (out.empty()) throw Error("no sizes given");
  return out;
}

int RunBench(const BenchOptions& o) {
  const std::vector<std::size_t> sizes = ParseSizes(o.sizes);
  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!o.out.empty()) {
    file.open(o.out, std::ios::binary);
    if (!file) throw Error("cannot write " + o.out);
    out = &file;
  }
  *out << "N,p,n,seconds\n";
  for (std::size_t n_rows : sizes) {
    if (n_rows < 2) throw Error("bench sizes must be at least 2");
    Rng rng(DeriveSeed(o.seed, "bench", n_rows));
    Matrix data(static_cast<Eigen::Index>(n_rows), o.p);
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
      for (Eigen::Index j = 0; j < data.cols(); ++j) data(i, j) = 2.0 * rng.UniformOpen() - 1.0;
    }
    double best = std::numeric_limits<double>::infinity();
    for (int r = 0; r < o.repeats; ++r) {
      const auto start = std::chrono::steady_clock::now();
      const KahmModel model = KahmModel::Fit(data, o.n);
      const std::chrono::duration<double> took = std::chrono::steady_clock::now() - start;
      best = std::min(best, took.count());
      if (model.size() != data.rows()) throw Error("bench fit lost rows");
    }
    *out << n_rows << ',' << o.p << ',' << o.n << ',' << best << '\n';
  }
  return 0;
}

}  // namespace

int Run(int argc, const char* const* argv) {
  CLI::App app{"Kernel affine hull machines: training, privacy-preserving data fabrication, "
               "membership inference scoring and federated simulation."};
  app.require_subcommand(1);
  app.fallthrough();
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (default: KAHM_THREADS or all cores)")
      ->check(CLI::PositiveNumber);

  const auto add_data = [](CLI::App* cmd, DataOptions& d) {
    cmd->add_option("--label-column", d.label_column,
                    "Label column of CSV input: index (negative counts from the end), header "
                    "name, or 'none'")
        ->capture_default_str();
  };

  TrainOptions train;
  CLI::App* train_cmd = app.add_subcommand("train", "Fit a classifier and save it");
  train_cmd->add_option("--data", train.data, "Training data (CSV or idx:IMAGES:LABELS[:START:COUNT])")
      ->required();
  add_data(train_cmd, train.data_options);
  train_cmd->add_option("--n", train.n, "Subspace dimension")->required()->check(CLI::PositiveNumber);
  train_cmd->add_option("--layers", train.layers, "Layers per deep KAHM")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--branches", train.branches,
                        "Branches per class (one value for all classes, or one per class)");
  train_cmd->add_option("--seed", train.seed, "Master seed")->capture_default_str();
  train_cmd->add_option("--mode", train.mode, "plain, noisy or fabricated")
      ->capture_default_str()
      ->check(CLI::IsMember({"plain", "noisy", "fabricated"}));
  AddPrivacyOptions(train_cmd, train.privacy);
  train_cmd->add_option("--out", train.out, "Model file")->required();
  train_cmd->add_option("--metrics", train.metrics, "Metrics JSON (training accuracy)");

  ClassifyOptions classify;
  CLI::App* classify_cmd = app.add_subcommand("classify", "Classify labeled data with a model");
  classify_cmd->add_option("--model", classify.model, "Model file")->required();
  classify_cmd->add_option("--data", classify.data, "Data to classify")->required();
  add_data(classify_cmd, classify.data_options);
  classify_cmd->add_option("--metrics", classify.metrics, "Metrics JSON");
  classify_cmd->add_option("--confusion", classify.confusion, "Confusion matrix CSV");
  classify_cmd->add_option("--predictions", classify.predictions, "Per-row predictions CSV");

  MisOptions mis;
  CLI::App* mis_cmd = app.add_subcommand("mis", "Membership-inference score of a model");
  mis_cmd->add_option("--model", mis.model, "Model file")->required();
  mis_cmd->add_option("--train", mis.train, "Training data of the model")->required();
  mis_cmd->add_option("--test", mis.test, "Held-out data")->required();
  add_data(mis_cmd, mis.data_options);
  mis_cmd->add_option("--seed", mis.seed, "Master seed")->capture_default_str();
  mis_cmd->add_option("--metrics", mis.metrics, "Metrics JSON");

  FabricateOptions fabricate;
  CLI::App* fabricate_cmd =
      app.add_subcommand("fabricate", "Write differentially private fabricated data");
  fabricate_cmd->add_option("--data", fabricate.data, "Data to fabricate from")->required();
  add_data(fabricate_cmd, fabricate.data_options);
  fabricate_cmd->add_option("--n", fabricate.n, "Subspace dimension")
      ->required()
      ->check(CLI::PositiveNumber);
  fabricate_cmd->add_option("--seed", fabricate.seed, "Master seed")->capture_default_str();
  AddPrivacyOptions(fabricate_cmd, fabricate.privacy);
  fabricate_cmd->add_option("--out", fabricate.out, "Output CSV")->required();
  fabricate_cmd->add_option("--metrics", fabricate.metrics, "Metrics JSON");

  FedsimOptions fedsim;
  CLI::App* fedsim_cmd = app.add_subcommand("fedsim", "Simulate distance-only federated learning");
  fedsim_cmd->add_option("--train", fedsim.train, "Training data to distribute");
  fedsim_cmd->add_option("--test", fedsim.test, "Test data");
  add_data(fedsim_cmd, fedsim.data_options);
  fedsim_cmd->add_option("--scenario", fedsim.scenario, "1: class per party, 2: class halves, 3: random")
      ->capture_default_str()
      ->check(CLI::Range(1, 3));
  fedsim_cmd->add_option("--parties", fedsim.parties,
                         "Party count (default: C, 2C or 10 by scenario)");
  fedsim_cmd->add_option("--n", fedsim.n, "Subspace dimension")->check(CLI::PositiveNumber);
  fedsim_cmd->add_option("--layers", fedsim.layers, "Layers per deep KAHM")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  fedsim_cmd->add_option("--seed", fedsim.seed, "Master seed")->capture_default_str();
  AddPrivacyOptions(fedsim_cmd, fedsim.privacy);
  fedsim_cmd->add_option("--metrics", fedsim.metrics, "Metrics JSON");
  fedsim_cmd->add_option("--distance-table", fedsim.table, "Write the exchanged distances (CSV)");
  fedsim_cmd->add_option("--replay", fedsim.replay,
                         "Aggregate labels from a distance table instead of simulating");

  BenchOptions bench;
  CLI::App* bench_cmd = app.add_subcommand("bench", "Time KAHM fitting over a grid of sizes");
  bench_cmd->add_option("--N", bench.sizes, "Sample counts: N, A..B or A..B:STEP, comma separated")
      ->capture_default_str();
  bench_cmd->add_option("--p", bench.p, "Data dimension")->capture_default_str()->check(CLI::PositiveNumber);
  bench_cmd->add_option("--n", bench.n, "Subspace dimension")->capture_default_str()->check(CLI::PositiveNumber);
  bench_cmd->add_option("--repeats", bench.repeats, "Timed fits per size (minimum reported)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--seed", bench.seed, "Master seed")->capture_default_str();
  bench_cmd->add_option("--out", bench.out, "Output CSV (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  if (threads > 0) SetThreadCount(threads);

  try {
    if (train_cmd->parsed()) return RunTrain(train);
    if (classify_cmd->parsed()) return RunClassify(classify);
    if (mis_cmd->parsed()) return RunMis(mis);
    if (fabricate_cmd->parsed()) return RunFabricate(fabricate);
    if (fedsim_cmd->parsed()) {
      if (fedsim.replay.empty() && fedsim.n == 0) throw Error("fedsim needs --n");
      return RunFedsim(fedsim);
    }
    if (bench_cmd->parsed()) return RunBench(bench);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

int Run(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"kahm"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return Run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace kahm::cli
