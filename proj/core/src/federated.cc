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

#include "kahm/federated.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <string_view>
#include <utility>

#include "kahm/error.h"
#include "kahm/fabrication.h"
#include "kahm/parallel.h"
#include "kahm/random.h"

namespace kahm {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::string_view kTableHeader = "query_id,party,class,gamma";

std::size_t ParseIndex(std::string_view field, std::size_t line) {
  std::size_t value = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw ParseError("bad index '" + std::string(field) + "'", line);
  }
  return value;
}

double ParseGamma(std::string_view field, std::size_t line) {
  if (field == "inf" || field == "+inf") return kInf;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() || std::isnan(value) ||
      value < 0.0) {
    throw ParseError("bad distance '" + std::string(field) + "'", line);
  }
  return value;
}

}  // namespace

DistanceTable::DistanceTable(std::size_t queries, std::size_t parties, std::size_t classes)
    : queries_(queries), parties_(parties), classes_(classes),
      gamma_(queries * parties * classes, kInf) {}

void WriteDistanceTable(std::ostream& out, const DistanceTable& table) {
  out << kTableHeader << '\n';
  char buf[64];
  for (std::size_t q = 0; q < table.num_queries(); ++q) {
    for (std::size_t p = 0; p < table.num_parties(); ++p) {
      for (std::size_t c = 0; c < table.num_classes(); ++c) {
        const double g = table.at(q, p, c);
        out << q << ',' << p << ',' << c << ',';
        if (std::isinf(g)) {
          out << "inf";
        } else {
          const auto res = std::to_chars(buf, buf + sizeof(buf), g);
          out << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
        }
        out << '\n';
      }
    }
  }
}

DistanceTable ReadDistanceTable(std::istream& in) {
  struct Cell {
    std::size_t q, p, c;
    double g;
  };
  std::vector<Cell> cells;
  std::string text;
  std::size_t line = 0;
  std::size_t queries = 0, parties = 0, classes = 0;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.empty()) continue;
    if (line == 1 && text == kTableHeader) continue;
    std::string_view rest(text);
    std::string_view fields[4];
    for (int k = 0; k < 4; ++k) {
      const std::size_t comma = rest.find(',');
      if ((k < 3) == (comma == std::string_view::npos)) {
        throw ParseError("expected 4 fields", line);
      }
      fields[k] = rest.substr(0, comma);
      rest = k < 3 ? rest.substr(comma + 1) : std::string_view();
    }
    const Cell cell{ParseIndex(fields[0], line), ParseIndex(fields[1], line),
                    ParseIndex(fields[2], line), ParseGamma(fields[3], line)};
    queries = std::max(queries, cell.q + 1);
    parties = std::max(parties, cell.p + 1);
    classes = std::max(classes, cell.c + 1);
    cells.push_back(cell);
  }
  DistanceTable table(queries, parties, classes);
  for (const Cell& cell : cells) table.at(cell.q, cell.p, cell.c) = cell.g;
  return table;
}

void SaveDistanceTable(const std::string& path, const DistanceTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  WriteDistanceTable(out, table);
  if (!out) throw Error("failed writing " + path);
}

DistanceTable LoadDistanceTable(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return ReadDistanceTable(in);
}

std::vector<int> AggregateLabels(const DistanceTable& table) {
  std::vector<int> labels(table.num_queries(), -1);
  for (std::size_t q = 0; q < table.num_queries(); ++q) {
    double best = kInf;
    for (std::size_t c = 0; c < table.num_classes(); ++c) {
      for (std::size_t p = 0; p < table.num_parties(); ++p) {
        if (table.at(q, p, c) < best) {
          best = table.at(q, p, c);
          labels[q] = static_cast<int>(c);
        }
      }
    }
  }
  return labels;
}

Combination CombineKahms(const std::vector<const WideKahm*>& models, const Vector& y) {
  Combination out;
  out.distance = kInf;
  bool any = false;
  for (std::size_t q = 0; q < models.size(); ++q) {
    if (models[q] == nullptr) continue;
    any = true;
    try {
      WideEvaluation e = models[q]->Evaluate(y);
      if (e.distance < out.distance) {
        out.party = static_cast<int>(q);
        out.distance = e.distance;
        out.image = std::move(e.image);
      }
    } catch (const EvaluationError&) {
      // A failing model counts as infinitely far.
    }
  }
  if (!any) throw Error("no party holds a model");
  if (out.party < 0) throw EvaluationError("evaluation point too far from data");
  return out;
}

GlobalClassifier::GlobalClassifier(std::vector<Party> parties, int num_classes)
    : parties_(std::move(parties)), num_classes_(num_classes) {
  if (parties_.empty()) throw Error("a global classifier needs at least one party");
  for (int c = 0; c < num_classes_; ++c) {
    bool covered = false;
    for (const Party& p : parties_) {
      if (static_cast<int>(p.class_models.size()) != num_classes_) {
        throw Error("party " + std::to_string(p.id) + " does not list every class");
      }
      covered = covered || p.class_models[static_cast<std::size_t>(c)].has_value();
    }
    if (!covered) throw Error("class " + std::to_string(c) + " is not covered by any party");
  }
}

DistanceTable GlobalClassifier::Distances(const Matrix& queries) const {
  const auto m = static_cast<std::size_t>(queries.rows());
  const std::size_t np = parties_.size();
  const auto nc = static_cast<std::size_t>(num_classes_);
  DistanceTable table(m, np, nc);
  ParallelFor(np * nc, [&](std::size_t task) {
    const std::size_t p = task / nc;
    const std::size_t c = task % nc;
    const auto& model = parties_[p].class_models[c];
    if (!model) return;
    const Vector d = model->DistanceRows(queries).distance;
    for (std::size_t q = 0; q < m; ++q) table.at(q, p, c) = d(static_cast<Eigen::Index>(q));
  });
  return table;
}

std::vector<std::vector<std::size_t>> ScenarioPartition(const LabeledDataset& train, int scenario,
                                                        int parties, std::uint64_t seed) {
  train.Validate();
  const int classes = train.num_classes;
  std::vector<std::vector<std::size_t>> out;
  switch (scenario) {
    case 1:
      if (parties != classes) {
        throw Error("scenario 1 needs one party per class (" + std::to_string(classes) + ")");
      }
      for (int c = 0; c < classes; ++c) out.push_back(train.ClassIndices(c));
      break;
    case 2:
      if (parties != 2 * classes) {
        throw Error("scenario 2 needs two parties per class (" + std::to_string(2 * classes) + ")");
      }
      for (int c = 0; c < classes; ++c) {
        std::vector<std::size_t> rows = train.ClassIndices(c);
        Rng rng(DeriveSeed(seed, "scenario2", static_cast<std::uint64_t>(c)));
        rng.Shuffle(rows);
        const auto half = static_cast<std::ptrdiff_t>((rows.size() + 1) / 2);
        std::vector<std::size_t> first(rows.begin(), rows.begin() + half);
        std::vector<std::size_t> second(rows.begin() + half, rows.end());
        std::sort(first.begin(), first.end());
        std::sort(second.begin(), second.end());
        out.push_back(std::move(first));
        out.push_back(std::move(second));
      }
      break;
    case 3: {
      if (parties < 2) throw Error("scenario 3 needs at least 2 parties");
      out.resize(static_cast<std::size_t>(parties));
      Rng rng(DeriveSeed(seed, "scenario3"));
      for (std::size_t i = 0; i < train.size(); ++i) {
        out[rng.Index(static_cast<std::uint64_t>(parties))].push_back(i);
      }
      break;
    }
    default:
      throw Error("unknown scenario " + std::to_string(scenario));
  }
  return out;
}

ScenarioResult SimulateScenario(const LabeledDataset& train, const LabeledDataset& test,
                                const ScenarioConfig& config) {
  config.spec.Validate();
  test.Validate();
  if (test.size() == 0) throw Error("scenario needs test data");
  const auto held = ScenarioPartition(train, config.scenario, config.parties, config.seed);
  const auto np = held.size();
  const auto nc = static_cast<std::size_t>(train.num_classes);

  ScenarioResult result;
  result.rows.assign(np, std::vector<std::size_t>(nc, 0));
  result.models.assign(np, std::vector<bool>(nc, false));
  std::vector<std::vector<Matrix>> fabricated(np, std::vector<Matrix>(nc));
  for (std::size_t p = 0; p < np; ++p) {
    for (std::size_t i : held[p]) ++result.rows[p][static_cast<std::size_t>(train.labels[i])];
  }

  ParallelFor(np * nc, [&](std::size_t task) {
    const std::size_t p = task / nc;
    const std::size_t c = task % nc;
    std::vector<std::size_t> rows;
    for (std::size_t i : held[p]) {
      if (static_cast<std::size_t>(train.labels[i]) == c) rows.push_back(i);
    }
    const Matrix local = SelectRows(train.data, rows);
    if (rows.empty() || DedupeRows(local).rows() < 2) return;
    PrivacySpec spec = config.spec;
    spec.seed = DeriveSeed(config.spec.seed, "party-class", task);
    try {
      Matrix fab = FabricateBig(local, config.subspace_dim, spec, config.max_steps).fabricated;
      if (DedupeRows(fab).rows() >= 2) fabricated[p][c] = std::move(fab);
    } catch (const BudgetExceededError& e) {
      throw BudgetExceededError("party " + std::to_string(p) + ", class " + std::to_string(c) +
                                    ": " + e.what(), e.error_trace());
    }
  });

  std::vector<Party> parties(np);
  std::vector<std::vector<std::optional<WideKahm>>> fits(np,
                                                         std::vector<std::optional<WideKahm>>(nc));
  ParallelFor(np * nc, [&](std::size_t task) {
    const std::size_t p = task / nc;
    const std::size_t c = task % nc;
    if (fabricated[p][c].rows() == 0) return;
    fits[p][c].emplace(WideKahm::Fit(fabricated[p][c], config.subspace_dim, config.layers,
                                     std::nullopt, DeriveSeed(config.seed, "class", c)));
  });
  for (std::size_t p = 0; p < np; ++p) {
    parties[p].id = static_cast<int>(p);
    for (std::size_t c = 0; c < nc; ++c) {
      result.models[p][c] = fits[p][c].has_value();
      parties[p].class_models.push_back(std::move(fits[p][c]));
    }
  }
  const GlobalClassifier global(std::move(parties), static_cast<int>(nc));

  std::vector<Matrix> pooled(nc);
  for (std::size_t c = 0; c < nc; ++c) {
    Eigen::Index rows = 0;
    for (std::size_t p = 0; p < np; ++p) rows += fabricated[p][c].rows();
    pooled[c].resize(rows, train.data.cols());
    Eigen::Index offset = 0;
    for (std::size_t p = 0; p < np; ++p) {
      pooled[c].middleRows(offset, fabricated[p][c].rows()) = fabricated[p][c];
      offset += fabricated[p][c].rows();
    }
  }
  Provenance provenance;
  provenance.kind = Provenance::Kind::kDpFabricated;
  provenance.spec = config.spec;
  provenance.max_steps = config.max_steps;
  const ClassifierModel central =
      FitClassifierOnClasses(pooled, train.class_names, config.subspace_dim, config.layers, {},
                             config.seed, provenance);

  result.table = global.Distances(test.data);
  result.global_labels = AggregateLabels(result.table);
  result.centralized_labels = central.PredictRows(test.data);
  long global_ok = 0, central_ok = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    global_ok += result.global_labels[i] == test.labels[i];
    central_ok += result.centralized_labels[i] == test.labels[i];
  }
  const auto n = static_cast<double>(test.size());
  result.global_accuracy = static_cast<double>(global_ok) / n;
  result.centralized_accuracy = static_cast<double>(central_ok) / n;
  result.delta = result.global_accuracy - result.centralized_accuracy;
  return result;
}

}  // namespace kahm
