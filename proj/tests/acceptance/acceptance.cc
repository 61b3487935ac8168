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

// Acceptance runner: one PASS/FAIL line per criterion, non-zero exit when
// any criterion fails. Run with a criterion number to check only that one.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "cli.h"
#include "kahm/classify.h"
#include "kahm/compositions.h"
#include "kahm/fabrication.h"
#include "kahm/federated.h"
#include "kahm/kahm.h"
#include "kahm/kernel_rls.h"
#include "kahm/lsdd.h"
#include "kahm/privacy.h"
#include "kahm/serialize.h"
#include "test_support.h"

namespace kahm {
namespace {

using Clock = std::chrono::steady_clock;
using testing::Blobs;
using testing::Differences;
using testing::RelativeError;
using testing::UniformMatrix;
using testing::UniformVector;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

std::string Fmt(const char* format, auto... args) {
  char buffer[512];
  std::snprintf(buffer, sizeof(buffer), format, args...);
  return buffer;
}

// Scalar instance K = [[1]], Y = [[1]]: the map is ((e + 2) / (e + 3))^2.
Outcome FixedPointOracle() {
  const Matrix k = Matrix::Ones(1, 1);
  const Matrix y = Matrix::Ones(1, 1);
  const auto start = Clock::now();
  const FixedPointResult fp = FindLambdaStar(k, y);
  const double micros = Seconds(start) * 1e6;

  const auto g = [](double e) { return std::pow((e + 2.0) / (e + 3.0), 2) - e; };
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) > 0.0 ? lo : hi) = mid;
  }
  const double oracle = 0.5 * (lo + hi);
  const bool pass = std::abs(fp.e_hat - 0.5116) <= 1e-3 &&
                    std::abs(fp.lambda_star - 2.5116) <= 1e-3 &&
                    std::abs(fp.e_hat - oracle) <= 1e-9 && fp.iterations < 100 && micros < 1000.0;
  return {pass, Fmt("e=%.6f (bisection %.6f) lambda*=%.6f iterations=%d time=%.1fus", fp.e_hat,
                    oracle, fp.lambda_star, fp.iterations, micros)};
}

// Probe points: half jittered training rows, half spread over an enlarged box.
Matrix Probes(const Matrix& data, int count, Rng& rng) {
  const Vector lo = data.colwise().minCoeff();
  const Vector hi = data.colwise().maxCoeff();
  const Vector span = (hi - lo).cwiseMax(1e-3);
  Matrix out(count, data.cols());
  for (int i = 0; i < count; ++i) {
    if (i % 2 == 0) {
      const auto r = static_cast<Eigen::Index>(rng.Index(static_cast<std::uint64_t>(data.rows())));
      for (Eigen::Index j = 0; j < data.cols(); ++j) {
        out(i, j) = data(r, j) + 0.05 * span(j) * rng.Normal();
      }
    } else {
      for (Eigen::Index j = 0; j < data.cols(); ++j) {
        out(i, j) = lo(j) - span(j) + 3.0 * span(j) * rng.UniformOpen();
      }
    }
  }
  return out;
}

Outcome BoundSuite() {
  const auto start = Clock::now();
  Rng rng(DeriveSeed(20260401, "bounds"));
  long checks = 0;
  long violations[5] = {0, 0, 0, 0, 0};
  constexpr int kDatasets = 200;
  constexpr int kProbes = 50;
  for (int t = 0; t < kDatasets; ++t) {
    const int n_rows = 5 + static_cast<int>(rng.Index(196));
    const int p = 2 + static_cast<int>(rng.Index(49));
    const int n = 1 + static_cast<int>(rng.Index(static_cast<std::uint64_t>(p)));
    const double scale = std::pow(10.0, -1.0 + 2.0 * rng.UniformOpen());
    const Matrix data = scale * UniformMatrix(n_rows, p, rng);
    const Matrix probes = Probes(data, kProbes, rng);

    // Range and monotonicity of the MSE map on the model's own kernel.
    const KahmModel model = KahmModel::Fit(data, n);
    const Matrix kernel = model.TrainingKernel();
    const double ceiling = data.squaredNorm() / (static_cast<double>(p) * n_rows);
    const double tau = 2.0 * ceiling;
    double previous = 0.0;
    for (int k = 1; k <= 6; ++k) {
      const double e = ceiling * std::pow(10.0, k - 5.0);
      const double r = MseMap(kernel, data, e, tau);
      if (!(r > 0.0 && r < ceiling && r > previous)) ++violations[0];
      previous = r;
    }
    const FixedPointResult& fp = model.fixed_point();
    if (!(fp.e_hat > 0.0 && fp.e_hat < ceiling && fp.lambda_star > tau)) ++violations[0];

    // Independent spectrum for the bounds.
    const Vector mu = Eigen::SelfAdjointEigenSolver<Matrix>(kernel, Eigen::EigenvaluesOnly)
                          .eigenvalues();
    const double lambda = model.lambda_star();
    const double tight = (lambda + mu.maxCoeff()) / (lambda + mu.minCoeff());
    const double loose = 1.0 + p * std::pow(n_rows, 2.0) / (2.0 * data.squaredNorm());
    const double y_norm = SpectralNorm(data);
    if (!(tight < loose)) ++violations[1];

    const int layers = 1 + static_cast<int>(rng.Index(static_cast<std::uint64_t>(std::min(n, 3))));
    const DeepKahm deep = DeepKahm::Fit(data, n, layers);
    const int branches = 1 + static_cast<int>(rng.Index(static_cast<std::uint64_t>(
                                 std::min(3, n_rows / 4))));
    const WideKahm wide = WideKahm::Fit(data, n, layers, branches, rng.Next());
    double wide_bound = std::numeric_limits<double>::infinity();
    for (const DeepKahm& b : wide.branches()) {
      const Matrix& ys = b.data();
      wide_bound = std::min(wide_bound, 1.0 + p * std::pow(static_cast<double>(ys.rows()), 2.0) /
                                                  (2.0 * ys.squaredNorm()));
    }

    for (int i = 0; i < kProbes; ++i) {
      const Vector y = probes.row(i).transpose();
      const Matrix diff = Differences(data, y);
      ++checks;
      try {
        const Vector image = model.Evaluate(y);
        const double gamma = (y - image).norm();
        if (!(image.norm() < y_norm * tight)) ++violations[1];
        if (!(gamma / SpectralNorm(diff) < tight)) ++violations[2];
        const double gamma_deep = deep.Distance(y);
        if (!(gamma_deep <= gamma) || !(gamma_deep / SpectralNorm(diff) < loose)) ++violations[3];
        if (!(wide.Distance(y) / diff.norm() < wide_bound)) ++violations[4];
      } catch (const Error&) {
        for (long& v : violations) ++v;
      }
    }
  }
  const double took = Seconds(start);
  const long total = std::accumulate(std::begin(violations), std::end(violations), 0L);
  return {total == 0 && took < 300.0,
          Fmt("%d datasets x %d probes (%ld points): violations mse=%ld norm=%ld ratio=%ld deep=%ld wide=%ld "
              "in %.1fs",
              kDatasets, kProbes, checks, violations[0], violations[1], violations[2],
              violations[3], violations[4], took)};
}

// The smoothing step equals multiplication by H = (K + lambda I)^-1 K.
Outcome SmootherIdentity() {
  Rng rng(DeriveSeed(20260401, "smoother"));
  double worst_identity = 0.0;
  double worst_h = 0.0;
  int steps = 0;
  for (int t = 0; t < 20; ++t) {
    const int n_rows = 10 + static_cast<int>(rng.Index(51));
    const int p = 2 + static_cast<int>(rng.Index(7));
    const int n = 1 + static_cast<int>(rng.Index(static_cast<std::uint64_t>(p)));
    const PrivacySpec spec{2.0, 1e-5, 2.0, rng.Next()};
    const Matrix noisy = PrivatizeMatrix(UniformMatrix(n_rows, p, rng), spec);
    const SmootherTrace trace = Smooth(noisy, n, 11);
    for (std::size_t m = 0; m + 1 < trace.iterates.size(); ++m) {
      const KahmModel& model = trace.models[m];
      const Matrix kernel = model.TrainingKernel();
      Matrix shifted = kernel;
      shifted.diagonal().array() += model.lambda_star();
      const Matrix h = shifted.llt().solve(kernel);
      worst_identity =
          std::max(worst_identity, RelativeError(trace.iterates[m + 1], h * trace.iterates[m]));
      worst_h = std::max(worst_h, SpectralNorm(h));
      ++steps;
    }
  }
  return {worst_identity <= 1e-10 && worst_h < 1.0,
          Fmt("%d steps over 20 traces: max relative error %.2e, max ||H||=%.6f", steps,
              worst_identity, worst_h)};
}

double LaplaceCdf(double x) { return x < 0.0 ? 0.5 * std::exp(x) : 1.0 - 0.5 * std::exp(-x); }

Outcome DpSampler() {
  const PrivacySpec spec{1.0, 0.05, 1.0, DeriveSeed(20260401, "sampler")};
  constexpr std::size_t kDraws = 1000000;
  std::vector<double> draws = SampleNoise(spec, kDraws);
  std::vector<double> nonzero;
  nonzero.reserve(kDraws);
  for (double v : draws) {
    if (v != 0.0) nonzero.push_back(v);
  }
  const double zero_fraction = 1.0 - static_cast<double>(nonzero.size()) / kDraws;
  std::sort(nonzero.begin(), nonzero.end());
  double ks = 0.0;
  const double count = static_cast<double>(nonzero.size());
  for (std::size_t i = 0; i < nonzero.size(); ++i) {
    const double f = LaplaceCdf(nonzero[i]);
    ks = std::max({ks, std::abs(f - i / count), std::abs((i + 1) / count - f)});
  }
  // Dyadic grid points t = k / 2^30, so 1 - t is exact in binary.
  double worst = 0.0;
  constexpr double kUnit = 0x1.0p-30;
  for (int k = 0; k < 10000; ++k) {
    const double t = std::floor((k + 0.5) / 10000.0 / kUnit) * kUnit;
    if (t <= 0.0 || t >= 1.0) continue;
    worst = std::max(worst, std::abs(InverseCdf(t, spec) + InverseCdf(1.0 - t, spec)));
  }
  return {std::abs(zero_fraction - 0.05) <= 0.005 && ks <= 0.005 && worst <= 1e-12,
          Fmt("zero fraction %.5f, KS %.5f, max |F^-1(t)+F^-1(1-t)| %.2e", zero_fraction, ks,
              worst)};
}

Outcome SmootherConvergence() {
  const LabeledDataset blobs = Blobs(200, 0.15, DeriveSeed(20260401, "blobs-train"));
  // n = 1: a proper subspace of the plane.
  const PrivacySpec spec{2.0, 1e-5, 2.0, DeriveSeed(20260401, "convergence")};
  const Matrix noisy = PrivatizeMatrix(blobs.data, spec);
  const SmootherTrace trace = Smooth(noisy, 1, 65);
  const double ratio = trace.errors[64] / trace.errors[0];
  bool fabricated = true;
  std::string steps;
  for (double epsilon : {1.0, 4.0, 16.0}) {
    const PrivacySpec dp{epsilon, 1e-5, 2.0, DeriveSeed(20260401, "fabricate", static_cast<std::uint64_t>(epsilon))};
    try {
      const double budget = ModelingError(blobs.data, 2);
      const FabricationResult result = Fabricate(PrivatizeMatrix(blobs.data, dp), 2, budget);
      fabricated = fabricated && result.achieved_error <= result.original_error;
      steps += Fmt(" eps=%g:M=%d", epsilon, result.m_tilde);
    } catch (const BudgetExceededError&) {
      fabricated = false;
      steps += Fmt(" eps=%g:exceeded", epsilon);
    }
  }
  return {ratio <= 0.01 && fabricated,
          Fmt("err(64)/err(0)=%.5f; fabricate%s", ratio, steps.c_str())};
}

LabeledDataset Mnist(std::size_t start, std::size_t count) {
  const LabeledDataset all = LoadIdx(testing::MnistImages(), testing::MnistLabels());
  std::vector<std::size_t> rows(count);
  std::iota(rows.begin(), rows.end(), start);
  return all.Subset(rows);
}

Outcome DeskClassification() {
  const auto start = Clock::now();
  const LabeledDataset train = Blobs(200, 0.15, DeriveSeed(20260401, "blobs-train"));
  const LabeledDataset test = Blobs(200, 0.15, DeriveSeed(20260401, "blobs-test"));
  const ClassifierModel plain = FitClassifier(train, 2, 1, {}, 11);
  const PrivacySpec spec{16.0, 1e-5, 2.0, DeriveSeed(20260401, "blobs-privacy")};
  const ClassifierModel noisy = FitDpClassifier(train, spec, 2, 1, DpMode::kNoisy, 11);
  const ClassifierModel fabricated = FitDpClassifier(train, spec, 2, 1, DpMode::kFabricated, 11);
  const double plain_acc = Accuracy(plain, test);
  const double fab_acc = Accuracy(fabricated, test);
  const double mis_noisy = MembershipInferenceScore(noisy, train, test, 5).mis;
  const double mis_fab = MembershipInferenceScore(fabricated, train, test, 5).mis;

  const auto mnist_start = Clock::now();
  const LabeledDataset mnist_train = Mnist(0, 2000);
  const LabeledDataset mnist_test = Mnist(2000, 1000);
  const ClassifierModel digits = FitClassifier(mnist_train, 10, 3, {}, 11);
  const double mnist_acc = Accuracy(digits, mnist_test);
  const double mnist_seconds = Seconds(mnist_start);
  return {plain_acc >= 0.98 && fab_acc >= 0.93 && mis_fab < mis_noisy && mnist_acc >= 0.88 &&
              mnist_seconds < 600.0,
          Fmt("blobs plain %.4f, fabricated(eps=16) %.4f, mis fabricated %.5f < noisy %.5f; "
              "MNIST 2000/1000 n=10 L=3 accuracy %.4f in %.1fs (total %.1fs)",
              plain_acc, fab_acc, mis_fab, mis_noisy, mnist_acc, mnist_seconds, Seconds(start))};
}

Outcome LsddOracle() {
  Rng rng(DeriveSeed(20260401, "lsdd"));
  std::vector<double> a(2000), b(2000);
  for (double& v : a) v = rng.Normal();
  for (double& v : b) v = 4.0 + rng.Normal();
  const double truth = (1.0 - std::exp(-4.0)) / std::sqrt(M_PI);
  const double estimate = Lsdd(a, b, 1).estimate;
  const double same = Lsdd(a, a, 1).estimate;
  return {std::abs(estimate - truth) <= 0.05 && same <= 0.01,
          Fmt("N(0,1) vs N(4,1): %.5f (closed form %.5f); identical sets: %.2e", estimate, truth,
              same)};
}

Outcome FederatedEquivalence() {
  const LabeledDataset train = Blobs(200, 0.15, DeriveSeed(20260401, "blobs-train"));
  LabeledDataset probe = Blobs(334, 0.3, DeriveSeed(20260401, "blobs-probe"));
  std::vector<std::size_t> first(1000);
  std::iota(first.begin(), first.end(), 0);
  probe = probe.Subset(first);
  ScenarioConfig one;
  one.scenario = 1;
  one.parties = 3;
  one.spec = {16.0, 1e-5, 2.0, DeriveSeed(20260401, "fed-privacy")};
  one.subspace_dim = 2;
  one.layers = 1;
  one.seed = 3;
  const ScenarioResult s1 = SimulateScenario(train, probe, one);
  const bool identical = s1.global_labels == s1.centralized_labels && s1.delta == 0.0;

  const LabeledDataset mnist_train = Mnist(0, 2000);
  const LabeledDataset mnist_test = Mnist(2000, 1000);
  ScenarioConfig three;
  three.scenario = 3;
  three.parties = 20;
  three.spec = {16.0, 1e-5, 1.0, DeriveSeed(20260401, "fed-mnist-privacy")};
  three.subspace_dim = 10;
  three.layers = 3;
  three.seed = 3;
  const ScenarioResult s3 = SimulateScenario(mnist_train, mnist_test, three);
  const double drop = s3.centralized_accuracy - s3.global_accuracy;

  std::stringstream wire;
  WriteDistanceTable(wire, s3.table);
  const std::vector<int> replayed = AggregateLabels(ReadDistanceTable(wire));
  const bool replay_ok = replayed == s3.global_labels;
  return {identical && drop <= 0.05 && replay_ok,
          Fmt("scenario 1 probe 1000: delta %.4f, labels %s; scenario 3 Q=20 MNIST: global %.4f, "
              "centralized %.4f, drop %.4f; replayed table labels %s",
              s1.delta, identical ? "identical" : "differ", s3.global_accuracy,
              s3.centralized_accuracy, drop, replay_ok ? "identical" : "differ")};
}

std::string ReadBytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome Determinism() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / Fmt("kahm-acceptance-%d", static_cast<int>(::getpid()));
  fs::create_directories(dir);
  const LabeledDataset train = Blobs(200, 0.15, DeriveSeed(20260401, "blobs-train"));
  const LabeledDataset test = Blobs(200, 0.15, DeriveSeed(20260401, "blobs-test"));
  const std::string train_csv = (dir / "train.csv").string();
  const std::string test_csv = (dir / "test.csv").string();
  WriteCsv(train_csv, train.data, train.labels, train);
  WriteCsv(test_csv, test.data, test.labels, test);

  // Each command runs twice with identical arguments; the first run's
  // artifacts are moved aside before the second.
  const fs::path out = dir / "run";
  const fs::path first = dir / "first";
  const auto path = [&](const char* name) { return (out / name).string(); };
  const std::vector<std::vector<std::string>> commands = {
      {"train", "--data", train_csv, "--n", "2", "--layers", "2", "--seed", "7", "--out",
       path("plain.kahm"), "--metrics", path("train.json")},
      {"train", "--data", train_csv, "--n", "2", "--seed", "7", "--mode", "fabricated",
       "--epsilon", "16", "--out", path("fab.kahm"), "--metrics", path("train-fab.json")},
      {"classify", "--model", path("plain.kahm"), "--data", test_csv, "--metrics",
       path("classify.json"), "--confusion", path("confusion.csv"), "--predictions",
       path("predictions.csv")},
      {"mis", "--model", path("fab.kahm"), "--train", train_csv, "--test", test_csv, "--seed",
       "7", "--metrics", path("mis.json")},
      {"fabricate", "--data", train_csv, "--n", "2", "--epsilon", "4", "--seed", "7", "--out",
       path("fab.csv"), "--metrics", path("fabricate.json")},
      {"fedsim", "--train", train_csv, "--test", test_csv, "--scenario", "2", "--n", "2",
       "--epsilon", "16", "--seed", "7", "--metrics", path("fedsim.json"), "--distance-table",
       path("table.csv")},
  };
  bool exit_ok = true;
  fs::create_directories(out);
  for (const auto& args : commands) exit_ok = exit_ok && cli::Run(args) == 0;
  fs::rename(out, first);
  fs::create_directories(out);
  for (const auto& args : commands) exit_ok = exit_ok && cli::Run(args) == 0;
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(first)) {
    files.push_back(entry.path().filename().string());
  }
  int identical = 0;
  for (const std::string& f : files) {
    const std::string a = ReadBytes(first / f);
    identical += !a.empty() && a == ReadBytes(out / f);
  }

  // Round trip: the loaded model predicts exactly like the fitted one.
  const ClassifierModel fitted = FitClassifier(train, 2, 2, {}, DeriveSeed(7, "fit"));
  const ClassifierModel loaded = LoadClassifier((first / "plain.kahm").string());
  std::stringstream bytes;
  WriteClassifier(bytes, fitted);
  const bool same_bytes = bytes.str() == ReadBytes(first / "plain.kahm");
  const Matrix grid = Blobs(334, 0.4, 99).data;
  const bool same_predictions = fitted.PredictRows(grid) == loaded.PredictRows(grid) &&
                                fitted.DistanceMatrix(grid) == loaded.DistanceMatrix(grid);
  fs::remove_all(dir);
  const bool pass = exit_ok && identical == static_cast<int>(files.size()) && files.size() >= 12 &&
                    same_bytes && same_predictions;
  return {pass, Fmt("%d/%zu CLI artifacts bit-identical across runs; in-memory model serializes "
                    "to the CLI bytes: %s; round-trip predictions on %ld points: %s",
                    identical, files.size(), same_bytes ? "yes" : "no",
                    static_cast<long>(grid.rows()), same_predictions ? "identical" : "differ")};
}

}  // namespace
}  // namespace kahm

int main(int argc, char** argv) {
  using Check = std::function<kahm::Outcome()>;
  const std::vector<std::pair<const char*, Check>> criteria = {
      {"fixed-point oracle", kahm::FixedPointOracle},
      {"certificate bounds", kahm::BoundSuite},
      {"smoother matrix identity", kahm::SmootherIdentity},
      {"DP sampler", kahm::DpSampler},
      {"smoother convergence", kahm::SmootherConvergence},
      {"desk-scale classification", kahm::DeskClassification},
      {"LSDD oracle", kahm::LsddOracle},
      {"federated equivalence", kahm::FederatedEquivalence},
      {"determinism and round-trip", kahm::Determinism},
  };
  int only = argc > 1 ? std::atoi(argv[1]) : 0;
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only != 0 && static_cast<int>(i) + 1 != only) continue;
    kahm::Outcome outcome;
    try {
      outcome = criteria[i].second();
    } catch (const std::exception& e) {
      outcome = {false, std::string("threw: ") + e.what()};
    }
    failed += !outcome.pass;
    std::printf("criterion %zu [%s] %s: %s\n", i + 1, outcome.pass ? "PASS" : "FAIL",
                criteria[i].first, outcome.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
