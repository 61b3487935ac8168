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

#include "kahm/dataset.h"

#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

#include "kahm/error.h"
#include "kahm/random.h"

namespace kahm {
namespace {

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::optional<double> ParseNumber(std::string_view text) {
  text = Trim(text);
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  if (!std::isfinite(value)) return std::nullopt;
  return value;
}

// Splits one CSV record. Double-quoted fields may contain commas and "" as an
// escaped quote; embedded newlines are not supported.
std::vector<std::string> SplitRecord(std::string_view line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(ch);
    }
  }
  if (quoted) throw ParseError("unterminated quoted field", line_no);
  fields.push_back(std::move(current));
  return fields;
}

bool IsIntegerText(std::string_view s) {
  if (!s.empty() && s.front() == '-') s.remove_prefix(1);
  return !s.empty() && std::all_of(s.begin(), s.end(),
                                   [](char c) { return c >= '0' && c <= '9'; });
}

// Assigns contiguous class indices to label strings.
void AssignClasses(const std::vector<std::string>& raw, LabeledDataset& out) {
  std::set<std::string> unique(raw.begin(), raw.end());
  std::vector<std::string> names(unique.begin(), unique.end());
  const bool numeric = std::all_of(names.begin(), names.end(), [](const auto& s) {
    return ParseNumber(s).has_value();
  });
  if (numeric) {
    std::stable_sort(names.begin(), names.end(), [](const auto& a, const auto& b) {
      return *ParseNumber(a) < *ParseNumber(b);
    });
  }
  std::map<std::string, int> index;
  for (std::size_t c = 0; c < names.size(); ++c) index[names[c]] = static_cast<int>(c);
  out.labels.resize(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) out.labels[i] = index.at(raw[i]);
  out.num_classes = static_cast<int>(names.size());
  out.class_names = std::move(names);
}

std::vector<unsigned char> ReadMaybeGzip(const std::string& path) {
  gzFile file = gzopen(path.c_str(), "rb");
  if (file == nullptr) throw Error("cannot open " + path);
  std::vector<unsigned char> bytes;
  unsigned char buffer[1 << 16];
  int got;
  while ((got = gzread(file, buffer, sizeof(buffer))) > 0) {
    bytes.insert(bytes.end(), buffer, buffer + got);
  }
  const bool failed = got < 0;
  gzclose(file);
  if (failed) throw ParseError("corrupt compressed stream in " + path, 0);
  return bytes;
}

std::uint32_t ReadBigEndian32(const std::vector<unsigned char>& bytes,
                              std::size_t offset, const std::string& path) {
  if (offset + 4 > bytes.size()) throw ParseError("truncated IDX header in " + path, 0);
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

}  // namespace

void ValidateDataMatrix(const Matrix& data, std::string_view what) {
  if (data.rows() < 1 || data.cols() < 1) {
    throw Error(std::string(what) + ": matrix must have at least one row and column");
  }
  if (!data.allFinite()) {
    throw Error(std::string(what) + ": matrix contains non-finite entries");
  }
}

std::vector<std::size_t> LabeledDataset::ClassIndices(int c) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == c) rows.push_back(i);
  }
  return rows;
}

Matrix LabeledDataset::ClassRows(int c) const {
  return SelectRows(data, ClassIndices(c));
}

LabeledDataset LabeledDataset::Subset(std::span<const std::size_t> rows) const {
  LabeledDataset out;
  out.data = SelectRows(data, rows);
  out.labels.reserve(rows.size());
  for (std::size_t r : rows) out.labels.push_back(labels.at(r));
  out.num_classes = num_classes;
  out.class_names = class_names;
  out.header = header;
  out.label_column = label_column;
  return out;
}

void LabeledDataset::Validate() const {
  ValidateDataMatrix(data);
  if (labels.size() != size()) throw Error("label count does not match row count");
  if (num_classes < 1) throw Error("dataset needs at least one class");
  for (int label : labels) {
    if (label < 0 || label >= num_classes) throw Error("label out of range");
  }
}

std::vector<std::size_t> Partition::Members(int cluster) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] == cluster) rows.push_back(i);
  }
  return rows;
}

LabeledDataset ParseCsv(std::string_view text,
                        const std::optional<std::string>& label_column) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::size_t> line_numbers;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t end = text.find('\n');
    std::string_view line = text.substr(0, end);
    text = end == std::string_view::npos ? std::string_view{} : text.substr(end + 1);
    ++line_no;
    if (Trim(line).empty()) continue;
    if (line.back() == '\r') line.remove_suffix(1);
    records.push_back(SplitRecord(line, line_no));
    line_numbers.push_back(line_no);
  }
  if (records.empty()) throw ParseError("empty CSV input", 0);

  const std::size_t width = records.front().size();
  for (std::size_t r = 0; r < records.size(); ++r) {
    if (records[r].size() != width) {
      throw ParseError("ragged row at line " + std::to_string(line_numbers[r]) +
                           ": expected " + std::to_string(width) + " fields, got " +
                           std::to_string(records[r].size()),
                       line_numbers[r]);
    }
  }

  // A label column given by position is resolved before header detection,
  // since a text label alone does not make a row a header.
  int label_index = -1;
  const bool positional = label_column && IsIntegerText(*label_column);
  if (positional) {
    int idx = std::stoi(*label_column);
    if (idx < 0) idx += static_cast<int>(width);
    if (idx < 0 || idx >= static_cast<int>(width)) {
      throw Error("label column " + *label_column + " out of range");
    }
    label_index = idx;
  }

  // A first row with a non-numeric feature cell is a header.
  bool has_header = false;
  for (std::size_t c = 0; c < width; ++c) {
    if (static_cast<int>(c) != label_index && !ParseNumber(records.front()[c])) has_header = true;
  }
  std::vector<std::string> header;
  if (has_header) header = records.front();

  if (label_column && !positional) {
    const auto it = std::find(header.begin(), header.end(), *label_column);
    if (it == header.end()) throw Error("no column named '" + *label_column + "'");
    label_index = static_cast<int>(it - header.begin());
  }

  const std::size_t first = has_header ? 1 : 0;
  const std::size_t rows = records.size() - first;
  const std::size_t cols = width - (label_index >= 0 ? 1 : 0);
  if (rows == 0) throw ParseError("CSV has a header but no data rows", 1);
  if (cols == 0) throw ParseError("CSV has no feature columns", 1);

  LabeledDataset out;
  out.data.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  std::vector<std::string> raw_labels;
  for (std::size_t r = 0; r < rows; ++r) {
    const auto& rec = records[first + r];
    Eigen::Index col = 0;
    for (std::size_t c = 0; c < width; ++c) {
      if (static_cast<int>(c) == label_index) {
        raw_labels.emplace_back(Trim(rec[c]));
        continue;
      }
      const auto value = ParseNumber(rec[c]);
      if (!value) {
        throw ParseError("non-numeric cell '" + rec[c] + "' at line " +
                             std::to_string(line_numbers[first + r]) + ", column " +
                             std::to_string(c + 1),
                         line_numbers[first + r], c + 1);
      }
      out.data(static_cast<Eigen::Index>(r), col++) = *value;
    }
  }
  out.header = std::move(header);
  out.label_column = label_index;
  if (label_index >= 0) {
    AssignClasses(raw_labels, out);
  } else {
    out.labels.assign(rows, 0);
    out.num_classes = 1;
    out.class_names = {""};
  }
  return out;
}

LabeledDataset LoadCsv(const std::string& path,
                       const std::optional<std::string>& label_column) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return ParseCsv(buffer.str(), label_column);
}

void WriteCsv(const std::string& path, const Matrix& data,
              std::span<const int> labels, const LabeledDataset& schema) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  const bool labeled = !labels.empty();
  if (labeled && labels.size() != static_cast<std::size_t>(data.rows())) {
    throw Error("WriteCsv: label count does not match row count");
  }
  const Eigen::Index width = data.cols() + (labeled ? 1 : 0);
  const Eigen::Index label_at =
      labeled ? (schema.label_column >= 0 ? std::min<Eigen::Index>(schema.label_column, data.cols())
                                          : data.cols())
              : -1;
  if (!schema.header.empty() && static_cast<Eigen::Index>(schema.header.size()) == width) {
    for (Eigen::Index c = 0; c < width; ++c) {
      if (c > 0) out << ',';
      out << schema.header[static_cast<std::size_t>(c)];
    }
    out << '\n';
  }
  char buffer[32];
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    Eigen::Index col = 0;
    for (Eigen::Index c = 0; c < width; ++c) {
      if (c > 0) out << ',';
      if (c == label_at) {
        out << schema.class_names.at(static_cast<std::size_t>(labels[static_cast<std::size_t>(r)]));
      } else {
        std::snprintf(buffer, sizeof(buffer), "%.17g", data(r, col++));
        out << buffer;
      }
    }
    out << '\n';
  }
}

LabeledDataset LoadIdx(const std::string& images_path, const std::string& labels_path) {
  const auto images = ReadMaybeGzip(images_path);
  const auto labels = ReadMaybeGzip(labels_path);
  if (ReadBigEndian32(images, 0, images_path) != 0x00000803) {
    throw ParseError("bad IDX image magic in " + images_path, 0);
  }
  if (ReadBigEndian32(labels, 0, labels_path) != 0x00000801) {
    throw ParseError("bad IDX label magic in " + labels_path, 0);
  }
  const std::size_t count = ReadBigEndian32(images, 4, images_path);
  const std::size_t height = ReadBigEndian32(images, 8, images_path);
  const std::size_t width = ReadBigEndian32(images, 12, images_path);
  const std::size_t label_count = ReadBigEndian32(labels, 4, labels_path);
  if (count != label_count) {
    throw ParseError("image/label count mismatch: " + std::to_string(count) + " images, " +
                         std::to_string(label_count) + " labels",
                     0);
  }
  const std::size_t pixels = height * width;
  if (count == 0 || pixels == 0) throw ParseError("empty IDX file " + images_path, 0);
  if (images.size() < 16 + count * pixels) {
    throw ParseError("truncated IDX image data in " + images_path, 0);
  }
  if (labels.size() < 8 + count) throw ParseError("truncated IDX label data in " + labels_path, 0);

  LabeledDataset out;
  out.data.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(pixels));
  for (std::size_t i = 0; i < count; ++i) {
    const unsigned char* row = images.data() + 16 + i * pixels;
    for (std::size_t j = 0; j < pixels; ++j) {
      out.data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j] / 255.0;
    }
  }
  std::vector<std::string> raw;
  raw.reserve(count);
  for (std::size_t i = 0; i < count; ++i) raw.push_back(std::to_string(labels[8 + i]));
  AssignClasses(raw, out);
  return out;
}

Matrix NormalizeMinMax(const Matrix& data) {
  ValidateDataMatrix(data);
  Matrix out(data.rows(), data.cols());
  for (Eigen::Index j = 0; j < data.cols(); ++j) {
    const double lo = data.col(j).minCoeff();
    const double hi = data.col(j).maxCoeff();
    if (hi > lo) {
      out.col(j) = ((data.col(j).array() - lo) * (2.0 / (hi - lo)) - 1.0).cwiseMax(-1.0).cwiseMin(1.0);
    } else {
      out.col(j).setZero();
    }
  }
  return out;
}

KMeansResult KMeans(const Matrix& data, int clusters, std::uint64_t seed) {
  ValidateDataMatrix(data);
  const Eigen::Index n = data.rows();
  if (clusters < 1) throw Error("kmeans: cluster count must be positive");
  if (clusters > n) {
    throw Error("kmeans: " + std::to_string(clusters) + " clusters requested for " +
                std::to_string(n) + " samples");
  }
  Rng rng(seed);
  Matrix centroids(clusters, data.cols());

  // k-means++ seeding.
  Vector nearest(n);
  centroids.row(0) = data.row(static_cast<Eigen::Index>(rng.Index(static_cast<std::uint64_t>(n))));
  for (Eigen::Index i = 0; i < n; ++i) nearest(i) = (data.row(i) - centroids.row(0)).squaredNorm();
  for (int k = 1; k < clusters; ++k) {
    const double total = nearest.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      const double target = rng.UniformOpen() * total;
      double acc = 0.0;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += nearest(i);
        if (acc >= target && nearest(i) > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<Eigen::Index>(rng.Index(static_cast<std::uint64_t>(n)));
    }
    centroids.row(k) = data.row(pick);
    for (Eigen::Index i = 0; i < n; ++i) {
      nearest(i) = std::min(nearest(i), (data.row(i) - centroids.row(k)).squaredNorm());
    }
  }

  KMeansResult result;
  std::vector<int>& assign = result.partition.assignments;
  assign.assign(static_cast<std::size_t>(n), -1);
  Vector dist(n);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int k = 0; k < clusters; ++k) {
        const double d = (data.row(i) - centroids.row(k)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = k;
        }
      }
      dist(i) = best_d;
      if (assign[static_cast<std::size_t>(i)] != best) {
        assign[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    result.iterations = iter + 1;

    // Repair empty clusters: move the worst-served point into each one.
    std::vector<Eigen::Index> counts(static_cast<std::size_t>(clusters), 0);
    for (int a : assign) ++counts[static_cast<std::size_t>(a)];
    for (int k = 0; k < clusters; ++k) {
      if (counts[static_cast<std::size_t>(k)] > 0) continue;
      Eigen::Index far = -1;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (counts[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])] < 2) continue;
        if (far < 0 || dist(i) > dist(far)) far = i;
      }
      if (far < 0) throw Error("kmeans: cannot repair empty cluster");
      --counts[static_cast<std::size_t>(assign[static_cast<std::size_t>(far)])];
      assign[static_cast<std::size_t>(far)] = k;
      ++counts[static_cast<std::size_t>(k)];
      dist(far) = 0.0;
      changed = true;
    }

    centroids.setZero();
    for (Eigen::Index i = 0; i < n; ++i) centroids.row(assign[static_cast<std::size_t>(i)]) += data.row(i);
    for (int k = 0; k < clusters; ++k) {
      centroids.row(k) /= static_cast<double>(counts[static_cast<std::size_t>(k)]);
    }
    double objective = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      objective += (data.row(i) - centroids.row(assign[static_cast<std::size_t>(i)])).squaredNorm();
    }
    result.objective_history.push_back(objective);
    if (!changed) break;
  }
  result.partition.num_clusters = clusters;
  result.centroids = std::move(centroids);
  return result;
}

int DefaultBranchCount(std::size_t samples) {
  if (samples == 0) throw Error("branch count needs at least one sample");
  return static_cast<int>((samples + 999) / 1000);
}

std::vector<std::size_t> DistinctRowIndices(const Matrix& data) {
  std::vector<std::size_t> order(static_cast<std::size_t>(data.rows()));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  auto row_less = [&](std::size_t a, std::size_t b) {
    for (Eigen::Index j = 0; j < data.cols(); ++j) {
      const double x = data(static_cast<Eigen::Index>(a), j);
      const double y = data(static_cast<Eigen::Index>(b), j);
      if (x != y) return x < y;
    }
    return a < b;
  };
  std::sort(order.begin(), order.end(), row_less);
  std::vector<std::size_t> keep;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (k == 0 || data.row(static_cast<Eigen::Index>(order[k])) !=
                      data.row(static_cast<Eigen::Index>(order[k - 1]))) {
      keep.push_back(order[k]);  // smallest index of its run
    }
  }
  std::sort(keep.begin(), keep.end());
  return keep;
}

Matrix DedupeRows(const Matrix& data) { return SelectRows(data, DistinctRowIndices(data)); }

Matrix SelectRows(const Matrix& data, std::span<const std::size_t> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), data.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = data.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

}  // namespace kahm
