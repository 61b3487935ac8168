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

#ifndef KAHM_SERIALIZE_H_
#define KAHM_SERIALIZE_H_

#include <cstdint>
#include <iosfwd>
#include <string>

#include "kahm/classify.h"
#include "kahm/compositions.h"
#include "kahm/kahm.h"

namespace kahm {

// Binary model format. Every record opens with the magic "KAHM", a u32
// format version and a u32 record kind; integers are little-endian u64 and
// reals little-endian IEEE f64. Matrices are u64 rows, u64 cols and the
// entries in row-major order.
//
//   kahm:       Y, P, theta, lambda*, u32 solve kind, solve operator,
//               mu_min, mu_max
//   deep:       L, then L times (layer index, kahm record)
//   wide:       S, N, N cluster assignments, then S times (branch index,
//               deep record)
//   classifier: C, n, L, seed, C branch counts, provenance (u32 kind,
//               epsilon, delta, d, seed, max steps), C class names
//               (length + bytes), then C times (class index, wide record)
//
// Reading a written model gives back bit-identical parameters.
inline constexpr std::uint32_t kFormatVersion = 1;

enum class RecordKind : std::uint32_t { kKahm = 1, kDeep = 2, kWide = 3, kClassifier = 4 };

void WriteKahm(std::ostream& out, const KahmModel& model);
void WriteDeep(std::ostream& out, const DeepKahm& model);
void WriteWide(std::ostream& out, const WideKahm& model);
void WriteClassifier(std::ostream& out, const ClassifierModel& model);

KahmModel ReadKahm(std::istream& in);
DeepKahm ReadDeep(std::istream& in);
WideKahm ReadWide(std::istream& in);
ClassifierModel ReadClassifier(std::istream& in);

void SaveClassifier(const std::string& path, const ClassifierModel& model);
ClassifierModel LoadClassifier(const std::string& path);

}  // namespace kahm

#endif  // KAHM_SERIALIZE_H_
