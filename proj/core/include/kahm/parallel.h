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

#ifndef KAHM_PARALLEL_H_
#define KAHM_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace kahm {

// Number of worker threads used by ParallelFor. Defaults to the value of the
// KAHM_THREADS environment variable, else std::thread::hardware_concurrency.
int ThreadCount();
void SetThreadCount(int threads);

// Runs body(i) for i in [0, count). Each index must write only to its own
// output slot, which keeps results independent of scheduling. Calls made from
// inside a worker run serially. If any body throws, the exception of the
// smallest failing index is rethrown after all workers finish.
void ParallelFor(std::size_t count,
                 const std::function<void(std::size_t)>& body);

}  // namespace kahm

#endif  // KAHM_PARALLEL_H_
