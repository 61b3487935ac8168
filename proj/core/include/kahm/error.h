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

#ifndef KAHM_ERROR_H_
#define KAHM_ERROR_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kahm {

// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file. Line and column are 1-based; 0 means "not applicable".
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line,
             std::size_t column = 0);

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

// A KAHM could not produce an image for a query point (the membership sum
// vanished even after rescaling).
class EvaluationError : public Error {
 public:
  using Error::Error;
};

}  // namespace kahm

#endif  // KAHM_ERROR_H_
