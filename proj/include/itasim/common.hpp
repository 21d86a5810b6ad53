/**
 * Copyright (c) the itasim authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace itasim {

/// Error classes map 1:1 to CLI exit codes (see tools/).
enum class ErrorKind {
  io,          // unreadable/truncated files
  schema,      // malformed JSON / unknown config key / bad container
  shape,       // dimension or scale mismatch
  validation,  // schedule or graph invariant violated
  infeasible,  // tiling/allocation cannot fit the budget
  overflow,    // accumulator range fault
  internal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) {
  throw Error(kind, msg);
}

inline const char* error_class_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::io: return "io";
    case ErrorKind::schema: return "schema";
    case ErrorKind::shape: return "shape";
    case ErrorKind::validation: return "validation";
    case ErrorKind::infeasible: return "infeasible";
    case ErrorKind::overflow: return "overflow";
    case ErrorKind::internal: return "internal";
  }
  return "unknown";
}

/// Right shift with round-half-away-from-zero, applied on the magnitude.
/// This is the rounding used by every requantizer in the model.
inline int64_t rshift_round(int64_t v, int shift) {
  if (shift <= 0) return v;
  if (shift >= 63) return 0;
  const int64_t mag = v < 0 ? -v : v;
  const int64_t r = (mag + (int64_t(1) << (shift - 1))) >> shift;
  return v < 0 ? -r : r;
}

inline int64_t ceil_div(int64_t a, int64_t b) { return (a + b - 1) / b; }

inline int64_t align_up(int64_t v, int64_t a) { return ceil_div(v, a) * a; }

}  // namespace itasim
