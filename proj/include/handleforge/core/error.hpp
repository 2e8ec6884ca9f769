// Copyright 2026 The HandleForge Authors.
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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hf {

enum class ErrorKind {
  degenerate_rotation,
  variant_mismatch,
  empty_set,
  missing_existence,
  shape_mismatch,
  non_finite,
  invalid_argument,
  parse,
  io,
  version_mismatch,
  corrupt_file,
  decimator,
  width_mismatch,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::degenerate_rotation: return "degenerate_rotation";
    case ErrorKind::variant_mismatch: return "variant_mismatch";
    case ErrorKind::empty_set: return "empty_set";
    case ErrorKind::missing_existence: return "missing_existence";
    case ErrorKind::shape_mismatch: return "shape_mismatch";
    case ErrorKind::non_finite: return "non_finite";
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::parse: return "parse";
    case ErrorKind::io: return "io";
    case ErrorKind::version_mismatch: return "version_mismatch";
    case ErrorKind::corrupt_file: return "corrupt_file";
    case ErrorKind::decimator: return "decimator";
    case ErrorKind::width_mismatch: return "width_mismatch";
  }
  return "unknown";
}

/// Every failure in the library is reported as an Error carrying a kind, so
/// callers (CLI, service) can map it onto exit codes or HTTP statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

}  // namespace hf
