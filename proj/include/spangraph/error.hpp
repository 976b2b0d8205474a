// Copyright 2026 The spangraph Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SPANGRAPH_ERROR_HPP_
#define SPANGRAPH_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace spangraph {

// Base of every error raised by the library. `kind()` is a stable short tag
// used by the CLI when it prints machine-readable error objects.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string &message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string &kind() const { return kind_; }

 private:
  std::string kind_;
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string &m) : Error("parse_error", m) {}
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string &m)
      : Error("validation_error", m) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string &m) : Error("config_error", m) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string &m) : Error("numeric_error", m) {}
};

class UnsupportedError : public Error {
 public:
  explicit UnsupportedError(const std::string &m)
      : Error("unsupported_operation", m) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string &m) : Error("io_error", m) {}
};

}  // namespace spangraph

#endif  // SPANGRAPH_ERROR_HPP_
