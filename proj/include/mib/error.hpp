// Copyright 2026 The mibounds Authors
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

#ifndef MIB_ERROR_HPP
#define MIB_ERROR_HPP

#include <stdexcept>
#include <string>

namespace mib {

// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// A model lacks a capability required by the requested operation.
class UnsupportedCapabilityError : public Error {
 public:
  explicit UnsupportedCapabilityError(const std::string& msg) : Error(msg) {}
};

// Shape mismatch between tensors / vectors.
class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& msg) : Error(msg) {}
};

// Invalid estimator or kernel parameter (K < 1, T < 1, ...).
class ParameterError : public Error {
 public:
  explicit ParameterError(const std::string& msg) : Error(msg) {}
};

// Enumeration request too large to run exactly.
class SizeError : public Error {
 public:
  explicit SizeError(const std::string& msg) : Error(msg) {}
};

// Non-finite or out-of-support input.
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& msg) : Error(msg) {}
};

// Malformed configuration file or CLI arguments.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

}  // namespace mib

#endif  // MIB_ERROR_HPP
