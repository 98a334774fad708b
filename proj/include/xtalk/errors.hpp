// Copyright 2026 The xtalk Authors
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

#pragma once

#include <stdexcept>
#include <string>

namespace xtalk {

// Malformed configuration or input document. Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File could not be read or written. Maps to CLI exit code 3.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical failure inside the simulator or fitter. Maps to CLI exit code 4.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IntegrationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// A multiplet prediction references a directed pair absent from the report.
class MissingPairError : public std::invalid_argument {
 public:
  MissingPairError(int primary, int secondary)
      : std::invalid_argument("no pair fit for (" + std::to_string(primary) +
                              ", " + std::to_string(secondary) + ")"),
        primary_(primary),
        secondary_(secondary) {}

  int primary() const { return primary_; }
  int secondary() const { return secondary_; }

 private:
  int primary_;
  int secondary_;
};

}  // namespace xtalk
