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

// Per-qubit assignment (confusion) probabilities. The 2x2 confusion matrix
//   [[p0|0, 1 - p1|1],
//    [1 - p0|0, p1|1]]
// maps true populations to observed ones. Both diagonal entries must lie in
// (0.5, 1], which keeps the matrix invertible.
class ReadoutErrorModel {
 public:
  ReadoutErrorModel() = default;
  ReadoutErrorModel(double p0_given_0, double p1_given_1)
      : p0_given_0_(p0_given_0), p1_given_1_(p1_given_1) {
    if (!(p0_given_0 > 0.5 && p0_given_0 <= 1.0) ||
        !(p1_given_1 > 0.5 && p1_given_1 <= 1.0)) {
      throw std::invalid_argument(
          "readout probabilities must lie in (0.5, 1], got (" +
          std::to_string(p0_given_0) + ", " + std::to_string(p1_given_1) +
          ")");
    }
  }

  static ReadoutErrorModel ideal() { return {}; }

  double p0_given_0() const { return p0_given_0_; }
  double p1_given_1() const { return p1_given_1_; }

  // Determinant of the confusion matrix; also the contrast p0|0 + p1|1 - 1.
  double contrast() const { return p0_given_0_ + p1_given_1_ - 1.0; }

  bool is_ideal() const { return p0_given_0_ == 1.0 && p1_given_1_ == 1.0; }

  // Observed excited fraction for a true excited population p.
  double forward_excited(double p) const {
    return (1.0 - p0_given_0_) * (1.0 - p) + p1_given_1_ * p;
  }

  friend bool operator==(const ReadoutErrorModel&,
                         const ReadoutErrorModel&) = default;

 private:
  double p0_given_0_ = 1.0;
  double p1_given_1_ = 1.0;
};

}  // namespace xtalk
