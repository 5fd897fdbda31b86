// Copyright 2026 The Dian Authors
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

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace dian {

using Scalar = double;
using Index = Eigen::Index;

// Dense matrices are row-major throughout: batches are stacked row vectors,
// sequence tensors [B x K x d] are stored as (B*K) x d with contiguous
// per-row blocks, and serialization is row-major by construction.
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ArrX = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
using MaskArray = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using IdxArray = Eigen::Array<std::int64_t, Eigen::Dynamic, 1>;
using IdxMat = Eigen::Array<std::int64_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Probabilities entering a logarithm are clamped to this range everywhere a
// cross entropy is computed, in the loss and in reported metrics alike.
inline constexpr Scalar kProbClampLow = 1e-7;
inline constexpr Scalar kProbClampHigh = 1.0 - 1e-7;

// Error taxonomy mirrored by the CLI exit codes: configuration and input
// validation problems exit 2, numeric or runtime failures exit 3.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace dian
