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

#include <string>
#include <vector>

#include "dian/param_store.hpp"

namespace dian {

// Feed-forward stack with ReLU on hidden layers and a linear output layer.
// Layer l uses entries "<name>.W<l>" (in x out) and "<name>.b<l>" (1 x out).

struct MlpCache {
  // acts[0] = input, acts[1..L-1] = post-ReLU hiddens, acts[L] = linear output.
  std::vector<Mat> acts;
};

// Registers weights for dims in -> hidden[0] -> ... -> hidden.back() -> out.
void mlp_register(ParamStore& store, const std::string& name, Index in,
                  const std::vector<Index>& hidden, Index out);

Mat mlp_forward(const ParamStore& store, const std::string& name, const Mat& x, MlpCache& cache);

// Accumulates weight gradients into the store; returns dL/dx.
Mat mlp_backward(ParamStore& store, const std::string& name, const MlpCache& cache,
                 const Mat& dout);

}  // namespace dian
