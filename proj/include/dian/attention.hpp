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

#include "dian/param_store.hpp"

namespace dian {

// Multi-head target attention: a single anchor embedding per batch row
// queries a behavior sequence. Head i works on the i-th d/n-wide column
// block of the d x d projections, and raw dot-product scores are used
// without any scaling factor. Rows whose mask has no valid position output
// the zero vector instead of erroring (an empty hard-search match is legal).

struct AttentionCache {
  Mat q_proj;  // B x d
  Mat k_proj;  // (B*K) x d
  Mat v_proj;  // (B*K) x d
  Mat probs;   // (B*H) x K; all-zero rows mark empty masks
  Index batch = 0;
  Index k = 0;
  Index heads = 0;
};

// Registers <name>.Wq, <name>.Wk, <name>.Wv, each d x d.
void attention_register(ParamStore& store, const std::string& name, Index d);

Mat target_attention(const ParamStore& store, const std::string& name, const Mat& query,
                     const Mat& seq, const MaskArray& mask, Index n_heads,
                     AttentionCache& cache);

// Accumulates projection gradients into the store and sequence gradients
// into dseq_accum; returns dL/dquery.
Mat target_attention_backward(ParamStore& store, const std::string& name, const Mat& query,
                              const Mat& seq, const AttentionCache& cache, const Mat& dout,
                              Mat& dseq_accum);

}  // namespace dian
