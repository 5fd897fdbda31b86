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

#include "dian/attention.hpp"

#include "dian/kernels.hpp"

namespace dian {

void attention_register(ParamStore& store, const std::string& name, Index d) {
  store.add(name + ".Wq", d, d);
  store.add(name + ".Wk", d, d);
  store.add(name + ".Wv", d, d);
}

Mat target_attention(const ParamStore& store, const std::string& name, const Mat& query,
                     const Mat& seq, const MaskArray& mask, Index n_heads,
                     AttentionCache& cache) {
  const Index B = query.rows();
  const Index d = query.cols();
  const Index K = mask.cols();
  if (d % n_heads != 0) {
    throw ValidationError("attention " + name + ": width " + std::to_string(d) +
                          " not divisible by " + std::to_string(n_heads) + " heads");
  }
  if (mask.rows() != B || seq.rows() != B * K || seq.cols() != d) {
    throw ValidationError("attention " + name + ": query/seq/mask shapes disagree");
  }
  const Index dh = d / n_heads;

  cache.batch = B;
  cache.k = K;
  cache.heads = n_heads;
  cache.q_proj.noalias() = query * store.value(name + ".Wq");
  cache.k_proj.noalias() = seq * store.value(name + ".Wk");
  cache.v_proj.noalias() = seq * store.value(name + ".Wv");

  // Per-head raw scores; rows with empty masks are patched to a uniform
  // softmax and zeroed afterwards so empty sequences yield a zero vector.
  Mat scores = Mat::Zero(B * n_heads, K);
  MaskArray head_mask(B * n_heads, K);
  std::vector<bool> empty(static_cast<std::size_t>(B));
  for (Index b = 0; b < B; ++b) {
    const bool row_empty = !mask.row(b).any();
    empty[static_cast<std::size_t>(b)] = row_empty;
    for (Index h = 0; h < n_heads; ++h) {
      const Index r = b * n_heads + h;
      if (row_empty) {
        head_mask.row(r).setConstant(true);
        continue;
      }
      head_mask.row(r) = mask.row(b);
      for (Index kpos = 0; kpos < K; ++kpos) {
        if (mask(b, kpos)) {
          scores(r, kpos) = cache.q_proj.row(b)
                                .segment(h * dh, dh)
                                .dot(cache.k_proj.row(b * K + kpos).segment(h * dh, dh));
        }
      }
    }
  }

  cache.probs = masked_softmax(scores, head_mask);
  Mat out = Mat::Zero(B, d);
  for (Index b = 0; b < B; ++b) {
    if (empty[static_cast<std::size_t>(b)]) {
      for (Index h = 0; h < n_heads; ++h) cache.probs.row(b * n_heads + h).setZero();
      continue;
    }
    for (Index h = 0; h < n_heads; ++h) {
      const Index r = b * n_heads + h;
      for (Index kpos = 0; kpos < K; ++kpos) {
        const Scalar p = cache.probs(r, kpos);
        if (p != 0.0) {
          out.row(b).segment(h * dh, dh) +=
              p * cache.v_proj.row(b * K + kpos).segment(h * dh, dh);
        }
      }
    }
  }
  return out;
}

Mat target_attention_backward(ParamStore& store, const std::string& name, const Mat& query,
                              const Mat& seq, const AttentionCache& cache, const Mat& dout,
                              Mat& dseq_accum) {
  const Index B = cache.batch;
  const Index K = cache.k;
  const Index H = cache.heads;
  const Index d = query.cols();
  const Index dh = d / H;

  Mat dprobs = Mat::Zero(B * H, K);
  Mat dv = Mat::Zero(B * K, d);
  for (Index b = 0; b < B; ++b) {
    for (Index h = 0; h < H; ++h) {
      const Index r = b * H + h;
      const auto dout_seg = dout.row(b).segment(h * dh, dh);
      for (Index kpos = 0; kpos < K; ++kpos) {
        const Scalar p = cache.probs(r, kpos);
        dprobs(r, kpos) = dout_seg.dot(cache.v_proj.row(b * K + kpos).segment(h * dh, dh));
        if (p != 0.0) {
          dv.row(b * K + kpos).segment(h * dh, dh) += p * dout_seg;
        }
      }
    }
  }

  // Empty-mask rows carry all-zero probs, so the softmax backward formula
  // already produces zero there; no special casing needed.
  const Mat dscores = masked_softmax_backward(cache.probs, dprobs);

  Mat dq = Mat::Zero(B, d);
  Mat dk = Mat::Zero(B * K, d);
  for (Index b = 0; b < B; ++b) {
    for (Index h = 0; h < H; ++h) {
      const Index r = b * H + h;
      for (Index kpos = 0; kpos < K; ++kpos) {
        const Scalar ds = dscores(r, kpos);
        if (ds != 0.0) {
          dq.row(b).segment(h * dh, dh) +=
              ds * cache.k_proj.row(b * K + kpos).segment(h * dh, dh);
          dk.row(b * K + kpos).segment(h * dh, dh) +=
              ds * cache.q_proj.row(b).segment(h * dh, dh);
        }
      }
    }
  }

  store.grad(name + ".Wq").noalias() += query.transpose() * dq;
  store.grad(name + ".Wk").noalias() += seq.transpose() * dk;
  store.grad(name + ".Wv").noalias() += seq.transpose() * dv;
  dseq_accum.noalias() += dk * store.value(name + ".Wk").transpose();
  dseq_accum.noalias() += dv * store.value(name + ".Wv").transpose();
  return dq * store.value(name + ".Wq").transpose();
}

}  // namespace dian
