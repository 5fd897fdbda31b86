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

#include <cmath>
#include <limits>
#include <string>

#include "dian/common.hpp"
#include "dian/rng.hpp"

namespace dian {

// Numerically stable logistic; exact for |x| up to ~700 without overflow.
inline Scalar sigmoid(Scalar x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const Scalar e = std::exp(x);
  return e / (1.0 + e);
}

template <typename Derived>
auto sigmoid(const Eigen::ArrayBase<Derived>& x) {
  return x.unaryExpr([](Scalar v) { return sigmoid(v); });
}

// Row-wise softmax over the positions where mask is true, computed with
// max-subtraction. Masked positions are exactly 0; valid positions sum to 1.
// A row with no valid position is a caller bug: NumericError.
inline Mat masked_softmax(const Mat& scores, const MaskArray& mask) {
  if (scores.rows() != mask.rows() || scores.cols() != mask.cols()) {
    throw ValidationError("masked_softmax: scores and mask shapes differ");
  }
  Mat out = Mat::Zero(scores.rows(), scores.cols());
  for (Index r = 0; r < scores.rows(); ++r) {
    Scalar mx = -std::numeric_limits<Scalar>::infinity();
    bool any = false;
    for (Index c = 0; c < scores.cols(); ++c) {
      if (mask(r, c)) {
        any = true;
        mx = std::max(mx, scores(r, c));
      }
    }
    if (!any) {
      throw NumericError("masked_softmax: row " + std::to_string(r) + " has no valid position");
    }
    Scalar denom = 0.0;
    for (Index c = 0; c < scores.cols(); ++c) {
      if (mask(r, c)) {
        const Scalar e = std::exp(scores(r, c) - mx);
        out(r, c) = e;
        denom += e;
      }
    }
    for (Index c = 0; c < scores.cols(); ++c) {
      if (mask(r, c)) out(r, c) /= denom;
    }
  }
  return out;
}

// dL/dscores from dL/dprobs. Masked positions carry probs == 0, so their
// gradient is exactly 0 and no mask argument is needed.
inline Mat masked_softmax_backward(const Mat& probs, const Mat& dprobs) {
  Mat out(probs.rows(), probs.cols());
  for (Index r = 0; r < probs.rows(); ++r) {
    const Scalar dot = probs.row(r).dot(dprobs.row(r));
    out.row(r) = probs.row(r).array() * (dprobs.row(r).array() - dot);
  }
  return out;
}

// Mean over valid sequence positions. seq holds B blocks of K contiguous
// rows; mask is B x K. A row with no valid position pools to the zero vector
// so that empty sequences are representable rather than an error.
inline Mat average_pool(const Mat& seq, const MaskArray& mask) {
  const Index B = mask.rows();
  const Index K = mask.cols();
  if (seq.rows() != B * K) {
    throw ValidationError("average_pool: seq rows do not match mask shape");
  }
  Mat out = Mat::Zero(B, seq.cols());
  for (Index b = 0; b < B; ++b) {
    Index n = 0;
    for (Index k = 0; k < K; ++k) {
      if (mask(b, k)) {
        out.row(b) += seq.row(b * K + k);
        ++n;
      }
    }
    if (n > 0) out.row(b) /= static_cast<Scalar>(n);
  }
  return out;
}

inline Mat average_pool_backward(const MaskArray& mask, const Mat& dout) {
  const Index B = mask.rows();
  const Index K = mask.cols();
  Mat dseq = Mat::Zero(B * K, dout.cols());
  for (Index b = 0; b < B; ++b) {
    Index n = 0;
    for (Index k = 0; k < K; ++k) {
      if (mask(b, k)) ++n;
    }
    if (n == 0) continue;
    const Scalar inv = 1.0 / static_cast<Scalar>(n);
    for (Index k = 0; k < K; ++k) {
      if (mask(b, k)) dseq.row(b * K + k) = dout.row(b) * inv;
    }
  }
  return dseq;
}

// Affine weights: uniform in +-sqrt(6 / (fan_in + fan_out)). Fill order is
// row-major so initialization is reproducible.
inline void xavier_uniform_init(Mat& w, Rng& rng) {
  const Scalar limit = std::sqrt(6.0 / static_cast<Scalar>(w.rows() + w.cols()));
  for (Index r = 0; r < w.rows(); ++r) {
    for (Index c = 0; c < w.cols(); ++c) {
      w(r, c) = rng.uniform(-limit, limit);
    }
  }
}

inline void uniform_init(Mat& w, Rng& rng, Scalar lo, Scalar hi) {
  for (Index r = 0; r < w.rows(); ++r) {
    for (Index c = 0; c < w.cols(); ++c) {
      w(r, c) = rng.uniform(lo, hi);
    }
  }
}

}  // namespace dian
