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

#include "dian/common.hpp"

namespace dian {

// Exact Mann-Whitney AUC: (#concordant pairs + 0.5 * #tied pairs) divided by
// #pos * #neg, computed from average ranks in O(N log N). All intermediate
// sums are half-integers, so the result is bit-identical to the quadratic
// pair counter. Labels must be exactly 0 or 1; a single-class input has no
// defined ranking quality and raises NumericError.
Scalar auc(const ArrX& scores, const ArrX& labels);

// O(N^2) reference pair counter, kept as the oracle for the fast path.
Scalar auc_brute_force(const ArrX& scores, const ArrX& labels);

// Mean binary cross entropy with probabilities clamped to [1e-7, 1 - 1e-7].
Scalar log_loss(const ArrX& probabilities, const ArrX& labels);

// Fraction of rows whose thresholded score matches the label.
Scalar accuracy(const ArrX& scores, const ArrX& labels, Scalar threshold = 0.5);

struct SpearmanResult {
  Scalar rho = 0.0;
  Scalar p_value = 1.0;  // one-sided lower tail: P(rho_perm <= rho_observed)
};

// Spearman rank correlation with an exact permutation test (all n!
// arrangements enumerated), usable for n <= 8. Rank dot products are
// quarter-integers, so the tail count needs no tolerance.
SpearmanResult spearman_exact(const ArrX& x, const ArrX& y);

}  // namespace dian
