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

#include "dian/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace dian {
namespace {

void check_binary_labels(const ArrX& labels, const char* where) {
  for (Index i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0.0 && labels[i] != 1.0) {
      throw ValidationError(std::string(where) + ": label at row " + std::to_string(i) +
                            " is " + std::to_string(labels[i]) + ", expected 0 or 1");
    }
  }
}

void check_same_size(const ArrX& a, const ArrX& b, const char* where) {
  if (a.size() != b.size()) {
    throw ValidationError(std::string(where) + ": " + std::to_string(a.size()) + " scores vs " +
                          std::to_string(b.size()) + " labels");
  }
  if (a.size() == 0) throw ValidationError(std::string(where) + ": empty input");
}

std::pair<Index, Index> class_counts(const ArrX& labels, const char* where) {
  const Index pos = static_cast<Index>(labels.sum());
  const Index neg = labels.size() - pos;
  if (pos == 0 || neg == 0) {
    throw NumericError(std::string(where) + ": all " + std::to_string(labels.size()) +
                       " labels are " + (pos == 0 ? "negative" : "positive") +
                       "; AUC is undefined for a single class");
  }
  return {pos, neg};
}

// Average ranks 1..n; tied values share the mean rank of their block, which
// is always an integer or half-integer.
std::vector<Scalar> average_ranks(const std::vector<Scalar>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<Scalar> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const Scalar mean_rank = (static_cast<Scalar>(i + 1) + static_cast<Scalar>(j + 1)) / 2.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = mean_rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

Scalar auc(const ArrX& scores, const ArrX& labels) {
  check_same_size(scores, labels, "auc");
  check_binary_labels(labels, "auc");
  const auto [pos, neg] = class_counts(labels, "auc");
  const std::vector<Scalar> values(scores.data(), scores.data() + scores.size());
  const std::vector<Scalar> ranks = average_ranks(values);
  Scalar rank_sum = 0.0;
  for (Index i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1.0) rank_sum += ranks[i];
  }
  const Scalar p = static_cast<Scalar>(pos);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<Scalar>(neg));
}

Scalar auc_brute_force(const ArrX& scores, const ArrX& labels) {
  check_same_size(scores, labels, "auc");
  check_binary_labels(labels, "auc");
  const auto [pos, neg] = class_counts(labels, "auc");
  std::int64_t wins = 0, ties = 0;
  for (Index i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1.0) continue;
    for (Index j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0.0) continue;
      if (scores[i] > scores[j]) ++wins;
      else if (scores[i] == scores[j]) ++ties;
    }
  }
  return (static_cast<Scalar>(wins) + 0.5 * static_cast<Scalar>(ties)) /
         (static_cast<Scalar>(pos) * static_cast<Scalar>(neg));
}

Scalar log_loss(const ArrX& probabilities, const ArrX& labels) {
  check_same_size(probabilities, labels, "log_loss");
  check_binary_labels(labels, "log_loss");
  const ArrX p = probabilities.cwiseMax(kProbClampLow).cwiseMin(kProbClampHigh);
  const ArrX per_row = -(labels * p.log() + (1.0 - labels) * (1.0 - p).log());
  return per_row.mean();
}

Scalar accuracy(const ArrX& scores, const ArrX& labels, Scalar threshold) {
  check_same_size(scores, labels, "accuracy");
  check_binary_labels(labels, "accuracy");
  Index hits = 0;
  for (Index i = 0; i < scores.size(); ++i) {
    const Scalar predicted = scores[i] >= threshold ? 1.0 : 0.0;
    if (predicted == labels[i]) ++hits;
  }
  return static_cast<Scalar>(hits) / static_cast<Scalar>(scores.size());
}

SpearmanResult spearman_exact(const ArrX& x, const ArrX& y) {
  if (x.size() != y.size()) throw ValidationError("spearman_exact: size mismatch");
  const Index n = x.size();
  if (n < 3) throw ValidationError("spearman_exact: need at least 3 points");
  if (n > 8) {
    throw ValidationError("spearman_exact: n=" + std::to_string(n) +
                          " exceeds the exact-permutation limit of 8");
  }
  const std::vector<Scalar> rx = average_ranks({x.data(), x.data() + n});
  const std::vector<Scalar> ry = average_ranks({y.data(), y.data() + n});

  const Scalar mean = (static_cast<Scalar>(n) + 1.0) / 2.0;
  Scalar var_x = 0.0, var_y = 0.0;
  for (Index i = 0; i < n; ++i) {
    var_x += (rx[i] - mean) * (rx[i] - mean);
    var_y += (ry[i] - mean) * (ry[i] - mean);
  }
  if (var_x == 0.0 || var_y == 0.0) {
    throw NumericError("spearman_exact: zero rank variance, correlation undefined");
  }

  // For fixed rank multisets, rho is an increasing function of the rank dot
  // product, so the permutation tail can be counted on dot products alone.
  const auto dot = [&](const std::vector<Scalar>& perm) {
    Scalar s = 0.0;
    for (Index i = 0; i < n; ++i) s += rx[i] * perm[i];
    return s;
  };
  const Scalar observed_dot = dot(ry);

  SpearmanResult out;
  Scalar cov = 0.0;
  for (Index i = 0; i < n; ++i) cov += (rx[i] - mean) * (ry[i] - mean);
  out.rho = cov / std::sqrt(var_x * var_y);

  // Distinct multiset permutations are equally likely under a uniform random
  // permutation, so counting each once is exact even with tied ranks.
  std::vector<Scalar> perm = ry;
  std::sort(perm.begin(), perm.end());
  std::int64_t total = 0, at_or_below = 0;
  do {
    ++total;
    if (dot(perm) <= observed_dot) ++at_or_below;
  } while (std::next_permutation(perm.begin(), perm.end()));
  out.p_value = static_cast<Scalar>(at_or_below) / static_cast<Scalar>(total);
  return out;
}

}  // namespace dian
