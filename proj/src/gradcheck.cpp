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

#include "dian/gradcheck.hpp"

#include <cmath>
#include <set>

namespace dian {

GradCheckReport finite_diff_gradcheck(ParamStore& store,
                                      const std::function<Scalar()>& loss_fn,
                                      const std::vector<GradCoord>& coords,
                                      Scalar perturbation) {
  GradCheckReport report;
  std::set<std::string> tables;
  for (const auto& coord : coords) {
    Mat& value = store.value(coord.name);
    if (coord.row < 0 || coord.row >= value.rows() || coord.col < 0 ||
        coord.col >= value.cols()) {
      throw ValidationError("gradcheck coordinate out of range for " + coord.name);
    }
    const Scalar saved = value(coord.row, coord.col);
    const Scalar analytic = store.grad(coord.name)(coord.row, coord.col);
    Scalar rel = 0.0;
    Scalar numeric = 0.0;
    for (int attempt = 0; attempt < 3; ++attempt) {
      const Scalar step = perturbation / static_cast<Scalar>(1 << (3 * attempt));
      value(coord.row, coord.col) = saved + step;
      const Scalar plus = loss_fn();
      value(coord.row, coord.col) = saved - step;
      const Scalar minus = loss_fn();
      value(coord.row, coord.col) = saved;
      if (!std::isfinite(plus) || !std::isfinite(minus)) {
        throw NumericError("gradcheck: non-finite loss while perturbing " + coord.name + "[" +
                           std::to_string(coord.row) + "," + std::to_string(coord.col) + "]");
      }
      const Scalar estimate = (plus - minus) / (2.0 * step);
      const Scalar denom = std::max({std::abs(analytic), std::abs(estimate), 1e-8});
      const Scalar err = std::abs(analytic - estimate) / denom;
      if (attempt == 0 || err < rel) {
        rel = err;
        numeric = estimate;
      }
      if (rel < 1e-4) break;
    }
    ++report.coords_checked;
    tables.insert(coord.name);
    if (rel > report.max_rel_err) {
      report.max_rel_err = rel;
      report.worst = coord;
      report.worst_analytic = analytic;
      report.worst_numeric = numeric;
    }
  }
  report.tables_covered = tables.size();
  return report;
}

std::vector<GradCoord> sample_gradcheck_coords(const ParamStore& store, std::size_t target_count,
                                               Rng& rng, Scalar min_abs_grad) {
  std::vector<GradCoord> coords;
  const auto names = store.names();
  for (const auto& name : names) {
    const Mat& g = store.grad(name);
    Index row = 0;
    Index col = 0;
    g.array().abs().maxCoeff(&row, &col);
    coords.push_back({name, row, col});
  }
  std::vector<GradCoord> pool;
  for (const auto& name : names) {
    const Mat& g = store.grad(name);
    for (Index c = 0; c < g.cols(); ++c) {
      for (Index r = 0; r < g.rows(); ++r) {
        if (std::abs(g(r, c)) >= min_abs_grad) pool.push_back({name, r, c});
      }
    }
  }
  // Top-up draws without replacement until the pool runs dry.
  std::size_t avail = pool.size();
  while (coords.size() < target_count && avail > 0) {
    const std::size_t pick =
        static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(avail)));
    coords.push_back(pool[pick]);
    std::swap(pool[pick], pool[avail - 1]);
    --avail;
  }
  while (coords.size() < target_count) {
    const auto& name = names[static_cast<std::size_t>(
        rng.uniform_int(static_cast<std::int64_t>(names.size())))];
    const Mat& v = store.value(name);
    coords.push_back({name, rng.uniform_int(v.rows()), rng.uniform_int(v.cols())});
  }
  return coords;
}

}  // namespace dian
