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

#include <functional>
#include <string>
#include <vector>

#include "dian/param_store.hpp"
#include "dian/rng.hpp"

namespace dian {

struct GradCoord {
  std::string name;
  Index row = 0;
  Index col = 0;
};

struct GradCheckReport {
  Scalar max_rel_err = 0.0;
  GradCoord worst;
  Scalar worst_analytic = 0.0;
  Scalar worst_numeric = 0.0;
  std::size_t coords_checked = 0;
  std::size_t tables_covered = 0;
};

// Central-difference check of the analytic gradients already present in the
// store (the caller runs forward + backward first). loss_fn must recompute
// the loss from the store's current values and be deterministic. Relative
// error denominator: max(|analytic|, |numeric|, 1e-8).
//
// A coordinate whose relative error reaches 1e-4 at the base step is
// re-estimated at perturbation/8 and perturbation/64 and the smallest error
// is kept. A step that straddles a ReLU kink produces a one-sided secant
// whose error shrinks with the step, so the retry rejects that artifact; a
// wrong analytic gradient disagrees with the secant at every step size and
// keeps its error.
GradCheckReport finite_diff_gradcheck(ParamStore& store,
                                      const std::function<Scalar()>& loss_fn,
                                      const std::vector<GradCoord>& coords,
                                      Scalar perturbation = 1e-5);

// The largest-|grad| coordinate of every registered table, topped up with
// random coordinates until target_count is reached. When min_abs_grad > 0
// the top-up draws only from coordinates with |grad| >= min_abs_grad,
// skipping entries whose true gradient sits below finite-difference rounding
// noise; tables with no such coordinate still contribute their per-table
// maximum. min_abs_grad = 0 admits every coordinate.
std::vector<GradCoord> sample_gradcheck_coords(const ParamStore& store, std::size_t target_count,
                                               Rng& rng, Scalar min_abs_grad = 0.0);

}  // namespace dian
