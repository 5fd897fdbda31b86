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

#include <cstdint>
#include <string>
#include <vector>

#include "dian/common.hpp"
#include "dian/data.hpp"

namespace dian {

// Generator knobs. The click-weight defaults are calibrated so that the base
// CTR sits near 17%, the posterior intention label is balanced enough to
// learn (roughly 31% positives), and the per-visit-bucket CTR gap decreases
// monotonically. Users are deliberately numerous relative to the session
// count (about four sessions per user) so per-user statistics stay sparse;
// they are configuration, not ground truth, and are recorded in the dataset
// sidecar so the oracle can be recomputed exactly.
struct GenConfig {
  std::int64_t users = 12000;
  std::int64_t items = 2000;
  std::int64_t categories = 20;
  std::int64_t sessions = 50000;
  std::int64_t candidates_per_session = 4;
  std::int64_t age_buckets = 8;
  std::int64_t occupation_buckets = 12;
  std::int64_t short_len_min = 10;   // short sequence lengths straddle the encoder cap
  std::int64_t short_len_max = 25;
  std::int64_t long_len_min = 40;    // long sequence lengths straddle the encoder cap
  std::int64_t long_len_max = 110;
  Scalar visit_rate_median = 5.0;    // log-normal monthly visit rate
  Scalar visit_rate_sigma = 1.1;
  Scalar stay_seconds_median = 60.0; // log-normal average stay duration
  Scalar stay_seconds_sigma = 1.0;
  Scalar dirichlet_alpha = 0.3;      // per-user category preference concentration
  Scalar affinity_a = 4.5;           // trigger affinity theta_u = sigmoid(a - b*log(1+rate))
  Scalar affinity_b = 2.5;
  Scalar w_trig = 6.0;               // intent=1 click logit: trigger-category bonus
  Scalar w_pref = 0.8;               // preference weight in both click regimes
  Scalar bias_1 = -4.4;              // intent=1 click logit bias
  Scalar bias_0 = -6.4;              // intent=0 click logit bias
  std::uint64_t seed = 1;
};

void validate(const GenConfig& cfg);

// Latent population. Slot 0 of every per-user / per-item array is unused so
// that ids index directly. user_pref is row-major (users+1) x categories and
// category ids are 1-based: pref(u, c) = user_pref[u*categories + c-1].
struct World {
  std::int64_t n_users = 0;
  std::int64_t n_items = 0;
  std::int64_t n_categories = 0;
  std::vector<std::int64_t> item_category;    // item id -> category id
  std::vector<Scalar> user_pref;
  std::vector<Scalar> user_visit_rate;        // real-valued monthly rate
  std::vector<Scalar> trigger_affinity;       // theta_u per user
  std::vector<std::int64_t> user_age;
  std::vector<std::int64_t> user_occupation;
  std::vector<std::int64_t> user_stay_bucket; // raw stay bucket in [0, kStayBucketCount)
  Scalar w_trig = 6.0;
  Scalar w_pref = 0.8;
  Scalar bias_1 = -4.4;
  Scalar bias_0 = -6.4;
  Scalar affinity_a = 4.5;
  Scalar affinity_b = 2.5;
  std::uint64_t rng_seed = 1;

  Scalar pref(std::int64_t user_id, std::int64_t category_id) const {
    return user_pref[static_cast<std::size_t>(user_id * n_categories + category_id - 1)];
  }
};

World generate_world(const GenConfig& cfg);

Vocab vocab_for(const GenConfig& cfg);

// True intention probability of a session: trigger susceptibility modulated
// by the user's affinity to the trigger's category.
// theta' = clamp(theta_u * (0.5 + pref * n_categories / 2), 0, 1).
Scalar intention_prob(const World& world, std::int64_t user_id, std::int64_t trigger_category);

// Ground-truth click probability given the latent intent.
// intent=1: sigmoid(w_trig*[same category] + w_pref*pref + bias_1)
// intent=0: sigmoid(w_pref*pref*n_categories/2 + bias_0), trigger-free.
Scalar true_click_prob(const World& world, std::int64_t user_id, int intent,
                       const ItemRef& candidate, const ItemRef& trigger);

// Bayes-optimal CTR: theta'*p1 + (1-theta')*p0.
Scalar bayes_ctr(const World& world, std::int64_t user_id, const ItemRef& candidate,
                 const ItemRef& trigger);

// Sessions [first, first+count). Every session is drawn from its own RNG
// stream mix_seed(world.rng_seed, 1+index), so any slice of the session index
// space is reproducible independently of what else was generated.
std::vector<SessionRecord> generate_sessions(const World& world, const GenConfig& cfg,
                                             std::int64_t first, std::int64_t count);

std::vector<SessionRecord> generate_dataset(const World& world, const GenConfig& cfg);

// Sidecar: everything needed to recompute oracles against a dataset file.
struct Sidecar {
  Vocab vocab;
  GenConfig gen;
  World world;
};

std::string sidecar_to_json(const Sidecar& sidecar);
Sidecar sidecar_from_json(const std::string& text);
void write_sidecar(const std::string& path, const Sidecar& sidecar);
Sidecar read_sidecar(const std::string& path);

}  // namespace dian
