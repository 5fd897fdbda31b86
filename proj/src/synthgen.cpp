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

#include "dian/synthgen.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

#include "dian/kernels.hpp"
#include "dian/rng.hpp"

namespace dian {

using nlohmann::json;

namespace {

constexpr std::int64_t kBaseTimestamp = 1'700'000'000;
constexpr std::int64_t kShortWindowSeconds = 14ll * 24 * 3600;
constexpr std::int64_t kLongWindowSeconds = 180ll * 24 * 3600;

}  // namespace

void validate(const GenConfig& cfg) {
  if (cfg.users < 1 || cfg.items < 1 || cfg.categories < 1 || cfg.sessions < 1) {
    throw ValidationError("generator counts (users, items, categories, sessions) must be >= 1");
  }
  if (cfg.candidates_per_session < 2) {
    throw ValidationError("candidates_per_session must be >= 2");
  }
  if (cfg.items < cfg.categories) {
    throw ValidationError("need at least one item per category");
  }
  if (cfg.age_buckets < 1 || cfg.occupation_buckets < 1) {
    throw ValidationError("profile bucket counts must be >= 1");
  }
  if (cfg.short_len_min < 0 || cfg.short_len_max < cfg.short_len_min || cfg.long_len_min < 0 ||
      cfg.long_len_max < cfg.long_len_min) {
    throw ValidationError("sequence length ranges must satisfy 0 <= min <= max");
  }
  if (cfg.visit_rate_median <= 0 || cfg.visit_rate_sigma < 0 || cfg.stay_seconds_median <= 0 ||
      cfg.stay_seconds_sigma < 0) {
    throw ValidationError("log-normal parameters must be positive");
  }
  if (cfg.dirichlet_alpha <= 0) {
    throw ValidationError("dirichlet_alpha must be positive");
  }
}

Vocab vocab_for(const GenConfig& cfg) {
  Vocab v;
  v.users = cfg.users + 1;
  v.items = cfg.items + 1;
  v.categories = cfg.categories + 1;
  v.age_buckets = cfg.age_buckets + 1;
  v.occupation_buckets = cfg.occupation_buckets + 1;
  v.visit_buckets = kVisitBucketCount + 1;
  v.stay_buckets = kStayBucketCount + 1;
  return v;
}

World generate_world(const GenConfig& cfg) {
  validate(cfg);
  World w;
  w.n_users = cfg.users;
  w.n_items = cfg.items;
  w.n_categories = cfg.categories;
  w.w_trig = cfg.w_trig;
  w.w_pref = cfg.w_pref;
  w.bias_1 = cfg.bias_1;
  w.bias_0 = cfg.bias_0;
  w.affinity_a = cfg.affinity_a;
  w.affinity_b = cfg.affinity_b;
  w.rng_seed = cfg.seed;

  // Taxonomy is a fixed round-robin: item i belongs to category (i-1)%C + 1,
  // so every category is populated and item sampling within a category is
  // arithmetic rather than a table walk.
  w.item_category.assign(static_cast<std::size_t>(cfg.items + 1), 0);
  for (std::int64_t i = 1; i <= cfg.items; ++i) {
    w.item_category[static_cast<std::size_t>(i)] = (i - 1) % cfg.categories + 1;
  }

  w.user_pref.assign(static_cast<std::size_t>((cfg.users + 1) * cfg.categories), 0.0);
  w.user_visit_rate.assign(static_cast<std::size_t>(cfg.users + 1), 0.0);
  w.trigger_affinity.assign(static_cast<std::size_t>(cfg.users + 1), 0.0);
  w.user_age.assign(static_cast<std::size_t>(cfg.users + 1), 0);
  w.user_occupation.assign(static_cast<std::size_t>(cfg.users + 1), 0);
  w.user_stay_bucket.assign(static_cast<std::size_t>(cfg.users + 1), 0);

  Rng rng(mix_seed(cfg.seed, 0));
  for (std::int64_t u = 1; u <= cfg.users; ++u) {
    const auto pref = rng.dirichlet(cfg.dirichlet_alpha, static_cast<std::size_t>(cfg.categories));
    std::copy(pref.begin(), pref.end(),
              w.user_pref.begin() + static_cast<std::ptrdiff_t>(u * cfg.categories));
    const Scalar rate = rng.lognormal(cfg.visit_rate_median, cfg.visit_rate_sigma);
    w.user_visit_rate[static_cast<std::size_t>(u)] = rate;
    w.trigger_affinity[static_cast<std::size_t>(u)] =
        sigmoid(cfg.affinity_a - cfg.affinity_b * std::log1p(rate));
    w.user_age[static_cast<std::size_t>(u)] = 1 + rng.uniform_int(cfg.age_buckets);
    w.user_occupation[static_cast<std::size_t>(u)] = 1 + rng.uniform_int(cfg.occupation_buckets);
    const Scalar stay = rng.lognormal(cfg.stay_seconds_median, cfg.stay_seconds_sigma);
    w.user_stay_bucket[static_cast<std::size_t>(u)] =
        bucket_index(stay, stay_bucket_boundaries());
  }
  return w;
}

Scalar intention_prob(const World& world, std::int64_t user_id, std::int64_t trigger_category) {
  const Scalar theta_u = world.trigger_affinity[static_cast<std::size_t>(user_id)];
  const Scalar p = world.pref(user_id, trigger_category);
  const Scalar theta =
      theta_u * (0.5 + p * static_cast<Scalar>(world.n_categories) / 2.0);
  return std::clamp(theta, 0.0, 1.0);
}

Scalar true_click_prob(const World& world, std::int64_t user_id, int intent,
                       const ItemRef& candidate, const ItemRef& trigger) {
  const Scalar p = world.pref(user_id, candidate.category_id);
  if (intent != 0) {
    const Scalar same = candidate.category_id == trigger.category_id ? 1.0 : 0.0;
    return sigmoid(world.w_trig * same + world.w_pref * p + world.bias_1);
  }
  return sigmoid(world.w_pref * p * static_cast<Scalar>(world.n_categories) / 2.0 +
                 world.bias_0);
}

Scalar bayes_ctr(const World& world, std::int64_t user_id, const ItemRef& candidate,
                 const ItemRef& trigger) {
  const Scalar theta = intention_prob(world, user_id, trigger.category_id);
  const Scalar p1 = true_click_prob(world, user_id, 1, candidate, trigger);
  const Scalar p0 = true_click_prob(world, user_id, 0, candidate, trigger);
  return theta * p1 + (1.0 - theta) * p0;
}

namespace {

// Items within category c are c, c+C, c+2C, ...
std::int64_t sample_item_in_category(Rng& rng, const World& world, std::int64_t category) {
  const std::int64_t count = (world.n_items - category) / world.n_categories + 1;
  return category + rng.uniform_int(count) * world.n_categories;
}

std::int64_t sample_category_from_pref(Rng& rng, const World& world, std::int64_t user_id) {
  const Scalar x = rng.uniform();
  Scalar acc = 0.0;
  for (std::int64_t c = 1; c <= world.n_categories; ++c) {
    acc += world.pref(user_id, c);
    if (x < acc) return c;
  }
  return world.n_categories;
}

std::vector<ItemRef> sample_history(Rng& rng, const World& world, std::int64_t user_id,
                                    std::int64_t len, std::int64_t window_seconds) {
  std::vector<ItemRef> seq;
  seq.reserve(static_cast<std::size_t>(len));
  for (std::int64_t i = 0; i < len; ++i) {
    ItemRef it;
    it.category_id = sample_category_from_pref(rng, world, user_id);
    it.item_id = sample_item_in_category(rng, world, it.category_id);
    it.timestamp = kBaseTimestamp - 1 - rng.uniform_int(window_seconds);
    seq.push_back(it);
  }
  std::stable_sort(seq.begin(), seq.end(),
                   [](const ItemRef& a, const ItemRef& b) { return a.timestamp > b.timestamp; });
  return seq;
}

}  // namespace

std::vector<SessionRecord> generate_sessions(const World& world, const GenConfig& cfg,
                                             std::int64_t first, std::int64_t count) {
  validate(cfg);
  // Session user is drawn proportionally to visit rate: frequent visitors
  // produce more entries.
  std::vector<Scalar> cum(static_cast<std::size_t>(world.n_users + 1), 0.0);
  for (std::int64_t u = 1; u <= world.n_users; ++u) {
    cum[static_cast<std::size_t>(u)] =
        cum[static_cast<std::size_t>(u - 1)] + world.user_visit_rate[static_cast<std::size_t>(u)];
  }
  const Scalar total = cum.back();

  std::vector<SessionRecord> out;
  out.reserve(static_cast<std::size_t>(count));
  for (std::int64_t s = first; s < first + count; ++s) {
    Rng rng(mix_seed(world.rng_seed, static_cast<std::uint64_t>(1 + s)));
    SessionRecord rec;

    const Scalar x = rng.uniform() * total;
    const auto it = std::upper_bound(cum.begin() + 1, cum.end(), x);
    const std::int64_t user = std::min<std::int64_t>(
        world.n_users, static_cast<std::int64_t>(it - cum.begin()));
    rec.user_id = user;
    rec.user_profile.age_bucket = world.user_age[static_cast<std::size_t>(user)];
    rec.user_profile.occupation_bucket = world.user_occupation[static_cast<std::size_t>(user)];
    rec.cross_features.monthly_visit_count =
        std::llround(world.user_visit_rate[static_cast<std::size_t>(user)]);
    rec.cross_features.avg_stay_duration_bucket =
        world.user_stay_bucket[static_cast<std::size_t>(user)];

    const std::int64_t trig_cat = sample_category_from_pref(rng, world, user);
    rec.trigger.category_id = trig_cat;
    rec.trigger.item_id = sample_item_in_category(rng, world, trig_cat);
    rec.trigger.timestamp = kBaseTimestamp;

    const Scalar theta = intention_prob(world, user, trig_cat);
    const int latent = rng.bernoulli(theta) ? 1 : 0;
    rec.latent_intent = latent;

    // Half the slate shares the trigger's category; the rest follows the
    // user's preference distribution.
    const std::int64_t n_cand = cfg.candidates_per_session;
    for (std::int64_t c = 0; c < n_cand; ++c) {
      Candidate cand;
      const std::int64_t cat =
          c < n_cand / 2 ? trig_cat : sample_category_from_pref(rng, world, user);
      cand.item.category_id = cat;
      cand.item.item_id = sample_item_in_category(rng, world, cat);
      cand.item.timestamp = kBaseTimestamp;
      const Scalar p = true_click_prob(world, user, latent, cand.item, rec.trigger);
      cand.click_label = rng.bernoulli(p) ? 1 : 0;
      rec.candidates.push_back(cand);
    }
    rng.shuffle(rec.candidates);

    // Post-entry behavior at desk scale is exactly the clicked candidates.
    std::int64_t click_ts = kBaseTimestamp;
    for (const auto& cand : rec.candidates) {
      if (cand.click_label == 1) {
        ItemRef click = cand.item;
        click.timestamp = ++click_ts;
        rec.post_entry_clicks.push_back(click);
      }
    }
    rec.intent_label = posterior_intention_label(rec.trigger, rec.post_entry_clicks);

    const std::int64_t short_len =
        cfg.short_len_min + rng.uniform_int(cfg.short_len_max - cfg.short_len_min + 1);
    rec.short_seq = sample_history(rng, world, user, short_len, kShortWindowSeconds);
    const std::int64_t long_len =
        cfg.long_len_min + rng.uniform_int(cfg.long_len_max - cfg.long_len_min + 1);
    rec.long_seq = sample_history(rng, world, user, long_len, kLongWindowSeconds);

    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<SessionRecord> generate_dataset(const World& world, const GenConfig& cfg) {
  return generate_sessions(world, cfg, 0, cfg.sessions);
}

namespace {

json gen_config_to_json(const GenConfig& cfg) {
  return json{{"users", cfg.users},
              {"items", cfg.items},
              {"categories", cfg.categories},
              {"sessions", cfg.sessions},
              {"candidates_per_session", cfg.candidates_per_session},
              {"age_buckets", cfg.age_buckets},
              {"occupation_buckets", cfg.occupation_buckets},
              {"short_len_min", cfg.short_len_min},
              {"short_len_max", cfg.short_len_max},
              {"long_len_min", cfg.long_len_min},
              {"long_len_max", cfg.long_len_max},
              {"visit_rate_median", cfg.visit_rate_median},
              {"visit_rate_sigma", cfg.visit_rate_sigma},
              {"stay_seconds_median", cfg.stay_seconds_median},
              {"stay_seconds_sigma", cfg.stay_seconds_sigma},
              {"dirichlet_alpha", cfg.dirichlet_alpha},
              {"affinity_a", cfg.affinity_a},
              {"affinity_b", cfg.affinity_b},
              {"w_trig", cfg.w_trig},
              {"w_pref", cfg.w_pref},
              {"bias_1", cfg.bias_1},
              {"bias_0", cfg.bias_0},
              {"seed", cfg.seed}};
}

GenConfig gen_config_from_json(const json& j) {
  GenConfig cfg;
  cfg.users = j.at("users").get<std::int64_t>();
  cfg.items = j.at("items").get<std::int64_t>();
  cfg.categories = j.at("categories").get<std::int64_t>();
  cfg.sessions = j.at("sessions").get<std::int64_t>();
  cfg.candidates_per_session = j.at("candidates_per_session").get<std::int64_t>();
  cfg.age_buckets = j.at("age_buckets").get<std::int64_t>();
  cfg.occupation_buckets = j.at("occupation_buckets").get<std::int64_t>();
  cfg.short_len_min = j.at("short_len_min").get<std::int64_t>();
  cfg.short_len_max = j.at("short_len_max").get<std::int64_t>();
  cfg.long_len_min = j.at("long_len_min").get<std::int64_t>();
  cfg.long_len_max = j.at("long_len_max").get<std::int64_t>();
  cfg.visit_rate_median = j.at("visit_rate_median").get<Scalar>();
  cfg.visit_rate_sigma = j.at("visit_rate_sigma").get<Scalar>();
  cfg.stay_seconds_median = j.at("stay_seconds_median").get<Scalar>();
  cfg.stay_seconds_sigma = j.at("stay_seconds_sigma").get<Scalar>();
  cfg.dirichlet_alpha = j.at("dirichlet_alpha").get<Scalar>();
  cfg.affinity_a = j.at("affinity_a").get<Scalar>();
  cfg.affinity_b = j.at("affinity_b").get<Scalar>();
  cfg.w_trig = j.at("w_trig").get<Scalar>();
  cfg.w_pref = j.at("w_pref").get<Scalar>();
  cfg.bias_1 = j.at("bias_1").get<Scalar>();
  cfg.bias_0 = j.at("bias_0").get<Scalar>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  return cfg;
}

json vocab_to_json(const Vocab& v) {
  return json{{"users", v.users},
              {"items", v.items},
              {"categories", v.categories},
              {"age_buckets", v.age_buckets},
              {"occupation_buckets", v.occupation_buckets},
              {"visit_buckets", v.visit_buckets},
              {"stay_buckets", v.stay_buckets}};
}

Vocab vocab_from_json(const json& j) {
  Vocab v;
  v.users = j.at("users").get<std::int64_t>();
  v.items = j.at("items").get<std::int64_t>();
  v.categories = j.at("categories").get<std::int64_t>();
  v.age_buckets = j.at("age_buckets").get<std::int64_t>();
  v.occupation_buckets = j.at("occupation_buckets").get<std::int64_t>();
  v.visit_buckets = j.at("visit_buckets").get<std::int64_t>();
  v.stay_buckets = j.at("stay_buckets").get<std::int64_t>();
  return v;
}

json world_to_json(const World& w) {
  return json{{"n_users", w.n_users},
              {"n_items", w.n_items},
              {"n_categories", w.n_categories},
              {"item_category", w.item_category},
              {"user_pref", w.user_pref},
              {"user_visit_rate", w.user_visit_rate},
              {"trigger_affinity", w.trigger_affinity},
              {"user_age", w.user_age},
              {"user_occupation", w.user_occupation},
              {"user_stay_bucket", w.user_stay_bucket},
              {"w_trig", w.w_trig},
              {"w_pref", w.w_pref},
              {"bias_1", w.bias_1},
              {"bias_0", w.bias_0},
              {"affinity_a", w.affinity_a},
              {"affinity_b", w.affinity_b},
              {"rng_seed", w.rng_seed}};
}

World world_from_json(const json& j) {
  World w;
  w.n_users = j.at("n_users").get<std::int64_t>();
  w.n_items = j.at("n_items").get<std::int64_t>();
  w.n_categories = j.at("n_categories").get<std::int64_t>();
  w.item_category = j.at("item_category").get<std::vector<std::int64_t>>();
  w.user_pref = j.at("user_pref").get<std::vector<Scalar>>();
  w.user_visit_rate = j.at("user_visit_rate").get<std::vector<Scalar>>();
  w.trigger_affinity = j.at("trigger_affinity").get<std::vector<Scalar>>();
  w.user_age = j.at("user_age").get<std::vector<std::int64_t>>();
  w.user_occupation = j.at("user_occupation").get<std::vector<std::int64_t>>();
  w.user_stay_bucket = j.at("user_stay_bucket").get<std::vector<std::int64_t>>();
  w.w_trig = j.at("w_trig").get<Scalar>();
  w.w_pref = j.at("w_pref").get<Scalar>();
  w.bias_1 = j.at("bias_1").get<Scalar>();
  w.bias_0 = j.at("bias_0").get<Scalar>();
  w.affinity_a = j.at("affinity_a").get<Scalar>();
  w.affinity_b = j.at("affinity_b").get<Scalar>();
  w.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  return w;
}

}  // namespace

std::string sidecar_to_json(const Sidecar& sidecar) {
  json j;
  j["format_version"] = 1;
  j["vocab"] = vocab_to_json(sidecar.vocab);
  j["gen_config"] = gen_config_to_json(sidecar.gen);
  j["world"] = world_to_json(sidecar.world);
  return j.dump();
}

Sidecar sidecar_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    Sidecar s;
    s.vocab = vocab_from_json(j.at("vocab"));
    s.gen = gen_config_from_json(j.at("gen_config"));
    s.world = world_from_json(j.at("world"));
    return s;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed sidecar: ") + e.what());
  }
}

void write_sidecar(const std::string& path, const Sidecar& sidecar) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open for writing: " + path);
  out << sidecar_to_json(sidecar) << '\n';
  if (!out) throw ValidationError("write failed: " + path);
}

Sidecar read_sidecar(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open sidecar: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return sidecar_from_json(text);
}

}  // namespace dian
