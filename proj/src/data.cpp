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

#include "dian/data.hpp"

#include <json.hpp>

#include <fstream>

namespace dian {

using nlohmann::json;

void validate(const Vocab& vocab) {
  const std::pair<const char*, std::int64_t> sizes[] = {
      {"users", vocab.users},
      {"items", vocab.items},
      {"categories", vocab.categories},
      {"age_buckets", vocab.age_buckets},
      {"occupation_buckets", vocab.occupation_buckets},
      {"visit_buckets", vocab.visit_buckets},
      {"stay_buckets", vocab.stay_buckets},
  };
  for (const auto& [name, size] : sizes) {
    if (size < 2) {
      throw ValidationError(std::string("vocab namespace ") + name +
                            " must have size >= 2 (index 0 is reserved)");
    }
  }
}

int posterior_intention_label(const ItemRef& trigger,
                              const std::vector<ItemRef>& post_entry_clicks) {
  for (const auto& click : post_entry_clicks) {
    if (click.item_id == trigger.item_id || click.category_id == trigger.category_id) {
      return 1;
    }
  }
  return 0;
}

std::int64_t bucket_index(Scalar value, const std::vector<Scalar>& boundaries) {
  std::int64_t idx = 0;
  for (const Scalar b : boundaries) {
    if (value > b) ++idx;
  }
  return idx;
}

const std::vector<Scalar>& visit_bucket_boundaries() {
  static const std::vector<Scalar> b{0, 1, 3, 7, 15, 30};
  return b;
}

const std::vector<Scalar>& stay_bucket_boundaries() {
  static const std::vector<Scalar> b{0, 10, 30, 60, 180, 600};
  return b;
}

std::pair<std::int64_t, std::int64_t> bucketize_cross_features(std::int64_t monthly_visit_count,
                                                               Scalar avg_stay_seconds) {
  return {bucket_index(static_cast<Scalar>(monthly_visit_count), visit_bucket_boundaries()),
          bucket_index(avg_stay_seconds, stay_bucket_boundaries())};
}

namespace {

std::string row_context(std::int64_t session_index, const char* field) {
  return std::string(field) + " at record " + std::to_string(session_index);
}

// Validates or remaps one id into index space [0, size).
std::int64_t encode_id(std::int64_t id, std::int64_t size, OovPolicy policy,
                       std::int64_t session_index, const char* field) {
  if (id >= 1 && id < size) return id;
  if (policy == OovPolicy::kMapToUnknown) return 0;
  throw ValidationError("encode: " + std::string("id ") + std::to_string(id) +
                        " out of vocabulary range [1," + std::to_string(size - 1) + "] for " +
                        row_context(session_index, field));
}

}  // namespace

EncodedBatch encode_rows(const std::vector<RowRef>& rows, const Vocab& vocab, Index k_short,
                         Index k_long, OovPolicy policy) {
  validate(vocab);
  if (k_short < 1 || k_long < 1) {
    throw ValidationError("encode: sequence caps must be >= 1");
  }
  const Index n = static_cast<Index>(rows.size());
  EncodedBatch b;
  b.rows = n;
  b.k_short = k_short;
  b.k_long = k_long;
  b.user.resize(n);
  b.age.resize(n);
  b.occupation.resize(n);
  b.visit.resize(n);
  b.stay.resize(n);
  b.trigger_item.resize(n);
  b.trigger_cat.resize(n);
  b.cand_item.resize(n);
  b.cand_cat.resize(n);
  b.short_item = IdxMat::Zero(n, k_short);
  b.short_cat = IdxMat::Zero(n, k_short);
  b.long_item = IdxMat::Zero(n, k_long);
  b.long_cat = IdxMat::Zero(n, k_long);
  b.short_mask = MaskArray::Constant(n, k_short, false);
  b.long_mask = MaskArray::Constant(n, k_long, false);
  b.click_label.resize(n);
  b.intent_label.resize(n);
  b.session_index.resize(n);

  for (Index r = 0; r < n; ++r) {
    const RowRef& ref = rows[static_cast<std::size_t>(r)];
    const SessionRecord& s = *ref.session;
    const std::int64_t si = ref.session_index;
    if (s.candidates.empty()) {
      throw ValidationError("encode: record " + std::to_string(si) + " has no candidates");
    }
    if (ref.candidate >= s.candidates.size()) {
      throw ValidationError("encode: candidate index out of range at record " +
                            std::to_string(si));
    }
    const Candidate& cand = s.candidates[ref.candidate];
    if (cand.click_label != 0 && cand.click_label != 1) {
      throw ValidationError("encode: click_label outside {0,1} for " +
                            row_context(si, "candidates"));
    }
    if (s.intent_label != 0 && s.intent_label != 1) {
      throw ValidationError("encode: intent_label outside {0,1} at record " + std::to_string(si));
    }

    b.user(r) = encode_id(s.user_id, vocab.users, policy, si, "user_id");
    b.age(r) = encode_id(s.user_profile.age_bucket, vocab.age_buckets, policy, si,
                         "user_profile.age_bucket");
    b.occupation(r) = encode_id(s.user_profile.occupation_bucket, vocab.occupation_buckets,
                                policy, si, "user_profile.occupation_bucket");

    // Raw bucket values shift by +1 into index space; padding stays 0.
    const auto [visit_bucket, ignored] =
        bucketize_cross_features(s.cross_features.monthly_visit_count, 0.0);
    b.visit(r) = encode_id(visit_bucket + 1, vocab.visit_buckets, policy, si,
                           "cross_features.monthly_visit_count");
    b.stay(r) = encode_id(s.cross_features.avg_stay_duration_bucket + 1, vocab.stay_buckets,
                          policy, si, "cross_features.avg_stay_duration_bucket");

    b.trigger_item(r) = encode_id(s.trigger.item_id, vocab.items, policy, si, "trigger.item_id");
    b.trigger_cat(r) =
        encode_id(s.trigger.category_id, vocab.categories, policy, si, "trigger.category_id");
    b.cand_item(r) = encode_id(cand.item.item_id, vocab.items, policy, si, "candidates.item_id");
    b.cand_cat(r) =
        encode_id(cand.item.category_id, vocab.categories, policy, si, "candidates.category_id");

    // Sequences: keep the K most recent entries (they are most-recent-first).
    const Index ns = std::min<Index>(k_short, static_cast<Index>(s.short_seq.size()));
    for (Index k = 0; k < ns; ++k) {
      const ItemRef& it = s.short_seq[static_cast<std::size_t>(k)];
      b.short_item(r, k) = encode_id(it.item_id, vocab.items, policy, si, "short_seq.item_id");
      b.short_cat(r, k) =
          encode_id(it.category_id, vocab.categories, policy, si, "short_seq.category_id");
      b.short_mask(r, k) = true;
    }
    const Index nl = std::min<Index>(k_long, static_cast<Index>(s.long_seq.size()));
    for (Index k = 0; k < nl; ++k) {
      const ItemRef& it = s.long_seq[static_cast<std::size_t>(k)];
      b.long_item(r, k) = encode_id(it.item_id, vocab.items, policy, si, "long_seq.item_id");
      b.long_cat(r, k) =
          encode_id(it.category_id, vocab.categories, policy, si, "long_seq.category_id");
      b.long_mask(r, k) = true;
    }

    b.click_label(r) = static_cast<Scalar>(cand.click_label);
    b.intent_label(r) = static_cast<Scalar>(s.intent_label);
    b.session_index(r) = si;
  }
  return b;
}

EncodedBatch encode_sessions(const std::vector<SessionRecord>& records, const Vocab& vocab,
                             Index k_short, Index k_long, OovPolicy policy) {
  std::vector<RowRef> rows;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].candidates.empty()) {
      throw ValidationError("encode: record " + std::to_string(i) + " has no candidates");
    }
    for (std::size_t c = 0; c < records[i].candidates.size(); ++c) {
      rows.push_back({&records[i], c, static_cast<std::int64_t>(i)});
    }
  }
  return encode_rows(rows, vocab, k_short, k_long, policy);
}

namespace {

json item_to_json(const ItemRef& it) {
  return json{{"item_id", it.item_id}, {"category_id", it.category_id},
              {"timestamp", it.timestamp}};
}

ItemRef item_from_json(const json& j) {
  ItemRef it;
  it.item_id = j.at("item_id").get<std::int64_t>();
  it.category_id = j.at("category_id").get<std::int64_t>();
  it.timestamp = j.at("timestamp").get<std::int64_t>();
  return it;
}

std::vector<ItemRef> items_from_json(const json& j) {
  std::vector<ItemRef> out;
  out.reserve(j.size());
  for (const auto& e : j) out.push_back(item_from_json(e));
  return out;
}

}  // namespace

std::string session_to_json_line(const SessionRecord& s) {
  json j;
  j["user_id"] = s.user_id;
  j["user_profile"] = {{"age_bucket", s.user_profile.age_bucket},
                       {"occupation_bucket", s.user_profile.occupation_bucket}};
  j["cross_features"] = {{"monthly_visit_count", s.cross_features.monthly_visit_count},
                         {"avg_stay_duration_bucket", s.cross_features.avg_stay_duration_bucket}};
  j["trigger"] = item_to_json(s.trigger);
  j["short_seq"] = json::array();
  for (const auto& it : s.short_seq) j["short_seq"].push_back(item_to_json(it));
  j["long_seq"] = json::array();
  for (const auto& it : s.long_seq) j["long_seq"].push_back(item_to_json(it));
  j["candidates"] = json::array();
  for (const auto& c : s.candidates) {
    j["candidates"].push_back(json{{"item", item_to_json(c.item)}, {"click_label", c.click_label}});
  }
  j["post_entry_clicks"] = json::array();
  for (const auto& it : s.post_entry_clicks) j["post_entry_clicks"].push_back(item_to_json(it));
  j["intent_label"] = s.intent_label;
  if (s.latent_intent.has_value()) j["latent_intent"] = *s.latent_intent;
  return j.dump();
}

SessionRecord session_from_json_line(const std::string& line, std::size_t line_number) {
  try {
    const json j = json::parse(line);
    SessionRecord s;
    s.user_id = j.at("user_id").get<std::int64_t>();
    s.user_profile.age_bucket = j.at("user_profile").at("age_bucket").get<std::int64_t>();
    s.user_profile.occupation_bucket =
        j.at("user_profile").at("occupation_bucket").get<std::int64_t>();
    s.cross_features.monthly_visit_count =
        j.at("cross_features").at("monthly_visit_count").get<std::int64_t>();
    s.cross_features.avg_stay_duration_bucket =
        j.at("cross_features").at("avg_stay_duration_bucket").get<std::int64_t>();
    s.trigger = item_from_json(j.at("trigger"));
    s.short_seq = items_from_json(j.at("short_seq"));
    s.long_seq = items_from_json(j.at("long_seq"));
    for (const auto& c : j.at("candidates")) {
      Candidate cand;
      cand.item = item_from_json(c.at("item"));
      cand.click_label = c.at("click_label").get<int>();
      s.candidates.push_back(cand);
    }
    s.post_entry_clicks = items_from_json(j.at("post_entry_clicks"));
    s.intent_label = j.at("intent_label").get<int>();
    if (j.contains("latent_intent")) s.latent_intent = j.at("latent_intent").get<int>();
    return s;
  } catch (const json::exception& e) {
    throw ValidationError("malformed session record on line " + std::to_string(line_number) +
                          ": " + e.what());
  }
}

void write_sessions_jsonl(const std::string& path, const std::vector<SessionRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open for writing: " + path);
  for (const auto& r : records) {
    out << session_to_json_line(r) << '\n';
  }
  if (!out) throw ValidationError("write failed: " + path);
}

std::vector<SessionRecord> read_sessions_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open dataset: " + path);
  std::vector<SessionRecord> out;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    out.push_back(session_from_json_line(line, line_number));
  }
  return out;
}

}  // namespace dian
