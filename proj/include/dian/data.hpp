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
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dian/common.hpp"

namespace dian {

struct ItemRef {
  std::int64_t item_id = 0;
  std::int64_t category_id = 0;
  std::int64_t timestamp = 0;  // seconds
  bool operator==(const ItemRef&) const = default;
};

struct UserProfile {
  std::int64_t age_bucket = 0;        // vocabulary index, >= 1 for real users
  std::int64_t occupation_bucket = 0; // vocabulary index, >= 1 for real users
};

struct CrossFeatures {
  std::int64_t monthly_visit_count = 0;      // raw count, bucketized at encode time
  std::int64_t avg_stay_duration_bucket = 0; // raw bucket value in [0, stay bucket count)
};

struct Candidate {
  ItemRef item;
  int click_label = 0;
};

// One mini-app entry: the user arrived via the trigger item and was shown
// candidates. Sequences are most-recent-first.
struct SessionRecord {
  std::int64_t user_id = 0;
  UserProfile user_profile;
  CrossFeatures cross_features;
  ItemRef trigger;
  std::vector<ItemRef> short_seq;  // clicks within the past 14 days
  std::vector<ItemRef> long_seq;   // clicks within the past 180 days
  std::vector<Candidate> candidates;
  std::vector<ItemRef> post_entry_clicks;
  int intent_label = 0;
  std::optional<int> latent_intent;  // generator-only ground truth
};

// Index-space sizes per namespace, including the reserved slot: index 0 is
// padding/unknown everywhere and is never assigned to a real entity, so a
// namespace with n real entities has size n+1.
struct Vocab {
  std::int64_t users = 0;
  std::int64_t items = 0;
  std::int64_t categories = 0;
  std::int64_t age_buckets = 0;
  std::int64_t occupation_buckets = 0;
  std::int64_t visit_buckets = 0;
  std::int64_t stay_buckets = 0;
};

void validate(const Vocab& vocab);

// Returns 1 iff any post-entry click shares the trigger's item_id or its
// category_id.
int posterior_intention_label(const ItemRef& trigger,
                              const std::vector<ItemRef>& post_entry_clicks);

// Number of boundaries strictly exceeded; boundaries must be ascending.
std::int64_t bucket_index(Scalar value, const std::vector<Scalar>& boundaries);

// Visit boundaries {0,1,3,7,15,30} and stay boundaries {0,10,30,60,180,600}
// seconds: 7 buckets each. 15 is a boundary so that "more than 15 visits a
// month" is representable as a bucket split.
const std::vector<Scalar>& visit_bucket_boundaries();
const std::vector<Scalar>& stay_bucket_boundaries();
inline constexpr std::int64_t kVisitBucketCount = 7;
inline constexpr std::int64_t kStayBucketCount = 7;

std::pair<std::int64_t, std::int64_t> bucketize_cross_features(std::int64_t monthly_visit_count,
                                                               Scalar avg_stay_seconds);

// Flattened mini-batch: one row per (session, candidate). Sequence tensors
// are row-blocked [rows x K]; padded positions hold index 0 and mask false.
// Raw bucket values are shifted by +1 into index space so that 0 stays
// reserved for padding.
struct EncodedBatch {
  Index rows = 0;
  Index k_short = 0;
  Index k_long = 0;
  IdxArray user, age, occupation, visit, stay;
  IdxArray trigger_item, trigger_cat, cand_item, cand_cat;
  IdxMat short_item, short_cat;
  IdxMat long_item, long_cat;
  MaskArray short_mask, long_mask;
  ArrX click_label, intent_label;
  IdxArray session_index;  // position of the source session in the caller's list
};

enum class OovPolicy {
  kError,         // out-of-vocabulary id -> ValidationError naming field and row
  kMapToUnknown,  // out-of-vocabulary id -> index 0 (inference-time policy)
};

struct RowRef {
  const SessionRecord* session = nullptr;
  std::size_t candidate = 0;
  std::int64_t session_index = 0;
};

EncodedBatch encode_rows(const std::vector<RowRef>& rows, const Vocab& vocab, Index k_short,
                         Index k_long, OovPolicy policy = OovPolicy::kError);

// All candidates of every session, input order preserved.
EncodedBatch encode_sessions(const std::vector<SessionRecord>& records, const Vocab& vocab,
                             Index k_short, Index k_long,
                             OovPolicy policy = OovPolicy::kError);

// JSON Lines dataset format: one SessionRecord object per line, field names
// exactly as in the struct definitions; latent_intent omitted when absent.
std::string session_to_json_line(const SessionRecord& record);
SessionRecord session_from_json_line(const std::string& line, std::size_t line_number = 0);
void write_sessions_jsonl(const std::string& path, const std::vector<SessionRecord>& records);
std::vector<SessionRecord> read_sessions_jsonl(const std::string& path);

}  // namespace dian
