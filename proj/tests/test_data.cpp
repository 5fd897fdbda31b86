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

#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "dian/data.hpp"
#include "dian/rng.hpp"

using namespace dian;

namespace {

ItemRef item(std::int64_t id, std::int64_t cat, std::int64_t ts = 0) { return {id, cat, ts}; }

Vocab small_vocab() {
  Vocab v;
  v.users = 10;
  v.items = 50;
  v.categories = 21;
  v.age_buckets = 5;
  v.occupation_buckets = 6;
  v.visit_buckets = kVisitBucketCount + 1;
  v.stay_buckets = kStayBucketCount + 1;
  return v;
}

// A record that is in-vocabulary for small_vocab() everywhere.
SessionRecord valid_record() {
  SessionRecord s;
  s.user_id = 3;
  s.user_profile = {2, 4};
  s.cross_features = {16, 2};
  s.trigger = item(7, 4, 1000);
  s.short_seq = {item(9, 2, 900), item(11, 4, 800), item(12, 3, 700)};
  s.long_seq = {item(9, 2, 900), item(11, 4, 800), item(12, 3, 700), item(13, 1, 600),
                item(14, 5, 500)};
  s.candidates = {{item(20, 4, 0), 1}, {item(21, 5, 0), 0}};
  s.post_entry_clicks = {s.candidates[0].item};
  s.intent_label = posterior_intention_label(s.trigger, s.post_entry_clicks);
  return s;
}

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_SUITE("datamodel") {

TEST_CASE("intention label fires on the trigger item itself") {
  const ItemRef trig = item(7, 4);
  CHECK(posterior_intention_label(trig, {item(7, 4)}) == 1);
  // Item id match alone is enough even if the stored category disagrees.
  CHECK(posterior_intention_label(trig, {item(7, 9)}) == 1);
}

TEST_CASE("intention label is 0 with no post-entry clicks") {
  CHECK(posterior_intention_label(item(7, 4), {}) == 0);
}

TEST_CASE("intention label is 0 when all clicks are other categories") {
  const ItemRef trig = item(7, 4);
  CHECK(posterior_intention_label(trig, {item(8, 2), item(9, 3), item(10, 5)}) == 0);
}

TEST_CASE("intention label fires on a same-category sibling item") {
  CHECK(posterior_intention_label(item(7, 4), {item(30, 4)}) == 1);
}

TEST_CASE("intention label is order-insensitive") {
  const ItemRef trig = item(7, 4);
  std::vector<ItemRef> clicks{item(8, 2), item(30, 4), item(9, 3), item(10, 5)};
  std::sort(clicks.begin(), clicks.end(),
            [](const ItemRef& a, const ItemRef& b) { return a.item_id < b.item_id; });
  const int reference = posterior_intention_label(trig, clicks);
  do {
    CHECK(posterior_intention_label(trig, clicks) == reference);
  } while (std::next_permutation(clicks.begin(), clicks.end(),
                                 [](const ItemRef& a, const ItemRef& b) {
                                   return a.item_id < b.item_id;
                                 }));
}

TEST_CASE("intention label monotone under adding a trigger-category click") {
  const ItemRef trig = item(7, 4);
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<ItemRef> clicks;
    const auto n = rng.uniform_int(5);
    for (std::int64_t k = 0; k < n; ++k) {
      clicks.push_back(item(8 + rng.uniform_int(20), 1 + rng.uniform_int(6)));
    }
    const int before = posterior_intention_label(trig, clicks);
    clicks.push_back(item(40, trig.category_id));
    const int after = posterior_intention_label(trig, clicks);
    CHECK(after == 1);
    CHECK(after >= before);
  }
}

TEST_CASE("cross feature bucket boundaries") {
  // Visit boundaries {0,1,3,7,15,30}: the bucket is the count of boundaries
  // strictly exceeded.
  CHECK(bucketize_cross_features(16, 0.0).first == 5);
  CHECK(bucketize_cross_features(0, 0.0).first == 0);
  CHECK(bucketize_cross_features(1, 0.0).first == 1);
  CHECK(bucketize_cross_features(15, 0.0).first == 4);
  CHECK(bucketize_cross_features(30, 0.0).first == 5);
  CHECK(bucketize_cross_features(31, 0.0).first == 6);
  // Stay boundaries {0,10,30,60,180,600} seconds.
  CHECK(bucketize_cross_features(0, 45.0).second == 3);
  CHECK(bucketize_cross_features(0, 0.0).second == 0);
  CHECK(bucketize_cross_features(0, 10.0).second == 1);
  CHECK(bucketize_cross_features(0, 600.0).second == 5);
  CHECK(bucketize_cross_features(0, 601.0).second == 6);
  // Bucket indices stay inside the declared counts.
  for (std::int64_t visits : {0, 1, 2, 5, 14, 16, 29, 50, 100000}) {
    const auto b = bucketize_cross_features(visits, 0.0).first;
    CHECK(b >= 0);
    CHECK(b < kVisitBucketCount);
  }
}

TEST_CASE("bucket_index requires ascending boundaries and counts exceedances") {
  const std::vector<Scalar> bounds{1.0, 2.0, 4.0};
  CHECK(bucket_index(0.5, bounds) == 0);
  CHECK(bucket_index(1.0, bounds) == 0);
  CHECK(bucket_index(1.5, bounds) == 1);
  CHECK(bucket_index(4.5, bounds) == 3);
}

TEST_CASE("encode pads a short history and masks the tail") {
  auto s = valid_record();
  const EncodedBatch b = encode_sessions({s}, small_vocab(), 5, 8);
  REQUIRE(b.rows == 2);
  for (Index k = 0; k < 3; ++k) CHECK(b.short_mask(0, k));
  for (Index k = 3; k < 5; ++k) {
    CHECK_FALSE(b.short_mask(0, k));
    CHECK(b.short_item(0, k) == 0);
    CHECK(b.short_cat(0, k) == 0);
  }
  CHECK(b.short_item(0, 0) == 9);
  CHECK(b.short_cat(0, 1) == 4);
}

TEST_CASE("encode keeps the most recent entries when truncating") {
  auto s = valid_record();
  s.short_seq.clear();
  for (int k = 0; k < 8; ++k) s.short_seq.push_back(item(10 + k, 1 + k % 5, 800 - k));
  const EncodedBatch b = encode_sessions({s}, small_vocab(), 5, 8);
  // Sequences are most-recent-first, so truncation keeps the first 5.
  for (Index k = 0; k < 5; ++k) {
    CHECK(b.short_item(0, k) == 10 + k);
    CHECK(b.short_mask(0, k));
  }
}

TEST_CASE("encode flattens sessions in input order") {
  auto a = valid_record();
  auto b = valid_record();
  b.candidates = {{item(22, 2, 0), 0}, {item(23, 3, 0), 0}, {item(24, 4, 0), 1}};
  b.post_entry_clicks = {b.candidates[2].item};
  b.intent_label = posterior_intention_label(b.trigger, b.post_entry_clicks);
  const EncodedBatch e = encode_sessions({a, b}, small_vocab(), 5, 8);
  REQUIRE(e.rows == 5);
  const std::vector<std::int64_t> want_items{20, 21, 22, 23, 24};
  const std::vector<std::int64_t> want_sessions{0, 0, 1, 1, 1};
  for (Index r = 0; r < 5; ++r) {
    CHECK(e.cand_item(r) == want_items[static_cast<std::size_t>(r)]);
    CHECK(e.session_index(r) == want_sessions[static_cast<std::size_t>(r)]);
  }
  CHECK(e.click_label(0) == 1.0);
  CHECK(e.click_label(1) == 0.0);
  CHECK(e.click_label(4) == 1.0);
}

TEST_CASE("encode shifts raw bucket values into index space") {
  auto s = valid_record();
  s.cross_features.monthly_visit_count = 16;  // raw visit bucket 5
  s.cross_features.avg_stay_duration_bucket = 2;
  const EncodedBatch b = encode_sessions({s}, small_vocab(), 5, 8);
  CHECK(b.visit(0) == 6);
  CHECK(b.stay(0) == 3);
  s.cross_features.monthly_visit_count = 0;  // raw bucket 0 maps to index 1, not padding
  const EncodedBatch z = encode_sessions({s}, small_vocab(), 5, 8);
  CHECK(z.visit(0) == 1);
}

TEST_CASE("encode decode round trip restores the truncated sequences") {
  auto s = valid_record();
  for (int k = 0; k < 12; ++k) s.long_seq.push_back(item(15 + k, 1 + (k % 6), 400 - k));
  const Index k_long = 8;
  const EncodedBatch b = encode_sessions({s}, small_vocab(), 5, k_long);
  for (Index r = 0; r < b.rows; ++r) {
    std::vector<ItemRef> decoded;
    for (Index k = 0; k < k_long; ++k) {
      if (!b.long_mask(r, k)) {
        CHECK(b.long_item(r, k) == 0);
        continue;
      }
      decoded.push_back(item(b.long_item(r, k), b.long_cat(r, k)));
    }
    REQUIRE(decoded.size() == std::min<std::size_t>(s.long_seq.size(), k_long));
    for (std::size_t k = 0; k < decoded.size(); ++k) {
      CHECK(decoded[k].item_id == s.long_seq[k].item_id);
      CHECK(decoded[k].category_id == s.long_seq[k].category_id);
    }
  }
}

TEST_CASE("encode rejects out-of-vocabulary ids naming field and record") {
  std::vector<SessionRecord> records;
  for (int k = 0; k < 4; ++k) records.push_back(valid_record());
  records[3].trigger.category_id = 27;  // categories vocab is [1,20]
  const auto msg = message_of(
      [&] { encode_sessions(records, small_vocab(), 5, 8); });
  CHECK(msg.find("27") != std::string::npos);
  CHECK(msg.find("[1,20]") != std::string::npos);
  CHECK(msg.find("trigger.category_id") != std::string::npos);
  CHECK(msg.find("record 3") != std::string::npos);

  auto bad_seq = valid_record();
  bad_seq.short_seq[1].item_id = 0;  // 0 is the reserved padding slot
  const auto msg2 = message_of(
      [&] { encode_sessions({bad_seq}, small_vocab(), 5, 8); });
  CHECK(msg2.find("short_seq.item_id") != std::string::npos);
}

TEST_CASE("encode maps unknown ids to the reserved slot under the inference policy") {
  auto s = valid_record();
  s.user_id = 9999;
  s.candidates[0].item.item_id = 9999;
  const EncodedBatch b = encode_sessions({s}, small_vocab(), 5, 8, OovPolicy::kMapToUnknown);
  CHECK(b.user(0) == 0);
  CHECK(b.cand_item(0) == 0);
  CHECK(b.cand_item(1) == 21);  // in-vocab ids untouched
}

TEST_CASE("encode validates labels") {
  auto s = valid_record();
  s.candidates[0].click_label = 2;
  CHECK_THROWS_AS(encode_sessions({s}, small_vocab(), 5, 8), ValidationError);
  auto t = valid_record();
  t.intent_label = -1;
  CHECK_THROWS_AS(encode_sessions({t}, small_vocab(), 5, 8), ValidationError);
  auto u = valid_record();
  u.candidates.clear();
  CHECK_THROWS_AS(encode_sessions({u}, small_vocab(), 5, 8), ValidationError);
  CHECK_THROWS_AS(encode_sessions({valid_record()}, small_vocab(), 0, 8), ValidationError);
}

TEST_CASE("vocab sizes below two are rejected naming the namespace") {
  Vocab v = small_vocab();
  v.categories = 1;
  const auto msg = message_of([&] { validate(v); });
  CHECK(msg.find("categor") != std::string::npos);
}

TEST_CASE("json line round trip preserves every field") {
  auto s = valid_record();
  s.latent_intent = 1;
  const std::string line = session_to_json_line(s);
  const SessionRecord r = session_from_json_line(line, 1);
  CHECK(r.user_id == s.user_id);
  CHECK(r.user_profile.age_bucket == s.user_profile.age_bucket);
  CHECK(r.user_profile.occupation_bucket == s.user_profile.occupation_bucket);
  CHECK(r.cross_features.monthly_visit_count == s.cross_features.monthly_visit_count);
  CHECK(r.cross_features.avg_stay_duration_bucket == s.cross_features.avg_stay_duration_bucket);
  CHECK(r.trigger == s.trigger);
  CHECK(r.short_seq == s.short_seq);
  CHECK(r.long_seq == s.long_seq);
  REQUIRE(r.candidates.size() == s.candidates.size());
  for (std::size_t k = 0; k < r.candidates.size(); ++k) {
    CHECK(r.candidates[k].item == s.candidates[k].item);
    CHECK(r.candidates[k].click_label == s.candidates[k].click_label);
  }
  CHECK(r.post_entry_clicks == s.post_entry_clicks);
  CHECK(r.intent_label == s.intent_label);
  REQUIRE(r.latent_intent.has_value());
  CHECK(*r.latent_intent == 1);
}

TEST_CASE("latent intent is omitted from the line when absent") {
  auto s = valid_record();
  s.latent_intent.reset();
  const std::string line = session_to_json_line(s);
  CHECK(line.find("latent_intent") == std::string::npos);
  const SessionRecord r = session_from_json_line(line, 1);
  CHECK_FALSE(r.latent_intent.has_value());
}

TEST_CASE("malformed json line reports the line number") {
  const auto msg = message_of([&] { session_from_json_line("{oops", 7); });
  CHECK(msg.find("line 7") != std::string::npos);
}

TEST_CASE("jsonl file round trip") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "dian_test_data";
  fs::create_directories(dir);
  const std::string path = (dir / "roundtrip.jsonl").string();
  std::vector<SessionRecord> records{valid_record(), valid_record()};
  records[1].user_id = 5;
  records[1].latent_intent = 0;
  write_sessions_jsonl(path, records);
  const auto back = read_sessions_jsonl(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].user_id == 3);
  CHECK(back[1].user_id == 5);
  CHECK(back[1].latent_intent.has_value());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(session_to_json_line(back[i]) == session_to_json_line(records[i]));
  }
  fs::remove_all(dir);
  CHECK_THROWS_AS(read_sessions_jsonl(path), ValidationError);
}

TEST_CASE("encode_rows addresses individual candidates") {
  auto s = valid_record();
  std::vector<RowRef> rows{{&s, 1, 42}};
  const EncodedBatch b = encode_rows(rows, small_vocab(), 5, 8);
  REQUIRE(b.rows == 1);
  CHECK(b.cand_item(0) == 21);
  CHECK(b.session_index(0) == 42);
  std::vector<RowRef> bad{{&s, 2, 0}};
  CHECK_THROWS_AS(encode_rows(bad, small_vocab(), 5, 8), ValidationError);
}

}  // TEST_SUITE
