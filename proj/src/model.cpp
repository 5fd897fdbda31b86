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

#include "dian/model.hpp"

#include <algorithm>
#include <utility>

#include "dian/kernels.hpp"
#include "dian/rng.hpp"

namespace dian {
namespace {

constexpr char kEmbUser[] = "emb.user";
constexpr char kEmbAge[] = "emb.age";
constexpr char kEmbOccupation[] = "emb.occupation";
constexpr char kEmbItem[] = "emb.item";
constexpr char kEmbCategory[] = "emb.category";
constexpr char kEmbVisit[] = "emb.visit";
constexpr char kEmbStay[] = "emb.stay";
constexpr char kAttnTanTriShort[] = "attn.tan.tri.short";
constexpr char kAttnTanTriLong[] = "attn.tan.tri.long";
constexpr char kAttnTanTarShort[] = "attn.tan.tar.short";
constexpr char kAttnTanTarLong[] = "attn.tan.tar.long";
constexpr char kAttnTfnTarShort[] = "attn.tfn.tar.short";
constexpr char kAttnTfnTarLong[] = "attn.tfn.tar.long";
constexpr char kMlpIntent[] = "mlp.int";
constexpr char kMlpTan[] = "mlp.tan";
constexpr char kMlpTfn[] = "mlp.tfn";

void check_index(std::int64_t id, Index rows, const char* table) {
  if (id < 0 || id >= rows) {
    throw ValidationError(std::string("embedding lookup: index ") + std::to_string(id) +
                          " outside table " + table + " with " + std::to_string(rows) + " rows");
  }
}

Mat gather(const ParamStore& store, const char* table, const IdxArray& idx) {
  const Mat& t = store.value(table);
  Mat out(idx.size(), t.cols());
  for (Index i = 0; i < idx.size(); ++i) {
    check_index(idx[i], t.rows(), table);
    out.row(i) = t.row(idx[i]);
  }
  return out;
}

// Gradients never reach row 0: it is the padding/unknown slot and stays at
// its initial value for the lifetime of the model.
void scatter_add(ParamStore& store, const char* table, const IdxArray& idx, const Mat& grad,
                 Index col0) {
  Mat& g = store.grad(table);
  const Index w = g.cols();
  for (Index i = 0; i < idx.size(); ++i) {
    if (idx[i] == 0) continue;
    g.row(idx[i]) += grad.block(i, col0, 1, w);
  }
}

void scatter_add_seq(ParamStore& store, const char* table, const IdxMat& idx, const Mat& grad,
                     Index col0) {
  Mat& g = store.grad(table);
  const Index w = g.cols();
  for (Index r = 0; r < idx.rows(); ++r) {
    for (Index c = 0; c < idx.cols(); ++c) {
      if (idx(r, c) == 0) continue;
      g.row(idx(r, c)) += grad.block(r * idx.cols() + c, col0, 1, w);
    }
  }
}

Mat as_col(const ArrX& a) {
  Mat m(a.size(), 1);
  m.col(0) = a.matrix();
  return m;
}

// dL/dz for y = sigmoid(z).
Mat logit_grad(const ArrX& dy, const ArrX& y) { return as_col(dy * y * (1.0 - y)); }

}  // namespace

std::string to_string(Variant variant) {
  switch (variant) {
    case Variant::kDian: return "DIAN";
    case Variant::kNoIntentLoss: return "NO_INTENT_LOSS";
    case Variant::kAvgFusion: return "AVG_FUSION";
    case Variant::kTanOnly: return "TAN_ONLY";
    case Variant::kTfnOnly: return "TFN_ONLY";
  }
  throw ValidationError("to_string: unknown variant");
}

Variant variant_from_string(const std::string& name) {
  if (name == "DIAN") return Variant::kDian;
  if (name == "NO_INTENT_LOSS") return Variant::kNoIntentLoss;
  if (name == "AVG_FUSION") return Variant::kAvgFusion;
  if (name == "TAN_ONLY") return Variant::kTanOnly;
  if (name == "TFN_ONLY") return Variant::kTfnOnly;
  throw ValidationError("unknown model variant \"" + name +
                        "\"; expected one of DIAN, TAN_ONLY, TFN_ONLY, AVG_FUSION, "
                        "NO_INTENT_LOSS");
}

void validate(const ModelConfig& cfg) {
  if (cfg.d_id < 1 || cfg.d_cat < 1) {
    throw ValidationError("model config: embedding widths must be >= 1");
  }
  if (cfg.n_heads < 1 || cfg.item_dim() % cfg.n_heads != 0) {
    throw ValidationError("model config: item width " + std::to_string(cfg.item_dim()) +
                          " not divisible by n_heads " + std::to_string(cfg.n_heads));
  }
  if (cfg.mlp_hidden.empty()) {
    throw ValidationError("model config: mlp_hidden must be non-empty");
  }
  for (std::size_t l = 0; l < cfg.mlp_hidden.size(); ++l) {
    if (cfg.mlp_hidden[l] < 1) {
      throw ValidationError("model config: mlp_hidden widths must be >= 1");
    }
    if (l > 0 && cfg.mlp_hidden[l] >= cfg.mlp_hidden[l - 1]) {
      throw ValidationError("model config: mlp_hidden must be strictly decreasing");
    }
  }
  if (!(cfg.alpha >= 0.0)) {
    throw ValidationError("model config: alpha must be >= 0");
  }
  if (cfg.k_short < 1 || cfg.k_long < 1 || cfg.hard_search_k < 1) {
    throw ValidationError("model config: sequence capacities must be >= 1");
  }
}

HardSearchResult hard_search(const IdxMat& long_item, const IdxMat& long_cat,
                             const MaskArray& long_mask, const IdxArray& anchor_cat, Index k) {
  const Index rows = long_item.rows();
  const Index width = long_item.cols();
  HardSearchResult out;
  out.item = IdxMat::Zero(rows, k);
  out.cat = IdxMat::Zero(rows, k);
  out.mask = MaskArray::Constant(rows, k, false);
  for (Index r = 0; r < rows; ++r) {
    Index taken = 0;
    for (Index c = 0; c < width && taken < k; ++c) {
      if (!long_mask(r, c) || long_cat(r, c) != anchor_cat[r]) continue;
      out.item(r, taken) = long_item(r, c);
      out.cat(r, taken) = long_cat(r, c);
      out.mask(r, taken) = true;
      ++taken;
    }
  }
  return out;
}

std::vector<ItemRef> hard_search(const std::vector<ItemRef>& long_seq,
                                 std::int64_t anchor_category, std::int64_t k) {
  std::vector<ItemRef> out;
  for (const ItemRef& ref : long_seq) {
    if (static_cast<std::int64_t>(out.size()) == k) break;
    if (ref.category_id == anchor_category) out.push_back(ref);
  }
  return out;
}

DianModel::DianModel(ModelConfig cfg, Vocab vocab) : cfg_(std::move(cfg)), vocab_(std::move(vocab)) {
  dian::validate(cfg_);
  dian::validate(vocab_);
}

void DianModel::register_params(ParamStore& store) const {
  const Index d = cfg_.item_dim();
  store.add(kEmbUser, vocab_.users, cfg_.d_id);
  store.add(kEmbAge, vocab_.age_buckets, cfg_.d_cat);
  store.add(kEmbOccupation, vocab_.occupation_buckets, cfg_.d_cat);
  store.add(kEmbItem, vocab_.items, cfg_.d_id);
  store.add(kEmbCategory, vocab_.categories, cfg_.d_cat);
  if (has_intent_head()) {
    store.add(kEmbVisit, vocab_.visit_buckets, cfg_.d_cat);
    store.add(kEmbStay, vocab_.stay_buckets, cfg_.d_cat);
    mlp_register(store, kMlpIntent, cfg_.user_dim() + d + cfg_.cross_dim() + d, cfg_.mlp_hidden, 1);
  }
  if (has_tan_head()) {
    attention_register(store, kAttnTanTriShort, d);
    attention_register(store, kAttnTanTriLong, d);
    attention_register(store, kAttnTanTarShort, d);
    attention_register(store, kAttnTanTarLong, d);
    mlp_register(store, kMlpTan, cfg_.user_dim() + 4 * d, cfg_.mlp_hidden, 1);
  }
  if (has_tfn_head()) {
    attention_register(store, kAttnTfnTarShort, d);
    attention_register(store, kAttnTfnTarLong, d);
    mlp_register(store, kMlpTfn, cfg_.user_dim() + 2 * d, cfg_.mlp_hidden, 1);
  }
}

void DianModel::init_params(ParamStore& store, std::uint64_t seed) const {
  Rng rng(mix_seed(seed, 0));
  for (const std::string& name : store.names()) {
    Mat& value = store.value(name);
    if (name.rfind("emb.", 0) == 0) {
      uniform_init(value, rng, -0.05, 0.05);
    } else if (name.find(".b") != std::string::npos && value.rows() == 1) {
      value.setZero();
    } else {
      xavier_uniform_init(value, rng);
    }
  }
}

Mat DianModel::embed_items(const ParamStore& store, const IdxArray& items,
                           const IdxArray& cats) const {
  Mat out(items.size(), cfg_.item_dim());
  out.leftCols(cfg_.d_id) = gather(store, kEmbItem, items);
  out.rightCols(cfg_.d_cat) = gather(store, kEmbCategory, cats);
  return out;
}

Mat DianModel::embed_item_seq(const ParamStore& store, const IdxMat& items,
                              const IdxMat& cats) const {
  const Index rows = items.rows() * items.cols();
  IdxArray flat_items(rows), flat_cats(rows);
  for (Index r = 0; r < items.rows(); ++r) {
    for (Index c = 0; c < items.cols(); ++c) {
      flat_items[r * items.cols() + c] = items(r, c);
      flat_cats[r * items.cols() + c] = cats(r, c);
    }
  }
  return embed_items(store, flat_items, flat_cats);
}

ForwardTrace DianModel::forward(const ParamStore& store, const EncodedBatch& batch) const {
  if (batch.rows < 1) throw ValidationError("forward: empty batch");
  if (batch.k_short != cfg_.k_short || batch.k_long != cfg_.k_long) {
    throw ValidationError("forward: batch padded to k_short=" + std::to_string(batch.k_short) +
                          ", k_long=" + std::to_string(batch.k_long) +
                          " but model expects k_short=" + std::to_string(cfg_.k_short) +
                          ", k_long=" + std::to_string(cfg_.k_long));
  }
  const bool needs_trigger = has_tan_head() || has_intent_head();
  ForwardTrace tr;
  tr.e_user = Mat(batch.rows, cfg_.user_dim());
  tr.e_user.leftCols(cfg_.d_id) = gather(store, kEmbUser, batch.user);
  tr.e_user.middleCols(cfg_.d_id, cfg_.d_cat) = gather(store, kEmbAge, batch.age);
  tr.e_user.rightCols(cfg_.d_cat) = gather(store, kEmbOccupation, batch.occupation);
  tr.e_tar = embed_items(store, batch.cand_item, batch.cand_cat);
  tr.s_emb = embed_item_seq(store, batch.short_item, batch.short_cat);
  if (needs_trigger) tr.e_tri = embed_items(store, batch.trigger_item, batch.trigger_cat);

  tr.hs_tar = hard_search(batch.long_item, batch.long_cat, batch.long_mask, batch.cand_cat,
                          cfg_.hard_search_k);
  tr.hs_tar_emb = embed_item_seq(store, tr.hs_tar.item, tr.hs_tar.cat);

  if (has_tan_head()) {
    tr.hs_tri = hard_search(batch.long_item, batch.long_cat, batch.long_mask, batch.trigger_cat,
                            cfg_.hard_search_k);
    tr.hs_tri_emb = embed_item_seq(store, tr.hs_tri.item, tr.hs_tri.cat);
    tr.h_tri = target_attention(store, kAttnTanTriShort, tr.e_tri, tr.s_emb, batch.short_mask,
                                cfg_.n_heads, tr.a_tri_s) +
               target_attention(store, kAttnTanTriLong, tr.e_tri, tr.hs_tri_emb, tr.hs_tri.mask,
                                cfg_.n_heads, tr.a_tri_l);
    tr.h_tar = target_attention(store, kAttnTanTarShort, tr.e_tar, tr.s_emb, batch.short_mask,
                                cfg_.n_heads, tr.a_tar_s) +
               target_attention(store, kAttnTanTarLong, tr.e_tar, tr.hs_tar_emb, tr.hs_tar.mask,
                                cfg_.n_heads, tr.a_tar_l);
    Mat in(batch.rows, cfg_.user_dim() + 4 * cfg_.item_dim());
    in << tr.e_user, tr.e_tri, tr.e_tar, tr.h_tri, tr.h_tar;
    tr.z_tan = Mat(mlp_forward(store, kMlpTan, in, tr.m_tan)).col(0).array();
    tr.y_tan = sigmoid(tr.z_tan);
  }
  if (has_tfn_head()) {
    tr.h_tar_tfn = target_attention(store, kAttnTfnTarShort, tr.e_tar, tr.s_emb, batch.short_mask,
                                    cfg_.n_heads, tr.a_tfn_s) +
                   target_attention(store, kAttnTfnTarLong, tr.e_tar, tr.hs_tar_emb,
                                    tr.hs_tar.mask, cfg_.n_heads, tr.a_tfn_l);
    Mat in(batch.rows, cfg_.user_dim() + 2 * cfg_.item_dim());
    in << tr.e_user, tr.e_tar, tr.h_tar_tfn;
    tr.z_tfn = Mat(mlp_forward(store, kMlpTfn, in, tr.m_tfn)).col(0).array();
    tr.y_tfn = sigmoid(tr.z_tfn);
  }
  if (has_intent_head()) {
    tr.h_crs = Mat(batch.rows, cfg_.cross_dim());
    tr.h_crs.leftCols(cfg_.d_cat) = gather(store, kEmbVisit, batch.visit);
    tr.h_crs.rightCols(cfg_.d_cat) = gather(store, kEmbStay, batch.stay);
    tr.h_sseq = average_pool(tr.s_emb, batch.short_mask);
    Mat in(batch.rows, cfg_.user_dim() + 2 * cfg_.item_dim() + cfg_.cross_dim());
    in << tr.e_user, tr.h_sseq, tr.h_crs, tr.e_tri;
    tr.z_int = Mat(mlp_forward(store, kMlpIntent, in, tr.m_int)).col(0).array();
    tr.y_int = sigmoid(tr.z_int);
  }

  switch (cfg_.variant) {
    case Variant::kDian:
    case Variant::kNoIntentLoss:
      tr.y_hat = tr.y_int * tr.y_tan + (1.0 - tr.y_int) * tr.y_tfn;
      break;
    case Variant::kAvgFusion:
      tr.y_hat = 0.5 * (tr.y_tan + tr.y_tfn);
      break;
    case Variant::kTanOnly:
      tr.y_hat = tr.y_tan;
      break;
    case Variant::kTfnOnly:
      tr.y_hat = tr.y_tfn;
      break;
  }
  return tr;
}

void DianModel::backward(ParamStore& store, const EncodedBatch& batch, const ForwardTrace& trace,
                         const ArrX& dy_hat, const ArrX& dy_int) const {
  const Index rows = batch.rows;
  if (dy_hat.size() != rows) throw ValidationError("backward: dy_hat size mismatch");
  const Index d = cfg_.item_dim();

  ArrX dy_tan = ArrX::Zero(rows);
  ArrX dy_tfn = ArrX::Zero(rows);
  ArrX dy_gate = ArrX::Zero(rows);
  switch (cfg_.variant) {
    case Variant::kDian:
    case Variant::kNoIntentLoss:
      dy_tan = dy_hat * trace.y_int;
      dy_tfn = dy_hat * (1.0 - trace.y_int);
      if (cfg_.gate_grad_from_fusion) dy_gate = dy_hat * (trace.y_tan - trace.y_tfn);
      break;
    case Variant::kAvgFusion:
      dy_tan = 0.5 * dy_hat;
      dy_tfn = 0.5 * dy_hat;
      break;
    case Variant::kTanOnly:
      dy_tan = dy_hat;
      break;
    case Variant::kTfnOnly:
      dy_tfn = dy_hat;
      break;
  }
  if (dy_int.size() != 0) {
    if (!has_intent_head()) {
      throw ValidationError("backward: intent gradient supplied but variant has no intent head");
    }
    if (dy_int.size() != rows) throw ValidationError("backward: dy_int size mismatch");
    dy_gate += dy_int;
  }

  Mat d_e_user = Mat::Zero(rows, cfg_.user_dim());
  Mat d_e_tar = Mat::Zero(rows, d);
  Mat d_e_tri = Mat::Zero(rows, d);
  Mat d_s_emb = Mat::Zero(rows * cfg_.k_short, d);
  Mat d_hs_tar_emb = Mat::Zero(rows * cfg_.hard_search_k, d);

  if (has_intent_head()) {
    Mat d_in = mlp_backward(store, kMlpIntent, trace.m_int, logit_grad(dy_gate, trace.y_int));
    Index at = 0;
    d_e_user += d_in.middleCols(at, cfg_.user_dim());
    at += cfg_.user_dim();
    d_s_emb += average_pool_backward(batch.short_mask, d_in.middleCols(at, d));
    at += d;
    scatter_add(store, kEmbVisit, batch.visit, d_in, at);
    scatter_add(store, kEmbStay, batch.stay, d_in, at + cfg_.d_cat);
    at += cfg_.cross_dim();
    d_e_tri += d_in.middleCols(at, d);
  }
  if (has_tan_head()) {
    Mat d_in = mlp_backward(store, kMlpTan, trace.m_tan, logit_grad(dy_tan, trace.y_tan));
    Index at = 0;
    d_e_user += d_in.middleCols(at, cfg_.user_dim());
    at += cfg_.user_dim();
    d_e_tri += d_in.middleCols(at, d);
    at += d;
    d_e_tar += d_in.middleCols(at, d);
    at += d;
    Mat d_h_tri = d_in.middleCols(at, d);
    Mat d_h_tar = d_in.middleCols(at + d, d);
    Mat d_hs_tri_emb = Mat::Zero(rows * cfg_.hard_search_k, d);
    d_e_tri += target_attention_backward(store, kAttnTanTriShort, trace.e_tri, trace.s_emb,
                                         trace.a_tri_s, d_h_tri, d_s_emb);
    d_e_tri += target_attention_backward(store, kAttnTanTriLong, trace.e_tri, trace.hs_tri_emb,
                                         trace.a_tri_l, d_h_tri, d_hs_tri_emb);
    d_e_tar += target_attention_backward(store, kAttnTanTarShort, trace.e_tar, trace.s_emb,
                                         trace.a_tar_s, d_h_tar, d_s_emb);
    d_e_tar += target_attention_backward(store, kAttnTanTarLong, trace.e_tar, trace.hs_tar_emb,
                                         trace.a_tar_l, d_h_tar, d_hs_tar_emb);
    scatter_add_seq(store, kEmbItem, trace.hs_tri.item, d_hs_tri_emb, 0);
    scatter_add_seq(store, kEmbCategory, trace.hs_tri.cat, d_hs_tri_emb, cfg_.d_id);
  }
  if (has_tfn_head()) {
    Mat d_in = mlp_backward(store, kMlpTfn, trace.m_tfn, logit_grad(dy_tfn, trace.y_tfn));
    Index at = 0;
    d_e_user += d_in.middleCols(at, cfg_.user_dim());
    at += cfg_.user_dim();
    d_e_tar += d_in.middleCols(at, d);
    at += d;
    Mat d_h_tar_tfn = d_in.middleCols(at, d);
    d_e_tar += target_attention_backward(store, kAttnTfnTarShort, trace.e_tar, trace.s_emb,
                                         trace.a_tfn_s, d_h_tar_tfn, d_s_emb);
    d_e_tar += target_attention_backward(store, kAttnTfnTarLong, trace.e_tar, trace.hs_tar_emb,
                                         trace.a_tfn_l, d_h_tar_tfn, d_hs_tar_emb);
  }

  scatter_add(store, kEmbUser, batch.user, d_e_user, 0);
  scatter_add(store, kEmbAge, batch.age, d_e_user, cfg_.d_id);
  scatter_add(store, kEmbOccupation, batch.occupation, d_e_user, cfg_.d_id + cfg_.d_cat);
  scatter_add(store, kEmbItem, batch.cand_item, d_e_tar, 0);
  scatter_add(store, kEmbCategory, batch.cand_cat, d_e_tar, cfg_.d_id);
  if (has_tan_head() || has_intent_head()) {
    scatter_add(store, kEmbItem, batch.trigger_item, d_e_tri, 0);
    scatter_add(store, kEmbCategory, batch.trigger_cat, d_e_tri, cfg_.d_id);
  }
  scatter_add_seq(store, kEmbItem, batch.short_item, d_s_emb, 0);
  scatter_add_seq(store, kEmbCategory, batch.short_cat, d_s_emb, cfg_.d_id);
  scatter_add_seq(store, kEmbItem, trace.hs_tar.item, d_hs_tar_emb, 0);
  scatter_add_seq(store, kEmbCategory, trace.hs_tar.cat, d_hs_tar_emb, cfg_.d_id);
}

}  // namespace dian
