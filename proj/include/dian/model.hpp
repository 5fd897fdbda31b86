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

#include "dian/attention.hpp"
#include "dian/data.hpp"
#include "dian/mlp.hpp"
#include "dian/param_store.hpp"

namespace dian {

// The full model gates two CTR experts by an estimated intention
// probability; ablations drop the gate, the auxiliary loss, or one expert.
enum class Variant {
  kDian,          // y = y_int*y_tan + (1-y_int)*y_tfn, auxiliary intention loss
  kNoIntentLoss,  // same forward as kDian, auxiliary loss weight forced to 0
  kAvgFusion,     // y = (y_tan + y_tfn)/2, no intention net
  kTanOnly,       // y = y_tan
  kTfnOnly,       // y = y_tfn (trigger-blind)
};

std::string to_string(Variant variant);
Variant variant_from_string(const std::string& name);

struct ModelConfig {
  Index d_id = 12;   // id embedding width (users, items)
  Index d_cat = 4;   // category and bucket embedding width
  Index n_heads = 4;
  std::vector<Index> mlp_hidden{64, 32, 16};
  Index k_short = 20;
  Index k_long = 100;
  Index hard_search_k = 10;
  Scalar alpha = 0.1;  // auxiliary intention loss weight
  Variant variant = Variant::kDian;
  // Whether the fusion path propagates gradients into the intention gate in
  // addition to the auxiliary loss.
  bool gate_grad_from_fusion = true;

  Index item_dim() const { return d_id + d_cat; }          // item embedding width d
  Index user_dim() const { return d_id + 2 * d_cat; }      // id + age + occupation
  Index cross_dim() const { return 2 * d_cat; }            // visit + stay buckets
};

void validate(const ModelConfig& cfg);

// Hard search over an encoded batch: per row, the up-to-k most recent long
// sequence entries whose category equals the row's anchor category.
struct HardSearchResult {
  IdxMat item;
  IdxMat cat;
  MaskArray mask;
};

HardSearchResult hard_search(const IdxMat& long_item, const IdxMat& long_cat,
                             const MaskArray& long_mask, const IdxArray& anchor_cat, Index k);

// Record-level variant, order preserved; may return fewer than k entries.
std::vector<ItemRef> hard_search(const std::vector<ItemRef>& long_seq,
                                 std::int64_t anchor_category, std::int64_t k);

// Everything the backward pass and the tests need from one forward pass.
// Heads absent under the variant are left empty.
struct ForwardTrace {
  ArrX y_hat, y_int, y_tan, y_tfn;
  ArrX z_int, z_tan, z_tfn;  // pre-sigmoid logits
  Mat e_user;                // B x user_dim
  Mat e_tri, e_tar;          // B x d
  Mat s_emb;                 // (B*k_short) x d
  Mat hs_tri_emb, hs_tar_emb;
  Mat h_crs, h_sseq;
  Mat h_tri, h_tar;          // trigger- and target-anchored interest (gated expert)
  Mat h_tar_tfn;             // target-anchored interest of the trigger-free expert
  HardSearchResult hs_tri, hs_tar;
  AttentionCache a_tri_s, a_tri_l, a_tar_s, a_tar_l, a_tfn_s, a_tfn_l;
  MlpCache m_int, m_tan, m_tfn;
};

class DianModel {
 public:
  DianModel(ModelConfig cfg, Vocab vocab);

  // Registers exactly the tables the variant uses.
  void register_params(ParamStore& store) const;
  // Xavier-uniform affine weights, zero biases, uniform [-0.05, 0.05]
  // embedding rows; deterministic given the seed.
  void init_params(ParamStore& store, std::uint64_t seed) const;

  ForwardTrace forward(const ParamStore& store, const EncodedBatch& batch) const;

  // dy_hat / dy_int are dL/dy for the fused CTR and the intention head (the
  // latter from the auxiliary loss; pass an empty array when absent).
  // Accumulates gradients for every parameter the variant touches.
  void backward(ParamStore& store, const EncodedBatch& batch, const ForwardTrace& trace,
                const ArrX& dy_hat, const ArrX& dy_int) const;

  const ModelConfig& config() const { return cfg_; }
  const Vocab& vocab() const { return vocab_; }

  bool has_intent_head() const {
    return cfg_.variant == Variant::kDian || cfg_.variant == Variant::kNoIntentLoss;
  }
  bool has_tan_head() const { return cfg_.variant != Variant::kTfnOnly; }
  bool has_tfn_head() const { return cfg_.variant != Variant::kTanOnly; }

 private:
  Mat embed_items(const ParamStore& store, const IdxArray& items, const IdxArray& cats) const;
  Mat embed_item_seq(const ParamStore& store, const IdxMat& items, const IdxMat& cats) const;

  ModelConfig cfg_;
  Vocab vocab_;
};

}  // namespace dian
