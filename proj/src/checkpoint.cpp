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

#include "dian/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace dian {
namespace {

using nlohmann::json;

json config_to_json(const ModelConfig& cfg) {
  return json{{"d_id", cfg.d_id},
              {"d_cat", cfg.d_cat},
              {"n_heads", cfg.n_heads},
              {"mlp_hidden", cfg.mlp_hidden},
              {"k_short", cfg.k_short},
              {"k_long", cfg.k_long},
              {"hard_search_k", cfg.hard_search_k},
              {"alpha", cfg.alpha},
              {"variant", to_string(cfg.variant)},
              {"gate_grad_from_fusion", cfg.gate_grad_from_fusion}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig cfg;
  cfg.d_id = j.at("d_id").get<Index>();
  cfg.d_cat = j.at("d_cat").get<Index>();
  cfg.n_heads = j.at("n_heads").get<Index>();
  cfg.mlp_hidden = j.at("mlp_hidden").get<std::vector<Index>>();
  cfg.k_short = j.at("k_short").get<Index>();
  cfg.k_long = j.at("k_long").get<Index>();
  cfg.hard_search_k = j.at("hard_search_k").get<Index>();
  cfg.alpha = j.at("alpha").get<Scalar>();
  cfg.variant = variant_from_string(j.at("variant").get<std::string>());
  cfg.gate_grad_from_fusion = j.at("gate_grad_from_fusion").get<bool>();
  return cfg;
}

json vocab_to_json(const Vocab& vocab) {
  return json{{"users", vocab.users},
              {"items", vocab.items},
              {"categories", vocab.categories},
              {"age_buckets", vocab.age_buckets},
              {"occupation_buckets", vocab.occupation_buckets},
              {"visit_buckets", vocab.visit_buckets},
              {"stay_buckets", vocab.stay_buckets}};
}

Vocab vocab_from_json(const json& j) {
  Vocab vocab;
  vocab.users = j.at("users").get<std::int64_t>();
  vocab.items = j.at("items").get<std::int64_t>();
  vocab.categories = j.at("categories").get<std::int64_t>();
  vocab.age_buckets = j.at("age_buckets").get<std::int64_t>();
  vocab.occupation_buckets = j.at("occupation_buckets").get<std::int64_t>();
  vocab.visit_buckets = j.at("visit_buckets").get<std::int64_t>();
  vocab.stay_buckets = j.at("stay_buckets").get<std::int64_t>();
  return vocab;
}

}  // namespace

std::string checkpoint_to_json(const ModelConfig& cfg, const Vocab& vocab,
                               const ParamStore& store) {
  json tables = json::object();
  for (const auto& [name, entry] : store.entries()) {
    std::vector<Scalar> values(entry.value.data(), entry.value.data() + entry.value.size());
    tables[name] = json{{"shape", {entry.value.rows(), entry.value.cols()}},
                        {"values", std::move(values)}};
  }
  json j{{"version", kCheckpointVersion},
         {"model_config", config_to_json(cfg)},
         {"vocab_sizes", vocab_to_json(vocab)},
         {"tables", std::move(tables)}};
  return j.dump();
}

Checkpoint checkpoint_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("checkpoint: invalid JSON: ") + e.what());
  }
  try {
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw ValidationError("checkpoint: unsupported version " + std::to_string(version));
    }
    Checkpoint ckpt;
    ckpt.model_config = config_from_json(j.at("model_config"));
    ckpt.vocab = vocab_from_json(j.at("vocab_sizes"));
    DianModel model(ckpt.model_config, ckpt.vocab);
    model.register_params(ckpt.store);

    const json& tables = j.at("tables");
    for (const std::string& name : ckpt.store.names()) {
      if (!tables.contains(name)) {
        throw ValidationError("checkpoint: missing table \"" + name + "\"");
      }
      const json& t = tables.at(name);
      const auto shape = t.at("shape").get<std::vector<Index>>();
      Mat& value = ckpt.store.value(name);
      if (shape.size() != 2 || shape[0] != value.rows() || shape[1] != value.cols()) {
        std::ostringstream os;
        os << "checkpoint: table \"" << name << "\" has shape [";
        for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
        os << "] but the configuration requires [" << value.rows() << "," << value.cols() << "]";
        throw ValidationError(os.str());
      }
      const auto values = t.at("values").get<std::vector<Scalar>>();
      if (static_cast<Index>(values.size()) != value.size()) {
        throw ValidationError("checkpoint: table \"" + name + "\" has " +
                              std::to_string(values.size()) + " values, expected " +
                              std::to_string(value.size()));
      }
      std::copy(values.begin(), values.end(), value.data());
    }
    for (const auto& [name, unused] : tables.items()) {
      (void)unused;
      if (!ckpt.store.has(name)) {
        throw ValidationError("checkpoint: unexpected table \"" + name +
                              "\" not used by variant " + to_string(ckpt.model_config.variant));
      }
    }
    return ckpt;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("checkpoint: malformed document: ") + e.what());
  }
}

void save_checkpoint(const std::string& path, const ModelConfig& cfg, const Vocab& vocab,
                     const ParamStore& store) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("checkpoint: cannot open \"" + path + "\" for writing");
  out << checkpoint_to_json(cfg, vocab, store);
  out << '\n';
  if (!out) throw ValidationError("checkpoint: write to \"" + path + "\" failed");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("checkpoint: cannot open \"" + path + "\"");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return checkpoint_from_json(buffer.str());
}

}  // namespace dian
