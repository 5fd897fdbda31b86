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

#include "dian/run_config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace dian {
namespace {

using nlohmann::json;

std::string type_error(const std::string& key, const char* expected, const json& got) {
  return "config key \"" + key + "\" expects " + expected + ", got " + got.dump();
}

std::int64_t as_int(const std::string& key, const json& v) {
  if (!v.is_number_integer()) throw ValidationError(type_error(key, "an integer", v));
  return v.get<std::int64_t>();
}

Scalar as_scalar(const std::string& key, const json& v) {
  if (!v.is_number()) throw ValidationError(type_error(key, "a number", v));
  return v.get<Scalar>();
}

bool as_bool(const std::string& key, const json& v) {
  if (!v.is_boolean()) throw ValidationError(type_error(key, "a boolean", v));
  return v.get<bool>();
}

std::uint64_t as_seed(const std::string& key, const json& v) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    throw ValidationError(type_error(key, "a non-negative integer", v));
  }
  return v.get<std::uint64_t>();
}

std::vector<Index> as_index_list(const std::string& key, const json& v) {
  // Accepts a JSON array or a comma-separated string ("64,32,16").
  json arr = v;
  if (v.is_string()) {
    std::vector<Index> out;
    std::istringstream in(v.get<std::string>());
    std::string part;
    while (std::getline(in, part, ',')) {
      try {
        out.push_back(std::stoll(part));
      } catch (const std::exception&) {
        throw ValidationError(type_error(key, "a list of integers", v));
      }
    }
    if (out.empty()) throw ValidationError(type_error(key, "a list of integers", v));
    return out;
  }
  if (!arr.is_array()) throw ValidationError(type_error(key, "a list of integers", v));
  std::vector<Index> out;
  for (const json& e : arr) {
    if (!e.is_number_integer()) throw ValidationError(type_error(key, "a list of integers", v));
    out.push_back(e.get<Index>());
  }
  return out;
}

std::string show_scalar(Scalar v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);  // shortest round trip
  return std::string(buf, res.ptr);
}

std::string show_list(const std::vector<Index>& xs) {
  std::string out = "[";
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + std::to_string(xs[i]);
  return out + "]";
}

struct KeyHandler {
  std::string key;
  const char* type;
  std::function<std::string(const RunConfig&)> show;
  std::function<void(RunConfig&, const json&)> set;
};

std::vector<KeyHandler> build_registry() {
  std::vector<KeyHandler> reg;
  const auto int_key = [&](const std::string& key, std::int64_t GenConfig::* field) {
    reg.push_back({key, "integer",
                   [field](const RunConfig& r) { return std::to_string(r.gen.*field); },
                   [key, field](RunConfig& r, const json& v) { r.gen.*field = as_int(key, v); }});
  };
  const auto gen_scalar = [&](const std::string& key, Scalar GenConfig::* field) {
    reg.push_back({key, "number", [field](const RunConfig& r) { return show_scalar(r.gen.*field); },
                   [key, field](RunConfig& r, const json& v) { r.gen.*field = as_scalar(key, v); }});
  };
  const auto model_index = [&](const std::string& key, Index ModelConfig::* field) {
    reg.push_back({key, "integer",
                   [field](const RunConfig& r) { return std::to_string(r.model.*field); },
                   [key, field](RunConfig& r, const json& v) { r.model.*field = as_int(key, v); }});
  };
  const auto train_index = [&](const std::string& key, Index TrainConfig::* field) {
    reg.push_back({key, "integer",
                   [field](const RunConfig& r) { return std::to_string(r.train.*field); },
                   [key, field](RunConfig& r, const json& v) { r.train.*field = as_int(key, v); }});
  };

  int_key("gen.users", &GenConfig::users);
  int_key("gen.items", &GenConfig::items);
  int_key("gen.categories", &GenConfig::categories);
  int_key("gen.sessions", &GenConfig::sessions);
  int_key("gen.candidates_per_session", &GenConfig::candidates_per_session);
  int_key("gen.age_buckets", &GenConfig::age_buckets);
  int_key("gen.occupation_buckets", &GenConfig::occupation_buckets);
  int_key("gen.short_len_min", &GenConfig::short_len_min);
  int_key("gen.short_len_max", &GenConfig::short_len_max);
  int_key("gen.long_len_min", &GenConfig::long_len_min);
  int_key("gen.long_len_max", &GenConfig::long_len_max);
  gen_scalar("gen.visit_rate_median", &GenConfig::visit_rate_median);
  gen_scalar("gen.visit_rate_sigma", &GenConfig::visit_rate_sigma);
  gen_scalar("gen.stay_seconds_median", &GenConfig::stay_seconds_median);
  gen_scalar("gen.stay_seconds_sigma", &GenConfig::stay_seconds_sigma);
  gen_scalar("gen.dirichlet_alpha", &GenConfig::dirichlet_alpha);
  gen_scalar("gen.affinity_a", &GenConfig::affinity_a);
  gen_scalar("gen.affinity_b", &GenConfig::affinity_b);
  gen_scalar("gen.w_trig", &GenConfig::w_trig);
  gen_scalar("gen.w_pref", &GenConfig::w_pref);
  gen_scalar("gen.bias_1", &GenConfig::bias_1);
  gen_scalar("gen.bias_0", &GenConfig::bias_0);
  reg.push_back({"gen.seed", "integer",
                 [](const RunConfig& r) { return std::to_string(r.gen.seed); },
                 [](RunConfig& r, const json& v) { r.gen.seed = as_seed("gen.seed", v); }});

  model_index("model.d_id", &ModelConfig::d_id);
  model_index("model.d_cat", &ModelConfig::d_cat);
  model_index("model.n_heads", &ModelConfig::n_heads);
  reg.push_back({"model.mlp_hidden", "integer list",
                 [](const RunConfig& r) { return show_list(r.model.mlp_hidden); },
                 [](RunConfig& r, const json& v) {
                   r.model.mlp_hidden = as_index_list("model.mlp_hidden", v);
                 }});
  model_index("model.k_short", &ModelConfig::k_short);
  model_index("model.k_long", &ModelConfig::k_long);
  model_index("model.hard_search_k", &ModelConfig::hard_search_k);
  reg.push_back({"model.variant", "string",
                 [](const RunConfig& r) { return to_string(r.model.variant); },
                 [](RunConfig& r, const json& v) {
                   if (!v.is_string()) {
                     throw ValidationError(type_error("model.variant", "a string", v));
                   }
                   r.model.variant = variant_from_string(v.get<std::string>());
                 }});
  reg.push_back({"model.gate_grad_from_fusion", "boolean",
                 [](const RunConfig& r) { return r.model.gate_grad_from_fusion ? "true" : "false"; },
                 [](RunConfig& r, const json& v) {
                   r.model.gate_grad_from_fusion = as_bool("model.gate_grad_from_fusion", v);
                 }});

  train_index("train.batch_size", &TrainConfig::batch_size);
  train_index("train.epochs", &TrainConfig::epochs);
  reg.push_back({"train.learning_rate", "number",
                 [](const RunConfig& r) { return show_scalar(r.train.learning_rate); },
                 [](RunConfig& r, const json& v) {
                   r.train.learning_rate = as_scalar("train.learning_rate", v);
                 }});
  reg.push_back({"train.alpha", "number",
                 [](const RunConfig& r) { return show_scalar(r.train.alpha); },
                 [](RunConfig& r, const json& v) { r.train.alpha = as_scalar("train.alpha", v); }});
  reg.push_back({"train.seed", "integer",
                 [](const RunConfig& r) { return std::to_string(r.train.seed); },
                 [](RunConfig& r, const json& v) { r.train.seed = as_seed("train.seed", v); }});
  train_index("train.eval_cadence", &TrainConfig::eval_cadence);
  return reg;
}

const std::vector<KeyHandler>& registry() {
  static const std::vector<KeyHandler> reg = build_registry();
  return reg;
}

const KeyHandler& handler_for(const std::string& key) {
  for (const KeyHandler& h : registry()) {
    if (h.key == key) return h;
  }
  throw ValidationError("unknown config key \"" + key + "\"; --help lists every key");
}

void apply_document(RunConfig& run, const json& doc) {
  if (!doc.is_object()) throw ValidationError("config file: top level must be a JSON object");
  for (const auto& [section, body] : doc.items()) {
    if (!body.is_object()) {
      throw ValidationError("config file: section \"" + section + "\" must be a JSON object");
    }
    for (const auto& [leaf, value] : body.items()) {
      const std::string key = section + "." + leaf;
      handler_for(key).set(run, value);
    }
  }
}

void apply_override(RunConfig& run, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ValidationError("override \"" + assignment + "\" is not of the form key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::exception&) {
    value = raw;  // unquoted strings like DIAN
  }
  handler_for(key).set(run, value);
}

RunConfig finish(RunConfig run) {
  run.model.alpha = run.train.alpha;
  validate(run.gen);
  validate(run.model);
  validate(run.train);
  return run;
}

}  // namespace

RunConfig run_config_from_json(const std::string& text,
                               const std::vector<std::string>& overrides) {
  RunConfig run;
  if (!text.empty()) {
    json doc;
    try {
      doc = json::parse(text);
    } catch (const json::exception& e) {
      throw ValidationError(std::string("config file: invalid JSON: ") + e.what());
    }
    apply_document(run, doc);
  }
  for (const std::string& assignment : overrides) apply_override(run, assignment);
  return finish(std::move(run));
}

RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides) {
  std::string text;
  if (!path.empty()) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("config file: cannot open \"" + path + "\"");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    text = buffer.str();
  }
  return run_config_from_json(text, overrides);
}

std::string run_config_key_help() {
  const RunConfig defaults;
  std::ostringstream os;
  for (const KeyHandler& h : registry()) {
    os << "  " << std::left << std::setw(30) << h.key << std::setw(14) << h.type
       << "default " << h.show(defaults) << "\n";
  }
  return os.str();
}

std::string run_config_to_json(const RunConfig& run) {
  json doc{{"gen", json::object()}, {"model", json::object()}, {"train", json::object()}};
  for (const KeyHandler& h : registry()) {
    const std::size_t dot = h.key.find('.');
    const std::string section = h.key.substr(0, dot);
    const std::string leaf = h.key.substr(dot + 1);
    // Round-trip through the printed form to stay in one code path.
    const std::string shown = h.show(run);
    json value;
    try {
      value = json::parse(shown);
    } catch (const json::exception&) {
      value = shown;
    }
    doc[section][leaf] = value;
  }
  return doc.dump(2);
}

}  // namespace dian
