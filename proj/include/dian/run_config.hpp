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

#include <string>
#include <vector>

#include "dian/model.hpp"
#include "dian/synthgen.hpp"
#include "dian/training.hpp"

namespace dian {

// One experiment configuration: generator, model, and trainer sections,
// addressed by dotted keys ("gen.sessions", "model.n_heads", ...). The
// auxiliary loss weight has the single key "train.alpha" and is mirrored
// into the model section so checkpoints record it.
struct RunConfig {
  GenConfig gen;
  ModelConfig model;
  TrainConfig train;
};

// Loads the JSON file (empty path = all defaults), applies "key=value"
// overrides in order, mirrors train.alpha, and validates every section.
// Unknown keys and type mismatches raise ValidationError.
RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides);

// Same, but from a JSON document already in memory.
RunConfig run_config_from_json(const std::string& text, const std::vector<std::string>& overrides);

// One line per key: name, type, and default value. The CLI embeds this in
// --help so every key is discoverable.
std::string run_config_key_help();

std::string run_config_to_json(const RunConfig& run);

}  // namespace dian
