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

#include "dian/model.hpp"
#include "dian/param_store.hpp"

namespace dian {

// Versioned JSON snapshot of a trained model: configuration, index-space
// sizes, and every parameter table with its shape and row-major values.
// Optimizer state is deliberately not part of a checkpoint.
struct Checkpoint {
  ModelConfig model_config;
  Vocab vocab;
  ParamStore store;
};

inline constexpr int kCheckpointVersion = 1;

std::string checkpoint_to_json(const ModelConfig& cfg, const Vocab& vocab,
                               const ParamStore& store);

// Re-registers the variant's tables from the stored config and validates the
// file against them: every expected table present with the expected shape,
// and nothing else. Any mismatch names the offending table.
Checkpoint checkpoint_from_json(const std::string& text);

void save_checkpoint(const std::string& path, const ModelConfig& cfg, const Vocab& vocab,
                     const ParamStore& store);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace dian
