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
#include <map>
#include <string>
#include <vector>

#include "dian/common.hpp"

namespace dian {

struct AdamConfig {
  Scalar learning_rate = 0.01;
  Scalar beta1 = 0.9;
  Scalar beta2 = 0.999;
  Scalar epsilon = 1e-8;
};

struct ParamEntry {
  Mat value;
  Mat grad;
  Mat m;  // Adam first moment
  Mat v;  // Adam second moment
};

// All trainable tensors, addressed by stable names. Backed by std::map so
// iteration order is sorted and therefore deterministic; everything that
// walks the store (Adam, init, serialization, coordinate sampling) inherits
// that determinism.
class ParamStore {
 public:
  // Registers a zero-initialized entry. Throws ValidationError on duplicates.
  Mat& add(const std::string& name, Index rows, Index cols);

  bool has(const std::string& name) const { return entries_.count(name) != 0; }

  Mat& value(const std::string& name) { return find(name).value; }
  const Mat& value(const std::string& name) const { return find(name).value; }
  Mat& grad(const std::string& name) { return find(name).grad; }
  const Mat& grad(const std::string& name) const { return find(name).grad; }
  ParamEntry& entry(const std::string& name) { return find(name); }

  const std::map<std::string, ParamEntry>& entries() const { return entries_; }

  std::vector<std::string> names() const;
  std::size_t size() const { return entries_.size(); }
  std::size_t coefficient_count() const;

  void zero_grads();

  // Standard Adam with bias correction applied to every entry; gradients are
  // zeroed afterwards and step_count is incremented.
  void adam_step(const AdamConfig& cfg);

  std::int64_t step_count() const { return step_count_; }

 private:
  ParamEntry& find(const std::string& name);
  const ParamEntry& find(const std::string& name) const;

  std::map<std::string, ParamEntry> entries_;
  std::int64_t step_count_ = 0;
};

}  // namespace dian
