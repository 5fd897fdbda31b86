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

#include "dian/param_store.hpp"

#include <cmath>

namespace dian {

Mat& ParamStore::add(const std::string& name, Index rows, Index cols) {
  if (entries_.count(name) != 0) {
    throw ValidationError("parameter already registered: " + name);
  }
  ParamEntry e;
  e.value = Mat::Zero(rows, cols);
  e.grad = Mat::Zero(rows, cols);
  e.m = Mat::Zero(rows, cols);
  e.v = Mat::Zero(rows, cols);
  return entries_.emplace(name, std::move(e)).first->second.value;
}

ParamEntry& ParamStore::find(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) {
    throw ValidationError("unknown parameter: " + name);
  }
  return it->second;
}

const ParamEntry& ParamStore::find(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) {
    throw ValidationError("unknown parameter: " + name);
  }
  return it->second;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [name, e] : entries_) out.push_back(name);
  return out;
}

std::size_t ParamStore::coefficient_count() const {
  std::size_t n = 0;
  for (const auto& [name, e] : entries_) {
    n += static_cast<std::size_t>(e.value.size());
  }
  return n;
}

void ParamStore::zero_grads() {
  for (auto& [name, e] : entries_) e.grad.setZero();
}

void ParamStore::adam_step(const AdamConfig& cfg) {
  ++step_count_;
  const Scalar t = static_cast<Scalar>(step_count_);
  const Scalar corr1 = 1.0 - std::pow(cfg.beta1, t);
  const Scalar corr2 = 1.0 - std::pow(cfg.beta2, t);
  for (auto& [name, e] : entries_) {
    e.m.array() = cfg.beta1 * e.m.array() + (1.0 - cfg.beta1) * e.grad.array();
    e.v.array() = cfg.beta2 * e.v.array() + (1.0 - cfg.beta2) * e.grad.array().square();
    e.value.array() -=
        cfg.learning_rate * (e.m.array() / corr1) / ((e.v.array() / corr2).sqrt() + cfg.epsilon);
    e.grad.setZero();
  }
}

}  // namespace dian
