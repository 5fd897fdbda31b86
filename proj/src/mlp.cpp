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

#include "dian/mlp.hpp"

namespace dian {

namespace {

std::string layer_name(const std::string& name, const char* kind, std::size_t l) {
  return name + "." + kind + std::to_string(l);
}

std::size_t layer_count(const ParamStore& store, const std::string& name) {
  std::size_t n = 0;
  while (store.has(layer_name(name, "W", n))) ++n;
  if (n == 0) throw ValidationError("mlp has no layers registered under: " + name);
  return n;
}

}  // namespace

void mlp_register(ParamStore& store, const std::string& name, Index in,
                  const std::vector<Index>& hidden, Index out) {
  std::vector<Index> dims;
  dims.push_back(in);
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(out);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    store.add(layer_name(name, "W", l), dims[l], dims[l + 1]);
    store.add(layer_name(name, "b", l), 1, dims[l + 1]);
  }
}

Mat mlp_forward(const ParamStore& store, const std::string& name, const Mat& x, MlpCache& cache) {
  const std::size_t layers = layer_count(store, name);
  cache.acts.clear();
  cache.acts.reserve(layers + 1);
  cache.acts.push_back(x);
  for (std::size_t l = 0; l < layers; ++l) {
    const Mat& w = store.value(layer_name(name, "W", l));
    const Mat& b = store.value(layer_name(name, "b", l));
    const Mat& a = cache.acts.back();
    if (a.cols() != w.rows()) {
      throw ValidationError("mlp layer " + layer_name(name, "W", l) + ": input width " +
                            std::to_string(a.cols()) + " does not match weight rows " +
                            std::to_string(w.rows()));
    }
    Mat z = a * w;
    z.rowwise() += b.row(0);
    if (l + 1 < layers) z = z.cwiseMax(0.0);
    cache.acts.push_back(std::move(z));
  }
  return cache.acts.back();
}

Mat mlp_backward(ParamStore& store, const std::string& name, const MlpCache& cache,
                 const Mat& dout) {
  const std::size_t layers = cache.acts.size() - 1;
  Mat d = dout;
  for (std::size_t l = layers; l-- > 0;) {
    const Mat& a_in = cache.acts[l];
    store.grad(layer_name(name, "W", l)).noalias() += a_in.transpose() * d;
    store.grad(layer_name(name, "b", l)).row(0) += d.colwise().sum();
    Mat dx = d * store.value(layer_name(name, "W", l)).transpose();
    if (l > 0) {
      // ReLU kink: post-activation > 0 iff pre-activation > 0.
      dx.array() *= (cache.acts[l].array() > 0.0).cast<Scalar>();
    }
    d = std::move(dx);
  }
  return d;
}

}  // namespace dian
