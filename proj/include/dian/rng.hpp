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

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "dian/common.hpp"

namespace dian {

// splitmix64 step: advances the state and returns a well-mixed word.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Derives an independent stream seed from (seed, stream). Used to give every
// generated session and every training concern its own RNG stream, so output
// is deterministic regardless of evaluation order.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t s = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  std::uint64_t z = splitmix64(s);
  return z ^ splitmix64(s);
}

// mt19937_64 with hand-rolled distributions. The standard library's
// distribution objects are implementation-defined, which would break the
// byte-identical-dataset contract across toolchains; these samplers pin the
// exact draw sequence.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1), 53-bit resolution.
  Scalar uniform() { return static_cast<Scalar>(gen_() >> 11) * 0x1.0p-53; }

  Scalar uniform(Scalar lo, Scalar hi) { return lo + (hi - lo) * uniform(); }

  // Uniform in (0, 1]: safe as a log() argument.
  Scalar uniform_pos() { return 1.0 - uniform(); }

  // Unbiased integer in [0, n); rejection sampling.
  std::int64_t uniform_int(std::int64_t n) {
    const auto span = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return static_cast<std::int64_t>(x % span);
  }

  bool bernoulli(Scalar p) { return uniform() < p; }

  // Box-Muller, one value per call (no cached second draw, so the stream
  // position is a pure function of the call count).
  Scalar normal() {
    const Scalar u1 = uniform_pos();
    const Scalar u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  Scalar lognormal(Scalar median, Scalar sigma) {
    return std::exp(std::log(median) + sigma * normal());
  }

  // Marsaglia-Tsang; alpha < 1 handled by the boost G(a) = G(a+1) * U^{1/a}.
  Scalar gamma(Scalar alpha) {
    if (alpha < 1.0) {
      const Scalar u = uniform_pos();
      return gamma(alpha + 1.0) * std::pow(u, 1.0 / alpha);
    }
    const Scalar d = alpha - 1.0 / 3.0;
    const Scalar c = 1.0 / std::sqrt(9.0 * d);
    while (true) {
      Scalar x = normal();
      Scalar v = 1.0 + c * x;
      if (v <= 0.0) continue;
      v = v * v * v;
      const Scalar u = uniform_pos();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  std::vector<Scalar> dirichlet(Scalar alpha, std::size_t k) {
    std::vector<Scalar> g(k);
    Scalar sum = 0.0;
    for (auto& v : g) {
      v = gamma(alpha);
      sum += v;
    }
    if (sum <= 0.0) {
      for (auto& v : g) v = 1.0 / static_cast<Scalar>(k);
      return g;
    }
    for (auto& v : g) v /= sum;
    return g;
  }

  // Fisher-Yates.
  template <typename T>
  void shuffle(std::vector<T>& xs) {
    for (std::size_t i = xs.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_int(static_cast<std::int64_t>(i)));
      std::swap(xs[i - 1], xs[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace dian
