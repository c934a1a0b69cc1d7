// Copyright 2026 The TGB Authors. All Rights Reserved.
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

#ifndef TGB_RNG_HPP_
#define TGB_RNG_HPP_

#include <array>
#include <cstdint>

namespace tgb {

// xoshiro256** with splitmix64 seeding. The standard library distributions are
// implementation-defined, so every sampler used for data or training lives
// here to keep runs bit-identical across toolchains.
class Rng {
 public:
  using State = std::array<std::uint64_t, 4>;

  explicit Rng(std::uint64_t seed = 0) { reseed(seed); }

  void reseed(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform in [0, 1) with 53 bits of resolution.
  double uniform();
  // Uniform in (0, 1); never returns 0, so log(u) is always finite.
  double uniform_open();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [lo, hi] inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  double normal(double mean = 0.0, double stddev = 1.0);
  // Standard Gumbel(0, 1) sample: -log(-log(u)).
  double gumbel();

  const State& state() const { return state_; }
  void set_state(const State& s) {
    state_ = s;
    has_spare_normal_ = false;
  }

 private:
  State state_{};
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t& x);

// Stable 64-bit mixing of two values (FNV-1a style over the bytes).
std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b);

}  // namespace tgb

#endif  // TGB_RNG_HPP_
