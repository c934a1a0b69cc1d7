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

#ifndef TGB_OPTIM_HPP_
#define TGB_OPTIM_HPP_

#include <cstdint>
#include <string>
#include <unordered_map>

#include "tgb/tensor.hpp"

namespace tgb {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam. Moment buffers are allocated lazily, the first time a
// parameter is updated.
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  // Applies one update using the gradients currently in `params` and advances
  // the step counter. Throws NonFiniteError naming the first parameter whose
  // gradient holds a NaN/Inf; no parameter is modified in that case.
  void step(ParamStore<float>& params);

  // Same update at an explicit step index (>= 1) without touching the counter.
  void update(ParamStore<float>& params, std::int64_t step);

  std::int64_t step_count() const { return step_; }
  void set_step_count(std::int64_t s) { step_ = s; }
  const AdamConfig& config() const { return cfg_; }
  void set_lr(double lr) { cfg_.lr = lr; }

  struct Moments {
    Tensor<float> m;
    Tensor<float> v;
  };
  const std::unordered_map<std::string, Moments>& moments() const {
    return moments_;
  }
  std::unordered_map<std::string, Moments>& moments() { return moments_; }

 private:
  AdamConfig cfg_;
  std::int64_t step_ = 0;
  std::unordered_map<std::string, Moments> moments_;
};

}  // namespace tgb

#endif  // TGB_OPTIM_HPP_
