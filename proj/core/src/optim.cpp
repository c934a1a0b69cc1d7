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

#include "tgb/optim.hpp"

#include <cmath>

#include "tgb/error.hpp"

namespace tgb {

void Adam::step(ParamStore<float>& params) {
  update(params, step_ + 1);
  ++step_;
}

void Adam::update(ParamStore<float>& params, std::int64_t step) {
  if (step < 1) throw ValidationError("Adam step must be >= 1");
  for (const auto& e : params.entries()) {
    if (!e.grad.all_finite()) {
      throw NonFiniteError("non-finite gradient in parameter '" + e.name + "'");
    }
  }
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step));
  for (auto& e : params.entries()) {
    auto it = moments_.find(e.name);
    if (it == moments_.end()) {
      it = moments_
               .emplace(e.name, Moments{Tensor<float>(e.value.shape()),
                                        Tensor<float>(e.value.shape())})
               .first;
    }
    auto& [m, v] = it->second;
    for (std::size_t i = 0; i < e.value.size(); ++i) {
      const double g = e.grad[i];
      const double mi = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
      const double vi = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
      m[i] = static_cast<float>(mi);
      v[i] = static_cast<float>(vi);
      const double mhat = mi / c1;
      const double vhat = vi / c2;
      e.value[i] -= static_cast<float>(cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps));
    }
  }
}

}  // namespace tgb
