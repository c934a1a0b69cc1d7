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

#ifndef TGB_TRAINING_HPP_
#define TGB_TRAINING_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "tgb/autograd.hpp"
#include "tgb/bridge.hpp"
#include "tgb/example.hpp"
#include "tgb/optim.hpp"
#include "tgb/rng.hpp"
#include "tgb/spans.hpp"

namespace tgb {

struct TrainConfig {
  std::size_t epochs = 20;
  std::size_t batch_size = 16;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double tau_start = 1.0;
  double tau_end = 0.1;
  std::size_t K = 2;
  std::uint64_t seed = 1;
  // Inverse-frequency class weights instead of uniform.
  bool class_weighting = false;
  // Training sequences longer than this are cropped to a random window;
  // 0 disables cropping.
  std::size_t train_window = 32;
  // Motion positions are shifted by a uniform offset in [0, position_jitter]
  // per training example, so attention sees the offsets long sequences use.
  std::size_t position_jitter = 512;
  // Adds the span-alignment task loss through K Gumbel-Softmax span samples.
  bool joint = false;
  double joint_weight = 1.0;
  // Spans decoded per example at evaluation.
  std::size_t eval_k = 2;

  void validate() const;
};

template <typename S>
struct GumbelSample {
  std::vector<S> soft;
  std::size_t hard = 0;
};

// Adds Gumbel(0,1) noise to `logits` and applies a temperature-tau softmax.
// `hard` is the argmax of the perturbed logits (earliest index on ties).
template <typename S>
GumbelSample<S> gumbel_softmax_sample(std::span<const S> logits, double tau, Rng& rng);

namespace ag {

// Gumbel-Softmax over a length-T vector with caller-provided noise. With
// `straight_through` the forward value is the hard one-hot while the backward
// pass uses the soft probabilities' Jacobian; otherwise the soft probabilities
// are returned.
template <typename S>
Var gumbel_softmax(Graph<S>& g, Var logits, std::span<const double> noise,
                   double tau, bool straight_through);

// Soft frame mask of the closed interval between a begin and an end
// distribution: mask[t] = P(begin <= t) * P(end >= t). One-hot inputs give the
// exact 0/1 mask of [begin, end].
template <typename S>
Var soft_span_mask(Graph<S>& g, Var begin_probs, Var end_probs);

// -log((sum(mask * relevance) + eps) / (sum(mask) + eps)), the negative log of
// mean relevance inside the soft span.
template <typename S>
Var relevance_alignment_loss(Graph<S>& g, Var mask, std::span<const double> relevance,
                             double eps = 1e-6);

}  // namespace ag

template <typename S>
struct SampledSpan {
  Span span;
  Var mask;  // length-T soft mask carrying gradients to the logits
};

// Draws K begin indices from the BEGIN channel and K end indices from the END
// channel. A pair with begin > end is swapped (the begin and end distributions
// trade roles for that sample).
template <typename S>
std::vector<SampledSpan<S>> sample_k_spans(Graph<S>& g, Var logits, double tau,
                                           std::size_t K, Rng& rng,
                                           bool straight_through = true);

struct StepLog {
  std::int64_t step = 0;
  std::size_t epoch = 0;
  double loss = 0.0;
  double tau = 0.0;
  std::size_t examples = 0;
};

struct EpochLog {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  std::size_t steps = 0;
};

// Owns the parameters, optimizer and RNG of one training run. Single-threaded.
class Trainer {
 public:
  Trainer(BridgeConfig bridge_cfg, TrainConfig train_cfg);

  // Fresh parameters seeded from train_cfg.seed.
  void initialize();

  // Forward, loss and backward over `batch`, then one Adam step. Skipped
  // examples are excluded; an empty effective batch logs a warning and returns
  // NaN without touching anything. Throws NonFiniteError naming the step when
  // the loss is not finite.
  double train_step(std::span<const GroundingExample* const> batch);

  // One pass in an RNG-shuffled order. `on_step` sees every step.
  EpochLog train_epoch(const std::vector<GroundingExample>& data,
                       const std::function<void(const StepLog&)>& on_step = {});

  // Fixes the tau schedule length from `data` unless already set (fresh run).
  void plan(const std::vector<GroundingExample>& data);

  // Runs epochs until `epochs_completed() == train_cfg.epochs`.
  std::vector<EpochLog> fit(const std::vector<GroundingExample>& data,
                            const std::function<void(const StepLog&)>& on_step = {},
                            const std::function<void(const EpochLog&)>& on_epoch = {});

  // Loss of one example without updating anything.
  double example_loss(const GroundingExample& ex);

  double current_tau() const;

  const Bridge<float>& bridge() const { return bridge_; }
  const BridgeConfig& bridge_config() const { return bridge_.config(); }
  const TrainConfig& train_config() const { return cfg_; }
  ParamStore<float>& params() { return params_; }
  const ParamStore<float>& params() const { return params_; }
  Adam& optimizer() { return adam_; }
  Rng& rng() { return rng_; }
  std::int64_t step() const { return step_; }
  std::size_t epochs_completed() const { return epoch_; }
  // Total steps of the full schedule; fixes the tau annealing slope.
  std::int64_t planned_steps() const { return planned_steps_; }

  // For checkpoint restore.
  void restore_progress(std::int64_t step, std::size_t epoch, std::int64_t planned_steps,
                        const Rng::State& rng_state);

 private:
  double accumulate_example(const GroundingExample& ex, double weight, bool backward);

  Bridge<float> bridge_;
  TrainConfig cfg_;
  ParamStore<float> params_;
  Adam adam_;
  Rng rng_;
  std::int64_t step_ = 0;
  std::size_t epoch_ = 0;
  std::int64_t planned_steps_ = 0;
  std::vector<double> class_weights_;
};

struct EvalResult {
  GroundingMetrics metrics;
  std::vector<SpanSet> predictions;
};

// bridge forward, decode_spans(k), evaluate_grounding against gold spans.
EvalResult evaluate(const std::vector<GroundingExample>& data, const Bridge<float>& bridge,
                    ParamStore<float>& params, std::size_t k);

// Inverse-frequency weights over {BEGIN, END, NONE}, normalized to mean 1.
std::vector<double> inverse_frequency_weights(const std::vector<GroundingExample>& data);

// Expected IoU between a fixed-length gold span and a predicted span of the
// same length, both placed uniformly at random in T frames.
double random_placement_expected_iou(std::int64_t num_frames, std::int64_t span_length);

}  // namespace tgb

#endif  // TGB_TRAINING_HPP_
