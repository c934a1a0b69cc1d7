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

#include "tgb/training.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "tgb/error.hpp"
#include "tgb/log.hpp"

namespace tgb {

void TrainConfig::validate() const {
  if (epochs == 0) throw ConfigError("train.epochs must be >= 1");
  if (batch_size == 0) throw ConfigError("train.batch_size must be >= 1");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("train.lr must be >= 0");
  if (!(tau_end > 0.0) || !(tau_start >= tau_end)) {
    throw ConfigError("train.tau_start >= train.tau_end > 0 required, got " +
                      std::to_string(tau_start) + ", " + std::to_string(tau_end));
  }
  if (K == 0) throw ConfigError("train.K must be >= 1");
  if (eval_k == 0) throw ConfigError("train.eval_k must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("train.beta1/beta2 must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw ConfigError("train.adam_eps must be > 0");
  if (!(joint_weight >= 0.0)) throw ConfigError("train.joint_weight must be >= 0");
}

namespace {

// Temperature softmax of logits + noise, computed in double.
std::vector<double> perturbed_softmax(std::span<const double> logits,
                                      std::span<const double> noise, double tau) {
  std::vector<double> z(logits.size());
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < z.size(); ++i) {
    z[i] = (logits[i] + noise[i]) / tau;
    mx = std::max(mx, z[i]);
  }
  double total = 0.0;
  for (double& v : z) {
    v = std::exp(v - mx);
    total += v;
  }
  for (double& v : z) v /= total;
  return z;
}

std::size_t argmax_first(std::span<const double> logits, std::span<const double> noise) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < logits.size(); ++i) {
    if (logits[i] + noise[i] > logits[best] + noise[best]) best = i;
  }
  return best;
}

}  // namespace

template <typename S>
GumbelSample<S> gumbel_softmax_sample(std::span<const S> logits, double tau, Rng& rng) {
  if (!(tau > 0.0)) throw ValidationError("gumbel_softmax_sample: tau must be > 0");
  if (logits.empty()) throw ValidationError("gumbel_softmax_sample: empty logits");
  std::vector<double> l(logits.begin(), logits.end());
  std::vector<double> noise(l.size());
  for (double& n : noise) n = rng.gumbel();
  const auto p = perturbed_softmax(l, noise, tau);
  GumbelSample<S> out;
  out.soft.assign(p.begin(), p.end());
  out.hard = argmax_first(l, noise);
  return out;
}

namespace ag {

template <typename S>
Var gumbel_softmax(Graph<S>& g, Var logits, std::span<const double> noise, double tau,
                   bool straight_through) {
  if (!(tau > 0.0)) throw ValidationError("gumbel_softmax: tau must be > 0");
  const auto& lv = g.value(logits);
  if (noise.size() != lv.size()) {
    throw DimensionError("gumbel_softmax: " + std::to_string(noise.size()) +
                         " noise values for " + shape_to_string(lv.shape()));
  }
  std::vector<double> l(lv.values().begin(), lv.values().end());
  auto probs = perturbed_softmax(l, noise, tau);
  Tensor<S> out(lv.shape());
  if (straight_through) {
    out[argmax_first(l, noise)] = S(1);
  } else {
    for (std::size_t i = 0; i < probs.size(); ++i) out[i] = static_cast<S>(probs[i]);
  }
  return g.record(std::move(out), {logits},
                  [logits, probs = std::move(probs), tau](Graph<S>& g, const Tensor<S>& go) {
                    auto* gl = g.grad_sink(logits);
                    if (!gl) return;
                    double dot = 0.0;
                    for (std::size_t i = 0; i < probs.size(); ++i) dot += go[i] * probs[i];
                    for (std::size_t i = 0; i < probs.size(); ++i) {
                      (*gl)[i] += static_cast<S>(probs[i] * (go[i] - dot) / tau);
                    }
                  });
}

template <typename S>
Var soft_span_mask(Graph<S>& g, Var begin_probs, Var end_probs) {
  const auto& bv = g.value(begin_probs);
  const auto& ev = g.value(end_probs);
  if (bv.size() != ev.size()) {
    throw DimensionError("soft_span_mask: " + shape_to_string(bv.shape()) + " vs " +
                         shape_to_string(ev.shape()));
  }
  const std::size_t n = bv.size();
  std::vector<S> cb(n), re(n);
  S acc = 0;
  for (std::size_t t = 0; t < n; ++t) cb[t] = (acc += bv[t]);
  acc = 0;
  for (std::size_t t = n; t-- > 0;) re[t] = (acc += ev[t]);
  Tensor<S> out({n});
  for (std::size_t t = 0; t < n; ++t) out[t] = cb[t] * re[t];
  return g.record(std::move(out), {begin_probs, end_probs},
                  [begin_probs, end_probs, cb = std::move(cb), re = std::move(re), n](
                      Graph<S>& g, const Tensor<S>& go) {
                    if (auto* gb = g.grad_sink(begin_probs)) {
                      S run = 0;
                      for (std::size_t s = n; s-- > 0;) {
                        run += go[s] * re[s];
                        (*gb)[s] += run;
                      }
                    }
                    if (auto* ge = g.grad_sink(end_probs)) {
                      S run = 0;
                      for (std::size_t s = 0; s < n; ++s) {
                        run += go[s] * cb[s];
                        (*ge)[s] += run;
                      }
                    }
                  });
}

template <typename S>
Var relevance_alignment_loss(Graph<S>& g, Var mask, std::span<const double> relevance,
                             double eps) {
  const auto& mv = g.value(mask);
  if (mv.size() != relevance.size()) {
    throw DimensionError("relevance_alignment_loss: mask " + shape_to_string(mv.shape()) +
                         " vs " + std::to_string(relevance.size()) + " relevance values");
  }
  double num = eps, den = eps;
  for (std::size_t t = 0; t < mv.size(); ++t) {
    num += mv[t] * relevance[t];
    den += mv[t];
  }
  const double loss = std::log(den) - std::log(num);
  std::vector<double> rel(relevance.begin(), relevance.end());
  return g.record(Tensor<S>({1}, std::vector<S>{static_cast<S>(loss)}), {mask},
                  [mask, rel = std::move(rel), num, den](Graph<S>& g, const Tensor<S>& go) {
                    auto* gm = g.grad_sink(mask);
                    if (!gm) return;
                    const double scale = go[0];
                    for (std::size_t t = 0; t < rel.size(); ++t) {
                      (*gm)[t] += static_cast<S>(scale * (1.0 / den - rel[t] / num));
                    }
                  });
}

}  // namespace ag

template <typename S>
std::vector<SampledSpan<S>> sample_k_spans(Graph<S>& g, Var logits, double tau,
                                           std::size_t K, Rng& rng, bool straight_through) {
  if (K == 0) throw ValidationError("sample_k_spans: K must be >= 1");
  const auto& lv = g.value(logits);
  if (lv.rank() != 2 || lv.cols() != 3) {
    throw DimensionError("sample_k_spans expects T x 3 logits, got " +
                         shape_to_string(lv.shape()));
  }
  const std::size_t T = lv.rows();
  // Copied up front: adding nodes below may reallocate the graph's storage.
  std::vector<double> bl(T), el(T);
  for (std::size_t t = 0; t < T; ++t) {
    bl[t] = lv.at(t, kBegin);
    el[t] = lv.at(t, kEnd);
  }
  Var begin_logits = ag::column(g, logits, kBegin);
  Var end_logits = ag::column(g, logits, kEnd);
  std::vector<SampledSpan<S>> out;
  out.reserve(K);
  std::vector<double> nb(T), ne(T);
  for (std::size_t k = 0; k < K; ++k) {
    for (double& v : nb) v = rng.gumbel();
    for (double& v : ne) v = rng.gumbel();
    Var pb = ag::gumbel_softmax(g, begin_logits, nb, tau, straight_through);
    Var pe = ag::gumbel_softmax(g, end_logits, ne, tau, straight_through);
    auto b = static_cast<std::int64_t>(argmax_first(bl, nb));
    auto e = static_cast<std::int64_t>(argmax_first(el, ne));
    SampledSpan<S> s;
    if (b > e) {
      s.span = Span{e, b};
      s.mask = ag::soft_span_mask(g, pe, pb);
    } else {
      s.span = Span{b, e};
      s.mask = ag::soft_span_mask(g, pb, pe);
    }
    out.push_back(s);
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

// Crops an example to frames [start, start + len).
GroundingExample crop_example(const GroundingExample& ex, std::size_t start, std::size_t len) {
  GroundingExample out;
  out.id = ex.id;
  out.query = ex.query;
  out.answer = ex.answer;
  out.skip = ex.skip;
  const auto& v = ex.motion.values;
  const std::size_t D = v.cols();
  std::vector<float> vals(v.data() + start * D, v.data() + (start + len) * D);
  out.motion.values = Tensor<float>({len, D}, std::move(vals));
  if (ex.motion.has_grid()) {
    const auto& gr = ex.motion.raw_grid;
    const std::size_t G = gr.cols();
    std::vector<float> gv(gr.data() + start * G, gr.data() + (start + len) * G);
    out.motion.raw_grid = Tensor<float>({len, G}, std::move(gv));
    out.motion.grid_height = ex.motion.grid_height;
    out.motion.grid_width = ex.motion.grid_width;
  }
  if (!ex.relevance.empty()) {
    out.relevance.assign(ex.relevance.begin() + static_cast<std::ptrdiff_t>(start),
                         ex.relevance.begin() + static_cast<std::ptrdiff_t>(start + len));
  }
  const auto lo = static_cast<std::int64_t>(start);
  const auto hi = static_cast<std::int64_t>(start + len) - 1;
  std::vector<Span> kept;
  for (const Span& s : ex.gold_spans.spans()) {
    const std::int64_t b = std::max(s.begin, lo), e = std::min(s.end, hi);
    if (b <= e) kept.push_back({b - lo, e - lo});
  }
  out.gold_spans = union_spans(std::move(kept));
  return out;
}

}  // namespace

Trainer::Trainer(BridgeConfig bridge_cfg, TrainConfig train_cfg)
    : bridge_(std::move(bridge_cfg)),
      cfg_(train_cfg),
      adam_(AdamConfig{train_cfg.lr, train_cfg.beta1, train_cfg.beta2, train_cfg.adam_eps}) {
  cfg_.validate();
  initialize();
}

void Trainer::initialize() {
  params_ = ParamStore<float>();
  bridge_.init_params(params_, cfg_.seed);
  rng_.reseed(hash_combine(cfg_.seed, 0x747261696eULL));
  adam_ = Adam(AdamConfig{cfg_.lr, cfg_.beta1, cfg_.beta2, cfg_.adam_eps});
  step_ = 0;
  epoch_ = 0;
  planned_steps_ = 0;
}

void Trainer::restore_progress(std::int64_t step, std::size_t epoch,
                               std::int64_t planned_steps, const Rng::State& rng_state) {
  step_ = step;
  epoch_ = epoch;
  planned_steps_ = planned_steps;
  rng_.set_state(rng_state);
  adam_.set_step_count(step);
}

double Trainer::current_tau() const {
  if (planned_steps_ <= 1) return cfg_.tau_start;
  const double frac =
      std::min(1.0, static_cast<double>(step_) / static_cast<double>(planned_steps_ - 1));
  return cfg_.tau_start + (cfg_.tau_end - cfg_.tau_start) * frac;
}

double Trainer::accumulate_example(const GroundingExample& ex, double weight, bool backward) {
  const GroundingExample* use = &ex;
  GroundingExample cropped;
  const std::size_t T = ex.num_frames();
  if (cfg_.train_window > 0 && T > cfg_.train_window) {
    const auto start = static_cast<std::size_t>(
        rng_.uniform_int(0, static_cast<std::int64_t>(T - cfg_.train_window)));
    cropped = crop_example(ex, start, cfg_.train_window);
    use = &cropped;
  }
  const auto frames = static_cast<std::int64_t>(use->num_frames());
  if (!use->gold_spans.within(frames)) {
    throw ValidationError("example " + ex.id + " has spans outside its " +
                          std::to_string(frames) + " frames");
  }

  Graph<float> g(backward);
  Rng* drop = bridge_.config().dropout > 0.0 ? &rng_ : nullptr;
  ForwardOptions opts;
  if (cfg_.position_jitter > 0) {
    const auto shift = rng_.uniform_int(0, static_cast<std::int64_t>(cfg_.position_jitter));
    opts.motion_positions.resize(static_cast<std::size_t>(frames));
    for (std::int64_t t = 0; t < frames; ++t) opts.motion_positions[static_cast<std::size_t>(t)] = shift + t;
  }
  auto out = bridge_.forward(g, params_, use->motion, use->query, opts, drop);
  const auto labels = labels_from_spans(use->gold_spans, frames);
  Var loss = ag::cross_entropy_3class(g, out.logits, labels, class_weights_);

  if (cfg_.joint && !use->relevance.empty()) {
    auto samples = sample_k_spans(g, out.logits, current_tau(), cfg_.K, rng_, true);
    Var task;
    for (const auto& s : samples) {
      Var l = ag::relevance_alignment_loss(g, s.mask, use->relevance);
      task = task.valid() ? ag::add(g, task, l) : l;
    }
    task = ag::scale(g, task, static_cast<float>(cfg_.joint_weight / cfg_.K));
    loss = ag::add(g, loss, task);
  }
  const double value = g.value(loss)[0];
  if (backward && std::isfinite(value)) {
    g.backward(ag::scale(g, loss, static_cast<float>(weight)));
  }
  return value;
}

double Trainer::example_loss(const GroundingExample& ex) {
  // Evaluated on a copy of the RNG so diagnostics never shift training.
  const Rng::State saved = rng_.state();
  const double v = accumulate_example(ex, 1.0, false);
  rng_.set_state(saved);
  return v;
}

double Trainer::train_step(std::span<const GroundingExample* const> batch) {
  std::vector<const GroundingExample*> use;
  for (const auto* ex : batch) {
    if (ex != nullptr && !ex->skip) use.push_back(ex);
  }
  if (use.empty()) {
    log_warning("train_step at step " + std::to_string(step_) +
                ": every example in the batch is skip-flagged; nothing to do");
    return std::numeric_limits<double>::quiet_NaN();
  }
  params_.zero_grad();
  const double w = 1.0 / static_cast<double>(use.size());
  double total = 0.0;
  for (const auto* ex : use) {
    const double l = accumulate_example(*ex, w, true);
    if (!std::isfinite(l)) {
      throw NonFiniteError("non-finite loss at step " + std::to_string(step_ + 1) +
                           " (example " + ex->id + ")");
    }
    total += l;
  }
  try {
    adam_.step(params_);
  } catch (const NonFiniteError& e) {
    throw NonFiniteError("at step " + std::to_string(step_ + 1) + ": " + e.what());
  }
  ++step_;
  return total * w;
}

EpochLog Trainer::train_epoch(const std::vector<GroundingExample>& data,
                              const std::function<void(const StepLog&)>& on_step) {
  if (cfg_.class_weighting) class_weights_ = inverse_frequency_weights(data);
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!data[i].skip) order.push_back(i);
  }
  for (std::size_t i = order.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng_.uniform_int(0, static_cast<std::int64_t>(i - 1)));
    std::swap(order[i - 1], order[j]);
  }
  EpochLog log;
  log.epoch = epoch_ + 1;
  double sum = 0.0;
  std::vector<const GroundingExample*> batch;
  for (std::size_t start = 0; start < order.size(); start += cfg_.batch_size) {
    batch.clear();
    const std::size_t stop = std::min(order.size(), start + cfg_.batch_size);
    for (std::size_t i = start; i < stop; ++i) batch.push_back(&data[order[i]]);
    const double tau = current_tau();
    const double loss = train_step(batch);
    sum += loss;
    ++log.steps;
    if (on_step) on_step(StepLog{step_, log.epoch, loss, tau, batch.size()});
  }
  if (order.empty()) log_warning("train_epoch: no trainable examples");
  log.mean_loss = log.steps ? sum / static_cast<double>(log.steps)
                            : std::numeric_limits<double>::quiet_NaN();
  ++epoch_;
  return log;
}

void Trainer::plan(const std::vector<GroundingExample>& data) {
  if (planned_steps_ != 0) return;
  std::size_t usable = 0;
  for (const auto& ex : data) usable += ex.skip ? 0 : 1;
  const std::size_t per_epoch = (usable + cfg_.batch_size - 1) / cfg_.batch_size;
  planned_steps_ = static_cast<std::int64_t>(per_epoch * cfg_.epochs);
}

std::vector<EpochLog> Trainer::fit(const std::vector<GroundingExample>& data,
                                   const std::function<void(const StepLog&)>& on_step,
                                   const std::function<void(const EpochLog&)>& on_epoch) {
  plan(data);
  std::vector<EpochLog> logs;
  while (epoch_ < cfg_.epochs) {
    logs.push_back(train_epoch(data, on_step));
    if (on_epoch) on_epoch(logs.back());
  }
  return logs;
}

EvalResult evaluate(const std::vector<GroundingExample>& data, const Bridge<float>& bridge,
                    ParamStore<float>& params, std::size_t k) {
  if (data.empty()) throw ValidationError("evaluate: empty dataset");
  EvalResult r;
  std::vector<SpanSet> golds;
  r.predictions.reserve(data.size());
  golds.reserve(data.size());
  for (const auto& ex : data) {
    const auto frames = static_cast<std::int64_t>(ex.num_frames());
    if (!ex.gold_spans.within(frames)) {
      throw ValidationError("example " + ex.id + ": gold spans exceed " +
                            std::to_string(frames) + " frames");
    }
    const auto logits = bridge.infer_logits(params, ex.motion, ex.query);
    r.predictions.push_back(decode_spans(logits, k));
    golds.push_back(ex.gold_spans);
  }
  r.metrics = evaluate_grounding(r.predictions, golds);
  return r;
}

std::vector<double> inverse_frequency_weights(const std::vector<GroundingExample>& data) {
  std::array<double, 3> counts{};
  for (const auto& ex : data) {
    if (ex.skip) continue;
    for (int y : labels_from_spans(ex.gold_spans, static_cast<std::int64_t>(ex.num_frames()))) {
      counts[static_cast<std::size_t>(y)] += 1.0;
    }
  }
  const double total = counts[0] + counts[1] + counts[2];
  std::vector<double> w(3, 1.0);
  if (total == 0.0) return w;
  for (std::size_t c = 0; c < 3; ++c) w[c] = counts[c] > 0 ? total / (3.0 * counts[c]) : 0.0;
  const double mean = (w[0] + w[1] + w[2]) / 3.0;
  for (double& v : w) v /= mean;
  return w;
}

double random_placement_expected_iou(std::int64_t num_frames, std::int64_t span_length) {
  if (span_length < 1 || span_length > num_frames) {
    throw ValidationError("random_placement_expected_iou: span length " +
                          std::to_string(span_length) + " does not fit in " +
                          std::to_string(num_frames) + " frames");
  }
  const std::int64_t n = num_frames - span_length + 1;
  double acc = 0.0;
  for (std::int64_t d = -(n - 1); d <= n - 1; ++d) {
    const std::int64_t overlap = std::max<std::int64_t>(0, span_length - std::abs(d));
    const double iou_d =
        static_cast<double>(overlap) / static_cast<double>(2 * span_length - overlap);
    acc += static_cast<double>(n - std::abs(d)) * iou_d;
  }
  return acc / static_cast<double>(n * n);
}

#define TGB_INSTANTIATE(S)                                                              \
  template GumbelSample<S> gumbel_softmax_sample<S>(std::span<const S>, double, Rng&);  \
  template std::vector<SampledSpan<S>> sample_k_spans<S>(Graph<S>&, Var, double,        \
                                                         std::size_t, Rng&, bool);      \
  namespace ag {                                                                        \
  template Var gumbel_softmax<S>(Graph<S>&, Var, std::span<const double>, double, bool); \
  template Var soft_span_mask<S>(Graph<S>&, Var, Var);                                  \
  template Var relevance_alignment_loss<S>(Graph<S>&, Var, std::span<const double>,     \
                                           double);                                     \
  }

TGB_INSTANTIATE(float)
TGB_INSTANTIATE(double)
#undef TGB_INSTANTIATE

}  // namespace tgb
