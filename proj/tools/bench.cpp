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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <ostream>
#include <sstream>

#ifdef __linux__
#include <sched.h>
#endif

#include "alloc_counter.hpp"
#include "commands.hpp"
#include "tgb/dataset.hpp"
#include "tgb/error.hpp"
#include "tgb/strategy.hpp"

namespace tgb::cli {

using nlohmann::json;

namespace {

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Keeps timing on the CPU the process started on.
void pin_to_current_cpu() {
#ifdef __linux__
  const int cpu = sched_getcpu();
  if (cpu < 0) return;
  cpu_set_t set;
  CPU_ZERO(&set);
  CPU_SET(cpu, &set);
  sched_setaffinity(0, sizeof(set), &set);
#endif
}

// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2) return 0.0;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxx > 0 ? sxy / sxx : 0.0;
}

}  // namespace

int cmd_bench(const BenchOptions& o, std::ostream& out, std::ostream&) {
  std::vector<GroundingStrategy> strategies;
  for (const auto& name : split_csv(o.strategies)) {
    strategies.push_back(parse_grounding_strategy(name));
  }
  if (strategies.empty()) throw ConfigError("--strategies is empty");
  std::vector<std::size_t> sizes;
  for (const auto& s : split_csv(o.sizes)) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(s, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != s.size() || v < 16) throw ConfigError("bad size '" + s + "' (need >= 16)");
    sizes.push_back(static_cast<std::size_t>(v));
  }
  if (sizes.empty()) throw ConfigError("--sizes is empty");
  if (o.suite_examples == 0 || o.batches == 0 || o.k == 0) {
    throw ConfigError("--suite-examples, --batches and --k must be >= 1");
  }
  pin_to_current_cpu();

  using clock = std::chrono::steady_clock;
  std::string csv = "strategy,T,wall_ns,peak_bytes,miou\n";
  std::map<std::string, std::vector<double>> times;
  std::map<std::string, std::vector<double>> mious;
  for (std::size_t T : sizes) {
    ScoreSuiteConfig sc;
    sc.num_frames = T;
    sc.num_examples = o.suite_examples;
    sc.score_noise = o.score_noise;
    sc.seed = o.seed;
    const auto suite = make_score_suite(sc);
    const auto params = BaselineParams::defaults_for(static_cast<std::int64_t>(T));
    const std::span<const double> probe = suite.front().scores;
    for (auto strat : strategies) {
      const std::string name(grounding_strategy_name(strat));
      // Calibrate calls per batch so a batch lasts at least min_batch_ms.
      std::size_t calls = 1;
      for (;;) {
        const auto t0 = clock::now();
        for (std::size_t i = 0; i < calls; ++i) ground_scores(probe, strat, o.k, params);
        const double ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
        if (ms >= o.min_batch_ms || calls >= (std::size_t{1} << 24)) break;
        calls *= 2;
      }
      double best_ns = INFINITY;
      for (std::size_t b = 0; b < o.batches; ++b) {
        const auto t0 = clock::now();
        for (std::size_t i = 0; i < calls; ++i) ground_scores(probe, strat, o.k, params);
        const double ns = std::chrono::duration<double, std::nano>(clock::now() - t0).count();
        best_ns = std::min(best_ns, ns / static_cast<double>(calls));
      }
      alloc::reset_peak();
      ground_scores(probe, strat, o.k, params);
      const std::size_t peak = alloc::peak_bytes_since_reset();
      const double miou = suite_miou(suite, strat, o.k);
      times[name].push_back(best_ns);
      mious[name].push_back(miou);
      std::ostringstream row;
      row.precision(6);
      row << name << "," << T << "," << static_cast<long long>(std::llround(best_ns)) << ","
          << peak << "," << miou << "\n";
      csv += row.str();
    }
  }
  write_text_file(o.report, csv);

  std::vector<double> xs(sizes.begin(), sizes.end());
  json slopes = json::object(), mean_miou = json::object();
  for (auto strat : strategies) {
    const std::string name(grounding_strategy_name(strat));
    slopes[name] = loglog_slope(xs, times[name]);
    double m = 0;
    for (double v : mious[name]) m += v;
    mean_miou[name] = m / static_cast<double>(mious[name].size());
  }
  const json bench_cfg{{"strategies", o.strategies}, {"sizes", o.sizes},
                       {"suite_examples", o.suite_examples}, {"k", o.k},
                       {"score_noise", o.score_noise}, {"seed", o.seed}};
  write_meta_sidecar(o.report, bench_cfg, json{{"slopes", slopes}, {"miou", mean_miou}});
  out << json{{"slopes", slopes}, {"miou", mean_miou}, {"report", o.report}}.dump() << "\n";
  return kExitOk;
}

}  // namespace tgb::cli
