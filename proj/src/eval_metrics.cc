// Copyright 2026 The ConvNat Authors. All Rights Reserved.
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

#include "convnat/eval_metrics.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>

#include "convnat/errors.h"

namespace convnat {
namespace {

void RequirePairs(std::span<const double> x, std::span<const double> y, size_t min_len) {
  if (x.size() != y.size()) {
    throw MetricError("length mismatch: " + std::to_string(x.size()) + " vs " + std::to_string(y.size()));
  }
  if (x.size() < min_len) {
    throw MetricError("need at least " + std::to_string(min_len) + " points, got " + std::to_string(x.size()));
  }
}

bool IsConstant(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [&](double a) { return a == v.front(); });
}

}  // namespace

double Pcc(std::span<const double> x, std::span<const double> y) {
  RequirePairs(x, y, 2);
  if (IsConstant(x) || IsConstant(y)) throw DegenerateVarianceError("degenerate variance: constant input");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw DegenerateVarianceError("degenerate variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> AverageRanks(std::span<const double> x) {
  std::vector<size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (size_t i = 0; i < order.size();) {
    size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    // Positions i..j (0-based) share rank mean(i+1..j+1).
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double Src(std::span<const double> x, std::span<const double> y) {
  RequirePairs(x, y, 2);
  const auto rx = AverageRanks(x);
  const auto ry = AverageRanks(y);
  return Pcc(rx, ry);
}

double Mse(std::span<const double> x, std::span<const double> y) {
  RequirePairs(x, y, 1);
  double acc = 0.0;
  for (size_t i = 0; i < x.size(); ++i) acc += (x[i] - y[i]) * (x[i] - y[i]);
  return acc / static_cast<double>(x.size());
}

nlohmann::ordered_json EvalResult::ToJson() const {
  nlohmann::ordered_json j;
  j["dataset"] = dataset;
  j["target"] = target;
  j["channel_mode"] = channel_mode;
  j["encoder"] = encoder;
  j["pcc"] = pcc;
  j["src"] = src;
  j["mse"] = mse;
  j["n"] = n;
  return j;
}

EvalResult Score(std::span<const double> predictions, std::span<const double> labels) {
  EvalResult r;
  r.pcc = Pcc(predictions, labels);
  r.src = Src(predictions, labels);
  r.mse = Mse(predictions, labels);
  r.n = predictions.size();
  return r;
}

EvalOutput Evaluate(const DatasetManifest& dataset, Target target, const SampleScorer& scorer) {
  EvalOutput out;
  for (const auto& s : dataset.samples) {
    const auto& label = s.label(target);
    if (!label) continue;
    out.ids.push_back(s.id);
    out.labels.push_back(label->mos);
    out.predictions.push_back(scorer(s));
  }
  if (out.labels.size() < 2) {
    throw MetricError("dataset '" + dataset.name + "' has fewer than 2 samples labeled for " +
                      std::string(ToString(target)));
  }
  out.result = Score(out.predictions, out.labels);
  out.result.dataset = dataset.name;
  out.result.target = ToString(target);
  return out;
}

EvalOutput Evaluate(const PredictorState& state, const Encoder& encoder, const DatasetManifest& dataset,
                    Target target) {
  CheckCompatible(state, encoder.spec());
  EvalOutput out = Evaluate(dataset, target, [&](const ConversationSample& s) {
    return Forward(state, encoder, dataset, s).final_mos;
  });
  out.result.channel_mode = ToString(state.channel_mode);
  out.result.encoder = state.encoder_name;
  return out;
}

void WriteScatterCsv(const EvalOutput& eval, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw MetricError("cannot write " + path.string());
  out << "id,label,prediction\n" << std::setprecision(17);
  for (size_t i = 0; i < eval.ids.size(); ++i) {
    out << eval.ids[i] << ',' << eval.labels[i] << ',' << eval.predictions[i] << '\n';
  }
}

}  // namespace convnat
