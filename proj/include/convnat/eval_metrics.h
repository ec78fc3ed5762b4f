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

#ifndef CONVNAT_EVAL_METRICS_H_
#define CONVNAT_EVAL_METRICS_H_

#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "convnat/corpus.h"
#include "convnat/encoder_hub.h"
#include "convnat/naturalness_model.h"
#include "json.hpp"

namespace convnat {

// Pearson correlation. Throws MetricError on length mismatch or fewer than two
// points, DegenerateVarianceError when either input is constant.
double Pcc(std::span<const double> x, std::span<const double> y);

// Spearman correlation: Pearson over average ranks (ties share the mean of
// their positions).
double Src(std::span<const double> x, std::span<const double> y);

double Mse(std::span<const double> x, std::span<const double> y);

// 1-based average ranks.
std::vector<double> AverageRanks(std::span<const double> x);

// One result-table row.
struct EvalResult {
  std::string dataset;
  std::string target;
  std::string channel_mode;
  std::string encoder;
  double pcc = 0.0;
  double src = 0.0;
  double mse = 0.0;
  size_t n = 0;

  nlohmann::ordered_json ToJson() const;
};

// Metrics over paired predictions/labels; row identity fields left empty.
EvalResult Score(std::span<const double> predictions, std::span<const double> labels);

struct EvalOutput {
  EvalResult result;
  std::vector<std::string> ids;
  std::vector<double> labels;
  std::vector<double> predictions;
};

using SampleScorer = std::function<double(const ConversationSample&)>;

// Scores every sample carrying `target` in manifest order.
EvalOutput Evaluate(const DatasetManifest& dataset, Target target, const SampleScorer& scorer);

// Evaluation-mode forward of `state` over the dataset.
EvalOutput Evaluate(const PredictorState& state, const Encoder& encoder, const DatasetManifest& dataset,
                    Target target);

// id,label,prediction rows for scatter plots.
void WriteScatterCsv(const EvalOutput& eval, const std::filesystem::path& path);

}  // namespace convnat

#endif  // CONVNAT_EVAL_METRICS_H_
