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

#ifndef CONVNAT_TRAINER_H_
#define CONVNAT_TRAINER_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "convnat/corpus.h"
#include "convnat/encoder_hub.h"
#include "convnat/naturalness_model.h"
#include "json.hpp"

namespace convnat {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  Adam(size_t num_params, AdamConfig cfg);
  void Step(std::span<double> params, std::span<const double> grad, double learning_rate);
  long steps() const { return t_; }

 private:
  AdamConfig cfg_;
  std::vector<double> m_;
  std::vector<double> v_;
  long t_ = 0;
};

// batch_size counts conversations.
struct TrainConfig {
  int batch_size = 32;
  double learning_rate = 0.002;
  int max_epochs = 30;
  AdamConfig adam;
  uint64_t seed = 0;
  Target target = Target::kConversation;
  bool dropout = true;
  // Stop after this many epochs without a new best dev loss; 0 runs every
  // epoch.
  int patience = 0;

  nlohmann::ordered_json ToJson() const;
};

// AES and Whisper: batch 32, lr 0.002. WavLM: batch 16, lr 0.001. The mock
// encoder uses the desk-scale setting recorded in the README.
TrainConfig DefaultTrainConfig(std::string_view encoder_name, Target target);

struct PretrainConfig {
  int batch_size = 32;
  double learning_rate = 0.001;
  int epochs = 5;
  int eval_every_steps = 1000;
  AdamConfig adam;
  uint64_t seed = 0;
  Target target = Target::kConversation;
  bool dropout = true;

  nlohmann::ordered_json ToJson() const;
};

enum class SelectionRule { kMinDevLoss, kMaxDevPcc };
std::string_view ToString(SelectionRule r);

struct HistoryRecord {
  size_t index = 0;
  int epoch = 0;  // 1-based epoch in which the evaluation happened
  long step = 0;  // optimizer steps taken so far
  double train_loss = 0.0;
  double dev_loss = 0.0;
  std::optional<double> dev_pcc;  // unset when predictions had no variance

  bool operator==(const HistoryRecord&) const = default;
};

struct TrainHistory {
  std::string phase;
  SelectionRule rule = SelectionRule::kMinDevLoss;
  std::vector<HistoryRecord> records;
  size_t selected_checkpoint = 0;

  bool operator==(const TrainHistory&) const = default;
};

// argmin dev loss or argmax dev PCC; ties go to the earliest record and
// records without a PCC never win under kMaxDevPcc.
size_t SelectCheckpoint(std::span<const HistoryRecord> records, SelectionRule rule);

using FeatureSet = std::vector<ConversationFeatures>;

// Encodes every sample carrying `target` (frozen encoder) and attaches its
// label.
FeatureSet BuildFeatures(const Encoder& encoder, ChannelMode mode, const DatasetManifest& manifest,
                         Target target);

struct TrainResult {
  PredictorState state;  // the selected checkpoint
  TrainHistory history;
};

// Adam + conversation-level MSE. Dev loss is computed after every epoch and
// the epoch with the lowest dev loss is returned.
TrainResult Train(PredictorState init, const TrainConfig& cfg, const FeatureSet& train, const FeatureSet& dev);

TrainResult Train(PredictorState init, const TrainConfig& cfg, const Encoder& encoder,
                  const DatasetManifest& train, const DatasetManifest& dev);

struct PretrainResult {
  PredictorState state;
  TrainHistory pretrain;
  TrainHistory finetune;
  PredictorState pretrain_state;  // best-PCC pretrain checkpoint
};

// Pretrains on augmented data, evaluating dev PCC every eval_every_steps
// optimizer steps (and once more after the last step), then fine-tunes the
// best-PCC checkpoint with Train().
PretrainResult PretrainThenFinetune(PredictorState init, const PretrainConfig& pre_cfg, const FeatureSet& aug,
                                    const TrainConfig& ft_cfg, const FeatureSet& real_train,
                                    const FeatureSet& real_dev);

// Checks provenance (aug all synthetic, real sets all real) before encoding.
PretrainResult PretrainThenFinetune(PredictorState init, const PretrainConfig& pre_cfg,
                                    const DatasetManifest& aug, const TrainConfig& ft_cfg,
                                    const Encoder& encoder, const DatasetManifest& real_train,
                                    const DatasetManifest& real_dev);

nlohmann::ordered_json ToJson(const HistoryRecord& r, std::string_view phase);
void WriteHistoryJsonl(const TrainHistory& h, const std::filesystem::path& path);

}  // namespace convnat

#endif  // CONVNAT_TRAINER_H_
