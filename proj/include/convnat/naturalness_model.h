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

#ifndef CONVNAT_NATURALNESS_MODEL_H_
#define CONVNAT_NATURALNESS_MODEL_H_

#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "convnat/audio_ops.h"
#include "convnat/corpus.h"
#include "convnat/encoder_hub.h"
#include "convnat/random.h"
#include "json.hpp"

namespace convnat {

// Which audio reaches the head. kSingleSystem encodes the system channel
// only; kDual encodes both and concatenates [user, system]; kMixedMono
// encodes 0.5 * (user + system) through the single-channel path.
enum class ChannelMode { kSingleSystem, kDual, kMixedMono };

std::string_view ToString(ChannelMode m);
// Accepts single|single_system|dual|mixed|mixed_mono.
ChannelMode ParseChannelMode(std::string_view s);

struct MlpConfig {
  int num_hidden_layers = 3;
  int hidden_size = 768;
  double dropout = 0.1;
  int input_dim = 0;

  bool operator==(const MlpConfig&) const = default;
};

int MlpInputDim(ChannelMode mode, int feature_dim);

// Offsets of each tensor inside PredictorState::params. The flat vector holds
// the layer-weight logits followed by (weight, bias) per linear layer;
// weights are column-major [out x in].
struct ParamLayout {
  struct Linear {
    size_t weight_offset;
    size_t bias_offset;
    int rows;  // out
    int cols;  // in
  };
  size_t logits_offset = 0;
  int num_logits = 0;
  std::vector<Linear> linears;  // hidden layers then the output layer
  size_t total = 0;

  static ParamLayout For(int num_layers, const MlpConfig& mlp);
};

struct PredictorState {
  std::string encoder_name;
  ChannelMode channel_mode = ChannelMode::kDual;
  Target trained_target = Target::kConversation;
  int num_layers = 0;
  int feature_dim = 0;
  MlpConfig mlp;
  std::vector<double> params;
  // Free-form training metadata persisted with the checkpoint (optimizer
  // settings, seed, ...).
  nlohmann::ordered_json metadata = nlohmann::ordered_json::object();

  ParamLayout layout() const { return ParamLayout::For(num_layers, mlp); }
  Eigen::Map<const Eigen::VectorXd> logits() const;
  Eigen::Map<Eigen::VectorXd> logits();

  bool operator==(const PredictorState&) const = default;
};

// Fresh predictor: zero logits (uniform layer weights) and linear layers
// drawn from U(-1/sqrt(in), 1/sqrt(in)).
PredictorState InitPredictor(const EncoderSpec& spec, ChannelMode mode, Target target,
                             MlpConfig mlp, uint64_t seed);

Eigen::VectorXd Softmax(const Eigen::VectorXd& logits);

// out[t, d] = sum_l softmax(logits)[l] * stack[l, t, d]
Eigen::MatrixXd LayerWeightedSum(const LayerStack& stack, const Eigen::VectorXd& logits);

// Mean over the first valid_frames rows.
Eigen::VectorXd MaskedMeanPool(const Eigen::MatrixXd& frames, int valid_frames);

// Masked mean of every layer separately: [feature_dim x num_layers]. Since
// weighting and pooling are both linear, the weighted sum of these columns
// equals MaskedMeanPool(LayerWeightedSum(...)).
Eigen::MatrixXd PoolLayers(const LayerStack& stack);

struct Prediction {
  double final_mos = 0.0;
  std::vector<double> per_segment_scores;
};

Prediction AverageSegments(std::vector<double> scores);

// One 30-second slice of both channels. For kMixedMono the caller passes the
// premixed audio as `system`; `user` is ignored outside kDual.
struct SegmentInput {
  std::span<const float> user;
  std::span<const float> system;
  size_t user_valid = 0;
  size_t system_valid = 0;
};

Eigen::VectorXd EmbedSegment(const PredictorState& state, const Encoder& encoder,
                             const SegmentInput& segment);

// Evaluation-mode head output for one embedding.
double HeadForward(const PredictorState& state, const Eigen::VectorXd& input);

using SegmentHead = std::function<double(const Eigen::VectorXd&)>;

// Segments both channels identically, embeds each segment and averages the
// head's per-segment scores. With training_mode set, dropout masks are drawn
// from `dropout_rng` (which must then be non-null).
Prediction Forward(const PredictorState& state, const Encoder& encoder,
                   const ConversationAudio& audio, bool training_mode = false,
                   Rng* dropout_rng = nullptr);

Prediction Forward(const PredictorState& state, const Encoder& encoder,
                   const ConversationAudio& audio, const SegmentHead& head);

Prediction Forward(const PredictorState& state, const Encoder& encoder,
                   const DatasetManifest& manifest, const ConversationSample& sample);

// Per-layer pooled features for the encoder-frozen training path.
struct SegmentFeatures {
  Eigen::MatrixXd user;    // [feature_dim x num_layers], empty unless kDual
  Eigen::MatrixXd system;  // system or mixed channel
};

struct ConversationFeatures {
  std::string id;
  std::vector<SegmentFeatures> segments;
  double label = 0.0;
};

ConversationFeatures ExtractFeatures(const Encoder& encoder, ChannelMode mode,
                                     const ConversationAudio& audio);

Eigen::VectorXd EmbedFeatures(const PredictorState& state, const SegmentFeatures& f);

// Evaluation-mode final_mos per conversation.
std::vector<double> PredictFeatures(const PredictorState& state,
                                    std::span<const ConversationFeatures> convs);

struct LossAndGradient {
  double loss = 0.0;                // mean over conversations of (final_mos - label)^2
  std::vector<double> gradient;     // same layout as PredictorState::params
  std::vector<double> predictions;  // final_mos per conversation
};

// Conversation-level MSE and its gradient over one batch. Dropout is applied
// iff dropout_rng is non-null.
LossAndGradient ComputeLossAndGradient(const PredictorState& state,
                                       std::span<const ConversationFeatures* const> batch,
                                       Rng* dropout_rng);

inline constexpr int kCheckpointFormatVersion = 1;

// Writes state.json and params.bin into `dir`.
void SaveState(const PredictorState& state, const std::filesystem::path& dir);
PredictorState LoadState(const std::filesystem::path& dir);

// Throws ModelError if `state` was built for a different encoder shape.
void CheckCompatible(const PredictorState& state, const EncoderSpec& spec);

}  // namespace convnat

#endif  // CONVNAT_NATURALNESS_MODEL_H_
