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

#include "convnat/naturalness_model.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <numeric>

#include "convnat/errors.h"

namespace convnat {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double Gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

double GeluGrad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + x * pdf;
}

Eigen::Map<const MatrixXd> WeightMap(const PredictorState& s, const ParamLayout::Linear& l) {
  return {s.params.data() + l.weight_offset, l.rows, l.cols};
}

Eigen::Map<const VectorXd> BiasMap(const PredictorState& s, const ParamLayout::Linear& l) {
  return {s.params.data() + l.bias_offset, l.rows};
}

// Activations kept for the backward pass. Index k covers hidden layer k.
struct MlpTrace {
  std::vector<MatrixXd> pre;     // W x + b
  std::vector<MatrixXd> hidden;  // dropout(gelu(pre))
  std::vector<MatrixXd> mask;    // dropout scale per unit, empty without dropout
};

// X is [input_dim x num_segments]; returns one score per column.
Eigen::RowVectorXd MlpForward(const PredictorState& state, const ParamLayout& layout,
                              const MatrixXd& x, Rng* dropout_rng, MlpTrace* trace) {
  const double p = state.mlp.dropout;
  const size_t hidden_layers = layout.linears.size() - 1;
  MatrixXd h = x;
  for (size_t k = 0; k < hidden_layers; ++k) {
    const auto& lin = layout.linears[k];
    MatrixXd pre = WeightMap(state, lin) * h;
    pre.colwise() += BiasMap(state, lin);
    MatrixXd act = pre.unaryExpr([](double v) { return Gelu(v); });
    MatrixXd mask;
    if (dropout_rng != nullptr && p > 0.0) {
      mask.resize(act.rows(), act.cols());
      const double keep_scale = 1.0 / (1.0 - p);
      for (Eigen::Index j = 0; j < mask.cols(); ++j) {
        for (Eigen::Index i = 0; i < mask.rows(); ++i) {
          mask(i, j) = dropout_rng->Uniform() < p ? 0.0 : keep_scale;
        }
      }
      act = act.cwiseProduct(mask);
    }
    h = act;
    if (trace != nullptr) {
      trace->pre.push_back(std::move(pre));
      trace->hidden.push_back(act);
      trace->mask.push_back(std::move(mask));
    }
  }
  const auto& out = layout.linears.back();
  Eigen::RowVectorXd y = WeightMap(state, out) * h;
  y.array() += BiasMap(state, out)(0);
  return y;
}

void RequireLayers(const LayerStack& stack, const Eigen::VectorXd& logits) {
  if (logits.size() != stack.num_layers()) {
    throw ModelError("layer weight count " + std::to_string(logits.size()) + " does not match " +
                     std::to_string(stack.num_layers()) + " encoder layers");
  }
}

std::vector<char> ReadFile(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

constexpr char kBlobMagic[8] = {'C', 'N', 'A', 'T', 'P', 'R', 'M', '1'};
constexpr const char* kStateFile = "state.json";
constexpr const char* kParamsFile = "params.bin";

}  // namespace

std::string_view ToString(ChannelMode m) {
  switch (m) {
    case ChannelMode::kSingleSystem: return "single_system";
    case ChannelMode::kDual: return "dual";
    case ChannelMode::kMixedMono: return "mixed_mono";
  }
  return "dual";
}

ChannelMode ParseChannelMode(std::string_view s) {
  if (s == "single" || s == "single_system") return ChannelMode::kSingleSystem;
  if (s == "dual") return ChannelMode::kDual;
  if (s == "mixed" || s == "mixed_mono") return ChannelMode::kMixedMono;
  throw UsageError("unknown channel mode '" + std::string(s) + "' (expected single|dual|mixed)");
}

int MlpInputDim(ChannelMode mode, int feature_dim) {
  return mode == ChannelMode::kDual ? 2 * feature_dim : feature_dim;
}

ParamLayout ParamLayout::For(int num_layers, const MlpConfig& mlp) {
  if (num_layers <= 0 || mlp.input_dim <= 0 || mlp.hidden_size <= 0 || mlp.num_hidden_layers < 0) {
    throw ModelError("predictor dimensions must be positive");
  }
  ParamLayout layout;
  layout.num_logits = num_layers;
  size_t offset = static_cast<size_t>(num_layers);
  int in = mlp.input_dim;
  for (int k = 0; k <= mlp.num_hidden_layers; ++k) {
    const int out = k == mlp.num_hidden_layers ? 1 : mlp.hidden_size;
    Linear lin{offset, offset + static_cast<size_t>(out) * in, out, in};
    offset = lin.bias_offset + static_cast<size_t>(out);
    layout.linears.push_back(lin);
    in = out;
  }
  layout.total = offset;
  return layout;
}

Eigen::Map<const VectorXd> PredictorState::logits() const { return {params.data(), num_layers}; }
Eigen::Map<VectorXd> PredictorState::logits() { return {params.data(), num_layers}; }

PredictorState InitPredictor(const EncoderSpec& spec, ChannelMode mode, Target target,
                             MlpConfig mlp, uint64_t seed) {
  if (!(mlp.dropout >= 0.0 && mlp.dropout < 1.0)) throw ModelError("dropout must lie in [0, 1)");
  PredictorState s;
  s.encoder_name = spec.name;
  s.channel_mode = mode;
  s.trained_target = target;
  s.num_layers = spec.num_layers;
  s.feature_dim = spec.feature_dim;
  mlp.input_dim = MlpInputDim(mode, spec.feature_dim);
  s.mlp = mlp;
  const ParamLayout layout = s.layout();
  s.params.assign(layout.total, 0.0);
  Rng rng(seed);
  for (const auto& lin : layout.linears) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(lin.cols));
    const size_t n = static_cast<size_t>(lin.rows) * lin.cols;
    for (size_t i = 0; i < n; ++i) s.params[lin.weight_offset + i] = rng.Uniform(-bound, bound);
    for (int i = 0; i < lin.rows; ++i) s.params[lin.bias_offset + i] = rng.Uniform(-bound, bound);
  }
  return s;
}

VectorXd Softmax(const VectorXd& logits) {
  const double m = logits.maxCoeff();
  VectorXd e = (logits.array() - m).exp();
  return e / e.sum();
}

MatrixXd LayerWeightedSum(const LayerStack& stack, const VectorXd& logits) {
  RequireLayers(stack, logits);
  const VectorXd w = Softmax(logits);
  MatrixXd out = MatrixXd::Zero(stack.num_frames(), stack.feature_dim());
  for (int l = 0; l < stack.num_layers(); ++l) out += w(l) * stack.layer(l);
  return out;
}

VectorXd MaskedMeanPool(const MatrixXd& frames, int valid_frames) {
  if (valid_frames <= 0 || valid_frames > frames.rows()) {
    throw ModelError("valid_frames " + std::to_string(valid_frames) + " outside [1, " +
                     std::to_string(frames.rows()) + "]");
  }
  return frames.topRows(valid_frames).colwise().mean().transpose();
}

MatrixXd PoolLayers(const LayerStack& stack) {
  MatrixXd pooled(stack.feature_dim(), stack.num_layers());
  for (int l = 0; l < stack.num_layers(); ++l) {
    pooled.col(l) = stack.layer(l).topRows(stack.valid_frames()).colwise().mean().transpose();
  }
  return pooled;
}

Prediction AverageSegments(std::vector<double> scores) {
  if (scores.empty()) throw ModelError("prediction needs at least one segment");
  Prediction p;
  p.final_mos = std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());
  p.per_segment_scores = std::move(scores);
  return p;
}

void CheckCompatible(const PredictorState& state, const EncoderSpec& spec) {
  if (state.encoder_name != spec.name || state.num_layers != spec.num_layers ||
      state.feature_dim != spec.feature_dim) {
    throw ModelError("predictor was built for encoder '" + state.encoder_name + "' (" +
                     std::to_string(state.num_layers) + " layers, dim " +
                     std::to_string(state.feature_dim) + "), got '" + spec.name + "'");
  }
  if (state.mlp.input_dim != MlpInputDim(state.channel_mode, state.feature_dim) ||
      state.params.size() != state.layout().total) {
    throw ModelError("predictor parameters inconsistent with its channel mode");
  }
}

VectorXd EmbedSegment(const PredictorState& state, const Encoder& encoder, const SegmentInput& seg) {
  CheckCompatible(state, encoder.spec());
  const VectorXd logits = state.logits();
  auto embed = [&](std::span<const float> samples, size_t valid) {
    const LayerStack stack = encoder.EncodeLayers(samples, valid);
    return MaskedMeanPool(LayerWeightedSum(stack, logits), stack.valid_frames());
  };
  const VectorXd system = embed(seg.system, seg.system_valid);
  if (state.channel_mode != ChannelMode::kDual) return system;
  if (seg.user.empty()) throw ModelError("dual-channel predictor needs a user segment");
  const VectorXd user = embed(seg.user, seg.user_valid);
  VectorXd out(user.size() + system.size());
  out << user, system;
  return out;
}

double HeadForward(const PredictorState& state, const VectorXd& input) {
  if (input.size() != state.mlp.input_dim) {
    throw ModelError("head input has " + std::to_string(input.size()) + " values, expected " +
                     std::to_string(state.mlp.input_dim));
  }
  return MlpForward(state, state.layout(), input, nullptr, nullptr)(0);
}

namespace {

struct SegmentedAudio {
  SegmentBatch user;    // empty unless dual
  SegmentBatch system;  // system or mixed
};

SegmentedAudio SegmentForMode(ChannelMode mode, const EncoderSpec& spec, const ConversationAudio& audio) {
  for (const Waveform* w : {&audio.user, &audio.system}) {
    if (w->sample_rate != spec.sample_rate) {
      throw AudioError("encoder '" + spec.name + "' needs " + std::to_string(spec.sample_rate) +
                       " Hz audio, got " + std::to_string(w->sample_rate) + " Hz");
    }
  }
  SegmentedAudio out;
  switch (mode) {
    case ChannelMode::kSingleSystem:
      out.system = SegmentFixed(audio.system, spec.expected_input_seconds);
      break;
    case ChannelMode::kDual: {
      auto [u, s] = AlignChannels(audio.user, audio.system);
      out.user = SegmentFixed(u, spec.expected_input_seconds);
      out.system = SegmentFixed(s, spec.expected_input_seconds);
      break;
    }
    case ChannelMode::kMixedMono: {
      auto [u, s] = AlignChannels(audio.user, audio.system);
      out.system = SegmentFixed(MixChannels(u, s), spec.expected_input_seconds);
      break;
    }
  }
  return out;
}

SegmentInput InputAt(const SegmentedAudio& a, size_t i) {
  SegmentInput in;
  in.system = a.system.segments[i];
  in.system_valid = a.system.valid_lengths[i];
  if (a.user.size() > 0) {
    in.user = a.user.segments[i];
    in.user_valid = a.user.valid_lengths[i];
  }
  return in;
}

}  // namespace

Prediction Forward(const PredictorState& state, const Encoder& encoder, const ConversationAudio& audio,
                   const SegmentHead& head) {
  CheckCompatible(state, encoder.spec());
  const SegmentedAudio seg = SegmentForMode(state.channel_mode, encoder.spec(), audio);
  std::vector<double> scores;
  scores.reserve(seg.system.size());
  for (size_t i = 0; i < seg.system.size(); ++i) {
    scores.push_back(head(EmbedSegment(state, encoder, InputAt(seg, i))));
  }
  return AverageSegments(std::move(scores));
}

Prediction Forward(const PredictorState& state, const Encoder& encoder, const ConversationAudio& audio,
                   bool training_mode, Rng* dropout_rng) {
  if (!training_mode) {
    return Forward(state, encoder, audio, [&](const VectorXd& x) { return HeadForward(state, x); });
  }
  if (dropout_rng == nullptr) throw ModelError("training-mode forward needs a dropout generator");
  const ParamLayout layout = state.layout();
  return Forward(state, encoder, audio, [&](const VectorXd& x) {
    return MlpForward(state, layout, x, dropout_rng, nullptr)(0);
  });
}

Prediction Forward(const PredictorState& state, const Encoder& encoder, const DatasetManifest& manifest,
                   const ConversationSample& sample) {
  return Forward(state, encoder, LoadConversationAudio(manifest, sample));
}

ConversationFeatures ExtractFeatures(const Encoder& encoder, ChannelMode mode, const ConversationAudio& audio) {
  const SegmentedAudio seg = SegmentForMode(mode, encoder.spec(), audio);
  ConversationFeatures out;
  for (size_t i = 0; i < seg.system.size(); ++i) {
    const SegmentInput in = InputAt(seg, i);
    SegmentFeatures f;
    f.system = PoolLayers(encoder.EncodeLayers(in.system, in.system_valid));
    if (mode == ChannelMode::kDual) f.user = PoolLayers(encoder.EncodeLayers(in.user, in.user_valid));
    out.segments.push_back(std::move(f));
  }
  return out;
}

VectorXd EmbedFeatures(const PredictorState& state, const SegmentFeatures& f) {
  const VectorXd w = Softmax(state.logits());
  if (f.system.cols() != w.size() || f.system.rows() != state.feature_dim) {
    throw ModelError("cached features do not match predictor dimensions");
  }
  if (state.channel_mode != ChannelMode::kDual) return f.system * w;
  if (f.user.cols() != w.size() || f.user.rows() != state.feature_dim) {
    throw ModelError("dual-channel predictor needs user features");
  }
  VectorXd out(2 * state.feature_dim);
  out << f.user * w, f.system * w;
  return out;
}

namespace {

// Stacks every segment of `convs` into columns; seg_owner[j] is the batch
// index of column j.
MatrixXd StackInputs(const PredictorState& state, std::span<const ConversationFeatures* const> convs,
                     std::vector<size_t>& seg_owner) {
  size_t total = 0;
  for (const auto* c : convs) {
    if (c->segments.empty()) throw ModelError("conversation '" + c->id + "' has no segments");
    total += c->segments.size();
  }
  MatrixXd x(state.mlp.input_dim, static_cast<Eigen::Index>(total));
  seg_owner.clear();
  seg_owner.reserve(total);
  Eigen::Index col = 0;
  for (size_t i = 0; i < convs.size(); ++i) {
    for (const auto& seg : convs[i]->segments) {
      x.col(col++) = EmbedFeatures(state, seg);
      seg_owner.push_back(i);
    }
  }
  return x;
}

}  // namespace

std::vector<double> PredictFeatures(const PredictorState& state, std::span<const ConversationFeatures> convs) {
  std::vector<const ConversationFeatures*> ptrs;
  for (const auto& c : convs) ptrs.push_back(&c);
  std::vector<size_t> owner;
  const MatrixXd x = StackInputs(state, ptrs, owner);
  const Eigen::RowVectorXd y = MlpForward(state, state.layout(), x, nullptr, nullptr);
  std::vector<double> out;
  out.reserve(convs.size());
  Eigen::Index col = 0;
  for (const auto& c : convs) {
    std::vector<double> scores(y.data() + col, y.data() + col + static_cast<Eigen::Index>(c.segments.size()));
    col += static_cast<Eigen::Index>(c.segments.size());
    out.push_back(AverageSegments(std::move(scores)).final_mos);
  }
  return out;
}

LossAndGradient ComputeLossAndGradient(const PredictorState& state,
                                       std::span<const ConversationFeatures* const> batch, Rng* dropout_rng) {
  if (batch.empty()) throw ModelError("empty batch");
  const ParamLayout layout = state.layout();
  std::vector<size_t> owner;
  const MatrixXd x = StackInputs(state, batch, owner);
  MlpTrace trace;
  const Eigen::RowVectorXd y = MlpForward(state, layout, x, dropout_rng, &trace);

  const double b = static_cast<double>(batch.size());
  LossAndGradient out;
  out.gradient.assign(layout.total, 0.0);
  out.predictions.assign(batch.size(), 0.0);
  for (Eigen::Index j = 0; j < y.size(); ++j) out.predictions[owner[j]] += y(j);
  for (size_t i = 0; i < batch.size(); ++i) {
    out.predictions[i] /= static_cast<double>(batch[i]->segments.size());
    const double err = out.predictions[i] - batch[i]->label;
    out.loss += err * err / b;
  }

  // dL/dy for each segment column.
  Eigen::RowVectorXd dy(y.size());
  for (Eigen::Index j = 0; j < y.size(); ++j) {
    const auto* c = batch[owner[j]];
    dy(j) = 2.0 * (out.predictions[owner[j]] - c->label) / (b * static_cast<double>(c->segments.size()));
  }

  auto grad_w = [&](const ParamLayout::Linear& l) {
    return Eigen::Map<MatrixXd>(out.gradient.data() + l.weight_offset, l.rows, l.cols);
  };
  auto grad_b = [&](const ParamLayout::Linear& l) {
    return Eigen::Map<VectorXd>(out.gradient.data() + l.bias_offset, l.rows);
  };

  const size_t hidden_layers = layout.linears.size() - 1;
  const auto& out_lin = layout.linears.back();
  const MatrixXd& last_hidden = hidden_layers > 0 ? trace.hidden.back() : x;
  grad_w(out_lin) = dy * last_hidden.transpose();
  grad_b(out_lin)(0) = dy.sum();
  MatrixXd delta = WeightMap(state, out_lin).transpose() * dy;  // dL/d(hidden output)
  for (size_t k = hidden_layers; k-- > 0;) {
    const auto& lin = layout.linears[k];
    if (trace.mask[k].size() > 0) delta = delta.cwiseProduct(trace.mask[k]);
    delta = delta.cwiseProduct(trace.pre[k].unaryExpr([](double v) { return GeluGrad(v); }));
    const MatrixXd& input = k > 0 ? trace.hidden[k - 1] : x;
    grad_w(lin) = delta * input.transpose();
    grad_b(lin) = delta.rowwise().sum();
    delta = WeightMap(state, lin).transpose() * delta;
  }

  // delta is now dL/dx. Chain through the softmax layer weighting.
  const VectorXd w = Softmax(state.logits());
  VectorXd d_w = VectorXd::Zero(w.size());
  const int d = state.feature_dim;
  Eigen::Index col = 0;
  for (const auto* c : batch) {
    for (const auto& seg : c->segments) {
      if (state.channel_mode == ChannelMode::kDual) {
        d_w += seg.user.transpose() * delta.col(col).head(d);
        d_w += seg.system.transpose() * delta.col(col).tail(d);
      } else {
        d_w += seg.system.transpose() * delta.col(col);
      }
      ++col;
    }
  }
  Eigen::Map<VectorXd>(out.gradient.data() + layout.logits_offset, layout.num_logits) =
      w.cwiseProduct(d_w.array().matrix() - VectorXd::Constant(w.size(), w.dot(d_w)));
  return out;
}

void SaveState(const PredictorState& state, const std::filesystem::path& dir) {
  if (state.params.size() != state.layout().total) throw CheckpointError("parameter count mismatch");
  std::filesystem::create_directories(dir);
  nlohmann::ordered_json j;
  j["format_version"] = kCheckpointFormatVersion;
  j["encoder_name"] = state.encoder_name;
  j["channel_mode"] = ToString(state.channel_mode);
  j["trained_target"] = ToString(state.trained_target);
  j["num_layers"] = state.num_layers;
  j["feature_dim"] = state.feature_dim;
  j["mlp"] = {{"num_hidden_layers", state.mlp.num_hidden_layers},
              {"hidden_size", state.mlp.hidden_size},
              {"dropout", state.mlp.dropout},
              {"activation", "gelu"},
              {"input_dim", state.mlp.input_dim},
              {"output_dim", 1}};
  j["param_count"] = state.params.size();
  j["params_file"] = kParamsFile;
  j["metadata"] = state.metadata;
  {
    std::ofstream out(dir / kStateFile, std::ios::binary);
    out << j.dump(2) << '\n';
    if (!out) throw CheckpointError("cannot write " + (dir / kStateFile).string());
  }
  std::ofstream blob(dir / kParamsFile, std::ios::binary);
  blob.write(kBlobMagic, sizeof(kBlobMagic));
  const uint64_t count = state.params.size();
  blob.write(reinterpret_cast<const char*>(&count), sizeof(count));
  blob.write(reinterpret_cast<const char*>(state.params.data()),
             static_cast<std::streamsize>(state.params.size() * sizeof(double)));
  if (!blob) throw CheckpointError("cannot write " + (dir / kParamsFile).string());
}

PredictorState LoadState(const std::filesystem::path& dir) {
  const auto state_path = dir / kStateFile;
  if (!std::filesystem::is_regular_file(state_path)) {
    throw CheckpointError("no checkpoint in " + dir.string() + " (missing state.json)");
  }
  nlohmann::ordered_json j;
  try {
    std::ifstream in(state_path);
    j = nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("corrupt " + state_path.string() + ": " + e.what());
  }

  PredictorState s;
  try {
    const int version = j.at("format_version").get<int>();
    if (version != kCheckpointFormatVersion) {
      throw CheckpointError("checkpoint format version " + std::to_string(version) + " unsupported (expected " +
                            std::to_string(kCheckpointFormatVersion) + ")");
    }
    s.encoder_name = j.at("encoder_name").get<std::string>();
    s.channel_mode = ParseChannelMode(j.at("channel_mode").get<std::string>());
    s.trained_target = ParseTarget(j.at("trained_target").get<std::string>());
    s.num_layers = j.at("num_layers").get<int>();
    s.feature_dim = j.at("feature_dim").get<int>();
    const auto& mlp = j.at("mlp");
    s.mlp.num_hidden_layers = mlp.at("num_hidden_layers").get<int>();
    s.mlp.hidden_size = mlp.at("hidden_size").get<int>();
    s.mlp.dropout = mlp.at("dropout").get<double>();
    s.mlp.input_dim = mlp.at("input_dim").get<int>();
    if (j.contains("metadata")) s.metadata = j["metadata"];
  } catch (const nlohmann::ordered_json::exception& e) {
    throw CheckpointError("corrupt " + state_path.string() + ": " + e.what());
  } catch (const UsageError& e) {
    throw CheckpointError("corrupt " + state_path.string() + ": " + e.what());
  }

  if (!IsRegisteredEncoder(s.encoder_name)) {
    throw CheckpointError("checkpoint requires encoder '" + s.encoder_name + "', which is not available");
  }
  if (s.encoder_name == "mock" &&
      (s.num_layers != MockEncoder::kNumLayers || s.feature_dim != MockEncoder::kFeatureDim)) {
    throw CheckpointError("checkpoint dimensions do not match encoder 'mock'");
  }
  if (s.mlp.input_dim != MlpInputDim(s.channel_mode, s.feature_dim)) {
    throw CheckpointError("checkpoint input_dim inconsistent with channel mode");
  }

  const std::vector<char> blob = ReadFile(dir / kParamsFile);
  const size_t expected = s.layout().total;
  if (blob.size() < sizeof(kBlobMagic) + sizeof(uint64_t) ||
      std::memcmp(blob.data(), kBlobMagic, sizeof(kBlobMagic)) != 0) {
    throw CheckpointError("corrupt parameter blob in " + dir.string());
  }
  uint64_t count;
  std::memcpy(&count, blob.data() + sizeof(kBlobMagic), sizeof(count));
  if (count != expected || blob.size() != sizeof(kBlobMagic) + sizeof(count) + count * sizeof(double)) {
    throw CheckpointError("parameter blob in " + dir.string() + " holds " + std::to_string(count) +
                          " values, expected " + std::to_string(expected));
  }
  s.params.resize(count);
  std::memcpy(s.params.data(), blob.data() + sizeof(kBlobMagic) + sizeof(count), count * sizeof(double));
  return s;
}

}  // namespace convnat
