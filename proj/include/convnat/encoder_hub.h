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

#ifndef CONVNAT_ENCODER_HUB_H_
#define CONVNAT_ENCODER_HUB_H_

#include <cstddef>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace convnat {

struct EncoderSpec {
  std::string name;
  int num_layers = 0;   // exposed hidden layers
  int feature_dim = 0;
  double frames_per_second = 0.0;
  double expected_input_seconds = 30.0;
  int sample_rate = 16000;

  int frames_per_segment() const;
  size_t segment_samples() const;
  // Samples per output frame.
  double hop_samples() const { return sample_rate / frames_per_second; }
  // floor(valid_length / hop), clamped to [1, frames_per_segment].
  int ValidFrames(size_t valid_length) const;
};

// All hidden layers of one encoded segment, laid out [layer][frame][dim].
class LayerStack {
 public:
  LayerStack(int num_layers, int num_frames, int feature_dim, int valid_frames);

  int num_layers() const { return num_layers_; }
  int num_frames() const { return num_frames_; }
  int feature_dim() const { return feature_dim_; }
  int valid_frames() const { return valid_frames_; }

  double& at(int layer, int frame, int dim) { return values_[Index(layer, frame, dim)]; }
  double at(int layer, int frame, int dim) const { return values_[Index(layer, frame, dim)]; }

  // Row-major [num_frames x feature_dim] view of one layer.
  using LayerMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
  LayerMap layer(int l) const;

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  bool operator==(const LayerStack&) const = default;

 private:
  size_t Index(int l, int t, int d) const {
    return (static_cast<size_t>(l) * num_frames_ + t) * feature_dim_ + d;
  }

  int num_layers_;
  int num_frames_;
  int feature_dim_;
  int valid_frames_;
  std::vector<double> values_;
};

// Frozen, inference-only encoder. Implementations must be safe to call
// concurrently on one instance.
class Encoder {
 public:
  virtual ~Encoder() = default;
  virtual const EncoderSpec& spec() const = 0;

  // `segment` must hold exactly spec().segment_samples() samples at
  // spec().sample_rate; samples past valid_length are padding.
  LayerStack EncodeLayers(std::span<const float> segment, size_t valid_length) const;

 protected:
  virtual void Encode(std::span<const float> segment, LayerStack& out) const = 0;
};

// Hand-computable stand-in for a pre-trained encoder. Each frame of `hop`
// samples yields [mean |x|, rms, zero-crossing rate, 0, ...] (length
// feature_dim); layer l applies its own fixed affine map to that vector.
class MockEncoder final : public Encoder {
 public:
  static constexpr int kNumLayers = 4;
  static constexpr int kFeatureDim = 8;
  static constexpr double kFramesPerSecond = 50.0;
  static constexpr int kNumStats = 3;
  // Frame statistics are ~0.1 in magnitude; the gain puts layer outputs on
  // the O(1) scale of real encoder hidden states.
  static constexpr double kWeightGain = 20.0;

  MockEncoder();
  const EncoderSpec& spec() const override { return spec_; }

  // [feature_dim x feature_dim] weight and [feature_dim] bias for `layer`.
  const Eigen::MatrixXd& weight(int layer) const { return weights_[layer]; }
  const Eigen::VectorXd& bias(int layer) const { return biases_[layer]; }

 protected:
  void Encode(std::span<const float> segment, LayerStack& out) const override;

 private:
  EncoderSpec spec_;
  std::vector<Eigen::MatrixXd> weights_;
  std::vector<Eigen::VectorXd> biases_;
};

// Adapter for externally hosted checkpoints. Looks in
// $CONVNAT_ENCODER_CACHE/<name>/ for the checkpoint's config.json (dims are
// read from it: hidden_size|d_model and num_hidden_layers|encoder_layers,
// plus one for the embedding output) and adapter.json naming an extraction
// command. The command is run as `<command> <in.f32> <out.f32>`; the input
// is the raw little-endian float32 segment and the output must hold
// num_layers x frames x feature_dim float32 values.
class ExternalEncoder final : public Encoder {
 public:
  ExternalEncoder(std::string name, const std::filesystem::path& dir);
  const EncoderSpec& spec() const override { return spec_; }
  const std::string& command() const { return command_; }

 protected:
  void Encode(std::span<const float> segment, LayerStack& out) const override;

 private:
  EncoderSpec spec_;
  std::string command_;
};

inline constexpr const char* kEncoderCacheEnv = "CONVNAT_ENCODER_CACHE";

// Names accepted by GetEncoder: "mock" plus the external adapters.
std::vector<std::string> RegisteredEncoders();
bool IsRegisteredEncoder(std::string_view name);

// Throws EncoderError for unknown names and for adapters whose weights are
// not present in the cache directory.
std::shared_ptr<const Encoder> GetEncoder(std::string_view name);

}  // namespace convnat

#endif  // CONVNAT_ENCODER_HUB_H_
