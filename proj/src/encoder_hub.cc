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

#include "convnat/encoder_hub.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <unistd.h>

#include "convnat/errors.h"
#include "convnat/random.h"
#include "json.hpp"

namespace convnat {

int EncoderSpec::frames_per_segment() const {
  return static_cast<int>(std::lround(expected_input_seconds * frames_per_second));
}

size_t EncoderSpec::segment_samples() const {
  return static_cast<size_t>(std::llround(expected_input_seconds * sample_rate));
}

int EncoderSpec::ValidFrames(size_t valid_length) const {
  const auto frames = static_cast<long long>(std::floor(static_cast<double>(valid_length) / hop_samples()));
  return static_cast<int>(std::clamp<long long>(frames, 1, frames_per_segment()));
}

LayerStack::LayerStack(int num_layers, int num_frames, int feature_dim, int valid_frames)
    : num_layers_(num_layers),
      num_frames_(num_frames),
      feature_dim_(feature_dim),
      valid_frames_(valid_frames),
      values_(static_cast<size_t>(num_layers) * num_frames * feature_dim, 0.0) {
  if (num_layers <= 0 || num_frames <= 0 || feature_dim <= 0) {
    throw EncoderError("layer stack dimensions must be positive");
  }
  if (valid_frames <= 0 || valid_frames > num_frames) {
    throw EncoderError("valid_frames must lie in [1, num_frames]");
  }
}

LayerStack::LayerMap LayerStack::layer(int l) const {
  return LayerMap(values_.data() + Index(l, 0, 0), num_frames_, feature_dim_);
}

LayerStack Encoder::EncodeLayers(std::span<const float> segment, size_t valid_length) const {
  const EncoderSpec& s = spec();
  if (segment.size() != s.segment_samples()) {
    throw EncoderError("encoder '" + s.name + "' expects " + std::to_string(s.segment_samples()) +
                       " samples per segment, got " + std::to_string(segment.size()));
  }
  if (valid_length == 0 || valid_length > segment.size()) {
    throw EncoderError("valid_length must lie in [1, segment length]");
  }
  LayerStack out(s.num_layers, s.frames_per_segment(), s.feature_dim, s.ValidFrames(valid_length));
  Encode(segment, out);
  for (double v : out.values()) {
    if (!std::isfinite(v)) throw EncoderError("encoder '" + s.name + "' produced non-finite features");
  }
  return out;
}

MockEncoder::MockEncoder() {
  spec_.name = "mock";
  spec_.num_layers = kNumLayers;
  spec_.feature_dim = kFeatureDim;
  spec_.frames_per_second = kFramesPerSecond;
  Rng rng(0x6d6f636bULL);
  for (int l = 0; l < kNumLayers; ++l) {
    Eigen::MatrixXd w(kFeatureDim, kFeatureDim);
    Eigen::VectorXd b(kFeatureDim);
    for (int i = 0; i < kFeatureDim; ++i) {
      for (int j = 0; j < kFeatureDim; ++j) w(i, j) = kWeightGain * rng.Uniform(-1.0, 1.0);
    }
    for (int i = 0; i < kFeatureDim; ++i) b(i) = rng.Uniform(-0.1, 0.1);
    weights_.push_back(std::move(w));
    biases_.push_back(std::move(b));
  }
}

void MockEncoder::Encode(std::span<const float> segment, LayerStack& out) const {
  const double hop = spec_.hop_samples();
  Eigen::VectorXd stats = Eigen::VectorXd::Zero(kFeatureDim);
  for (int t = 0; t < out.num_frames(); ++t) {
    const auto begin = static_cast<size_t>(std::floor(t * hop));
    const auto end = std::min(segment.size(), static_cast<size_t>(std::floor((t + 1) * hop)));
    double abs_sum = 0.0, sq_sum = 0.0;
    size_t crossings = 0;
    for (size_t i = begin; i < end; ++i) {
      const double x = segment[i];
      abs_sum += std::abs(x);
      sq_sum += x * x;
      if (i > begin && (segment[i - 1] >= 0.0f) != (segment[i] >= 0.0f)) ++crossings;
    }
    const double n = static_cast<double>(end - begin);
    stats(0) = abs_sum / n;
    stats(1) = std::sqrt(sq_sum / n);
    stats(2) = n > 1 ? static_cast<double>(crossings) / (n - 1) : 0.0;
    for (int l = 0; l < kNumLayers; ++l) {
      const Eigen::VectorXd y = weights_[l] * stats + biases_[l];
      for (int d = 0; d < kFeatureDim; ++d) out.at(l, t, d) = y(d);
    }
  }
}

namespace {

nlohmann::json ReadJsonFile(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw EncoderError("cannot open " + p.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw EncoderError("malformed " + p.string() + ": " + e.what());
  }
}

int FirstInt(const nlohmann::json& j, std::initializer_list<const char*> keys, const std::string& what) {
  for (const char* k : keys) {
    auto it = j.find(k);
    if (it != j.end() && it->is_number_integer()) return it->get<int>();
  }
  throw EncoderError("checkpoint config lacks " + what);
}

std::string ShellQuote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

const std::vector<std::string>& AdapterNames() {
  static const std::vector<std::string> names{"whisper-large-v3", "wavlm-large", "aes"};
  return names;
}

}  // namespace

ExternalEncoder::ExternalEncoder(std::string name, const std::filesystem::path& dir) {
  const auto config_path = dir / "config.json";
  const auto adapter_path = dir / "adapter.json";
  if (!std::filesystem::is_regular_file(config_path) || !std::filesystem::is_regular_file(adapter_path)) {
    throw EncoderError("weights for encoder '" + name + "' unavailable: expected " +
                       config_path.string() + " and " + adapter_path.string());
  }
  const auto config = ReadJsonFile(config_path);
  const auto adapter = ReadJsonFile(adapter_path);
  spec_.name = std::move(name);
  spec_.feature_dim = FirstInt(config, {"hidden_size", "d_model"}, "hidden_size/d_model");
  // Transformer block outputs plus the embedding output, as exposed by
  // output_hidden_states.
  spec_.num_layers = FirstInt(config, {"num_hidden_layers", "encoder_layers"},
                              "num_hidden_layers/encoder_layers") + 1;
  spec_.frames_per_second = adapter.value("frames_per_second", 50.0);
  if (!adapter.contains("command") || !adapter["command"].is_string()) {
    throw EncoderError(adapter_path.string() + " lacks a 'command' string");
  }
  command_ = adapter["command"].get<std::string>();
  if (spec_.feature_dim <= 0 || spec_.num_layers <= 0 || !(spec_.frames_per_second > 0.0)) {
    throw EncoderError("encoder '" + spec_.name + "' has non-positive dimensions");
  }
}

void ExternalEncoder::Encode(std::span<const float> segment, LayerStack& out) const {
  static std::atomic<uint64_t> counter{0};
  const auto tmp = std::filesystem::temp_directory_path();
  const std::string stem = "convnat-" + std::to_string(::getpid()) + "-" + std::to_string(counter++);
  const auto in_path = tmp / (stem + ".in.f32");
  const auto out_path = tmp / (stem + ".out.f32");
  {
    std::ofstream f(in_path, std::ios::binary);
    f.write(reinterpret_cast<const char*>(segment.data()),
            static_cast<std::streamsize>(segment.size() * sizeof(float)));
    if (!f) throw EncoderError("cannot write " + in_path.string());
  }
  const std::string cmd = command_ + " " + ShellQuote(in_path.string()) + " " + ShellQuote(out_path.string());
  const int rc = std::system(cmd.c_str());
  std::filesystem::remove(in_path);
  if (rc != 0) {
    std::filesystem::remove(out_path);
    throw EncoderError("encoder '" + spec_.name + "' command failed with status " + std::to_string(rc));
  }
  std::ifstream f(out_path, std::ios::binary);
  std::vector<float> buf(out.values().size());
  f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
  const bool complete = static_cast<size_t>(f.gcount()) == buf.size() * sizeof(float);
  f.close();
  std::filesystem::remove(out_path);
  if (!complete) {
    throw EncoderError("encoder '" + spec_.name + "' produced fewer than " +
                       std::to_string(buf.size()) + " features");
  }
  std::copy(buf.begin(), buf.end(), out.values().begin());
}

std::vector<std::string> RegisteredEncoders() {
  std::vector<std::string> names{"mock"};
  names.insert(names.end(), AdapterNames().begin(), AdapterNames().end());
  return names;
}

bool IsRegisteredEncoder(std::string_view name) {
  const auto names = RegisteredEncoders();
  return std::find(names.begin(), names.end(), name) != names.end();
}

std::shared_ptr<const Encoder> GetEncoder(std::string_view name) {
  if (name == "mock") {
    static const auto mock = std::make_shared<const MockEncoder>();
    return mock;
  }
  if (!IsRegisteredEncoder(name)) throw EncoderError("unknown encoder '" + std::string(name) + "'");
  const char* cache = std::getenv(kEncoderCacheEnv);
  if (cache == nullptr || *cache == '\0') {
    throw EncoderError("weights for encoder '" + std::string(name) + "' unavailable: set " +
                       kEncoderCacheEnv);
  }
  return std::make_shared<const ExternalEncoder>(std::string(name),
                                                 std::filesystem::path(cache) / std::string(name));
}

}  // namespace convnat
