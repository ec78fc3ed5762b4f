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

#ifndef CONVNAT_AUDIO_OPS_H_
#define CONVNAT_AUDIO_OPS_H_

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "convnat/corpus.h"

namespace convnat {

inline constexpr int kCanonicalSampleRate = 16000;
inline constexpr double kSegmentSeconds = 30.0;

struct Waveform {
  std::vector<float> samples;
  int sample_rate = kCanonicalSampleRate;

  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
  bool operator==(const Waveform&) const = default;
};

// Fixed-length segments of one channel. Every segment has the same physical
// length; samples past valid_lengths[i] are zero.
struct SegmentBatch {
  size_t segment_length = 0;
  std::vector<std::vector<float>> segments;
  std::vector<size_t> valid_lengths;

  size_t size() const { return segments.size(); }
};

// Half-open time interval in seconds. Construction rejects start >= end and
// negative starts; bounds against a waveform are checked by Slice.
class UtteranceSpan {
 public:
  UtteranceSpan(double start, double end);
  double start() const { return start_; }
  double end() const { return end_; }
  double length() const { return end_ - start_; }
  bool operator==(const UtteranceSpan&) const = default;

 private:
  double start_;
  double end_;
};

struct VadConfig {
  double frame_seconds = 0.02;
  double threshold_dbfs = -40.0;
  double min_speech_seconds = 0.2;
  double min_gap_seconds = 0.3;
};

// Throws AudioError on non-finite samples or a non-positive rate.
void CheckWaveform(const Waveform& w);

SegmentBatch SegmentFixed(const Waveform& w, double segment_seconds = kSegmentSeconds);

// Zero-pads the shorter channel at the end.
std::pair<Waveform, Waveform> AlignChannels(const Waveform& user, const Waveform& system);

// 0.5 * user + 0.5 * system. Inputs must already be aligned.
Waveform MixChannels(const Waveform& user, const Waveform& system);

// Frame-energy voice activity detection. Frames are non-overlapping; a frame
// is speech when its RMS level reaches threshold_dbfs. Runs separated by less
// than min_gap are merged, then runs shorter than min_speech are dropped.
std::vector<UtteranceSpan> DetectUtterances(const Waveform& w, const VadConfig& cfg = {});

// Sample index for a time in seconds (round half up).
size_t TimeToIndex(double seconds, int sample_rate);

Waveform Slice(const Waveform& w, const UtteranceSpan& span);

double Rms(std::span<const float> x);

// WAV I/O. Reads 16-bit PCM and 32-bit float, any channel count; returns one
// waveform per channel.
std::vector<Waveform> ReadWav(const std::filesystem::path& path);

enum class WavEncoding { kPcm16, kFloat32 };
void WriteWav(const std::filesystem::path& path, const std::vector<Waveform>& channels,
              WavEncoding encoding = WavEncoding::kPcm16);

struct ConversationAudio {
  Waveform user;
  Waveform system;
};

// Loads both channels of `sample`, checks the sample rate against the
// manifest entry and the canonical rate, and aligns channel lengths.
ConversationAudio LoadConversationAudio(const DatasetManifest& m, const ConversationSample& sample);

enum class Channel { kUser, kSystem };
std::string_view ToString(Channel c);

// Utterance spans keyed by sample id and channel, as read from a JSONL
// sidecar of {id, channel, start_s, end_s}. Spans are returned sorted.
using SpanTable = std::map<std::string, std::map<Channel, std::vector<UtteranceSpan>>>;
SpanTable LoadSpanSidecar(const std::filesystem::path& path);
void WriteSpanSidecar(const SpanTable& spans, const std::filesystem::path& path);

}  // namespace convnat

#endif  // CONVNAT_AUDIO_OPS_H_
