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

#ifndef CONVNAT_TOOLS_FIXTURES_H_
#define CONVNAT_TOOLS_FIXTURES_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "convnat/audio_ops.h"
#include "convnat/corpus.h"

namespace convnat::fixtures {

// Synthetic two-speaker conversations: alternating tone-burst turns on the
// user and system channels separated by near-silent gaps. Each channel has a
// per-conversation amplitude; both labels are
//   clamp(1 + 4 * normalized system-channel RMS, 1, 5)
// where the RMS is min-max normalized over the generated set.
struct Options {
  std::string name = "train";
  size_t num_conversations = 32;
  double min_duration_s = 8.0;
  double max_duration_s = 40.0;
  // When non-empty, overrides num_conversations and the duration range.
  std::vector<double> durations_s;
  uint64_t seed = 7;
  // Every fourth conversation (index % 4 == 3) omits the system label.
  bool partial_system_labels = true;
  // Odd-indexed conversations are stored as one stereo file.
  bool mix_storage = true;
};

struct FixtureSet {
  DatasetManifest manifest;
  SpanTable spans;  // ground-truth turn boundaries
  std::filesystem::path manifest_path;
  std::filesystem::path spans_path;
};

// Writes <dir>/<name>.jsonl, <dir>/<name>_spans.jsonl and WAV files under
// <dir>/<name>_audio/.
FixtureSet WriteFixtureSet(const std::filesystem::path& dir, const Options& options);

// A single-channel test tone: amplitude * sin(2 pi f t).
Waveform Tone(double seconds, double amplitude, double frequency, int sample_rate = kCanonicalSampleRate);

}  // namespace convnat::fixtures

#endif  // CONVNAT_TOOLS_FIXTURES_H_
