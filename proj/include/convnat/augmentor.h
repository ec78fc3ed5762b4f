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

#ifndef CONVNAT_AUGMENTOR_H_
#define CONVNAT_AUGMENTOR_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "convnat/audio_ops.h"
#include "convnat/corpus.h"

namespace convnat {

// A dialogue script: turns prefixed "U:" (user) or "S:" (system).
struct Transcript {
  std::string name;
  std::vector<std::pair<Channel, std::string>> turns;
};

// Throws AugmentError on lines without a U:/S: prefix or a script without
// turns. Blank lines are skipped.
Transcript ParseTranscript(std::string_view text, std::string name);
Transcript LoadTranscript(const std::filesystem::path& path);
// Every regular file in `dir`, sorted by file name.
std::vector<Transcript> LoadTranscripts(const std::filesystem::path& dir);

// Produces two-channel audio conditioned on a reference conversation and a
// transcript. Output must be at the reference's sample rate and depend only
// on (reference, transcript, seed).
class Synthesizer {
 public:
  virtual ~Synthesizer() = default;
  virtual std::string name() const = 0;
  virtual ConversationAudio Synthesize(const ConversationSample& reference, const ConversationAudio& reference_audio,
                                       const Transcript& transcript, uint64_t seed) const = 0;
};

// Desk-scale stand-in for a zero-shot TTS: perturbs the reference audio with
// a seeded speed factor, gain and low-level noise. Transcript content is not
// used.
class PerturbationSynthesizer final : public Synthesizer {
 public:
  struct Params {
    double min_speed = 0.9;
    double max_speed = 1.1;
    double max_gain_db = 3.0;
    double noise_rms = 1e-3;
  };

  PerturbationSynthesizer() = default;
  explicit PerturbationSynthesizer(Params p) : params_(p) {}
  std::string name() const override { return "perturbation"; }
  ConversationAudio Synthesize(const ConversationSample& reference, const ConversationAudio& reference_audio,
                               const Transcript& transcript, uint64_t seed) const override;

 private:
  Params params_;
};

struct SyntheticSample {
  ConversationSample sample;  // audio references not yet assigned
  ConversationAudio audio;
};

// The output inherits every label of `reference` verbatim and records
// reference_id. Throws AugmentError if the reference is not real or lacks the
// `target` label.
SyntheticSample SynthesizeSample(const Synthesizer& synth, const DatasetManifest& source,
                                 const ConversationSample& reference, const Transcript& transcript, uint64_t seed,
                                 std::string id, Target target = Target::kConversation);

struct AugmentPlan {
  DatasetManifest source;
  std::vector<Transcript> transcripts;
  double target_hours = 0.0;
  uint64_t seed = 0;
  Target target = Target::kConversation;
};

// Cycles through seeded shuffles of (reference, transcript) pairs until the
// cumulative duration reaches target_hours. Writes one stereo WAV per sample
// under out_dir/audio/ and the manifest to out_dir/augmented.jsonl.
DatasetManifest BuildAugmentedManifest(const AugmentPlan& plan, const Synthesizer& synth,
                                       const std::filesystem::path& out_dir);

}  // namespace convnat

#endif  // CONVNAT_AUGMENTOR_H_
