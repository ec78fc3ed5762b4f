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

#ifndef CONVNAT_CORPUS_H_
#define CONVNAT_CORPUS_H_

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace convnat {

enum class Target { kConversation, kSystem };
enum class Origin { kReal, kSynthetic };
enum class Split { kTrain, kDev, kEval };

std::string_view ToString(Target t);
std::string_view ToString(Origin o);
std::string_view ToString(Split s);
// Throw UsageError on unknown names.
Target ParseTarget(std::string_view s);
Split ParseSplit(std::string_view s);

inline constexpr double kMinMos = 1.0;
inline constexpr double kMaxMos = 5.0;
inline constexpr size_t kMinRaters = 5;
inline constexpr double kMosMeanTolerance = 1e-9;

// Human naturalness rating for one target. rater_scores is empty when the
// individual ratings were not distributed with the corpus; mos is then
// authoritative.
struct MosLabel {
  std::vector<int> rater_scores;
  double mos = 0.0;

  bool operator==(const MosLabel&) const = default;
};

// One two-speaker recording. Audio is either two mono files (user, system)
// or one stereo file with channel 0 = user and channel 1 = system. Paths are
// stored as written in the manifest and resolved against the manifest's
// directory.
struct ConversationSample {
  std::string id;
  std::optional<std::string> user_audio;
  std::optional<std::string> system_audio;
  std::optional<std::string> stereo_audio;
  int sample_rate = 0;
  double duration_s = 0.0;
  std::optional<MosLabel> conversation_label;
  std::optional<MosLabel> system_label;
  Origin origin = Origin::kReal;
  std::optional<std::string> reference_id;

  const std::optional<MosLabel>& label(Target t) const {
    return t == Target::kConversation ? conversation_label : system_label;
  }
  std::optional<MosLabel>& label(Target t) {
    return t == Target::kConversation ? conversation_label : system_label;
  }

  bool operator==(const ConversationSample&) const = default;
};

struct DatasetManifest {
  std::string name;
  Split split = Split::kEval;
  std::vector<ConversationSample> samples;
  std::map<Target, size_t> target_coverage;
  // Directory that relative audio paths are resolved against.
  std::filesystem::path base_dir;

  bool operator==(const DatasetManifest&) const = default;
};

// Returns every violated invariant of `sample` as a human-readable line. An
// empty result means the sample is valid. When `audio_root` is set the audio
// references must also exist on disk.
std::vector<std::string> ValidateSample(
    const ConversationSample& sample,
    const std::optional<std::filesystem::path>& audio_root = std::nullopt);

std::map<Target, size_t> CountTargets(const std::vector<ConversationSample>& samples);

// Resolves a manifest-relative audio reference.
std::filesystem::path ResolveAudioPath(const DatasetManifest& m, const std::string& ref);

// JSONL schema (one object per line).
ConversationSample SampleFromJson(const nlohmann::json& j);
nlohmann::ordered_json SampleToJson(const ConversationSample& s);

struct ManifestIssue {
  size_t line = 0;  // 1-based, 0 for manifest-level issues
  std::string sample_id;
  std::string message;
};

struct ManifestCheck {
  DatasetManifest manifest;  // every sample that parsed
  std::vector<ManifestIssue> issues;
};

struct LoadOptions {
  // When unset, inferred from the file stem ("train", "dev", otherwise eval).
  std::optional<Split> split;
  bool require_audio = true;
};

// Parses and validates every line without stopping at the first problem.
ManifestCheck CheckManifest(const std::filesystem::path& path,
                            const LoadOptions& options = {});

// Throws ManifestError on the first reported issue (with line number and
// sample id). target_coverage is always recomputed from the samples.
DatasetManifest LoadManifest(const std::filesystem::path& path,
                             const LoadOptions& options = {});

void WriteManifest(const DatasetManifest& m, const std::filesystem::path& path);

// Samples carrying the `target` label, in manifest order.
DatasetManifest FilterByTarget(const DatasetManifest& m, Target target);

const ConversationSample* FindSample(const DatasetManifest& m, std::string_view id);

}  // namespace convnat

#endif  // CONVNAT_CORPUS_H_
