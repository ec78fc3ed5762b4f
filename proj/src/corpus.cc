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

#include "convnat/corpus.h"

#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "convnat/errors.h"

namespace convnat {
namespace {

using nlohmann::json;

std::optional<std::string> OptString(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw ManifestError(std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

std::optional<MosLabel> ParseLabel(const json& j, const char* mos_key, const char* raters_key) {
  auto mos_it = j.find(mos_key);
  auto raters_it = j.find(raters_key);
  const bool has_mos = mos_it != j.end() && !mos_it->is_null();
  const bool has_raters = raters_it != j.end() && !raters_it->is_null();
  if (!has_mos && !has_raters) return std::nullopt;
  MosLabel label;
  if (has_raters) {
    if (!raters_it->is_array()) {
      throw ManifestError(std::string("field '") + raters_key + "' must be an array");
    }
    for (const auto& r : *raters_it) {
      if (!r.is_number_integer()) {
        throw ManifestError(std::string("field '") + raters_key + "' must hold integers");
      }
      label.rater_scores.push_back(r.get<int>());
    }
  }
  if (has_mos) {
    if (!mos_it->is_number()) throw ManifestError(std::string("field '") + mos_key + "' must be a number");
    label.mos = mos_it->get<double>();
  } else if (!label.rater_scores.empty()) {
    label.mos = std::accumulate(label.rater_scores.begin(), label.rater_scores.end(), 0.0) /
                static_cast<double>(label.rater_scores.size());
  }
  return label;
}

void CheckLabel(const MosLabel& label, std::string_view target, std::vector<std::string>& out) {
  const std::string prefix = std::string(target) + " label: ";
  if (!std::isfinite(label.mos) || label.mos < kMinMos || label.mos > kMaxMos) {
    std::ostringstream os;
    os << prefix << "mos " << label.mos << " outside [1, 5]";
    out.push_back(os.str());
  }
  if (label.rater_scores.empty()) return;
  if (label.rater_scores.size() < kMinRaters) {
    out.push_back(prefix + "fewer than 5 rater scores");
  }
  for (int r : label.rater_scores) {
    if (r < 1 || r > 5) {
      out.push_back(prefix + "rater score " + std::to_string(r) + " outside [1, 5]");
      break;
    }
  }
  const double mean = std::accumulate(label.rater_scores.begin(), label.rater_scores.end(), 0.0) /
                      static_cast<double>(label.rater_scores.size());
  if (std::abs(mean - label.mos) > kMosMeanTolerance) {
    out.push_back(prefix + "mos != mean(rater_scores)");
  }
}

Split InferSplit(const std::filesystem::path& path) {
  const std::string stem = path.stem().string();
  if (stem.find("train") != std::string::npos) return Split::kTrain;
  if (stem.find("dev") != std::string::npos) return Split::kDev;
  return Split::kEval;
}

}  // namespace

std::string_view ToString(Target t) {
  return t == Target::kConversation ? "conversation" : "system";
}

std::string_view ToString(Origin o) { return o == Origin::kReal ? "real" : "synthetic"; }

std::string_view ToString(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kDev: return "dev";
    case Split::kEval: return "eval";
  }
  return "eval";
}

Target ParseTarget(std::string_view s) {
  if (s == "conversation") return Target::kConversation;
  if (s == "system") return Target::kSystem;
  throw UsageError("unknown target '" + std::string(s) + "' (expected conversation|system)");
}

Split ParseSplit(std::string_view s) {
  if (s == "train") return Split::kTrain;
  if (s == "dev") return Split::kDev;
  if (s == "eval") return Split::kEval;
  throw UsageError("unknown split '" + std::string(s) + "'");
}

std::vector<std::string> ValidateSample(const ConversationSample& s,
                                        const std::optional<std::filesystem::path>& audio_root) {
  std::vector<std::string> out;
  if (s.id.empty()) out.push_back("empty id");
  if (s.sample_rate <= 0) out.push_back("sample_rate must be positive");
  if (!(s.duration_s > 0.0) || !std::isfinite(s.duration_s)) out.push_back("duration_s must be positive");
  if (!s.conversation_label && !s.system_label) out.push_back("no naturalness label present");
  if (s.conversation_label) CheckLabel(*s.conversation_label, "conversation", out);
  if (s.system_label) CheckLabel(*s.system_label, "system", out);

  if (s.stereo_audio) {
    if (s.user_audio || s.system_audio) {
      out.push_back("stereo_audio given together with user_audio/system_audio");
    }
  } else {
    if (!s.user_audio) out.push_back("missing user_audio");
    if (!s.system_audio) out.push_back("missing system_audio");
  }

  if (s.origin == Origin::kSynthetic && (!s.reference_id || s.reference_id->empty())) {
    out.push_back("synthetic sample without reference_id");
  }
  if (s.origin == Origin::kReal && s.reference_id) {
    out.push_back("real sample must not carry reference_id");
  }

  if (audio_root) {
    for (const auto* ref : {&s.stereo_audio, &s.user_audio, &s.system_audio}) {
      if (!*ref) continue;
      std::filesystem::path p(**ref);
      if (p.is_relative()) p = *audio_root / p;
      if (!std::filesystem::is_regular_file(p)) out.push_back("audio file not found: " + p.string());
    }
  }
  return out;
}

std::map<Target, size_t> CountTargets(const std::vector<ConversationSample>& samples) {
  std::map<Target, size_t> counts{{Target::kConversation, 0}, {Target::kSystem, 0}};
  for (const auto& s : samples) {
    if (s.conversation_label) ++counts[Target::kConversation];
    if (s.system_label) ++counts[Target::kSystem];
  }
  return counts;
}

std::filesystem::path ResolveAudioPath(const DatasetManifest& m, const std::string& ref) {
  std::filesystem::path p(ref);
  return p.is_relative() ? m.base_dir / p : p;
}

ConversationSample SampleFromJson(const json& j) {
  if (!j.is_object()) throw ManifestError("line is not a JSON object");
  ConversationSample s;
  auto id = OptString(j, "id");
  if (!id) throw ManifestError("missing field 'id'");
  s.id = *id;
  s.user_audio = OptString(j, "user_audio");
  s.system_audio = OptString(j, "system_audio");
  s.stereo_audio = OptString(j, "stereo_audio");

  auto sr = j.find("sample_rate");
  if (sr == j.end() || !sr->is_number_integer()) throw ManifestError("missing or non-integer 'sample_rate'");
  s.sample_rate = sr->get<int>();
  auto dur = j.find("duration_s");
  if (dur == j.end() || !dur->is_number()) throw ManifestError("missing or non-numeric 'duration_s'");
  s.duration_s = dur->get<double>();

  s.conversation_label = ParseLabel(j, "conversation_mos", "rater_scores_conversation");
  s.system_label = ParseLabel(j, "system_mos", "rater_scores_system");

  auto origin = OptString(j, "origin").value_or("real");
  if (origin == "real") {
    s.origin = Origin::kReal;
  } else if (origin == "synthetic") {
    s.origin = Origin::kSynthetic;
  } else {
    throw ManifestError("unknown origin '" + origin + "'");
  }
  s.reference_id = OptString(j, "reference_id");
  return s;
}

nlohmann::ordered_json SampleToJson(const ConversationSample& s) {
  nlohmann::ordered_json j;
  j["id"] = s.id;
  if (s.stereo_audio) {
    j["stereo_audio"] = *s.stereo_audio;
  } else {
    if (s.user_audio) j["user_audio"] = *s.user_audio;
    if (s.system_audio) j["system_audio"] = *s.system_audio;
  }
  j["sample_rate"] = s.sample_rate;
  j["duration_s"] = s.duration_s;
  if (s.conversation_label) {
    j["conversation_mos"] = s.conversation_label->mos;
    if (!s.conversation_label->rater_scores.empty()) {
      j["rater_scores_conversation"] = s.conversation_label->rater_scores;
    }
  }
  if (s.system_label) {
    j["system_mos"] = s.system_label->mos;
    if (!s.system_label->rater_scores.empty()) j["rater_scores_system"] = s.system_label->rater_scores;
  }
  j["origin"] = ToString(s.origin);
  if (s.reference_id) j["reference_id"] = *s.reference_id;
  return j;
}

ManifestCheck CheckManifest(const std::filesystem::path& path, const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw ManifestError("cannot open manifest: " + path.string());

  ManifestCheck check;
  DatasetManifest& m = check.manifest;
  m.name = path.stem().string();
  m.split = options.split.value_or(InferSplit(path));
  m.base_dir = path.parent_path();

  std::optional<std::filesystem::path> audio_root;
  if (options.require_audio) audio_root = m.base_dir;

  std::set<std::string> seen;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ConversationSample s;
    try {
      s = SampleFromJson(json::parse(line));
    } catch (const json::exception& e) {
      check.issues.push_back({line_no, "", std::string("malformed JSON: ") + e.what()});
      continue;
    } catch (const ManifestError& e) {
      check.issues.push_back({line_no, "", e.what()});
      continue;
    }
    for (auto& msg : ValidateSample(s, audio_root)) {
      check.issues.push_back({line_no, s.id, std::move(msg)});
    }
    if (!seen.insert(s.id).second) {
      check.issues.push_back({line_no, s.id, "duplicate sample id"});
      continue;
    }
    m.samples.push_back(std::move(s));
  }
  if (line_no == 0 || (m.samples.empty() && check.issues.empty())) {
    check.issues.push_back({0, "", "empty manifest"});
  }
  m.target_coverage = CountTargets(m.samples);
  return check;
}

DatasetManifest LoadManifest(const std::filesystem::path& path, const LoadOptions& options) {
  if (!std::filesystem::exists(path)) throw ManifestError("manifest not found: " + path.string());
  ManifestCheck check = CheckManifest(path, options);
  if (!check.issues.empty()) {
    const auto& issue = check.issues.front();
    std::ostringstream os;
    os << path.string();
    if (issue.line > 0) os << ":" << issue.line;
    os << ": ";
    if (!issue.sample_id.empty()) os << "sample '" << issue.sample_id << "': ";
    os << issue.message;
    throw ManifestError(os.str());
  }
  return std::move(check.manifest);
}

void WriteManifest(const DatasetManifest& m, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ManifestError("cannot write manifest: " + path.string());
  for (const auto& s : m.samples) out << SampleToJson(s).dump() << '\n';
  if (!out) throw ManifestError("write failed: " + path.string());
}

DatasetManifest FilterByTarget(const DatasetManifest& m, Target target) {
  DatasetManifest out;
  out.name = m.name;
  out.split = m.split;
  out.base_dir = m.base_dir;
  for (const auto& s : m.samples) {
    if (s.label(target)) out.samples.push_back(s);
  }
  out.target_coverage = CountTargets(out.samples);
  return out;
}

const ConversationSample* FindSample(const DatasetManifest& m, std::string_view id) {
  for (const auto& s : m.samples) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

}  // namespace convnat
