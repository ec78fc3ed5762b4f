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

#include "convnat/augmentor.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "convnat/errors.h"
#include "convnat/random.h"

namespace convnat {
namespace {

std::string Trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// Linear-interpolation time stretch: output sample i reads input position
// i * speed.
std::vector<float> ChangeSpeed(const std::vector<float>& in, double speed) {
  const auto n_out = static_cast<size_t>(std::llround(static_cast<double>(in.size()) / speed));
  std::vector<float> out(std::max<size_t>(n_out, 1));
  for (size_t i = 0; i < out.size(); ++i) {
    const double pos = static_cast<double>(i) * speed;
    const auto j = static_cast<size_t>(pos);
    if (j + 1 >= in.size()) {
      out[i] = in.back();
      continue;
    }
    const double frac = pos - static_cast<double>(j);
    out[i] = static_cast<float>((1.0 - frac) * in[j] + frac * in[j + 1]);
  }
  return out;
}

}  // namespace

Transcript ParseTranscript(std::string_view text, std::string name) {
  Transcript t;
  t.name = std::move(name);
  std::istringstream in{std::string(text)};
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string s = Trim(line);
    if (s.empty()) continue;
    if (s.starts_with("U:")) {
      t.turns.emplace_back(Channel::kUser, Trim(std::string_view(s).substr(2)));
    } else if (s.starts_with("S:")) {
      t.turns.emplace_back(Channel::kSystem, Trim(std::string_view(s).substr(2)));
    } else {
      throw AugmentError("transcript '" + t.name + "' line " + std::to_string(line_no) +
                         ": expected a U: or S: prefix");
    }
  }
  if (t.turns.empty()) throw AugmentError("transcript '" + t.name + "' has no turns");
  return t;
}

Transcript LoadTranscript(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw AugmentError("cannot open transcript " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ParseTranscript(ss.str(), path.filename().string());
}

std::vector<Transcript> LoadTranscripts(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw AugmentError("transcript directory not found: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Transcript> out;
  for (const auto& f : files) out.push_back(LoadTranscript(f));
  return out;
}

ConversationAudio PerturbationSynthesizer::Synthesize(const ConversationSample&, const ConversationAudio& ref,
                                                      const Transcript&, uint64_t seed) const {
  Rng rng(seed);
  const double speed = rng.Uniform(params_.min_speed, params_.max_speed);
  const double gain = std::pow(10.0, rng.Uniform(-params_.max_gain_db, params_.max_gain_db) / 20.0);
  auto render = [&](const Waveform& w) {
    Waveform out;
    out.sample_rate = w.sample_rate;
    out.samples = ChangeSpeed(w.samples, speed);
    for (float& x : out.samples) {
      const double v = gain * x + params_.noise_rms * rng.Normal();
      x = static_cast<float>(std::clamp(v, -1.0, 1.0));
    }
    return out;
  };
  ConversationAudio out;
  out.user = render(ref.user);
  out.system = render(ref.system);
  auto [u, s] = AlignChannels(out.user, out.system);
  return {std::move(u), std::move(s)};
}

SyntheticSample SynthesizeSample(const Synthesizer& synth, const DatasetManifest& source,
                                 const ConversationSample& reference, const Transcript& transcript, uint64_t seed,
                                 std::string id, Target target) {
  if (reference.origin != Origin::kReal) {
    throw AugmentError("reference '" + reference.id + "' is not a real recording");
  }
  if (!reference.label(target)) {
    throw AugmentError("reference '" + reference.id + "' lacks a " + std::string(ToString(target)) + " label");
  }
  const ConversationAudio ref_audio = LoadConversationAudio(source, reference);
  SyntheticSample out;
  try {
    out.audio = synth.Synthesize(reference, ref_audio, transcript, seed);
  } catch (const Error& e) {
    throw AugmentError("synthesizer '" + synth.name() + "' failed on '" + reference.id + "': " + e.what());
  }
  if (out.audio.user.sample_rate != reference.sample_rate || out.audio.system.sample_rate != reference.sample_rate) {
    throw AugmentError("synthesizer '" + synth.name() + "' changed the sample rate");
  }
  if (out.audio.system.samples.empty()) throw AugmentError("synthesizer '" + synth.name() + "' produced no audio");

  ConversationSample& s = out.sample;
  s.id = std::move(id);
  s.sample_rate = reference.sample_rate;
  s.duration_s = out.audio.system.duration();
  s.conversation_label = reference.conversation_label;
  s.system_label = reference.system_label;
  s.origin = Origin::kSynthetic;
  s.reference_id = reference.id;
  return out;
}

DatasetManifest BuildAugmentedManifest(const AugmentPlan& plan, const Synthesizer& synth,
                                       const std::filesystem::path& out_dir) {
  if (!(plan.target_hours > 0.0)) throw AugmentError("target_hours must be positive");
  if (plan.transcripts.empty()) throw AugmentError("no transcripts supplied");
  std::vector<const ConversationSample*> refs;
  for (const auto& s : plan.source.samples) {
    if (s.origin == Origin::kReal && s.label(plan.target)) refs.push_back(&s);
  }
  if (refs.empty()) throw AugmentError("source manifest has no labeled real references");

  std::vector<std::pair<size_t, size_t>> pairs;
  for (size_t r = 0; r < refs.size(); ++r) {
    for (size_t t = 0; t < plan.transcripts.size(); ++t) pairs.emplace_back(r, t);
  }

  DatasetManifest m;
  m.name = "augmented";
  m.split = Split::kTrain;
  m.base_dir = out_dir;
  Rng rng(plan.seed);
  const double target_seconds = plan.target_hours * 3600.0;
  double total = 0.0;
  size_t index = 0;
  while (total < target_seconds) {
    rng.Shuffle(pairs);
    for (const auto& [r, t] : pairs) {
      if (total >= target_seconds) break;
      char id[32];
      std::snprintf(id, sizeof(id), "syn-%06zu-", index);
      SyntheticSample syn = SynthesizeSample(synth, plan.source, *refs[r], plan.transcripts[t],
                                             DeriveSeed(plan.seed, index), id + refs[r]->id, plan.target);
      const std::string rel = "audio/" + syn.sample.id + ".wav";
      WriteWav(out_dir / rel, {syn.audio.user, syn.audio.system});
      syn.sample.stereo_audio = rel;
      auto issues = ValidateSample(syn.sample, out_dir);
      if (!issues.empty()) throw AugmentError("synthetic sample '" + syn.sample.id + "' invalid: " + issues.front());
      total += syn.sample.duration_s;
      m.samples.push_back(std::move(syn.sample));
      ++index;
    }
  }
  m.target_coverage = CountTargets(m.samples);
  WriteManifest(m, out_dir / "augmented.jsonl");
  return m;
}

}  // namespace convnat
