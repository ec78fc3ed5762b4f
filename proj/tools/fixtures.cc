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

#include "fixtures.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "convnat/random.h"

namespace convnat::fixtures {

Waveform Tone(double seconds, double amplitude, double frequency, int sample_rate) {
  Waveform w;
  w.sample_rate = sample_rate;
  w.samples.resize(static_cast<size_t>(std::llround(seconds * sample_rate)));
  for (size_t i = 0; i < w.samples.size(); ++i) {
    const double t = static_cast<double>(i) / sample_rate;
    w.samples[i] = static_cast<float>(amplitude * std::sin(2.0 * std::numbers::pi * frequency * t));
  }
  return w;
}

FixtureSet WriteFixtureSet(const std::filesystem::path& dir, const Options& opt) {
  Rng rng(opt.seed);
  const int sr = kCanonicalSampleRate;
  std::vector<double> durations = opt.durations_s;
  if (durations.empty()) {
    for (size_t i = 0; i < opt.num_conversations; ++i) {
      durations.push_back(std::round(rng.Uniform(opt.min_duration_s, opt.max_duration_s) * 10.0) / 10.0);
    }
  }

  struct Conv {
    Waveform user, system;
    std::map<Channel, std::vector<UtteranceSpan>> spans;
    double system_rms = 0.0;
  };
  std::vector<Conv> convs;
  for (double duration : durations) {
    Conv c;
    const size_t n = static_cast<size_t>(std::llround(duration * sr));
    c.user.samples.assign(n, 0.0f);
    c.system.samples.assign(n, 0.0f);
    const double amp[2] = {rng.Uniform(0.05, 0.8), rng.Uniform(0.05, 0.8)};
    const double freq[2] = {rng.Uniform(150.0, 400.0), rng.Uniform(150.0, 400.0)};
    // Near-silent floor, well below the default VAD threshold.
    for (auto* w : {&c.user, &c.system}) {
      for (float& x : w->samples) x = static_cast<float>(1e-4 * rng.Normal());
    }
    // Alternating turns; boundaries land on whole samples.
    size_t pos = static_cast<size_t>(rng.Uniform(0.1, 0.5) * sr);
    int speaker = rng.Uniform() < 0.5 ? 0 : 1;
    while (pos + sr / 2 < n) {
      const size_t len = std::min(n - pos, static_cast<size_t>(rng.Uniform(1.5, 4.0) * sr));
      Waveform& w = speaker == 0 ? c.user : c.system;
      for (size_t i = 0; i < len; ++i) {
        const double t = static_cast<double>(i) / sr;
        w.samples[pos + i] += static_cast<float>(amp[speaker] * (std::sin(2.0 * std::numbers::pi * freq[speaker] * t) +
                                                                0.02 * rng.Normal()));
      }
      c.spans[speaker == 0 ? Channel::kUser : Channel::kSystem].emplace_back(
          static_cast<double>(pos) / sr, static_cast<double>(pos + len) / sr);
      pos += len + static_cast<size_t>(rng.Uniform(0.3, 0.8) * sr);
      speaker = 1 - speaker;
    }
    for (auto* w : {&c.user, &c.system}) {
      for (float& x : w->samples) x = std::clamp(x, -1.0f, 1.0f);
    }
    c.system_rms = Rms(c.system.samples);
    convs.push_back(std::move(c));
  }

  double lo = convs.front().system_rms, hi = lo;
  for (const auto& c : convs) {
    lo = std::min(lo, c.system_rms);
    hi = std::max(hi, c.system_rms);
  }

  FixtureSet out;
  out.manifest.name = opt.name;
  out.manifest.base_dir = dir;
  out.manifest_path = dir / (opt.name + ".jsonl");
  out.spans_path = dir / (opt.name + "_spans.jsonl");
  const std::string audio_dir = opt.name + "_audio";
  for (size_t i = 0; i < convs.size(); ++i) {
    const Conv& c = convs[i];
    char id[32];
    std::snprintf(id, sizeof(id), "%s-%03zu", opt.name.c_str(), i);
    ConversationSample s;
    s.id = id;
    s.sample_rate = sr;
    s.duration_s = c.system.duration();
    const double norm = hi > lo ? (c.system_rms - lo) / (hi - lo) : 0.5;
    const double label = std::clamp(1.0 + 4.0 * norm, kMinMos, kMaxMos);
    s.conversation_label = MosLabel{{}, label};
    if (!opt.partial_system_labels || i % 4 != 3) s.system_label = MosLabel{{}, label};
    s.origin = Origin::kReal;
    if (opt.mix_storage && i % 2 == 1) {
      s.stereo_audio = audio_dir + "/" + s.id + ".wav";
      WriteWav(dir / *s.stereo_audio, {c.user, c.system});
    } else {
      s.user_audio = audio_dir + "/" + s.id + "_user.wav";
      s.system_audio = audio_dir + "/" + s.id + "_system.wav";
      WriteWav(dir / *s.user_audio, {c.user});
      WriteWav(dir / *s.system_audio, {c.system});
    }
    out.spans[s.id] = c.spans;
    out.manifest.samples.push_back(std::move(s));
  }
  out.manifest.split = out.manifest_path.stem().string().find("train") != std::string::npos ? Split::kTrain
                       : out.manifest_path.stem().string().find("dev") != std::string::npos ? Split::kDev
                                                                                             : Split::kEval;
  out.manifest.target_coverage = CountTargets(out.manifest.samples);
  WriteManifest(out.manifest, out.manifest_path);
  WriteSpanSidecar(out.spans, out.spans_path);
  return out;
}

}  // namespace convnat::fixtures
