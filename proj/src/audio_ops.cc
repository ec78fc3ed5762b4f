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

#include "convnat/audio_ops.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "convnat/errors.h"
#include "json.hpp"

namespace convnat {
namespace {

uint32_t ReadU32(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t ReadU16(const unsigned char* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

void PutU32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void PutU16(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

constexpr uint16_t kFormatPcm = 1;
constexpr uint16_t kFormatFloat = 3;
constexpr uint16_t kFormatExtensible = 0xfffe;

}  // namespace

UtteranceSpan::UtteranceSpan(double start, double end) : start_(start), end_(end) {
  if (!std::isfinite(start) || !std::isfinite(end) || start < 0.0 || !(start < end)) {
    std::ostringstream os;
    os << "invalid utterance span [" << start << ", " << end << "]";
    throw AudioError(os.str());
  }
}

void CheckWaveform(const Waveform& w) {
  if (w.sample_rate <= 0) throw AudioError("sample rate must be positive");
  for (float x : w.samples) {
    if (!std::isfinite(x)) throw AudioError("waveform contains non-finite samples");
  }
}

SegmentBatch SegmentFixed(const Waveform& w, double segment_seconds) {
  if (w.samples.empty()) throw AudioError("cannot segment an empty waveform");
  if (!(segment_seconds > 0.0)) throw AudioError("segment length must be positive");
  const auto seg_len = static_cast<size_t>(std::llround(segment_seconds * w.sample_rate));
  if (seg_len == 0) throw AudioError("segment shorter than one sample");

  SegmentBatch batch;
  batch.segment_length = seg_len;
  const size_t n = w.samples.size();
  for (size_t begin = 0; begin < n; begin += seg_len) {
    const size_t valid = std::min(seg_len, n - begin);
    std::vector<float> seg(seg_len, 0.0f);
    std::copy_n(w.samples.begin() + static_cast<std::ptrdiff_t>(begin), valid, seg.begin());
    batch.segments.push_back(std::move(seg));
    batch.valid_lengths.push_back(valid);
  }
  return batch;
}

std::pair<Waveform, Waveform> AlignChannels(const Waveform& user, const Waveform& system) {
  if (user.sample_rate != system.sample_rate) {
    throw AudioError("channel sample rates differ: " + std::to_string(user.sample_rate) + " vs " +
                     std::to_string(system.sample_rate));
  }
  const size_t n = std::max(user.samples.size(), system.samples.size());
  Waveform u = user;
  Waveform s = system;
  u.samples.resize(n, 0.0f);
  s.samples.resize(n, 0.0f);
  return {std::move(u), std::move(s)};
}

Waveform MixChannels(const Waveform& user, const Waveform& system) {
  if (user.sample_rate != system.sample_rate) {
    throw AudioError("channel sample rates differ: " + std::to_string(user.sample_rate) + " vs " +
                     std::to_string(system.sample_rate));
  }
  if (user.samples.size() != system.samples.size()) {
    throw AudioError("channels must be aligned before mixing");
  }
  Waveform out;
  out.sample_rate = user.sample_rate;
  out.samples.resize(user.samples.size());
  for (size_t i = 0; i < out.samples.size(); ++i) {
    out.samples[i] = 0.5f * user.samples[i] + 0.5f * system.samples[i];
  }
  return out;
}

double Rms(std::span<const float> x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (float v : x) acc += static_cast<double>(v) * v;
  return std::sqrt(acc / static_cast<double>(x.size()));
}

std::vector<UtteranceSpan> DetectUtterances(const Waveform& w, const VadConfig& cfg) {
  if (w.samples.empty()) throw AudioError("cannot run VAD on an empty waveform");
  const size_t n = w.samples.size();
  const size_t frame = std::max<size_t>(1, static_cast<size_t>(std::llround(cfg.frame_seconds * w.sample_rate)));
  const double sr = w.sample_rate;

  // Speech runs as [first_sample, end_sample).
  std::vector<std::pair<size_t, size_t>> runs;
  bool in_run = false;
  size_t run_start = 0;
  for (size_t begin = 0; begin < n; begin += frame) {
    const size_t len = std::min(frame, n - begin);
    const double rms = Rms(std::span<const float>(w.samples.data() + begin, len));
    const double level = rms > 0.0 ? 20.0 * std::log10(rms) : -std::numeric_limits<double>::infinity();
    const bool speech = level >= cfg.threshold_dbfs;
    if (speech && !in_run) {
      in_run = true;
      run_start = begin;
    } else if (!speech && in_run) {
      in_run = false;
      runs.emplace_back(run_start, begin);
    }
  }
  if (in_run) runs.emplace_back(run_start, n);

  std::vector<std::pair<size_t, size_t>> merged;
  for (const auto& r : runs) {
    if (!merged.empty() &&
        static_cast<double>(r.first - merged.back().second) / sr < cfg.min_gap_seconds) {
      merged.back().second = r.second;
    } else {
      merged.push_back(r);
    }
  }

  std::vector<UtteranceSpan> spans;
  for (const auto& r : merged) {
    const double start = static_cast<double>(r.first) / sr;
    const double end = static_cast<double>(r.second) / sr;
    if (end - start >= cfg.min_speech_seconds) spans.emplace_back(start, end);
  }
  return spans;
}

size_t TimeToIndex(double seconds, int sample_rate) {
  return static_cast<size_t>(std::floor(seconds * sample_rate + 0.5));
}

Waveform Slice(const Waveform& w, const UtteranceSpan& span) {
  const size_t begin = TimeToIndex(span.start(), w.sample_rate);
  const size_t end = TimeToIndex(span.end(), w.sample_rate);
  if (end > w.samples.size() || begin >= end) {
    std::ostringstream os;
    os << "span [" << span.start() << ", " << span.end() << "] outside waveform of "
       << w.duration() << " s";
    throw AudioError(os.str());
  }
  Waveform out;
  out.sample_rate = w.sample_rate;
  out.samples.assign(w.samples.begin() + static_cast<std::ptrdiff_t>(begin),
                     w.samples.begin() + static_cast<std::ptrdiff_t>(end));
  return out;
}

std::vector<Waveform> ReadWav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw AudioError("cannot open WAV file: " + path.string());
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* bytes = reinterpret_cast<const unsigned char*>(data.data());
  const size_t size = data.size();
  if (size < 12 || std::memcmp(bytes, "RIFF", 4) != 0 || std::memcmp(bytes + 8, "WAVE", 4) != 0) {
    throw AudioError("not a RIFF/WAVE file: " + path.string());
  }

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  const unsigned char* pcm = nullptr;
  size_t pcm_bytes = 0;
  size_t pos = 12;
  while (pos + 8 <= size) {
    const uint32_t chunk_size = ReadU32(bytes + pos + 4);
    const unsigned char* body = bytes + pos + 8;
    const size_t avail = std::min<size_t>(chunk_size, size - pos - 8);
    if (std::memcmp(bytes + pos, "fmt ", 4) == 0) {
      if (avail < 16) throw AudioError("truncated fmt chunk: " + path.string());
      format = ReadU16(body);
      channels = ReadU16(body + 2);
      rate = ReadU32(body + 4);
      bits = ReadU16(body + 14);
      if (format == kFormatExtensible && avail >= 26) format = ReadU16(body + 24);
    } else if (std::memcmp(bytes + pos, "data", 4) == 0) {
      pcm = body;
      pcm_bytes = avail;
    }
    pos += 8 + chunk_size + (chunk_size & 1);
  }
  if (channels == 0 || rate == 0) throw AudioError("missing fmt chunk: " + path.string());
  if (pcm == nullptr) throw AudioError("missing data chunk: " + path.string());
  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool f32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !f32) {
    throw AudioError("unsupported WAV encoding (format " + std::to_string(format) + ", " +
                     std::to_string(bits) + " bits): " + path.string());
  }

  const size_t bytes_per_sample = bits / 8;
  const size_t frames = pcm_bytes / (bytes_per_sample * channels);
  std::vector<Waveform> out(channels);
  for (auto& w : out) {
    w.sample_rate = static_cast<int>(rate);
    w.samples.resize(frames);
  }
  for (size_t f = 0; f < frames; ++f) {
    for (size_t c = 0; c < channels; ++c) {
      const unsigned char* p = pcm + (f * channels + c) * bytes_per_sample;
      float v;
      if (pcm16) {
        v = static_cast<float>(static_cast<int16_t>(ReadU16(p))) / 32768.0f;
      } else {
        const uint32_t u = ReadU32(p);
        std::memcpy(&v, &u, sizeof(v));
      }
      out[c].samples[f] = v;
    }
  }
  return out;
}

void WriteWav(const std::filesystem::path& path, const std::vector<Waveform>& channels,
              WavEncoding encoding) {
  if (channels.empty()) throw AudioError("no channels to write");
  const size_t frames = channels.front().samples.size();
  const int rate = channels.front().sample_rate;
  for (const auto& c : channels) {
    if (c.samples.size() != frames || c.sample_rate != rate) {
      throw AudioError("WAV channels must share length and sample rate");
    }
  }
  const uint16_t num_channels = static_cast<uint16_t>(channels.size());
  const uint16_t bits = encoding == WavEncoding::kPcm16 ? 16 : 32;
  const uint32_t block = num_channels * bits / 8;
  const uint32_t data_bytes = static_cast<uint32_t>(frames * block);

  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  PutU32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  PutU32(out, 16);
  PutU16(out, encoding == WavEncoding::kPcm16 ? kFormatPcm : kFormatFloat);
  PutU16(out, num_channels);
  PutU32(out, static_cast<uint32_t>(rate));
  PutU32(out, static_cast<uint32_t>(rate) * block);
  PutU16(out, static_cast<uint16_t>(block));
  PutU16(out, bits);
  out += "data";
  PutU32(out, data_bytes);
  for (size_t f = 0; f < frames; ++f) {
    for (const auto& c : channels) {
      const float v = c.samples[f];
      if (encoding == WavEncoding::kPcm16) {
        const float clipped = std::clamp(v, -1.0f, 1.0f);
        const long q = std::lround(clipped * 32768.0f);
        PutU16(out, static_cast<uint16_t>(static_cast<int16_t>(std::clamp(q, -32768L, 32767L))));
      } else {
        uint32_t u;
        std::memcpy(&u, &v, sizeof(u));
        PutU32(out, u);
      }
    }
  }

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw AudioError("cannot write WAV file: " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw AudioError("write failed: " + path.string());
}

ConversationAudio LoadConversationAudio(const DatasetManifest& m, const ConversationSample& sample) {
  Waveform user, system;
  if (sample.stereo_audio) {
    auto ch = ReadWav(ResolveAudioPath(m, *sample.stereo_audio));
    if (ch.size() != 2) {
      throw AudioError("sample '" + sample.id + "': stereo_audio has " + std::to_string(ch.size()) +
                       " channels, expected 2");
    }
    user = std::move(ch[0]);
    system = std::move(ch[1]);
  } else {
    if (!sample.user_audio || !sample.system_audio) {
      throw AudioError("sample '" + sample.id + "' lacks audio references");
    }
    auto u = ReadWav(ResolveAudioPath(m, *sample.user_audio));
    auto s = ReadWav(ResolveAudioPath(m, *sample.system_audio));
    if (u.size() != 1 || s.size() != 1) {
      throw AudioError("sample '" + sample.id + "': user/system audio must be mono");
    }
    user = std::move(u[0]);
    system = std::move(s[0]);
  }
  for (const Waveform* w : {&user, &system}) {
    if (w->sample_rate != sample.sample_rate) {
      throw AudioError("sample '" + sample.id + "': file rate " + std::to_string(w->sample_rate) +
                       " Hz does not match manifest " + std::to_string(sample.sample_rate) + " Hz");
    }
    if (w->sample_rate != kCanonicalSampleRate) {
      throw AudioError("sample '" + sample.id + "': " + std::to_string(w->sample_rate) +
                       " Hz input; resample to 16000 Hz first");
    }
    if (w->samples.empty()) throw AudioError("sample '" + sample.id + "': empty channel");
  }
  auto [u, s] = AlignChannels(user, system);
  return {std::move(u), std::move(s)};
}

std::string_view ToString(Channel c) { return c == Channel::kUser ? "user" : "system"; }

SpanTable LoadSpanSidecar(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw AudioError("cannot open span sidecar: " + path.string());
  SpanTable table;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const std::string ch = j.at("channel").get<std::string>();
      Channel channel;
      if (ch == "user") {
        channel = Channel::kUser;
      } else if (ch == "system") {
        channel = Channel::kSystem;
      } else {
        throw AudioError("unknown channel '" + ch + "'");
      }
      table[j.at("id").get<std::string>()][channel].emplace_back(j.at("start_s").get<double>(),
                                                                 j.at("end_s").get<double>());
    } catch (const nlohmann::json::exception& e) {
      throw AudioError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const AudioError& e) {
      throw AudioError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  for (auto& [id, channels] : table) {
    for (auto& [ch, spans] : channels) {
      std::sort(spans.begin(), spans.end(),
                [](const UtteranceSpan& a, const UtteranceSpan& b) { return a.start() < b.start(); });
    }
  }
  return table;
}

void WriteSpanSidecar(const SpanTable& spans, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw AudioError("cannot write span sidecar: " + path.string());
  for (const auto& [id, channels] : spans) {
    for (const auto& [ch, list] : channels) {
      for (const auto& s : list) {
        nlohmann::ordered_json j;
        j["id"] = id;
        j["channel"] = ToString(ch);
        j["start_s"] = s.start();
        j["end_s"] = s.end();
        out << j.dump() << '\n';
      }
    }
  }
}

}  // namespace convnat
