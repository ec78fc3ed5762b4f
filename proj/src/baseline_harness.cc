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

#include "convnat/baseline_harness.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <unistd.h>
#include <sys/wait.h>

#include "convnat/errors.h"
#include "convnat/eval_metrics.h"

namespace convnat {

std::string_view ToString(AggregationStat s) {
  switch (s) {
    case AggregationStat::kMean: return "mean";
    case AggregationStat::kMin: return "min";
    case AggregationStat::kMax: return "max";
    case AggregationStat::kMedian: return "median";
  }
  return "mean";
}

double Aggregate(std::span<const double> scores, AggregationStat stat) {
  if (scores.empty()) throw HarnessError("cannot aggregate an empty score list");
  switch (stat) {
    case AggregationStat::kMean:
      return std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());
    case AggregationStat::kMin:
      return *std::min_element(scores.begin(), scores.end());
    case AggregationStat::kMax:
      return *std::max_element(scores.begin(), scores.end());
    case AggregationStat::kMedian: {
      std::vector<double> sorted(scores.begin(), scores.end());
      std::sort(sorted.begin(), sorted.end());
      const size_t n = sorted.size();
      return n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    }
  }
  throw HarnessError("unknown aggregation statistic");
}

double UtterancePredictor::Score(const Waveform& utterance) const {
  const double raw = RawScore(utterance);
  if (!std::isfinite(raw)) throw HarnessError("predictor '" + name() + "' returned a non-finite score");
  return std::clamp(raw, kMinMos, kMaxMos);
}

double RmsStubPredictor::RawScore(const Waveform& utterance) const { return 1.0 + 4.0 * Rms(utterance.samples); }

SubprocessPredictor::SubprocessPredictor(std::string command, std::string name)
    : command_(std::move(command)), name_(std::move(name)) {
  if (command_.empty()) throw HarnessError("empty predictor command");
}

double SubprocessPredictor::RawScore(const Waveform& utterance) const {
  static std::atomic<uint64_t> counter{0};
  const auto path = std::filesystem::temp_directory_path() /
                    ("convnat-utt-" + std::to_string(::getpid()) + "-" + std::to_string(counter++) + ".wav");
  WriteWav(path, {utterance});
  const std::string cmd = command_ + " '" + path.string() + "'";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (pipe == nullptr) {
    std::filesystem::remove(path);
    throw HarnessError("cannot run predictor command: " + command_);
  }
  std::string output;
  char buf[256];
  while (size_t n = std::fread(buf, 1, sizeof(buf), pipe)) output.append(buf, n);
  const int status = ::pclose(pipe);
  std::filesystem::remove(path);
  if (status == -1 || !WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    throw HarnessError("predictor command failed: " + command_);
  }
  char* end = nullptr;
  const double v = std::strtod(output.c_str(), &end);
  if (end == output.c_str()) throw HarnessError("predictor command printed no score: '" + output + "'");
  return v;
}

std::vector<UtteranceSpan> VadSpanSource::Spans(const ConversationSample&, Channel, const Waveform& audio) const {
  return DetectUtterances(audio, cfg_);
}

std::vector<UtteranceSpan> SidecarSpanSource::Spans(const ConversationSample& sample, Channel channel,
                                                    const Waveform&) const {
  auto it = table_.find(sample.id);
  if (it == table_.end()) return {};
  auto ch = it->second.find(channel);
  if (ch == it->second.end()) return {};
  return ch->second;
}

ChannelScores ScoreConversationUtterances(const UtterancePredictor& pred, const ConversationSample& sample,
                                          const ConversationAudio& audio, const SpanSource& spans) {
  ChannelScores out;
  auto score = [&](Channel ch, const Waveform& w, std::vector<double>& dst) {
    auto list = spans.Spans(sample, ch, w);
    std::sort(list.begin(), list.end(),
              [](const UtteranceSpan& a, const UtteranceSpan& b) { return a.start() < b.start(); });
    for (const auto& span : list) dst.push_back(pred.Score(Slice(w, span)));
  };
  score(Channel::kUser, audio.user, out.user);
  score(Channel::kSystem, audio.system, out.system);
  return out;
}

double ConversationScore(const ChannelScores& scores, AggregationStat stat, Target target,
                         ConversationPooling pooling) {
  if (target == Target::kSystem) {
    if (scores.system.empty()) throw HarnessError("no system-channel utterances");
    return Aggregate(scores.system, stat);
  }
  if (pooling == ConversationPooling::kPooled) {
    std::vector<double> pooled = scores.user;
    pooled.insert(pooled.end(), scores.system.begin(), scores.system.end());
    if (pooled.empty()) throw HarnessError("no utterances in either channel");
    return Aggregate(pooled, stat);
  }
  if (scores.user.empty() || scores.system.empty()) {
    throw HarnessError("channel-mean pooling needs utterances in both channels");
  }
  return 0.5 * (Aggregate(scores.user, stat) + Aggregate(scores.system, stat));
}

std::vector<nlohmann::ordered_json> BaselineReport::JsonRows() const {
  std::vector<nlohmann::ordered_json> rows;
  for (AggregationStat stat : kAllStats) {
    nlohmann::ordered_json j;
    j["dataset"] = dataset;
    j["target"] = target;
    j["predictor"] = predictor;
    j["stat"] = ToString(stat);
    j["pcc"] = pcc.at(stat);
    j["n"] = n;
    rows.push_back(std::move(j));
  }
  return rows;
}

BaselineReport RunBaseline(const UtterancePredictor& pred, const DatasetManifest& dataset, Target target,
                           const SpanSource& spans, ConversationPooling pooling) {
  BaselineReport report;
  report.dataset = dataset.name;
  report.target = ToString(target);
  report.predictor = pred.name();
  for (const auto& s : dataset.samples) {
    const auto& label = s.label(target);
    if (!label) continue;
    BaselineConversation conv;
    conv.id = s.id;
    conv.label = label->mos;
    conv.scores = ScoreConversationUtterances(pred, s, LoadConversationAudio(dataset, s), spans);
    for (AggregationStat stat : kAllStats) {
      try {
        conv.aggregated[stat] = ConversationScore(conv.scores, stat, target, pooling);
      } catch (const HarnessError& e) {
        throw HarnessError("sample '" + s.id + "': " + e.what());
      }
    }
    report.conversations.push_back(std::move(conv));
  }
  report.n = report.conversations.size();
  if (report.n < 2) {
    throw HarnessError("dataset '" + dataset.name + "' has fewer than 2 samples labeled for " +
                       std::string(ToString(target)));
  }
  std::vector<double> labels;
  for (const auto& c : report.conversations) labels.push_back(c.label);
  for (AggregationStat stat : kAllStats) {
    std::vector<double> preds;
    for (const auto& c : report.conversations) preds.push_back(c.aggregated.at(stat));
    report.pcc[stat] = Pcc(preds, labels);
  }
  return report;
}

void WriteBaselineCsv(std::span<const BaselineReport> reports, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw HarnessError("cannot write " + path.string());
  out << "dataset,target,predictor,mean,min,max,median\n" << std::setprecision(17);
  for (const auto& r : reports) {
    out << r.dataset << ',' << r.target << ',' << r.predictor;
    for (AggregationStat stat : kAllStats) out << ',' << r.pcc.at(stat);
    out << '\n';
  }
}

void WriteBaselineJsonl(std::span<const BaselineReport> reports, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw HarnessError("cannot write " + path.string());
  for (const auto& r : reports) {
    for (const auto& row : r.JsonRows()) out << row.dump() << '\n';
  }
}

}  // namespace convnat
