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

#ifndef CONVNAT_BASELINE_HARNESS_H_
#define CONVNAT_BASELINE_HARNESS_H_

#include <array>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "convnat/audio_ops.h"
#include "convnat/corpus.h"
#include "json.hpp"

namespace convnat {

enum class AggregationStat { kMean, kMin, kMax, kMedian };
inline constexpr std::array<AggregationStat, 4> kAllStats = {AggregationStat::kMean, AggregationStat::kMin,
                                                              AggregationStat::kMax, AggregationStat::kMedian};
std::string_view ToString(AggregationStat s);

// Throws HarnessError on an empty list. Median of an even-length list is the
// mean of the two middle values.
double Aggregate(std::span<const double> scores, AggregationStat stat);

// Single-utterance MOS predictor standing in for NISQA/UTMOSv2. Scores are
// clamped to [1, 5].
class UtterancePredictor {
 public:
  virtual ~UtterancePredictor() = default;
  virtual std::string name() const = 0;
  double Score(const Waveform& utterance) const;

 protected:
  virtual double RawScore(const Waveform& utterance) const = 0;
};

// 1 + 4 * RMS(utterance).
class RmsStubPredictor final : public UtterancePredictor {
 public:
  std::string name() const override { return "rms-stub"; }

 protected:
  double RawScore(const Waveform& utterance) const override;
};

// Runs `<command> <utterance.wav>` and reads one decimal score from stdout.
class SubprocessPredictor final : public UtterancePredictor {
 public:
  explicit SubprocessPredictor(std::string command, std::string name = "subprocess");
  std::string name() const override { return name_; }

 protected:
  double RawScore(const Waveform& utterance) const override;

 private:
  std::string command_;
  std::string name_;
};

class FunctionPredictor final : public UtterancePredictor {
 public:
  FunctionPredictor(std::string name, std::function<double(const Waveform&)> fn)
      : name_(std::move(name)), fn_(std::move(fn)) {}
  std::string name() const override { return name_; }

 protected:
  double RawScore(const Waveform& utterance) const override { return fn_(utterance); }

 private:
  std::string name_;
  std::function<double(const Waveform&)> fn_;
};

// Where utterance boundaries come from: energy VAD or a sidecar file.
class SpanSource {
 public:
  virtual ~SpanSource() = default;
  virtual std::vector<UtteranceSpan> Spans(const ConversationSample& sample, Channel channel,
                                           const Waveform& audio) const = 0;
};

class VadSpanSource final : public SpanSource {
 public:
  explicit VadSpanSource(VadConfig cfg = {}) : cfg_(cfg) {}
  std::vector<UtteranceSpan> Spans(const ConversationSample& sample, Channel channel,
                                   const Waveform& audio) const override;

 private:
  VadConfig cfg_;
};

// Samples or channels missing from the table have no utterances.
class SidecarSpanSource final : public SpanSource {
 public:
  explicit SidecarSpanSource(SpanTable table) : table_(std::move(table)) {}
  std::vector<UtteranceSpan> Spans(const ConversationSample& sample, Channel channel,
                                   const Waveform& audio) const override;

 private:
  SpanTable table_;
};

struct ChannelScores {
  std::vector<double> user;
  std::vector<double> system;
};

// One score per utterance per channel, in temporal order.
ChannelScores ScoreConversationUtterances(const UtterancePredictor& pred, const ConversationSample& sample,
                                          const ConversationAudio& audio, const SpanSource& spans);

// kPooled concatenates both channels' scores before aggregating; kChannelMean
// aggregates each channel and averages the two results.
enum class ConversationPooling { kPooled, kChannelMean };

// Conversation target uses both channels, system target the system channel
// only. Throws HarnessError when a required channel has no utterances.
double ConversationScore(const ChannelScores& scores, AggregationStat stat, Target target,
                         ConversationPooling pooling = ConversationPooling::kPooled);

struct BaselineConversation {
  std::string id;
  double label = 0.0;
  ChannelScores scores;
  std::map<AggregationStat, double> aggregated;
};

// One result row: PCC per statistic.
struct BaselineReport {
  std::string dataset;
  std::string target;
  std::string predictor;
  std::map<AggregationStat, double> pcc;
  size_t n = 0;
  std::vector<BaselineConversation> conversations;

  std::vector<nlohmann::ordered_json> JsonRows() const;
};

BaselineReport RunBaseline(const UtterancePredictor& pred, const DatasetManifest& dataset, Target target,
                           const SpanSource& spans,
                           ConversationPooling pooling = ConversationPooling::kPooled);

// dataset,target,predictor,mean,min,max,median
void WriteBaselineCsv(std::span<const BaselineReport> reports, const std::filesystem::path& path);
void WriteBaselineJsonl(std::span<const BaselineReport> reports, const std::filesystem::path& path);

}  // namespace convnat

#endif  // CONVNAT_BASELINE_HARNESS_H_
