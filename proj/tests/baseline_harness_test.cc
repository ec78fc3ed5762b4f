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
#include <cmath>

#include <gtest/gtest.h>

#include "convnat/errors.h"
#include "convnat/random.h"
#include "fixtures.h"
#include "test_util.h"

namespace convnat {
namespace {

using testing::TempDir;

double NaivePearson(const std::vector<double>& x, const std::vector<double>& y) {
  const size_t n = x.size();
  long double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += static_cast<long double>(x[i]) * x[i];
    syy += static_cast<long double>(y[i]) * y[i];
    sxy += static_cast<long double>(x[i]) * y[i];
  }
  const long double cov = sxy - sx * sy / n;
  return static_cast<double>(cov / std::sqrt((sxx - sx * sx / n) * (syy - sy * sy / n)));
}

TEST(AggregateTest, Examples) {
  const std::vector<double> s{3.0, 1.0, 4.0, 2.0};
  EXPECT_EQ(Aggregate(s, AggregationStat::kMean), 2.5);
  EXPECT_EQ(Aggregate(s, AggregationStat::kMin), 1.0);
  EXPECT_EQ(Aggregate(s, AggregationStat::kMax), 4.0);
  EXPECT_EQ(Aggregate(s, AggregationStat::kMedian), 2.5);
  const std::vector<double> odd{5.0, 1.0, 3.0};
  EXPECT_EQ(Aggregate(odd, AggregationStat::kMedian), 3.0);
  const std::vector<double> one{4.2};
  for (auto stat : kAllStats) EXPECT_EQ(Aggregate(one, stat), 4.2);
  EXPECT_THROW(Aggregate(std::vector<double>{}, AggregationStat::kMean), HarnessError);
}

TEST(AggregateTest, OrderingInvariantOnRandomLists) {
  Rng rng(2);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> s(1 + rng.Below(15));
    for (double& v : s) v = rng.Uniform(1, 5);
    const double lo = Aggregate(s, AggregationStat::kMin), hi = Aggregate(s, AggregationStat::kMax);
    for (auto stat : {AggregationStat::kMean, AggregationStat::kMedian}) {
      EXPECT_LE(lo, Aggregate(s, stat) + 1e-12);
      EXPECT_GE(hi, Aggregate(s, stat) - 1e-12);
    }
    std::vector<double> shuffled = s;
    rng.Shuffle(shuffled);
    EXPECT_EQ(Aggregate(shuffled, AggregationStat::kMedian), Aggregate(s, AggregationStat::kMedian));
  }
}

TEST(ConversationScoreTest, Examples) {
  const ChannelScores sc{{2.0, 4.0}, {3.0, 5.0}};
  EXPECT_EQ(ConversationScore(sc, AggregationStat::kMean, Target::kConversation), 3.5);
  EXPECT_EQ(ConversationScore(sc, AggregationStat::kMin, Target::kConversation), 2.0);
  EXPECT_EQ(ConversationScore(sc, AggregationStat::kMedian, Target::kConversation), 3.5);
  EXPECT_EQ(ConversationScore(sc, AggregationStat::kMax, Target::kSystem), 5.0);
  EXPECT_EQ(ConversationScore(sc, AggregationStat::kMin, Target::kSystem), 3.0);
  EXPECT_EQ(ConversationScore(sc, AggregationStat::kMax, Target::kConversation, ConversationPooling::kChannelMean),
            4.5);

  const ChannelScores user_only{{2.0}, {}};
  EXPECT_EQ(ConversationScore(user_only, AggregationStat::kMean, Target::kConversation), 2.0);
  EXPECT_THROW(ConversationScore(user_only, AggregationStat::kMean, Target::kSystem), HarnessError);
  EXPECT_THROW(ConversationScore(ChannelScores{}, AggregationStat::kMean, Target::kConversation), HarnessError);
}

TEST(PredictorTest, ClampingAndStub) {
  FunctionPredictor high("high", [](const Waveform&) { return 7.0; });
  FunctionPredictor low("low", [](const Waveform&) { return -1.0; });
  FunctionPredictor nan("nan", [](const Waveform&) { return std::nan(""); });
  const Waveform w = fixtures::Tone(0.1, 0.5, 200.0);
  EXPECT_EQ(high.Score(w), 5.0);
  EXPECT_EQ(low.Score(w), 1.0);
  EXPECT_THROW(nan.Score(w), HarnessError);
  EXPECT_NEAR(RmsStubPredictor().Score(w), 1.0 + 4.0 * 0.5 / std::sqrt(2.0), 1e-4);
}

TEST(PredictorTest, SubprocessCommand) {
  const Waveform w = fixtures::Tone(0.1, 0.5, 200.0);
  EXPECT_EQ(SubprocessPredictor("echo 3.25").Score(w), 3.25);
  EXPECT_EQ(SubprocessPredictor("echo 9").Score(w), 5.0);
  // The utterance arrives as a readable 16 kHz WAV file.
  EXPECT_EQ(SubprocessPredictor("sh -c 'test -s \"$0\" && echo 2'").Score(w), 2.0);
  EXPECT_THROW(SubprocessPredictor("false").Score(w), HarnessError);
  EXPECT_THROW(SubprocessPredictor("true").Score(w), HarnessError);
  EXPECT_THROW(SubprocessPredictor(""), HarnessError);
}

TEST(SpanSourceTest, SidecarAndVad) {
  SpanTable t;
  t["a"][Channel::kSystem] = {UtteranceSpan(0.5, 1.0), UtteranceSpan(0.0, 0.25)};
  SidecarSpanSource side(t);
  ConversationSample a, b;
  a.id = "a";
  b.id = "b";
  const Waveform w(fixtures::Tone(1.0, 0.5, 100.0));
  EXPECT_EQ(side.Spans(a, Channel::kSystem, w).size(), 2u);
  EXPECT_TRUE(side.Spans(a, Channel::kUser, w).empty());
  EXPECT_TRUE(side.Spans(b, Channel::kSystem, w).empty());

  const ConversationAudio audio{w, w};
  FunctionPredictor by_len("len", [](const Waveform& u) { return u.duration() * 4.0; });
  const ChannelScores sc = ScoreConversationUtterances(by_len, a, audio, side);
  EXPECT_TRUE(sc.user.empty());
  ASSERT_EQ(sc.system.size(), 2u);
  EXPECT_EQ(sc.system[0], 1.0);  // sorted by start time
  EXPECT_EQ(sc.system[1], 2.0);

  const ChannelScores vad = ScoreConversationUtterances(by_len, a, audio, VadSpanSource());
  EXPECT_EQ(vad.user, std::vector<double>{4.0});
}

// Recomputes the whole report from the WAV files and the sidecar with
// independent arithmetic.
TEST(RunBaselineTest, MatchesBruteForceOnFixtureSet) {
  TempDir dir;
  fixtures::Options opt;
  opt.name = "eval";
  opt.num_conversations = 10;
  opt.min_duration_s = 6;
  opt.max_duration_s = 14;
  const auto fx = fixtures::WriteFixtureSet(dir.path(), opt);
  const DatasetManifest m = LoadManifest(fx.manifest_path);
  const SpanTable spans = LoadSpanSidecar(fx.spans_path);

  for (Target target : {Target::kConversation, Target::kSystem}) {
    const BaselineReport r = RunBaseline(RmsStubPredictor(), m, target, SidecarSpanSource(spans));
    EXPECT_EQ(r.predictor, "rms-stub");
    EXPECT_EQ(r.n, target == Target::kSystem ? 8u : 10u);

    std::map<AggregationStat, std::vector<double>> preds;
    std::vector<double> labels;
    size_t k = 0;
    for (const auto& s : m.samples) {
      if (!s.label(target)) continue;
      const ConversationAudio audio = LoadConversationAudio(m, s);
      std::vector<double> pooled;
      for (Channel ch : {Channel::kUser, Channel::kSystem}) {
        if (target == Target::kSystem && ch == Channel::kUser) continue;
        const Waveform& w = ch == Channel::kUser ? audio.user : audio.system;
        for (const auto& span : spans.at(s.id).at(ch)) {
          const auto b = static_cast<size_t>(std::floor(span.start() * 16000 + 0.5));
          const auto e = static_cast<size_t>(std::floor(span.end() * 16000 + 0.5));
          long double sq = 0;
          for (size_t i = b; i < e; ++i) sq += static_cast<long double>(w.samples[i]) * w.samples[i];
          pooled.push_back(std::clamp(1.0 + 4.0 * std::sqrt(static_cast<double>(sq / (e - b))), 1.0, 5.0));
        }
      }
      std::sort(pooled.begin(), pooled.end());
      const size_t n = pooled.size();
      long double sum = 0;
      for (double v : pooled) sum += v;
      const double median = n % 2 ? pooled[n / 2] : (pooled[n / 2 - 1] + pooled[n / 2]) / 2;
      const auto& conv = r.conversations[k++];
      EXPECT_EQ(conv.id, s.id);
      EXPECT_NEAR(conv.aggregated.at(AggregationStat::kMean), static_cast<double>(sum / n), 1e-12);
      EXPECT_NEAR(conv.aggregated.at(AggregationStat::kMin), pooled.front(), 1e-12);
      EXPECT_NEAR(conv.aggregated.at(AggregationStat::kMax), pooled.back(), 1e-12);
      EXPECT_NEAR(conv.aggregated.at(AggregationStat::kMedian), median, 1e-12);
      preds[AggregationStat::kMean].push_back(static_cast<double>(sum / n));
      preds[AggregationStat::kMin].push_back(pooled.front());
      preds[AggregationStat::kMax].push_back(pooled.back());
      preds[AggregationStat::kMedian].push_back(median);
      labels.push_back(s.label(target)->mos);
    }
    for (auto stat : kAllStats) EXPECT_NEAR(r.pcc.at(stat), NaivePearson(preds[stat], labels), 1e-9);
  }
}

TEST(RunBaselineTest, ReportFiles) {
  BaselineReport r;
  r.dataset = "eval";
  r.target = "system";
  r.predictor = "rms-stub";
  r.n = 3;
  r.pcc = {{AggregationStat::kMean, 0.5}, {AggregationStat::kMin, -0.25},
           {AggregationStat::kMax, 0.125}, {AggregationStat::kMedian, 1.0}};
  TempDir dir;
  const std::vector<BaselineReport> rs{r};
  WriteBaselineCsv(rs, dir / "b.csv");
  EXPECT_EQ(testing::ReadText(dir / "b.csv"),
            "dataset,target,predictor,mean,min,max,median\neval,system,rms-stub,0.5,-0.25,0.125,1\n");
  WriteBaselineJsonl(rs, dir / "b.jsonl");
  const std::string jl = testing::ReadText(dir / "b.jsonl");
  EXPECT_EQ(std::count(jl.begin(), jl.end(), '\n'), 4);
  EXPECT_EQ(jl.substr(0, jl.find('\n')),
            R"({"dataset":"eval","target":"system","predictor":"rms-stub","stat":"mean","pcc":0.5,"n":3})");
}

}  // namespace
}  // namespace convnat
