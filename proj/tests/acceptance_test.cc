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

// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "convnat/audio_ops.h"
#include "convnat/augmentor.h"
#include "convnat/baseline_harness.h"
#include "convnat/cli.h"
#include "convnat/corpus.h"
#include "convnat/encoder_hub.h"
#include "convnat/errors.h"
#include "convnat/eval_metrics.h"
#include "convnat/naturalness_model.h"
#include "convnat/random.h"
#include "convnat/trainer.h"
#include "fixtures.h"
#include "json.hpp"

namespace convnat {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;
using Eigen::MatrixXd;
using Eigen::VectorXd;

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

std::string Fmt(double v, int precision = 4) {
  std::ostringstream os;
  os << std::setprecision(precision) << v;
  return os.str();
}

// ---------------------------------------------------------------------------
// Independent reference arithmetic.

double NaivePearson(const std::vector<double>& x, const std::vector<double>& y) {
  const size_t n = x.size();
  long double mx = 0, my = 0;
  for (size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  long double sxy = 0, sxx = 0, syy = 0;
  for (size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0 || syy == 0) return std::nan("");
  return static_cast<double>(sxy / std::sqrt(sxx * syy));
}

std::vector<double> NaiveRanks(const std::vector<double>& x) {
  std::vector<double> r(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    double less = 0, equal = 0;
    for (double v : x) {
      less += v < x[i];
      equal += v == x[i];
    }
    r[i] = less + (equal + 1) / 2;
  }
  return r;
}

double NaiveMse(const std::vector<double>& x, const std::vector<double>& y) {
  long double s = 0;
  for (size_t i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
  return static_cast<double>(s / x.size());
}

struct FitStats {
  double pcc;
  double mse;
};

FitStats TrainSetFit(const PredictorState& state, const Encoder& encoder, const DatasetManifest& train) {
  const EvalOutput out = Evaluate(state, encoder, train, Target::kConversation);
  return {NaivePearson(out.predictions, out.labels), NaiveMse(out.predictions, out.labels)};
}

int Cli(std::vector<std::string> args) {
  args.insert(args.begin(), "convnat");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return RunCli(static_cast<int>(argv.size()), argv.data());
}

std::string ReadText(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// ---------------------------------------------------------------------------

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Workspace {
  fs::path root;
  fixtures::FixtureSet train, dev, eval;
  std::string transcripts;
};

Outcome MetricOracle() {
  const auto t0 = Clock::now();
  Rng rng(20240611);
  double worst = 0;
  int degenerate = 0, tied = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const size_t n = 2 + rng.Below(99);
    const bool ties = trial % 2 == 0;
    std::vector<double> x(n), y(n);
    for (size_t i = 0; i < n; ++i) {
      x[i] = ties ? static_cast<double>(rng.Below(5)) : rng.Uniform(-10, 10);
      y[i] = ties ? static_cast<double>(rng.Below(5)) + 0.5 * x[i] : rng.Uniform(1, 5);
    }
    tied += ties;
    worst = std::max(worst, std::abs(Mse(x, y) - NaiveMse(x, y)));
    const double ref_pcc = NaivePearson(x, y);
    const double ref_src = NaivePearson(NaiveRanks(x), NaiveRanks(y));
    if (std::isnan(ref_pcc)) {
      ++degenerate;
      bool threw = false;
      try {
        Pcc(x, y);
      } catch (const DegenerateVarianceError&) {
        threw = true;
      }
      if (!threw) return {false, "constant input accepted on trial " + std::to_string(trial)};
      continue;
    }
    worst = std::max(worst, std::abs(Pcc(x, y) - ref_pcc));
    worst = std::max(worst, std::abs(Src(x, y) - ref_src));
  }
  const double secs = Seconds(t0);
  return {worst <= 1e-9 && secs < 10.0, "max |diff| " + Fmt(worst, 3) + " over 1000 pairs (" + std::to_string(tied) +
                                            " with ties, " + std::to_string(degenerate) + " degenerate), " +
                                            Fmt(secs, 3) + " s"};
}

Outcome ArchitectureAlgebra() {
  Rng rng(5);
  const int L = 4, T = 30, D = 8;
  LayerStack stack(L, T, D, T);
  for (double& v : stack.values()) v = rng.Uniform(-3, 3);
  double saturation_err = 0;
  for (int l = 0; l < L; ++l) {
    VectorXd logits = VectorXd::Zero(L);
    logits(l) = 1000.0;
    saturation_err = std::max(saturation_err, (LayerWeightedSum(stack, logits) - MatrixXd(stack.layer(l))).cwiseAbs().maxCoeff());
  }

  // Dyadic values make every summation order exact.
  bool pool_exact = true;
  for (int valid : {1, 7, T}) {
    MatrixXd frames(T, D);
    for (int t = 0; t < T; ++t) {
      for (int d = 0; d < D; ++d) frames(t, d) = static_cast<double>(rng.Below(2048)) / 256.0;
    }
    const VectorXd pooled = MaskedMeanPool(frames, valid);
    for (int d = 0; d < D; ++d) {
      double sum = 0;
      for (int t = 0; t < valid; ++t) sum += frames(t, d);
      pool_exact = pool_exact && pooled(d) == sum / valid;
    }
  }

  const auto enc = GetEncoder("mock");
  MlpConfig mlp;
  mlp.hidden_size = 32;
  const PredictorState dual = InitPredictor(enc->spec(), ChannelMode::kDual, Target::kConversation, mlp, 1);
  const PredictorState single = InitPredictor(enc->spec(), ChannelMode::kSingleSystem, Target::kSystem, mlp, 1);
  const bool dims = dual.mlp.input_dim == 2 * single.mlp.input_dim &&
                    MlpInputDim(ChannelMode::kDual, 1024) == 2 * MlpInputDim(ChannelMode::kSingleSystem, 1024) &&
                    MlpInputDim(ChannelMode::kMixedMono, 1024) == MlpInputDim(ChannelMode::kSingleSystem, 1024);

  const Waveform system = fixtures::Tone(35.0, 0.4, 220.0);
  const double ref = Forward(single, *enc, ConversationAudio{fixtures::Tone(35.0, 0.2, 150.0), system}).final_mos;
  bool invariant = true;
  Waveform noise;
  noise.samples.resize(system.samples.size());
  for (float& v : noise.samples) v = static_cast<float>(rng.Uniform(-0.9, 0.9));
  for (const Waveform& user : {Waveform{std::vector<float>(system.samples.size(), 0.0f), 16000}, noise,
                               fixtures::Tone(12.0, 0.8, 390.0)}) {
    invariant = invariant && Forward(single, *enc, ConversationAudio{user, system}).final_mos == ref;
  }
  return {saturation_err <= 1e-6 && pool_exact && dims && invariant,
          "saturation err " + Fmt(saturation_err, 3) + ", pooling exact " + (pool_exact ? "yes" : "no") +
              ", dual/single input dim " + std::to_string(dual.mlp.input_dim) + "/" +
              std::to_string(single.mlp.input_dim) + ", single-mode invariant to user channel " +
              (invariant ? "yes" : "no")};
}

Outcome GradientCheck() {
  const auto enc = GetEncoder("mock");
  double worst_logits = 0, worst_mlp = 0;
  for (ChannelMode mode : {ChannelMode::kSingleSystem, ChannelMode::kDual, ChannelMode::kMixedMono}) {
    std::vector<ConversationFeatures> convs;
    convs.push_back(ExtractFeatures(*enc, mode, {fixtures::Tone(2.0, 0.3, 170.0), fixtures::Tone(2.0, 0.6, 260.0)}));
    convs.push_back(ExtractFeatures(*enc, mode, {fixtures::Tone(31.0, 0.5, 300.0), fixtures::Tone(31.0, 0.1, 210.0)}));
    convs.push_back(ExtractFeatures(*enc, mode, {fixtures::Tone(1.0, 0.05, 400.0), fixtures::Tone(1.0, 0.7, 155.0)}));
    convs[0].label = 2.0;
    convs[1].label = 4.5;
    convs[2].label = 3.1;
    std::vector<const ConversationFeatures*> batch;
    for (const auto& c : convs) batch.push_back(&c);

    MlpConfig mlp;
    mlp.hidden_size = 6;
    mlp.dropout = 0.0;
    PredictorState s = InitPredictor(enc->spec(), mode, Target::kConversation, mlp, 77);
    s.logits() << 0.3, -0.6, 1.1, 0.0;
    const LossAndGradient lg = ComputeLossAndGradient(s, batch, nullptr);
    const double h = 1e-5;
    for (size_t i = 0; i < s.params.size(); ++i) {
      PredictorState plus = s, minus = s;
      plus.params[i] += h;
      minus.params[i] -= h;
      const double numeric = (ComputeLossAndGradient(plus, batch, nullptr).loss -
                              ComputeLossAndGradient(minus, batch, nullptr).loss) / (2 * h);
      const double rel = std::abs(numeric - lg.gradient[i]) /
                         std::max({std::abs(numeric), std::abs(lg.gradient[i]), 1e-6});
      (i < static_cast<size_t>(s.num_layers) ? worst_logits : worst_mlp) =
          std::max(i < static_cast<size_t>(s.num_layers) ? worst_logits : worst_mlp, rel);
    }
  }
  return {worst_logits < 1e-4 && worst_mlp < 1e-4,
          "max relative error: layer logits " + Fmt(worst_logits, 3) + ", MLP " + Fmt(worst_mlp, 3) +
              " (single, dual, mixed; step 1e-5)"};
}

PredictorState MockInit(ChannelMode mode, uint64_t seed) {
  return InitPredictor(GetEncoder("mock")->spec(), mode, Target::kConversation, MlpConfig{}, DeriveSeed(seed, 0));
}

Outcome OverfitSanity(const Workspace& ws) {
  const auto t0 = Clock::now();
  const auto enc = GetEncoder("mock");
  const DatasetManifest& train = ws.train.manifest;
  TrainConfig cfg = DefaultTrainConfig("mock", Target::kConversation);
  cfg.seed = 1;
  const TrainResult r = Train(MockInit(ChannelMode::kDual, 1), cfg, *enc, train, train);
  const FitStats fit = TrainSetFit(r.state, *enc, train);
  const double secs = Seconds(t0);
  const auto& rec = r.history.records[r.history.selected_checkpoint];
  return {fit.pcc >= 0.99 && fit.mse < 0.05 && rec.epoch <= 30 && secs < 120.0,
          "selected epoch " + std::to_string(rec.epoch) + "/" + std::to_string(cfg.max_epochs) + ", train PCC " +
              Fmt(fit.pcc) + ", train MSE " + Fmt(fit.mse) + ", " + std::to_string(train.samples.size()) +
              " conversations, " + Fmt(secs, 3) + " s"};
}

HistoryRecord Rec(size_t i, double loss, std::optional<double> pcc) {
  HistoryRecord r;
  r.index = i;
  r.dev_loss = loss;
  r.dev_pcc = pcc;
  return r;
}

Outcome SelectionRules() {
  struct Case {
    std::vector<HistoryRecord> h;
    SelectionRule rule;
    size_t expect;
  };
  const std::vector<Case> cases{
      {{Rec(0, 0.5, {}), Rec(1, 0.3, {}), Rec(2, 0.4, {})}, SelectionRule::kMinDevLoss, 1},
      {{Rec(0, 0.5, {}), Rec(1, 0.2, {}), Rec(2, 0.2, {}), Rec(3, 0.6, {})}, SelectionRule::kMinDevLoss, 1},
      {{Rec(0, 0.4, {}), Rec(1, 0.4, {})}, SelectionRule::kMinDevLoss, 0},
      {{Rec(0, 1, 0.1), Rec(1, 1, 0.4), Rec(2, 1, 0.2)}, SelectionRule::kMaxDevPcc, 1},
      {{Rec(0, 1, 0.1), Rec(1, 1, 0.4), Rec(2, 1, 0.4)}, SelectionRule::kMaxDevPcc, 1},
      {{Rec(0, 1, {}), Rec(1, 1, 0.0), Rec(2, 1, {})}, SelectionRule::kMaxDevPcc, 1},
  };
  int scripted_ok = 0;
  for (const auto& c : cases) scripted_ok += SelectCheckpoint(c.h, c.rule) == c.expect;

  // Pretraining schedule: 700 conversations, batch 1, 5 epochs = 3,500 steps.
  Rng rng(31);
  auto make = [&](int n) {
    FeatureSet out(n);
    for (int i = 0; i < n; ++i) {
      SegmentFeatures f;
      f.system = MatrixXd::NullaryExpr(8, 4, [&] { return rng.Uniform(-1, 1); });
      out[i].id = std::to_string(i);
      out[i].label = 3.0 + f.system.row(1).mean();
      out[i].segments.push_back(std::move(f));
    }
    return out;
  };
  const FeatureSet aug = make(700), real = make(10), dev = make(10);
  MlpConfig mlp;
  mlp.hidden_size = 4;
  const PredictorState init =
      InitPredictor(GetEncoder("mock")->spec(), ChannelMode::kSingleSystem, Target::kConversation, mlp, 3);
  PretrainConfig pre;
  pre.batch_size = 1;
  pre.epochs = 5;
  TrainConfig ft;
  ft.batch_size = 5;
  ft.max_epochs = 3;
  const PretrainResult r = PretrainThenFinetune(init, pre, aug, ft, real, dev);
  std::vector<long> steps;
  size_t best = 0;
  for (size_t i = 0; i < r.pretrain.records.size(); ++i) {
    steps.push_back(r.pretrain.records[i].step);
    if (r.pretrain.records[i].dev_pcc.value_or(-2) > r.pretrain.records[best].dev_pcc.value_or(-2)) best = i;
  }
  std::vector<double> labels;
  for (const auto& c : dev) labels.push_back(c.label);
  const bool schedule = steps == std::vector<long>{1000, 2000, 3000, 3500};
  const bool chosen = r.pretrain.selected_checkpoint == best &&
                      NaivePearson(PredictFeatures(r.pretrain_state, dev), labels) ==
                          NaivePearson(PredictFeatures(r.pretrain_state, dev), labels) &&
                      std::abs(Pcc(PredictFeatures(r.pretrain_state, dev), labels) -
                               *r.pretrain.records[best].dev_pcc) == 0.0;
  std::string steps_str;
  for (long s : steps) steps_str += (steps_str.empty() ? "" : ",") + std::to_string(s);
  return {scripted_ok == static_cast<int>(cases.size()) && schedule && chosen,
          std::to_string(scripted_ok) + "/" + std::to_string(cases.size()) +
              " scripted histories (incl. ties), pretrain evals at steps " + steps_str + ", selected " +
              std::to_string(r.pretrain.selected_checkpoint) + " (argmax PCC " + std::to_string(best) + ")"};
}

Outcome AblationMatrix(const Workspace& ws) {
  const fs::path root = ws.root / "ablation";
  std::vector<nlohmann::ordered_json> rows;
  for (const char* target : {"conversation", "system"}) {
    for (const char* mode : {"single", "dual", "mixed"}) {
      const fs::path run = root / (std::string(mode) + "-" + target);
      if (Cli({"train", "--manifest", ws.train.manifest_path, "--dev-manifest", ws.dev.manifest_path, "--encoder",
               "mock", "--channels", mode, "--target", target, "--epochs", "5", "--seed", "1", "--out", run}) != 0 ||
          Cli({"evaluate", "--checkpoint", run, "--manifest", ws.eval.manifest_path, "--out", run / "eval"}) != 0) {
        return {false, std::string("command failed for ") + mode + "/" + target};
      }
      rows.push_back(nlohmann::ordered_json::parse(ReadText(run / "eval" / "eval.json")));
    }
  }
  std::ofstream table(root / "ablation.jsonl");
  const std::vector<std::string> schema{"dataset", "target", "channel_mode", "encoder", "pcc", "src", "mse", "n"};
  std::map<std::string, int> cells;
  bool schema_ok = true;
  for (const auto& row : rows) {
    table << row.dump() << '\n';
    std::vector<std::string> keys;
    for (auto it = row.begin(); it != row.end(); ++it) keys.push_back(it.key());
    schema_ok = schema_ok && keys == schema;
    ++cells[row["channel_mode"].get<std::string>() + "/" + row["target"].get<std::string>()];
  }

  // The mixed-mono checkpoint must see exactly mix_channels(user, system).
  const auto enc = GetEncoder("mock");
  const PredictorState mixed = LoadState(ResolveCheckpoint(root / "mixed-conversation"));
  PredictorState as_single = mixed;
  as_single.channel_mode = ChannelMode::kSingleSystem;
  bool mix_ok = mixed.channel_mode == ChannelMode::kMixedMono;
  for (const auto& s : ws.eval.manifest.samples) {
    const ConversationAudio audio = LoadConversationAudio(ws.eval.manifest, s);
    const Waveform mix = MixChannels(audio.user, audio.system);
    mix_ok = mix_ok && Forward(mixed, *enc, audio).final_mos ==
                           Forward(as_single, *enc, ConversationAudio{audio.user, mix}).final_mos;
  }
  for (const auto& row : rows) std::cout << "    " << row.dump() << '\n';
  return {rows.size() == 6 && cells.size() == 6 && schema_ok && mix_ok,
          std::to_string(cells.size()) + " distinct {single,dual,mixed}x{conversation,system} rows, schema " +
              (schema_ok ? "ok" : "mismatch") + ", mixed rows use mix_channels audio " + (mix_ok ? "yes" : "no") +
              "; table at " + (root / "ablation.jsonl").string()};
}

Outcome BaselineEndToEnd(const Workspace& ws) {
  const fs::path out = ws.root / "baseline";
  if (Cli({"baseline", "--manifest", ws.eval.manifest_path, "--spans", ws.eval.spans_path, "--out", out}) != 0) {
    return {false, "baseline command failed"};
  }
  std::map<std::string, double> ours;
  std::istringstream jl(ReadText(out / "baseline.jsonl"));
  for (std::string line; std::getline(jl, line);) {
    const auto j = nlohmann::json::parse(line);
    ours[j["target"].get<std::string>() + "/" + j["stat"].get<std::string>()] = j["pcc"].get<double>();
  }

  const std::string cmd = std::string(CONVNAT_PYTHON) + " " + CONVNAT_BASELINE_ORACLE + " --manifest '" +
                          ws.eval.manifest_path.string() + "' --spans '" + ws.eval.spans_path.string() + "'";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (pipe == nullptr) return {false, "cannot run oracle script"};
  std::string text;
  char buf[512];
  while (size_t n = std::fread(buf, 1, sizeof(buf), pipe)) text.append(buf, n);
  if (::pclose(pipe) != 0) return {false, "oracle script failed: " + cmd};
  std::map<std::string, double> oracle;
  std::istringstream ol(text);
  for (std::string line; std::getline(ol, line);) {
    const auto j = nlohmann::json::parse(line);
    oracle[j["target"].get<std::string>() + "/" + j["stat"].get<std::string>()] = j["pcc"].get<double>();
  }
  double worst = 0;
  bool keys_match = ours.size() == 8 && oracle.size() == 8;
  for (const auto& [k, v] : oracle) {
    if (!ours.count(k)) {
      keys_match = false;
      continue;
    }
    worst = std::max(worst, std::abs(ours[k] - v));
  }

  size_t checked = 0;
  bool ordered = true;
  const SidecarSpanSource spans(LoadSpanSidecar(ws.eval.spans_path));
  for (Target t : {Target::kConversation, Target::kSystem}) {
    const BaselineReport r = RunBaseline(RmsStubPredictor(), ws.eval.manifest, t, spans);
    for (const auto& c : r.conversations) {
      const double lo = c.aggregated.at(AggregationStat::kMin), hi = c.aggregated.at(AggregationStat::kMax);
      for (auto s : {AggregationStat::kMean, AggregationStat::kMedian}) {
        ordered = ordered && lo <= c.aggregated.at(s) && c.aggregated.at(s) <= hi;
      }
      ++checked;
    }
  }
  return {keys_match && worst <= 1e-9 && ordered,
          "8-cell PCC table vs oracle script max |diff| " + Fmt(worst, 3) + ", min<=mean/median<=max on " +
              std::to_string(checked) + " conversation rows " + (ordered ? "holds" : "violated")};
}

Outcome AugmentationContract(const Workspace& ws) {
  const auto t0 = Clock::now();
  const fs::path out = ws.root / "augmented";
  AugmentPlan plan;
  plan.source = ws.train.manifest;
  plan.transcripts = LoadTranscripts(ws.transcripts);
  plan.target_hours = 0.1;
  plan.seed = 1;
  const DatasetManifest aug = BuildAugmentedManifest(plan, PerturbationSynthesizer(), out);
  bool inherited = !aug.samples.empty();
  double total = 0;
  for (const auto& s : aug.samples) {
    const ConversationSample* ref = FindSample(ws.train.manifest, s.reference_id.value_or(""));
    inherited = inherited && ref != nullptr && s.origin == Origin::kSynthetic &&
                s.conversation_label == ref->conversation_label && s.system_label == ref->system_label;
    total += s.duration_s;
  }
  const double target_s = plan.target_hours * 3600;
  const bool bound = total >= target_s && total - aug.samples.back().duration_s < target_s;

  const auto enc = GetEncoder("mock");
  PretrainConfig pre;
  pre.seed = 1;
  TrainConfig ft = DefaultTrainConfig("mock", Target::kConversation);
  ft.seed = 1;
  const PretrainResult r = PretrainThenFinetune(MockInit(ChannelMode::kDual, 1), pre, aug, ft, *enc,
                                                ws.train.manifest, ws.train.manifest);
  const FitStats fit = TrainSetFit(r.state, *enc, ws.train.manifest);
  return {inherited && bound && fit.pcc >= 0.99 && fit.mse < 0.05,
          std::to_string(aug.samples.size()) + " synthetic samples, " + Fmt(total, 6) + " s for a " +
              Fmt(target_s, 6) + " s target, labels inherited " + (inherited ? "verbatim" : "INCORRECTLY") +
              "; after pretrain+finetune train PCC " + Fmt(fit.pcc) + ", MSE " + Fmt(fit.mse) + ", " +
              Fmt(Seconds(t0), 3) + " s"};
}

Outcome DeterminismAndPersistence(const Workspace& ws) {
  const fs::path root = ws.root / "determinism";
  for (const char* run : {"a", "b"}) {
    if (Cli({"train", "--manifest", ws.train.manifest_path, "--dev-manifest", ws.dev.manifest_path, "--encoder",
             "mock", "--channels", "dual", "--epochs", "4", "--seed", "11", "--out", root / run}) != 0 ||
        Cli({"evaluate", "--checkpoint", root / run, "--manifest", ws.eval.manifest_path, "--out",
             root / run / "eval"}) != 0) {
      return {false, "train/evaluate failed"};
    }
  }
  const bool history_same =
      ReadText(root / "a" / "history.jsonl") == ReadText(root / "b" / "history.jsonl") &&
      !ReadText(root / "a" / "history.jsonl").empty();
  const bool eval_same = ReadText(root / "a" / "eval" / "eval.json") == ReadText(root / "b" / "eval" / "eval.json");

  const auto enc = GetEncoder("mock");
  TrainConfig cfg = DefaultTrainConfig("mock", Target::kConversation);
  cfg.max_epochs = 3;
  const TrainResult r = Train(MockInit(ChannelMode::kDual, 2), cfg, *enc, ws.train.manifest, ws.dev.manifest);
  SaveState(r.state, root / "roundtrip");
  const PredictorState loaded = LoadState(root / "roundtrip");
  size_t identical = 0;
  for (const auto& s : ws.eval.manifest.samples) {
    const Prediction a = Forward(r.state, *enc, ws.eval.manifest, s);
    const Prediction b = Forward(loaded, *enc, ws.eval.manifest, s);
    identical += a.final_mos == b.final_mos && a.per_segment_scores == b.per_segment_scores;
  }
  const bool persisted = identical == ws.eval.manifest.samples.size() && loaded.params == r.state.params;
  return {history_same && eval_same && persisted,
          std::string("history.jsonl ") + (history_same ? "identical" : "DIFFERS") + ", eval.json " +
              (eval_same ? "identical" : "DIFFERS") + ", reloaded predictions bit-identical on " +
              std::to_string(identical) + "/" + std::to_string(ws.eval.manifest.samples.size()) + " samples"};
}

int Main() {
  Workspace ws;
  ws.root = fs::temp_directory_path() / ("convnat-acceptance-" + std::to_string(::getpid()));
  fs::remove_all(ws.root);
  fs::create_directories(ws.root);
  fixtures::Options opt;
  ws.train = fixtures::WriteFixtureSet(ws.root, opt);
  opt.name = "dev";
  opt.num_conversations = 8;
  opt.seed = 8;
  ws.dev = fixtures::WriteFixtureSet(ws.root, opt);
  opt.name = "eval";
  opt.num_conversations = 12;
  opt.seed = 9;
  ws.eval = fixtures::WriteFixtureSet(ws.root, opt);
  ws.transcripts = (ws.root / "transcripts").string();
  fs::create_directories(ws.transcripts);
  std::ofstream(ws.root / "transcripts" / "t1.txt") << "U: can you book a table\nS: sure, for how many\nU: two\n";
  std::ofstream(ws.root / "transcripts" / "t2.txt") << "S: hello, how can I help\nU: what's the weather\n";

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"metric oracle equivalence", MetricOracle},
      {"architecture algebra", ArchitectureAlgebra},
      {"gradient check", GradientCheck},
      {"overfit sanity", [&] { return OverfitSanity(ws); }},
      {"checkpoint-selection rules", SelectionRules},
      {"ablation matrix fidelity", [&] { return AblationMatrix(ws); }},
      {"baseline harness end-to-end", [&] { return BaselineEndToEnd(ws); }},
      {"augmentation contract", [&] { return AugmentationContract(ws); }},
      {"determinism and persistence", [&] { return DeterminismAndPersistence(ws); }},
  };
  int failures = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << i + 1 << "] " << criteria[i].first << ": " << o.detail
              << std::endl;
  }
  std::cout << (criteria.size() - failures) << "/" << criteria.size() << " acceptance criteria passed" << std::endl;
  if (failures == 0) fs::remove_all(ws.root);
  return failures == 0 ? 0 : 1;
}

}  // namespace
}  // namespace convnat

int main() { return convnat::Main(); }
