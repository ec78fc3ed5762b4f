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

#include "convnat/cli.h"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "convnat/augmentor.h"
#include "convnat/baseline_harness.h"
#include "convnat/corpus.h"
#include "convnat/encoder_hub.h"
#include "convnat/errors.h"
#include "convnat/eval_metrics.h"
#include "convnat/naturalness_model.h"
#include "convnat/trainer.h"
#include "json.hpp"

namespace convnat {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitDomain = 1;
constexpr int kExitUsage = 2;

void WriteJsonFile(const fs::path& path, const ordered_json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << j.dump(2) << '\n';
  if (!out) throw Error("cannot write " + path.string());
}

void RequireEncoderName(const std::string& name) {
  if (!IsRegisteredEncoder(name)) {
    std::string known;
    for (const auto& n : RegisteredEncoders()) known += (known.empty() ? "" : ", ") + n;
    throw UsageError("unknown encoder '" + name + "' (known: " + known + ")");
  }
}

// Flags shared by train and pretrain.
struct TrainFlags {
  std::string manifest;
  std::string dev_manifest;
  std::string encoder = "mock";
  std::string channels = "dual";
  std::string target = "conversation";
  uint64_t seed = 0;
  std::string out;
  int epochs = 30;
  int batch_size = 0;        // 0: encoder-family default
  double learning_rate = 0;  // 0: encoder-family default
  int hidden_size = 768;
  double dropout = 0.1;
  int patience = 0;
};

void AddTrainFlags(CLI::App* cmd, TrainFlags& f) {
  cmd->add_option("--manifest", f.manifest, "Training manifest (JSONL)")->required();
  cmd->add_option("--dev-manifest", f.dev_manifest, "Dev manifest used for checkpoint selection")->required();
  cmd->add_option("--encoder", f.encoder, "Encoder name")->capture_default_str();
  cmd->add_option("--channels", f.channels, "single|dual|mixed")->capture_default_str();
  cmd->add_option("--target", f.target, "conversation|system")->capture_default_str();
  cmd->add_option("--seed", f.seed, "Seed for initialization, shuffling and dropout")->capture_default_str();
  cmd->add_option("--out", f.out, "Run directory")->required();
  cmd->add_option("--epochs", f.epochs, "Training epochs")->capture_default_str();
  cmd->add_option("--batch-size", f.batch_size, "Conversations per batch (0 = encoder default)");
  cmd->add_option("--lr", f.learning_rate, "Learning rate (0 = encoder default)");
  cmd->add_option("--hidden-size", f.hidden_size, "MLP hidden size")->capture_default_str();
  cmd->add_option("--dropout", f.dropout, "MLP dropout rate")->capture_default_str();
  cmd->add_option("--patience", f.patience, "Stop after N epochs without dev improvement (0 = off)");
}

TrainConfig ResolveTrainConfig(const TrainFlags& f, Target target) {
  TrainConfig cfg = DefaultTrainConfig(f.encoder, target);
  cfg.max_epochs = f.epochs;
  if (f.batch_size > 0) cfg.batch_size = f.batch_size;
  if (f.learning_rate > 0) cfg.learning_rate = f.learning_rate;
  cfg.seed = f.seed;
  cfg.patience = f.patience;
  if (cfg.max_epochs <= 0) throw UsageError("--epochs must be positive");
  return cfg;
}

ordered_json CommonJson(const TrainFlags& f) {
  ordered_json j;
  j["manifest"] = f.manifest;
  j["dev_manifest"] = f.dev_manifest;
  j["encoder"] = f.encoder;
  j["channels"] = ToString(ParseChannelMode(f.channels));
  j["target"] = f.target;
  j["seed"] = f.seed;
  j["out"] = f.out;
  j["mlp"] = {{"num_hidden_layers", 3}, {"hidden_size", f.hidden_size}, {"dropout", f.dropout},
              {"activation", "gelu"}};
  return j;
}

PredictorState InitialState(const TrainFlags& f, const Encoder& encoder, Target target) {
  MlpConfig mlp;
  mlp.hidden_size = f.hidden_size;
  mlp.dropout = f.dropout;
  return InitPredictor(encoder.spec(), ParseChannelMode(f.channels), target, mlp, DeriveSeed(f.seed, 0));
}

void SaveHistoryAndCheckpoint(const fs::path& dir, const TrainHistory& history, const PredictorState& state) {
  WriteHistoryJsonl(history, dir / "history.jsonl");
  const std::string rel = "ckpt/" + std::to_string(history.selected_checkpoint);
  SaveState(state, dir / rel);
  ordered_json sel;
  sel["checkpoint"] = rel;
  sel["index"] = history.selected_checkpoint;
  sel["rule"] = ToString(history.rule);
  const auto& rec = history.records.at(history.selected_checkpoint);
  sel["epoch"] = rec.epoch;
  sel["step"] = rec.step;
  sel["dev_loss"] = rec.dev_loss;
  WriteJsonFile(dir / "selected.json", sel);
}

DatasetManifest LoadFiltered(const std::string& path, Target target) {
  return FilterByTarget(LoadManifest(path), target);
}

int CmdValidate(const std::string& manifest) {
  const ManifestCheck check = CheckManifest(manifest);
  for (const auto& issue : check.issues) {
    std::cout << manifest;
    if (issue.line > 0) std::cout << ":" << issue.line;
    std::cout << ": ";
    if (!issue.sample_id.empty()) std::cout << "sample '" << issue.sample_id << "': ";
    std::cout << issue.message << '\n';
  }
  const auto& m = check.manifest;
  std::cout << m.samples.size() << " samples, conversation labels " << m.target_coverage.at(Target::kConversation)
            << ", system labels " << m.target_coverage.at(Target::kSystem) << ", " << check.issues.size()
            << " issue(s)\n";
  return check.issues.empty() ? kExitOk : kExitDomain;
}

int CmdTrain(const TrainFlags& f) {
  RequireEncoderName(f.encoder);
  const Target target = ParseTarget(f.target);
  const TrainConfig cfg = ResolveTrainConfig(f, target);
  const fs::path out(f.out);

  ordered_json config;
  config["command"] = "train";
  config.update(CommonJson(f));
  config["train"] = cfg.ToJson();
  WriteJsonFile(out / "config.json", config);

  const auto encoder = GetEncoder(f.encoder);
  const DatasetManifest train = LoadFiltered(f.manifest, target);
  const DatasetManifest dev = LoadFiltered(f.dev_manifest, target);
  PredictorState init = InitialState(f, *encoder, target);
  const TrainResult result = Train(std::move(init), cfg, *encoder, train, dev);
  SaveHistoryAndCheckpoint(out, result.history, result.state);
  const auto& rec = result.history.records[result.history.selected_checkpoint];
  std::cout << "selected checkpoint " << result.history.selected_checkpoint << " (epoch " << rec.epoch
            << ", dev loss " << rec.dev_loss << ")\n";
  return kExitOk;
}

struct PretrainFlags {
  TrainFlags ft;
  std::string aug_manifest;
  int epochs = 5;
  int batch_size = 32;
  double learning_rate = 0.001;
  int eval_every = 1000;
};

int CmdPretrain(const PretrainFlags& f) {
  RequireEncoderName(f.ft.encoder);
  const Target target = ParseTarget(f.ft.target);
  const TrainConfig ft_cfg = ResolveTrainConfig(f.ft, target);
  PretrainConfig pre_cfg;
  pre_cfg.batch_size = f.batch_size;
  pre_cfg.learning_rate = f.learning_rate;
  pre_cfg.epochs = f.epochs;
  pre_cfg.eval_every_steps = f.eval_every;
  pre_cfg.seed = f.ft.seed;
  pre_cfg.target = target;
  if (pre_cfg.epochs <= 0 || pre_cfg.batch_size <= 0 || pre_cfg.eval_every_steps <= 0) {
    throw UsageError("pretrain epochs, batch size and eval interval must be positive");
  }
  const fs::path out(f.ft.out);

  ordered_json config;
  config["command"] = "pretrain";
  config.update(CommonJson(f.ft));
  config["aug_manifest"] = f.aug_manifest;
  config["pretrain"] = pre_cfg.ToJson();
  config["finetune"] = ft_cfg.ToJson();
  WriteJsonFile(out / "config.json", config);

  const auto encoder = GetEncoder(f.ft.encoder);
  const DatasetManifest aug = LoadFiltered(f.aug_manifest, target);
  const DatasetManifest train = LoadFiltered(f.ft.manifest, target);
  const DatasetManifest dev = LoadFiltered(f.ft.dev_manifest, target);
  PredictorState init = InitialState(f.ft, *encoder, target);
  const PretrainResult result = PretrainThenFinetune(std::move(init), pre_cfg, aug, ft_cfg, *encoder, train, dev);
  SaveHistoryAndCheckpoint(out / "pretrain", result.pretrain, result.pretrain_state);
  SaveHistoryAndCheckpoint(out, result.finetune, result.state);
  std::cout << "pretrain selected " << result.pretrain.selected_checkpoint << " (step "
            << result.pretrain.records[result.pretrain.selected_checkpoint].step << "), fine-tune selected "
            << result.finetune.selected_checkpoint << "\n";
  return kExitOk;
}

struct EvalFlags {
  std::string checkpoint;
  std::string manifest;
  std::string target;  // empty: the checkpoint's trained target
  std::string dataset;
  std::string out;
  bool clamp = false;
};

struct LoadedModel {
  PredictorState state;
  std::shared_ptr<const Encoder> encoder;
  Target target;
};

LoadedModel LoadModel(const EvalFlags& f) {
  LoadedModel m{LoadState(ResolveCheckpoint(f.checkpoint)), nullptr, Target::kConversation};
  m.encoder = GetEncoder(m.state.encoder_name);
  m.target = f.target.empty() ? m.state.trained_target : ParseTarget(f.target);
  return m;
}

ordered_json EvalConfig(const char* command, const EvalFlags& f) {
  ordered_json j;
  j["command"] = command;
  j["checkpoint"] = f.checkpoint;
  j["manifest"] = f.manifest;
  j["target"] = f.target;
  j["dataset"] = f.dataset;
  j["out"] = f.out;
  j["clamp"] = f.clamp;
  return j;
}

int CmdEvaluate(const EvalFlags& f) {
  const LoadedModel model = LoadModel(f);
  DatasetManifest dataset = FilterByTarget(LoadManifest(f.manifest), model.target);
  if (!f.dataset.empty()) dataset.name = f.dataset;
  const fs::path out(f.out);
  WriteJsonFile(out / "config.json", EvalConfig("evaluate", f));
  const EvalOutput eval = Evaluate(model.state, *model.encoder, dataset, model.target);
  WriteJsonFile(out / "eval.json", eval.result.ToJson());
  std::cout << eval.result.ToJson().dump() << '\n';
  return kExitOk;
}

int CmdScore(const EvalFlags& f) {
  const LoadedModel model = LoadModel(f);
  const DatasetManifest dataset = LoadManifest(f.manifest);
  const fs::path out(f.out);
  WriteJsonFile(out / "config.json", EvalConfig("score", f));
  fs::create_directories(out);
  std::ofstream scores(out / "scores.jsonl", std::ios::binary);
  auto report = [&](double v) { return f.clamp ? std::clamp(v, kMinMos, kMaxMos) : v; };
  for (const auto& s : dataset.samples) {
    const Prediction p = Forward(model.state, *model.encoder, dataset, s);
    ordered_json j;
    j["id"] = s.id;
    j["final_mos"] = report(p.final_mos);
    std::vector<double> segs;
    for (double v : p.per_segment_scores) segs.push_back(report(v));
    j["per_segment_scores"] = segs;
    scores << j.dump() << '\n';
  }
  if (!scores) throw Error("cannot write " + (out / "scores.jsonl").string());
  std::cout << "scored " << dataset.samples.size() << " samples\n";
  return kExitOk;
}

int CmdReport(const EvalFlags& f) {
  const LoadedModel model = LoadModel(f);
  DatasetManifest dataset = FilterByTarget(LoadManifest(f.manifest), model.target);
  if (!f.dataset.empty()) dataset.name = f.dataset;
  const fs::path out(f.out);
  WriteJsonFile(out / "config.json", EvalConfig("report", f));
  const EvalOutput eval = Evaluate(model.state, *model.encoder, dataset, model.target);
  WriteScatterCsv(eval, out / "scatter.csv");
  WriteJsonFile(out / "eval.json", eval.result.ToJson());
  std::cout << "wrote " << eval.ids.size() << " points\n";
  return kExitOk;
}

struct BaselineFlags {
  std::string manifest;
  std::string target = "all";
  std::string predictor = "rms-stub";
  std::string predictor_cmd;
  std::string spans;
  std::string pooling = "pooled";
  std::string out;
  VadConfig vad;
};

int CmdBaseline(const BaselineFlags& f) {
  std::vector<Target> targets;
  if (f.target == "all") {
    targets = {Target::kConversation, Target::kSystem};
  } else {
    targets = {ParseTarget(f.target)};
  }
  ConversationPooling pooling;
  if (f.pooling == "pooled") {
    pooling = ConversationPooling::kPooled;
  } else if (f.pooling == "channel-mean") {
    pooling = ConversationPooling::kChannelMean;
  } else {
    throw UsageError("unknown pooling '" + f.pooling + "' (expected pooled|channel-mean)");
  }
  std::unique_ptr<UtterancePredictor> pred;
  if (!f.predictor_cmd.empty()) {
    pred = std::make_unique<SubprocessPredictor>(f.predictor_cmd, f.predictor == "rms-stub" ? "subprocess" : f.predictor);
  } else if (f.predictor == "rms-stub") {
    pred = std::make_unique<RmsStubPredictor>();
  } else {
    throw UsageError("unknown predictor '" + f.predictor + "' (use rms-stub or --predictor-cmd)");
  }

  const fs::path out(f.out);
  ordered_json config;
  config["command"] = "baseline";
  config["manifest"] = f.manifest;
  config["target"] = f.target;
  config["predictor"] = pred->name();
  config["predictor_cmd"] = f.predictor_cmd;
  config["spans"] = f.spans;
  config["pooling"] = f.pooling;
  config["vad"] = {{"frame_seconds", f.vad.frame_seconds},
                   {"threshold_dbfs", f.vad.threshold_dbfs},
                   {"min_speech_seconds", f.vad.min_speech_seconds},
                   {"min_gap_seconds", f.vad.min_gap_seconds}};
  config["out"] = f.out;
  WriteJsonFile(out / "config.json", config);

  const DatasetManifest dataset = LoadManifest(f.manifest);
  std::unique_ptr<SpanSource> spans;
  if (!f.spans.empty()) {
    spans = std::make_unique<SidecarSpanSource>(LoadSpanSidecar(f.spans));
  } else {
    spans = std::make_unique<VadSpanSource>(f.vad);
  }
  std::vector<BaselineReport> reports;
  for (Target t : targets) reports.push_back(RunBaseline(*pred, dataset, t, *spans, pooling));
  WriteBaselineJsonl(reports, out / "baseline.jsonl");
  WriteBaselineCsv(reports, out / "baseline.csv");
  std::cout << std::setprecision(6);
  for (const auto& r : reports) {
    std::cout << r.dataset << " " << r.target << ":";
    for (AggregationStat s : kAllStats) std::cout << " " << ToString(s) << "=" << r.pcc.at(s);
    std::cout << '\n';
  }
  return kExitOk;
}

struct AugmentFlags {
  std::string manifest;
  std::string transcripts;
  double hours = 0.1;
  uint64_t seed = 0;
  std::string target = "conversation";
  std::string out;
};

int CmdAugment(const AugmentFlags& f) {
  const fs::path out(f.out);
  ordered_json config;
  config["command"] = "augment";
  config["manifest"] = f.manifest;
  config["transcripts"] = f.transcripts;
  config["hours"] = f.hours;
  config["seed"] = f.seed;
  config["target"] = f.target;
  config["synthesizer"] = "perturbation";
  config["out"] = f.out;
  if (!(f.hours > 0.0)) throw UsageError("--hours must be positive");
  WriteJsonFile(out / "config.json", config);

  AugmentPlan plan;
  plan.source = LoadManifest(f.manifest);
  plan.transcripts = LoadTranscripts(f.transcripts);
  plan.target_hours = f.hours;
  plan.seed = f.seed;
  plan.target = ParseTarget(f.target);
  const DatasetManifest m = BuildAugmentedManifest(plan, PerturbationSynthesizer(), out);
  double total = 0.0;
  for (const auto& s : m.samples) total += s.duration_s;
  std::cout << "wrote " << m.samples.size() << " synthetic samples (" << total << " s) to "
            << (out / "augmented.jsonl").string() << '\n';
  return kExitOk;
}

}  // namespace

fs::path ResolveCheckpoint(const fs::path& path) {
  if (fs::is_regular_file(path / "state.json")) return path;
  const auto sel = path / "selected.json";
  if (fs::is_regular_file(sel)) {
    std::ifstream in(sel);
    try {
      const auto j = nlohmann::json::parse(in);
      return path / j.at("checkpoint").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw CheckpointError("corrupt " + sel.string() + ": " + e.what());
    }
  }
  return path;
}

int RunCli(int argc, const char* const* argv) {
  CLI::App app{"Conversation-level speech naturalness: training, evaluation and baselines"};
  app.set_config("--config", "", "TOML/INI file with option values (flags take precedence)");
  app.require_subcommand(1);
  app.fallthrough();

  std::string validate_manifest;
  auto* validate = app.add_subcommand("validate", "Check a manifest and its audio files");
  validate->add_option("--manifest", validate_manifest, "Manifest (JSONL)")->required();

  TrainFlags train_flags;
  auto* train = app.add_subcommand("train", "Train a predictor; select the epoch with the lowest dev loss");
  AddTrainFlags(train, train_flags);

  PretrainFlags pre_flags;
  auto* pretrain = app.add_subcommand("pretrain", "Pretrain on augmented data, then fine-tune on real data");
  AddTrainFlags(pretrain, pre_flags.ft);
  pretrain->add_option("--aug-manifest", pre_flags.aug_manifest, "Augmented (synthetic) manifest")->required();
  pretrain->add_option("--pretrain-epochs", pre_flags.epochs)->capture_default_str();
  pretrain->add_option("--pretrain-batch-size", pre_flags.batch_size)->capture_default_str();
  pretrain->add_option("--pretrain-lr", pre_flags.learning_rate)->capture_default_str();
  pretrain->add_option("--eval-every", pre_flags.eval_every, "Optimizer steps between dev evaluations")
      ->capture_default_str();

  EvalFlags eval_flags;
  auto add_eval = [&](const char* name, const char* help) {
    auto* cmd = app.add_subcommand(name, help);
    cmd->add_option("--checkpoint", eval_flags.checkpoint, "Checkpoint or run directory")->required();
    cmd->add_option("--manifest", eval_flags.manifest, "Manifest (JSONL)")->required();
    cmd->add_option("--target", eval_flags.target, "conversation|system (default: trained target)");
    cmd->add_option("--dataset", eval_flags.dataset, "Dataset name for the result row");
    cmd->add_option("--out", eval_flags.out, "Output directory")->required();
    return cmd;
  };
  auto* evaluate = add_eval("evaluate", "Emit one PCC/SRC/MSE result row");
  auto* score = add_eval("score", "Per-sample final MOS and per-segment scores");
  score->add_flag("--clamp", eval_flags.clamp, "Clamp reported scores to [1, 5]");
  auto* report = add_eval("report", "Per-sample label/prediction CSV for scatter plots");

  BaselineFlags base_flags;
  auto* baseline = app.add_subcommand("baseline", "Utterance-level predictor aggregated per conversation");
  baseline->add_option("--manifest", base_flags.manifest, "Manifest (JSONL)")->required();
  baseline->add_option("--target", base_flags.target, "conversation|system|all")->capture_default_str();
  baseline->add_option("--predictor", base_flags.predictor, "rms-stub, or a name for --predictor-cmd")
      ->capture_default_str();
  baseline->add_option("--predictor-cmd", base_flags.predictor_cmd, "Command run as `<cmd> <utterance.wav>`");
  baseline->add_option("--spans", base_flags.spans, "Utterance span sidecar (JSONL); energy VAD if absent");
  baseline->add_option("--pooling", base_flags.pooling, "pooled|channel-mean")->capture_default_str();
  baseline->add_option("--vad-threshold-db", base_flags.vad.threshold_dbfs)->capture_default_str();
  baseline->add_option("--vad-frame", base_flags.vad.frame_seconds)->capture_default_str();
  baseline->add_option("--vad-min-speech", base_flags.vad.min_speech_seconds)->capture_default_str();
  baseline->add_option("--vad-min-gap", base_flags.vad.min_gap_seconds)->capture_default_str();
  baseline->add_option("--out", base_flags.out, "Output directory")->required();

  AugmentFlags aug_flags;
  auto* augment = app.add_subcommand("augment", "Build a synthetic pretraining manifest");
  augment->add_option("--manifest", aug_flags.manifest, "Source (train) manifest")->required();
  augment->add_option("--transcripts", aug_flags.transcripts, "Directory of U:/S: transcripts")->required();
  augment->add_option("--hours", aug_flags.hours, "Target hours of audio")->capture_default_str();
  augment->add_option("--seed", aug_flags.seed)->capture_default_str();
  augment->add_option("--target", aug_flags.target, "Label references must carry")->capture_default_str();
  augment->add_option("--out", aug_flags.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*validate) return CmdValidate(validate_manifest);
    if (*train) return CmdTrain(train_flags);
    if (*pretrain) return CmdPretrain(pre_flags);
    if (*evaluate) return CmdEvaluate(eval_flags);
    if (*score) return CmdScore(eval_flags);
    if (*report) return CmdReport(eval_flags);
    if (*baseline) return CmdBaseline(base_flags);
    if (*augment) return CmdAugment(aug_flags);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDomain;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDomain;
  }
  return kExitUsage;
}

}  // namespace convnat
