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

#include "convnat/trainer.h"

#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "convnat/audio_ops.h"
#include "convnat/errors.h"
#include "convnat/eval_metrics.h"
#include "convnat/random.h"

namespace convnat {
namespace {

nlohmann::ordered_json AdamJson(const AdamConfig& a) {
  return {{"name", "adam"}, {"beta1", a.beta1}, {"beta2", a.beta2}, {"epsilon", a.epsilon}};
}

std::vector<double> Labels(const FeatureSet& set) {
  std::vector<double> out;
  out.reserve(set.size());
  for (const auto& c : set) out.push_back(c.label);
  return out;
}

struct DevScore {
  double loss;
  std::optional<double> pcc;
};

DevScore ScoreDev(const PredictorState& state, const FeatureSet& dev) {
  const auto preds = PredictFeatures(state, dev);
  const auto labels = Labels(dev);
  DevScore s{Mse(preds, labels), std::nullopt};
  if (dev.size() >= 2) {
    try {
      s.pcc = Pcc(preds, labels);
    } catch (const DegenerateVarianceError&) {
    }
  }
  return s;
}

// Runs one epoch of minibatch updates; returns the mean training loss over
// conversations. `after_step` is invoked after every optimizer step.
template <typename AfterStep>
double RunEpoch(PredictorState& state, Adam& adam, const FeatureSet& train, int batch_size, double lr,
                Rng& shuffle_rng, Rng* dropout_rng, int epoch, AfterStep&& after_step) {
  std::vector<size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  shuffle_rng.Shuffle(order);
  double loss_sum = 0.0;
  std::vector<const ConversationFeatures*> batch;
  for (size_t begin = 0; begin < order.size(); begin += static_cast<size_t>(batch_size)) {
    const size_t end = std::min(order.size(), begin + static_cast<size_t>(batch_size));
    batch.clear();
    for (size_t i = begin; i < end; ++i) batch.push_back(&train[order[i]]);
    const LossAndGradient lg = ComputeLossAndGradient(state, batch, dropout_rng);
    if (!std::isfinite(lg.loss)) {
      std::ostringstream os;
      os << "non-finite training loss at epoch " << epoch << ", step " << adam.steps() + 1
         << "; check labels and learning rate";
      throw TrainingError(os.str());
    }
    adam.Step(state.params, lg.gradient, lr);
    loss_sum += lg.loss * static_cast<double>(batch.size());
    after_step();
  }
  return loss_sum / static_cast<double>(train.size());
}

void RequireTrainable(const FeatureSet& train, const FeatureSet& dev, int batch_size, double lr) {
  if (train.empty()) throw TrainingError("empty training set");
  if (dev.empty()) throw TrainingError("empty dev set");
  if (batch_size <= 0) throw TrainingError("batch size must be positive");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw TrainingError("learning rate must be a finite non-negative value");
}

}  // namespace

Adam::Adam(size_t num_params, AdamConfig cfg) : cfg_(cfg), m_(num_params, 0.0), v_(num_params, 0.0) {}

void Adam::Step(std::span<double> params, std::span<const double> grad, double learning_rate) {
  if (params.size() != m_.size() || grad.size() != m_.size()) throw TrainingError("optimizer size mismatch");
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (size_t i = 0; i < params.size(); ++i) {
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grad[i];
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
    const double m_hat = m_[i] / bc1;
    const double v_hat = v_[i] / bc2;
    params[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + cfg_.epsilon);
  }
}

nlohmann::ordered_json TrainConfig::ToJson() const {
  nlohmann::ordered_json j;
  j["batch_size"] = batch_size;
  j["learning_rate"] = learning_rate;
  j["max_epochs"] = max_epochs;
  j["optimizer"] = AdamJson(adam);
  j["loss"] = "mse";
  j["seed"] = seed;
  j["target"] = ToString(target);
  j["dropout"] = dropout;
  j["patience"] = patience;
  return j;
}

nlohmann::ordered_json PretrainConfig::ToJson() const {
  nlohmann::ordered_json j;
  j["batch_size"] = batch_size;
  j["learning_rate"] = learning_rate;
  j["epochs"] = epochs;
  j["eval_every_steps"] = eval_every_steps;
  j["selection"] = ToString(SelectionRule::kMaxDevPcc);
  j["optimizer"] = AdamJson(adam);
  j["loss"] = "mse";
  j["seed"] = seed;
  j["target"] = ToString(target);
  j["dropout"] = dropout;
  return j;
}

TrainConfig DefaultTrainConfig(std::string_view encoder_name, Target target) {
  TrainConfig cfg;
  cfg.target = target;
  if (encoder_name.starts_with("wavlm")) {
    cfg.batch_size = 16;
    cfg.learning_rate = 0.001;
  } else if (encoder_name == "mock") {
    cfg.batch_size = 4;
    cfg.learning_rate = 0.001;
  } else {
    cfg.batch_size = 32;
    cfg.learning_rate = 0.002;
  }
  return cfg;
}

std::string_view ToString(SelectionRule r) {
  return r == SelectionRule::kMinDevLoss ? "min_dev_loss" : "max_dev_pcc";
}

size_t SelectCheckpoint(std::span<const HistoryRecord> records, SelectionRule rule) {
  if (records.empty()) throw TrainingError("cannot select a checkpoint from an empty history");
  size_t best = 0;
  for (size_t i = 1; i < records.size(); ++i) {
    if (rule == SelectionRule::kMinDevLoss) {
      if (records[i].dev_loss < records[best].dev_loss) best = i;
    } else {
      const double cand = records[i].dev_pcc.value_or(-std::numeric_limits<double>::infinity());
      const double cur = records[best].dev_pcc.value_or(-std::numeric_limits<double>::infinity());
      if (cand > cur) best = i;
    }
  }
  return best;
}

FeatureSet BuildFeatures(const Encoder& encoder, ChannelMode mode, const DatasetManifest& manifest,
                         Target target) {
  FeatureSet out;
  for (const auto& s : manifest.samples) {
    const auto& label = s.label(target);
    if (!label) continue;
    ConversationFeatures f = ExtractFeatures(encoder, mode, LoadConversationAudio(manifest, s));
    f.id = s.id;
    f.label = label->mos;
    out.push_back(std::move(f));
  }
  return out;
}

TrainResult Train(PredictorState init, const TrainConfig& cfg, const FeatureSet& train, const FeatureSet& dev) {
  RequireTrainable(train, dev, cfg.batch_size, cfg.learning_rate);
  if (cfg.max_epochs <= 0) throw TrainingError("max_epochs must be positive");

  PredictorState state = std::move(init);
  state.trained_target = cfg.target;
  state.metadata["train"] = cfg.ToJson();
  Adam adam(state.params.size(), cfg.adam);
  Rng shuffle_rng(DeriveSeed(cfg.seed, 1));
  Rng dropout_rng(DeriveSeed(cfg.seed, 2));

  TrainResult result;
  result.history.phase = "train";
  result.history.rule = SelectionRule::kMinDevLoss;
  PredictorState best = state;
  double best_loss = std::numeric_limits<double>::infinity();
  int since_best = 0;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const double train_loss = RunEpoch(state, adam, train, cfg.batch_size, cfg.learning_rate, shuffle_rng,
                                       cfg.dropout ? &dropout_rng : nullptr, epoch, [] {});
    const DevScore dev_score = ScoreDev(state, dev);
    if (!std::isfinite(dev_score.loss)) {
      throw TrainingError("non-finite dev loss after epoch " + std::to_string(epoch));
    }
    auto& records = result.history.records;
    records.push_back({records.size(), epoch, adam.steps(), train_loss, dev_score.loss, dev_score.pcc});
    if (dev_score.loss < best_loss) {
      best_loss = dev_score.loss;
      best = state;
      since_best = 0;
    } else if (cfg.patience > 0 && ++since_best >= cfg.patience) {
      break;
    }
  }
  result.history.selected_checkpoint = SelectCheckpoint(result.history.records, result.history.rule);
  best.metadata["selected_checkpoint"] = result.history.selected_checkpoint;
  result.state = std::move(best);
  return result;
}

TrainResult Train(PredictorState init, const TrainConfig& cfg, const Encoder& encoder,
                  const DatasetManifest& train, const DatasetManifest& dev) {
  CheckCompatible(init, encoder.spec());
  const FeatureSet train_set = BuildFeatures(encoder, init.channel_mode, train, cfg.target);
  const FeatureSet dev_set = BuildFeatures(encoder, init.channel_mode, dev, cfg.target);
  return Train(std::move(init), cfg, train_set, dev_set);
}

PretrainResult PretrainThenFinetune(PredictorState init, const PretrainConfig& pre_cfg, const FeatureSet& aug,
                                    const TrainConfig& ft_cfg, const FeatureSet& real_train,
                                    const FeatureSet& real_dev) {
  if (aug.empty()) throw TrainingError("empty augmented manifest");
  RequireTrainable(aug, real_dev, pre_cfg.batch_size, pre_cfg.learning_rate);
  if (pre_cfg.epochs <= 0 || pre_cfg.eval_every_steps <= 0) {
    throw TrainingError("pretrain epochs and eval interval must be positive");
  }
  if (real_train.empty()) throw TrainingError("empty training set");

  PredictorState state = std::move(init);
  state.trained_target = pre_cfg.target;
  state.metadata["pretrain"] = pre_cfg.ToJson();
  Adam adam(state.params.size(), pre_cfg.adam);
  Rng shuffle_rng(DeriveSeed(pre_cfg.seed, 3));
  Rng dropout_rng(DeriveSeed(pre_cfg.seed, 4));

  PretrainResult result;
  TrainHistory& history = result.pretrain;
  history.phase = "pretrain";
  history.rule = SelectionRule::kMaxDevPcc;
  PredictorState best = state;
  int epoch = 0;
  double running_loss = 0.0;
  long running_count = 0;
  long last_eval_step = 0;

  auto evaluate = [&] {
    const DevScore dev_score = ScoreDev(state, real_dev);
    if (!std::isfinite(dev_score.loss)) throw TrainingError("non-finite dev loss during pretraining");
    const double train_loss = running_count > 0 ? running_loss / static_cast<double>(running_count) : 0.0;
    history.records.push_back({history.records.size(), epoch, adam.steps(), train_loss, dev_score.loss, dev_score.pcc});
    if (SelectCheckpoint(history.records, SelectionRule::kMaxDevPcc) == history.records.size() - 1) best = state;
    running_loss = 0.0;
    running_count = 0;
    last_eval_step = adam.steps();
  };

  for (epoch = 1; epoch <= pre_cfg.epochs; ++epoch) {
    std::vector<size_t> order(aug.size());
    std::iota(order.begin(), order.end(), 0);
    shuffle_rng.Shuffle(order);
    std::vector<const ConversationFeatures*> batch;
    for (size_t begin = 0; begin < order.size(); begin += static_cast<size_t>(pre_cfg.batch_size)) {
      const size_t end = std::min(order.size(), begin + static_cast<size_t>(pre_cfg.batch_size));
      batch.clear();
      for (size_t i = begin; i < end; ++i) batch.push_back(&aug[order[i]]);
      const LossAndGradient lg = ComputeLossAndGradient(state, batch, pre_cfg.dropout ? &dropout_rng : nullptr);
      if (!std::isfinite(lg.loss)) {
        throw TrainingError("non-finite pretraining loss at step " + std::to_string(adam.steps() + 1));
      }
      adam.Step(state.params, lg.gradient, pre_cfg.learning_rate);
      running_loss += lg.loss * static_cast<double>(batch.size());
      running_count += static_cast<long>(batch.size());
      if (adam.steps() % pre_cfg.eval_every_steps == 0) evaluate();
    }
  }
  epoch = pre_cfg.epochs;
  if (last_eval_step != adam.steps()) evaluate();
  history.selected_checkpoint = SelectCheckpoint(history.records, history.rule);
  best.metadata["pretrain_selected_checkpoint"] = history.selected_checkpoint;
  result.pretrain_state = best;

  TrainResult ft = Train(std::move(best), ft_cfg, real_train, real_dev);
  ft.history.phase = "finetune";
  result.state = std::move(ft.state);
  result.finetune = std::move(ft.history);
  return result;
}

PretrainResult PretrainThenFinetune(PredictorState init, const PretrainConfig& pre_cfg,
                                    const DatasetManifest& aug, const TrainConfig& ft_cfg,
                                    const Encoder& encoder, const DatasetManifest& real_train,
                                    const DatasetManifest& real_dev) {
  if (aug.samples.empty()) throw TrainingError("empty augmented manifest");
  for (const auto& s : aug.samples) {
    if (s.origin != Origin::kSynthetic) {
      throw TrainingError("augmented manifest holds real sample '" + s.id + "'");
    }
  }
  for (const DatasetManifest* m : {&real_train, &real_dev}) {
    for (const auto& s : m->samples) {
      if (s.origin != Origin::kReal) {
        throw TrainingError("fine-tuning manifest '" + m->name + "' holds synthetic sample '" + s.id + "'");
      }
    }
  }
  CheckCompatible(init, encoder.spec());
  const ChannelMode mode = init.channel_mode;
  const FeatureSet aug_set = BuildFeatures(encoder, mode, aug, pre_cfg.target);
  const FeatureSet train_set = BuildFeatures(encoder, mode, real_train, ft_cfg.target);
  const FeatureSet dev_set = BuildFeatures(encoder, mode, real_dev, ft_cfg.target);
  return PretrainThenFinetune(std::move(init), pre_cfg, aug_set, ft_cfg, train_set, dev_set);
}

nlohmann::ordered_json ToJson(const HistoryRecord& r, std::string_view phase) {
  nlohmann::ordered_json j;
  j["phase"] = phase;
  j["index"] = r.index;
  j["epoch"] = r.epoch;
  j["step"] = r.step;
  j["train_loss"] = r.train_loss;
  j["dev_loss"] = r.dev_loss;
  if (r.dev_pcc) {
    j["dev_pcc"] = *r.dev_pcc;
  } else {
    j["dev_pcc"] = nullptr;
  }
  return j;
}

void WriteHistoryJsonl(const TrainHistory& h, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw TrainingError("cannot write " + path.string());
  for (const auto& r : h.records) out << ToJson(r, h.phase).dump() << '\n';
}

}  // namespace convnat
