// Copyright 2026 The spangraph Authors.
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

#ifndef SPANGRAPH_TRAINER_HPP_
#define SPANGRAPH_TRAINER_HPP_

#include <algorithm>
#include <functional>
#include <numeric>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "spangraph/checkpoint.hpp"
#include "spangraph/metrics.hpp"
#include "spangraph/model.hpp"
#include "spangraph/optim.hpp"

namespace spangraph {

struct Evaluation {
  std::vector<Sentence> predictions;
  MetricReport report;
};

inline Evaluation evaluate_model(const Model &model, const std::vector<Sentence> &corpus) {
  Evaluation ev;
  for (const auto &s : corpus) ev.predictions.push_back(model.predict(s).graph);
  ev.report = evaluate_predictions(ev.predictions, corpus);
  return ev;
}

struct StepLog {
  long step = 0;
  double lr_multiplier = 0.0;
  double l_v = 0.0, l_e = 0.0, l_edit = 0.0, l_cls = 0.0, l_total = 0.0;
  double grad_norm = 0.0;

  nlohmann::ordered_json to_json() const {
    return {{"step", step},     {"lr_multiplier", lr_multiplier}, {"L_V", l_v},
            {"L_E", l_e},       {"L_edit", l_edit},               {"L_cls", l_cls},
            {"L_total", l_total}, {"grad_norm", grad_norm}};
  }
};

struct TrainSettings {
  AdamWOptions adamw;
  long warmup_steps = 5000;
  long total_steps = 50000;
  int batch_size = 8;
  std::uint64_t seed = 42;
  long eval_every = 1000;
  double clip_norm = 1.0;

  static TrainSettings from_config(const Config &c) {
    TrainSettings t;
    t.adamw.lr_backbone = c.get_double("train.lr_backbone");
    t.adamw.lr_others = c.get_double("train.lr_others");
    t.adamw.weight_decay = c.get_double("train.weight_decay");
    t.warmup_steps = c.get_int("train.warmup_steps");
    t.total_steps = c.get_int("train.total_steps");
    t.batch_size = static_cast<int>(c.get_int("train.batch_size"));
    t.seed = static_cast<std::uint64_t>(c.get_int("train.seed"));
    t.eval_every = c.get_int("train.eval_every");
    t.clip_norm = c.get_double("train.clip_norm");
    return t;
  }
};

struct TrainResult {
  std::vector<StepLog> log;
  bool evaluated = false;
  long best_step = 0;
  MetricReport best_dev;
};

// Minibatch AdamW over per-sentence loss sums; the batch loss is the mean
// over its sentences. The shuffle order, dropout masks and identifier draws
// all come from generators seeded by train.seed, so runs are reproducible.
class Trainer {
 public:
  Trainer(Model &model, const TrainSettings &settings)
      : model_(&model),
        settings_(settings),
        optimizer_(model.params(), settings.adamw),
        shuffle_rng_(settings.seed),
        noise_rng_(settings.seed ^ 0x9e3779b97f4a7c15ULL) {}

  long step() const { return step_; }

  // Runs one optimizer update on `batch` and returns its log entry.
  StepLog train_step(const std::vector<const Sentence *> &batch) {
    StepLog log;
    log.step = ++step_;
    log.lr_multiplier = schedule_multiplier(step_, settings_.warmup_steps, settings_.total_steps);
    model_->params().zero_grad();
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (const Sentence *s : batch) {
      const auto spans = model_->candidate_spans(*s);
      const GoldAssignment gold = gold_assignment(*s, spans, model_->labels());
      ForwardOptions opt;
      opt.training = true;
      opt.rng = &noise_rng_;
      opt.gold = &gold;
      ForwardResult r = model_->forward(*s, opt);
      LossBreakdown b = model_->losses(r, gold);
      if (!std::isfinite(b.l_total())) {
        nlohmann::ordered_json diag{{"step", step_},      {"sentence", s->id},     {"L_V", b.l_v()},
                                    {"L_E", b.l_e()},     {"L_edit", b.l_edit()}, {"L_cls", b.l_cls()},
                                    {"L_total", b.l_total()}, {"nodes", r.graph().num_nodes()},
                                    {"edges", r.graph().num_edges()}};
        throw NumericError("non-finite loss; diagnostic: " + diag.dump());
      }
      ag::backward(ag::scale(b.total, inv));
      log.l_v += b.l_v() * inv;
      log.l_e += b.l_e() * inv;
      log.l_edit += b.l_edit() * inv;
      log.l_cls += b.l_cls() * inv;
      log.l_total += b.l_total() * inv;
    }
    log.grad_norm = clip_grad_norm(model_->params(), settings_.clip_norm);
    if (!std::isfinite(log.grad_norm)) {
      throw NumericError("non-finite gradient norm at step " + std::to_string(step_));
    }
    optimizer_.step(log.lr_multiplier);
    return log;
  }

  // Full training run. Each step's log line goes to `log_out` (JSON lines)
  // when given. With a dev set the model is scored every eval_every steps
  // and at the end; the best REL+ F1 is written to `checkpoint_path`.
  // Without one the final model is written.
  TrainResult train(const std::vector<Sentence> &train_set, const std::vector<Sentence> &dev_set,
                    std::ostream *log_out = nullptr, const std::string &checkpoint_path = "") {
    if (train_set.empty()) throw ValidationError("training corpus is empty");
    model_->labels().check_corpus(train_set);
    TrainResult res;
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);
    std::size_t cursor = order.size();
    double best = -1.0;

    auto run_eval = [&]() {
      const Evaluation ev = evaluate_model(*model_, dev_set);
      res.evaluated = true;
      const double f1 = ev.report.rel_plus_prf().f1;
      if (f1 > best) {
        best = f1;
        res.best_step = step_;
        res.best_dev = ev.report;
        if (!checkpoint_path.empty()) save_checkpoint(checkpoint_path, *model_, {step_, report_json(ev.report)});
      }
    };

    while (step_ < settings_.total_steps) {
      std::vector<const Sentence *> batch;
      while (static_cast<int>(batch.size()) < settings_.batch_size) {
        if (cursor == order.size()) {
          std::shuffle(order.begin(), order.end(), shuffle_rng_);
          cursor = 0;
        }
        batch.push_back(&train_set[order[cursor++]]);
        if (batch.size() == train_set.size()) break;
      }
      StepLog log = train_step(batch);
      if (log_out) *log_out << log.to_json().dump() << "\n";
      res.log.push_back(log);
      if (!dev_set.empty() && settings_.eval_every > 0 && step_ % settings_.eval_every == 0) run_eval();
    }
    if (!dev_set.empty() && (settings_.eval_every <= 0 || step_ % settings_.eval_every != 0)) run_eval();
    if (dev_set.empty() && !checkpoint_path.empty()) save_checkpoint(checkpoint_path, *model_, {step_, {}});
    return res;
  }

 private:
  Model *model_;
  TrainSettings settings_;
  AdamW optimizer_;
  std::mt19937_64 shuffle_rng_;
  std::mt19937_64 noise_rng_;
  long step_ = 0;
};

}  // namespace spangraph

#endif  // SPANGRAPH_TRAINER_HPP_
