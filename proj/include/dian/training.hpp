// Copyright 2026 The Dian Authors
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

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dian/model.hpp"
#include "dian/synthgen.hpp"

namespace dian {

struct TrainConfig {
  Index batch_size = 256;
  Index epochs = 2;
  Scalar learning_rate = 0.01;
  Scalar alpha = 0.1;        // auxiliary intention loss weight
  std::uint64_t seed = 1;    // controls init and epoch shuffling
  Index eval_cadence = 200;  // steps between evaluations; 0 = final eval only
};

void validate(const TrainConfig& cfg);

// Mean over rows of BCE(y_hat, click) plus alpha * BCE(y_int, intent) when
// the variant trains an intention head (alpha is forced to 0 for the
// no-intent-loss ablation; expert-only variants have no intention term).
// Probabilities are clamped to [1e-7, 1-1e-7] inside each BCE.
Scalar multitask_loss(const ForwardTrace& trace, Variant variant, const ArrX& click_labels,
                      const ArrX& intent_labels, Scalar alpha);

// dL/dy_hat and dL/dy_int for the same loss; rows pinned by the clamp get
// zero gradient. dy_int is left empty when the loss has no intention term.
void multitask_loss_backward(const ForwardTrace& trace, Variant variant, const ArrX& click_labels,
                             const ArrX& intent_labels, Scalar alpha, ArrX& dy_hat, ArrX& dy_int);

struct EvalReport {
  std::string scorer;          // variant name, or "oracle"
  std::int64_t step = -1;      // training step of this snapshot; -1 standalone
  Index rows = 0;              // scored (session, candidate) rows
  Index sessions = 0;          // distinct sessions (unit of the intent metrics)
  Scalar ctr_auc = 0.0;
  Scalar click_log_loss = 0.0;
  bool has_intent_metrics = false;
  Scalar intent_auc = 0.0;       // per-session, first candidate row
  Scalar intent_accuracy = 0.0;  // threshold 0.5
  Scalar intent_majority = 0.0;  // majority-class baseline accuracy
  bool has_oracle_metrics = false;
  Scalar oracle_auc = 0.0;  // AUC of bayes scores on the same rows
  Scalar oracle_gap = 0.0;  // oracle_auc - ctr_auc
};

std::string eval_report_to_json(const EvalReport& report);

// One line per evaluation event: step, training loss at that step, and the
// report fields, space-separated key=value pairs.
std::string metrics_log_line(std::int64_t step, Scalar train_loss, const EvalReport& report);

// Scores every (session, candidate) row with a frozen store. Intention
// metrics are computed once per session from its first row and only for
// variants with an intention head. When a generator world is supplied the
// report adds the exact-probability scorer's AUC on the same rows and the
// gap to it. Read-only: parameter values are untouched.
EvalReport evaluate(const DianModel& model, const ParamStore& store,
                    const std::vector<SessionRecord>& sessions, const World* world = nullptr,
                    Index batch_size = 256);

// Ranks the same rows by the generator's exact click probability instead of
// a model; intention metrics are absent by construction.
EvalReport evaluate_oracle(const World& world, const std::vector<SessionRecord>& sessions);

struct TrainResult {
  ParamStore store;
  std::vector<EvalReport> history;  // one entry per evaluation event
};

using MetricsSink = std::function<void(const std::string& line)>;

// Full training loop: seeded parameter init, per-epoch seeded shuffle of all
// (session, candidate) rows, and per batch encode -> forward -> loss ->
// backward -> Adam. Evaluates on eval_sessions every eval_cadence steps and
// once more after the last step when that step is not itself an evaluation
// point; each evaluation appends to the history and, when a sink is given,
// emits one metrics log line. Deterministic given (config, data): two runs
// with the same seed produce bit-identical parameters. A non-finite loss
// aborts with the step index and batch position.
TrainResult train(const DianModel& model, const std::vector<SessionRecord>& train_sessions,
                  const std::vector<SessionRecord>& eval_sessions, const TrainConfig& cfg,
                  const World* world = nullptr, const MetricsSink& sink = {});

// First train_fraction of sessions (by position) and the remainder; the
// generator emits sessions in draw order, so this is the time-based split.
std::pair<std::vector<SessionRecord>, std::vector<SessionRecord>> split_sessions(
    const std::vector<SessionRecord>& sessions, Scalar train_fraction = 0.9);

}  // namespace dian
