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

#include "dian/training.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "dian/metrics.hpp"
#include "dian/rng.hpp"

namespace dian {
namespace {

void check_labels(const ArrX& labels, const char* which) {
  for (Index i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0.0 && labels[i] != 1.0) {
      throw ValidationError(std::string("multitask_loss: ") + which + " label at row " +
                            std::to_string(i) + " is " + std::to_string(labels[i]) +
                            ", expected 0 or 1");
    }
  }
}

Scalar bce_mean(const ArrX& p, const ArrX& y) {
  const ArrX pc = p.cwiseMax(kProbClampLow).cwiseMin(kProbClampHigh);
  return (-(y * pc.log() + (1.0 - y) * (1.0 - pc).log())).mean();
}

// d(mean BCE)/dp per row; rows pinned by the clamp contribute nothing.
ArrX bce_mean_grad(const ArrX& p, const ArrX& y, Scalar weight) {
  const Scalar inv_n = weight / static_cast<Scalar>(p.size());
  ArrX dp = ArrX::Zero(p.size());
  for (Index i = 0; i < p.size(); ++i) {
    if (p[i] < kProbClampLow || p[i] > kProbClampHigh) continue;
    dp[i] = inv_n * (-y[i] / p[i] + (1.0 - y[i]) / (1.0 - p[i]));
  }
  return dp;
}

bool intent_term_active(Variant variant) {
  // The no-intent-loss ablation keeps the head but trains it only through
  // the fusion; expert-only and average fusion variants have no head at all.
  return variant == Variant::kDian;
}

std::string format_float(Scalar v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

void validate(const TrainConfig& cfg) {
  if (cfg.batch_size < 1) throw ValidationError("train config: batch_size must be >= 1");
  if (cfg.epochs < 1) throw ValidationError("train config: epochs must be >= 1");
  if (!(cfg.learning_rate > 0.0)) {
    throw ValidationError("train config: learning_rate must be > 0");
  }
  if (!(cfg.alpha >= 0.0)) throw ValidationError("train config: alpha must be >= 0");
  if (cfg.eval_cadence < 0) throw ValidationError("train config: eval_cadence must be >= 0");
}

Scalar multitask_loss(const ForwardTrace& trace, Variant variant, const ArrX& click_labels,
                      const ArrX& intent_labels, Scalar alpha) {
  if (!(alpha >= 0.0)) throw ValidationError("multitask_loss: alpha must be >= 0");
  if (trace.y_hat.size() != click_labels.size()) {
    throw ValidationError("multitask_loss: click label count mismatch");
  }
  check_labels(click_labels, "click");
  Scalar loss = bce_mean(trace.y_hat, click_labels);
  if (intent_term_active(variant)) {
    if (trace.y_int.size() != intent_labels.size()) {
      throw ValidationError("multitask_loss: intent label count mismatch");
    }
    check_labels(intent_labels, "intent");
    loss += alpha * bce_mean(trace.y_int, intent_labels);
  }
  return loss;
}

void multitask_loss_backward(const ForwardTrace& trace, Variant variant, const ArrX& click_labels,
                             const ArrX& intent_labels, Scalar alpha, ArrX& dy_hat, ArrX& dy_int) {
  dy_hat = bce_mean_grad(trace.y_hat, click_labels, 1.0);
  dy_int.resize(0);
  if (intent_term_active(variant) && alpha > 0.0) {
    dy_int = bce_mean_grad(trace.y_int, intent_labels, alpha);
  }
}

std::string eval_report_to_json(const EvalReport& report) {
  nlohmann::json j{{"scorer", report.scorer},
                   {"step", report.step},
                   {"rows", report.rows},
                   {"sessions", report.sessions},
                   {"ctr_auc", report.ctr_auc},
                   {"click_log_loss", report.click_log_loss}};
  if (report.has_intent_metrics) {
    j["intent_auc"] = report.intent_auc;
    j["intent_accuracy"] = report.intent_accuracy;
    j["intent_majority"] = report.intent_majority;
  }
  if (report.has_oracle_metrics) {
    j["oracle_auc"] = report.oracle_auc;
    j["oracle_gap"] = report.oracle_gap;
  }
  return j.dump();
}

std::string metrics_log_line(std::int64_t step, Scalar train_loss, const EvalReport& report) {
  std::ostringstream os;
  os << "step=" << step << " loss=" << format_float(train_loss)
     << " scorer=" << report.scorer << " ctr_auc=" << format_float(report.ctr_auc)
     << " log_loss=" << format_float(report.click_log_loss);
  if (report.has_intent_metrics) {
    os << " intent_auc=" << format_float(report.intent_auc)
       << " intent_accuracy=" << format_float(report.intent_accuracy)
       << " intent_majority=" << format_float(report.intent_majority);
  }
  if (report.has_oracle_metrics) {
    os << " oracle_auc=" << format_float(report.oracle_auc)
       << " oracle_gap=" << format_float(report.oracle_gap);
  }
  return os.str();
}

EvalReport evaluate(const DianModel& model, const ParamStore& store,
                    const std::vector<SessionRecord>& sessions, const World* world,
                    Index batch_size) {
  if (sessions.empty()) throw ValidationError("evaluate: empty dataset");
  if (batch_size < 1) throw ValidationError("evaluate: batch_size must be >= 1");

  std::vector<RowRef> refs;
  for (std::size_t s = 0; s < sessions.size(); ++s) {
    for (std::size_t c = 0; c < sessions[s].candidates.size(); ++c) {
      refs.push_back({&sessions[s], c, static_cast<std::int64_t>(s)});
    }
  }
  if (refs.empty()) throw ValidationError("evaluate: dataset has no candidates");

  const Index total = static_cast<Index>(refs.size());
  ArrX scores(total), clicks(total);
  std::vector<Scalar> intent_scores, intent_truth;
  std::int64_t prev_session = -1;
  Index at = 0;
  for (Index start = 0; start < total; start += batch_size) {
    const Index count = std::min<Index>(batch_size, total - start);
    const std::vector<RowRef> chunk(refs.begin() + start, refs.begin() + start + count);
    const EncodedBatch batch =
        encode_rows(chunk, model.vocab(), model.config().k_short, model.config().k_long);
    const ForwardTrace trace = model.forward(store, batch);
    for (Index i = 0; i < count; ++i) {
      scores[at] = trace.y_hat[i];
      clicks[at] = batch.click_label[i];
      if (model.has_intent_head() && batch.session_index[i] != prev_session) {
        intent_scores.push_back(trace.y_int[i]);
        intent_truth.push_back(batch.intent_label[i]);
      }
      prev_session = batch.session_index[i];
      ++at;
    }
  }

  EvalReport report;
  report.scorer = to_string(model.config().variant);
  report.rows = total;
  report.sessions = static_cast<Index>(sessions.size());
  report.ctr_auc = auc(scores, clicks);
  report.click_log_loss = log_loss(scores, clicks);
  if (model.has_intent_head()) {
    report.has_intent_metrics = true;
    const ArrX si = Eigen::Map<const ArrX>(intent_scores.data(),
                                           static_cast<Index>(intent_scores.size()));
    const ArrX ti = Eigen::Map<const ArrX>(intent_truth.data(),
                                           static_cast<Index>(intent_truth.size()));
    try {
      report.intent_auc = auc(si, ti);
    } catch (const NumericError&) {
      report.intent_auc = std::numeric_limits<Scalar>::quiet_NaN();  // single-class eval set
    }
    report.intent_accuracy = accuracy(si, ti);
    const Scalar base = ti.mean();
    report.intent_majority = std::max(base, 1.0 - base);
  }
  if (world != nullptr) {
    ArrX bayes(total);
    Index k = 0;
    for (const RowRef& ref : refs) {
      bayes[k++] = bayes_ctr(*world, ref.session->user_id,
                             ref.session->candidates[ref.candidate].item, ref.session->trigger);
    }
    report.has_oracle_metrics = true;
    report.oracle_auc = auc(bayes, clicks);
    report.oracle_gap = report.oracle_auc - report.ctr_auc;
  }
  return report;
}

EvalReport evaluate_oracle(const World& world, const std::vector<SessionRecord>& sessions) {
  if (sessions.empty()) throw ValidationError("evaluate_oracle: empty dataset");
  std::vector<Scalar> scores, clicks;
  for (const SessionRecord& session : sessions) {
    for (const Candidate& cand : session.candidates) {
      scores.push_back(bayes_ctr(world, session.user_id, cand.item, session.trigger));
      clicks.push_back(static_cast<Scalar>(cand.click_label));
    }
  }
  const ArrX s = Eigen::Map<const ArrX>(scores.data(), static_cast<Index>(scores.size()));
  const ArrX y = Eigen::Map<const ArrX>(clicks.data(), static_cast<Index>(clicks.size()));
  EvalReport report;
  report.scorer = "oracle";
  report.rows = static_cast<Index>(scores.size());
  report.sessions = static_cast<Index>(sessions.size());
  report.ctr_auc = auc(s, y);
  report.click_log_loss = log_loss(s, y);
  report.has_oracle_metrics = true;
  report.oracle_auc = report.ctr_auc;
  report.oracle_gap = 0.0;
  return report;
}

TrainResult train(const DianModel& model, const std::vector<SessionRecord>& train_sessions,
                  const std::vector<SessionRecord>& eval_sessions, const TrainConfig& cfg,
                  const World* world, const MetricsSink& sink) {
  validate(cfg);
  if (train_sessions.empty()) throw ValidationError("train: empty training dataset");
  if (eval_sessions.empty()) throw ValidationError("train: empty evaluation dataset");

  TrainResult result;
  model.register_params(result.store);
  model.init_params(result.store, cfg.seed);

  std::vector<RowRef> refs;
  for (std::size_t s = 0; s < train_sessions.size(); ++s) {
    for (std::size_t c = 0; c < train_sessions[s].candidates.size(); ++c) {
      refs.push_back({&train_sessions[s], c, static_cast<std::int64_t>(s)});
    }
  }
  if (refs.empty()) throw ValidationError("train: training dataset has no candidates");

  const Index rows = static_cast<Index>(refs.size());
  const Index batches_per_epoch = (rows + cfg.batch_size - 1) / cfg.batch_size;
  const std::int64_t total_steps = static_cast<std::int64_t>(batches_per_epoch) * cfg.epochs;
  const AdamConfig adam{cfg.learning_rate, 0.9, 0.999, 1e-8};
  Rng shuffle_rng(mix_seed(cfg.seed, 1));

  const auto run_eval = [&](std::int64_t step, Scalar loss) {
    EvalReport report = evaluate(model, result.store, eval_sessions, world, cfg.batch_size);
    report.step = step;
    result.history.push_back(report);
    if (sink) sink(metrics_log_line(step, loss, report));
  };

  std::int64_t step = 0;
  Scalar last_loss = 0.0;
  for (Index epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(refs);
    for (Index start = 0; start < rows; start += cfg.batch_size) {
      const Index count = std::min<Index>(cfg.batch_size, rows - start);
      const std::vector<RowRef> chunk(refs.begin() + start, refs.begin() + start + count);
      const EncodedBatch batch =
          encode_rows(chunk, model.vocab(), model.config().k_short, model.config().k_long);
      const ForwardTrace trace = model.forward(result.store, batch);
      const Scalar loss = multitask_loss(trace, model.config().variant, batch.click_label,
                                         batch.intent_label, cfg.alpha);
      ++step;
      if (!std::isfinite(loss)) {
        throw NumericError("train: non-finite loss at step " + std::to_string(step) + " (epoch " +
                           std::to_string(epoch) + ", batch " +
                           std::to_string(start / cfg.batch_size) + ")");
      }
      ArrX dy_hat, dy_int;
      multitask_loss_backward(trace, model.config().variant, batch.click_label,
                              batch.intent_label, cfg.alpha, dy_hat, dy_int);
      model.backward(result.store, batch, trace, dy_hat, dy_int);
      result.store.adam_step(adam);
      last_loss = loss;
      if (cfg.eval_cadence > 0 && step % cfg.eval_cadence == 0) run_eval(step, loss);
    }
  }
  if (cfg.eval_cadence == 0 || total_steps % cfg.eval_cadence != 0) {
    run_eval(total_steps, last_loss);
  }
  return result;
}

std::pair<std::vector<SessionRecord>, std::vector<SessionRecord>> split_sessions(
    const std::vector<SessionRecord>& sessions, Scalar train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ValidationError("split_sessions: train_fraction must be in (0,1)");
  }
  const auto cut = static_cast<std::size_t>(std::floor(train_fraction *
                                                       static_cast<Scalar>(sessions.size())));
  std::vector<SessionRecord> head(sessions.begin(), sessions.begin() + cut);
  std::vector<SessionRecord> tail(sessions.begin() + cut, sessions.end());
  return {std::move(head), std::move(tail)};
}

}  // namespace dian
