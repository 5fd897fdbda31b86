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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dian/checkpoint.hpp"
#include "dian/gradcheck.hpp"
#include "dian/metrics.hpp"
#include "dian/run_config.hpp"
#include "dian/synthgen.hpp"
#include "dian/training.hpp"

namespace {

using namespace dian;

struct BucketStats {
  std::int64_t sessions = 0;
  std::int64_t trig_rows = 0, trig_clicks = 0;
  std::int64_t other_rows = 0, other_clicks = 0;
};

// Trigger-category vs other-category CTR per visit bucket; buckets with thin
// support on either side are excluded from the trend statistic.
void print_visit_bucket_table(std::ostream& os, const std::vector<SessionRecord>& sessions,
                              std::int64_t min_rows_per_side) {
  std::vector<BucketStats> buckets(static_cast<std::size_t>(kVisitBucketCount));
  for (const SessionRecord& s : sessions) {
    const auto [visit_bucket, stay_bucket] = bucketize_cross_features(
        s.cross_features.monthly_visit_count, 0.0);
    (void)stay_bucket;
    BucketStats& b = buckets[static_cast<std::size_t>(visit_bucket)];
    b.sessions += 1;
    for (const Candidate& cand : s.candidates) {
      const bool same_cat = cand.item.category_id == s.trigger.category_id;
      (same_cat ? b.trig_rows : b.other_rows) += 1;
      (same_cat ? b.trig_clicks : b.other_clicks) += cand.click_label;
    }
  }
  os << "visit_bucket sessions trig_rows trig_ctr other_rows other_ctr gap\n";
  std::vector<Scalar> xs, gaps;
  for (std::size_t b = 0; b < buckets.size(); ++b) {
    const BucketStats& st = buckets[b];
    const Scalar trig_ctr =
        st.trig_rows > 0 ? static_cast<Scalar>(st.trig_clicks) / st.trig_rows : 0.0;
    const Scalar other_ctr =
        st.other_rows > 0 ? static_cast<Scalar>(st.other_clicks) / st.other_rows : 0.0;
    const Scalar gap = trig_ctr - other_ctr;
    os << b << " " << st.sessions << " " << st.trig_rows << " " << std::setprecision(6)
       << std::fixed << trig_ctr << " " << st.other_rows << " " << other_ctr << " " << gap
       << std::defaultfloat << "\n";
    if (st.trig_rows >= min_rows_per_side && st.other_rows >= min_rows_per_side) {
      xs.push_back(static_cast<Scalar>(b));
      gaps.push_back(gap);
    }
  }
  if (xs.size() >= 3) {
    const ArrX x = Eigen::Map<const ArrX>(xs.data(), static_cast<Index>(xs.size()));
    const ArrX g = Eigen::Map<const ArrX>(gaps.data(), static_cast<Index>(gaps.size()));
    const SpearmanResult sp = spearman_exact(x, g);
    os << "gap_spearman_rho=" << std::setprecision(6) << sp.rho
       << " gap_spearman_p=" << sp.p_value << " buckets_used=" << xs.size()
       << " min_rows_per_side=" << min_rows_per_side << "\n";
  } else {
    os << "gap_spearman_rho=nan gap_spearman_p=nan buckets_used=" << xs.size()
       << " min_rows_per_side=" << min_rows_per_side << "\n";
  }
}

int cmd_generate(const RunConfig& run, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const World world = generate_world(run.gen);
  const std::vector<SessionRecord> sessions = generate_dataset(world, run.gen);
  const auto [train_set, test_set] = split_sessions(sessions, 0.9);
  if (train_set.empty() || test_set.empty()) {
    throw ValidationError("generate: too few sessions for a 90/10 split");
  }
  write_sessions_jsonl(out_dir + "/train.jsonl", train_set);
  write_sessions_jsonl(out_dir + "/test.jsonl", test_set);
  write_sidecar(out_dir + "/sidecar.json", Sidecar{vocab_for(run.gen), run.gen, world});

  std::int64_t rows = 0, clicks = 0, intents = 0;
  for (const SessionRecord& s : sessions) {
    intents += s.intent_label;
    for (const Candidate& c : s.candidates) {
      rows += 1;
      clicks += c.click_label;
    }
  }
  std::cout << "sessions=" << sessions.size() << " rows=" << rows
            << " train_sessions=" << train_set.size() << " test_sessions=" << test_set.size()
            << " base_ctr=" << std::setprecision(6)
            << static_cast<Scalar>(clicks) / static_cast<Scalar>(rows)
            << " intent_rate=" << static_cast<Scalar>(intents) / static_cast<Scalar>(sessions.size())
            << "\n";
  print_visit_bucket_table(std::cout, sessions, 200);
  return 0;
}

int cmd_train(const RunConfig& run, const std::string& data_dir, const std::string& out_dir) {
  const Sidecar sidecar = read_sidecar(data_dir + "/sidecar.json");
  const std::vector<SessionRecord> train_set = read_sessions_jsonl(data_dir + "/train.jsonl");
  const std::vector<SessionRecord> eval_set = read_sessions_jsonl(data_dir + "/test.jsonl");
  std::filesystem::create_directories(out_dir);

  const DianModel model(run.model, sidecar.vocab);
  std::ofstream metrics(out_dir + "/metrics.log", std::ios::binary);
  if (!metrics) throw ValidationError("train: cannot open " + out_dir + "/metrics.log");
  const MetricsSink sink = [&metrics](const std::string& line) { metrics << line << "\n"; };

  const TrainResult result = train(model, train_set, eval_set, run.train, &sidecar.world, sink);
  save_checkpoint(out_dir + "/checkpoint.json", run.model, sidecar.vocab, result.store);
  const std::string final_report = eval_report_to_json(result.history.back());
  std::ofstream eval_out(out_dir + "/eval.json", std::ios::binary);
  eval_out << final_report << "\n";
  std::cout << final_report << "\n";
  return 0;
}

int cmd_eval(const std::string& checkpoint_path, const std::string& data_path,
             const std::string& sidecar_path, const std::string& compare) {
  if (!compare.empty() && compare != "oracle") {
    throw ValidationError("eval: --compare only supports \"oracle\"");
  }
  const std::vector<SessionRecord> records = read_sessions_jsonl(data_path);
  EvalReport report;
  if (checkpoint_path == "oracle") {
    if (sidecar_path.empty()) {
      throw ValidationError("eval: scoring with the oracle requires --sidecar");
    }
    report = evaluate_oracle(read_sidecar(sidecar_path).world, records);
  } else {
    const Checkpoint ckpt = load_checkpoint(checkpoint_path);
    const DianModel model(ckpt.model_config, ckpt.vocab);
    Sidecar sidecar;
    const World* world = nullptr;
    if (compare == "oracle") {
      if (sidecar_path.empty()) {
        throw ValidationError("eval: --compare oracle requires --sidecar");
      }
      sidecar = read_sidecar(sidecar_path);
      world = &sidecar.world;
    }
    report = evaluate(model, ckpt.store, records, world);
  }
  std::cout << eval_report_to_json(report) << "\n";
  return 0;
}

int cmd_gradcheck(const RunConfig& run) {
  // A small dedicated dataset keeps the finite-difference sweep well under
  // the time budget while still exercising every parameter table.
  GenConfig tiny = run.gen;
  tiny.users = 40;
  tiny.items = 60;
  tiny.categories = 8;
  tiny.sessions = 8;
  tiny.candidates_per_session = 2;
  tiny.short_len_min = 4;
  tiny.short_len_max = 8;
  tiny.long_len_min = 10;
  tiny.long_len_max = 20;
  validate(tiny);
  const World world = generate_world(tiny);
  const std::vector<SessionRecord> sessions = generate_dataset(world, tiny);

  const DianModel model(run.model, vocab_for(tiny));
  ParamStore store;
  model.register_params(store);
  model.init_params(store, run.train.seed);
  // Serving-scale embeddings (+-0.05) leave attention-score gradients near
  // the finite-difference rounding floor (~1e-11 absolute). Widening them for
  // the check lifts those gradients well above the noise without touching
  // the layers under test.
  for (const auto& name : store.names()) {
    if (name.rfind("emb.", 0) == 0) store.value(name) *= 8.0;
  }
  const EncodedBatch batch =
      encode_sessions(sessions, vocab_for(tiny), run.model.k_short, run.model.k_long);

  const auto loss_of = [&]() {
    const ForwardTrace trace = model.forward(store, batch);
    return multitask_loss(trace, run.model.variant, batch.click_label, batch.intent_label,
                          run.train.alpha);
  };
  const ForwardTrace trace = model.forward(store, batch);
  ArrX dy_hat, dy_int;
  multitask_loss_backward(trace, run.model.variant, batch.click_label, batch.intent_label,
                          run.train.alpha, dy_hat, dy_int);
  model.backward(store, batch, trace, dy_hat, dy_int);

  if (const char* fault = std::getenv("DIAN_GRADCHECK_FAULT")) {
    if (!store.has(fault)) {
      throw ValidationError(std::string("gradcheck fault hook: no table named \"") + fault + "\"");
    }
    store.grad(fault) *= 1.1;
  }

  Rng coord_rng(mix_seed(run.train.seed, 2));
  // 1e-6 keeps the random top-up away from coordinates whose gradient is
  // smaller than central-difference rounding noise; every table still
  // contributes its largest-gradient coordinate.
  const std::vector<GradCoord> coords = sample_gradcheck_coords(store, 240, coord_rng, 1e-6);
  const GradCheckReport report = finite_diff_gradcheck(store, loss_of, coords);

  std::cout << "coords_checked=" << report.coords_checked
            << " tables_covered=" << report.tables_covered << "/" << store.size()
            << " max_rel_err=" << std::setprecision(6) << report.max_rel_err << "\n";
  if (report.max_rel_err < 1e-4) {
    std::cout << "gradcheck: PASS\n";
    return 0;
  }
  std::cout << "gradcheck: FAIL worst=" << report.worst.name << "[" << report.worst.row << ","
            << report.worst.col << "] analytic=" << std::setprecision(12) << report.worst_analytic
            << " numeric=" << report.worst_numeric << "\n";
  return 3;
}

int cmd_predict(const std::string& checkpoint_path) {
  const Checkpoint ckpt = load_checkpoint(checkpoint_path);
  const DianModel model(ckpt.model_config, ckpt.vocab);
  std::ostringstream buffer;
  buffer << std::cin.rdbuf();
  std::string text = buffer.str();
  const std::size_t end = text.find('\n');
  if (end != std::string::npos) text.resize(end);
  if (text.empty()) throw ValidationError("predict: expected one session JSON object on stdin");
  const SessionRecord record = session_from_json_line(text, 1);

  const std::vector<SessionRecord> one{record};
  const EncodedBatch batch = encode_sessions(one, ckpt.vocab, ckpt.model_config.k_short,
                                             ckpt.model_config.k_long, OovPolicy::kMapToUnknown);
  const ForwardTrace trace = model.forward(ckpt.store, batch);

  nlohmann::json out;
  out["variant"] = to_string(ckpt.model_config.variant);
  out["candidates"] = nlohmann::json::array();
  for (Index i = 0; i < batch.rows; ++i) {
    nlohmann::json row{{"item_id", record.candidates[static_cast<std::size_t>(i)].item.item_id},
                       {"category_id",
                        record.candidates[static_cast<std::size_t>(i)].item.category_id},
                       {"y_hat", trace.y_hat[i]}};
    if (trace.y_int.size() > 0) row["y_int"] = trace.y_int[i];
    if (trace.y_tan.size() > 0) row["y_tan"] = trace.y_tan[i];
    if (trace.y_tfn.size() > 0) row["y_tfn"] = trace.y_tfn[i];
    out["candidates"].push_back(std::move(row));
  }
  std::cout << out.dump() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trigger-induced CTR model: synthetic data, training, evaluation"};
  app.require_subcommand(1);
  app.footer("Config keys (JSON file sections or --set key=value):\n" + run_config_key_help());

  std::string config_path, out_dir, data_dir, data_path, checkpoint_path, sidecar_path;
  std::string compare, variant_override;
  std::vector<std::string> sets;

  const auto add_config_options = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file (defaults apply when omitted)");
    cmd->add_option("--set", sets, "Override a config key, e.g. --set train.epochs=3")
        ->take_all();
  };

  CLI::App* generate = app.add_subcommand("generate", "Generate a synthetic dataset");
  add_config_options(generate);
  generate->add_option("--out", out_dir, "Output directory")->required();

  CLI::App* train_cmd = app.add_subcommand("train", "Train a model variant");
  add_config_options(train_cmd);
  train_cmd->add_option("--data", data_dir, "Dataset directory from generate")->required();
  train_cmd->add_option("--out", out_dir, "Output directory for checkpoint and logs")->required();
  train_cmd->add_option("--variant", variant_override,
                        "Model variant (overrides model.variant): DIAN, TAN_ONLY, TFN_ONLY, "
                        "AVG_FUSION, NO_INTENT_LOSS");

  CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset file");
  eval_cmd->add_option("--checkpoint", checkpoint_path, "Checkpoint JSON, or \"oracle\"")
      ->required();
  eval_cmd->add_option("--data", data_path, "Sessions JSONL file")->required();
  eval_cmd->add_option("--sidecar", sidecar_path, "Generator sidecar JSON (for oracle scoring)");
  eval_cmd->add_option("--compare", compare, "\"oracle\" adds the exact-probability AUC and gap");

  CLI::App* gradcheck = app.add_subcommand(
      "gradcheck", "Finite-difference check of the analytic gradients");
  add_config_options(gradcheck);

  CLI::App* predict = app.add_subcommand("predict", "Score one session JSON from stdin");
  predict->add_option("--checkpoint", checkpoint_path, "Checkpoint JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (generate->parsed() || train_cmd->parsed() || gradcheck->parsed()) {
      RunConfig run = load_run_config(config_path, sets);
      if (!variant_override.empty()) {
        run.model.variant = variant_from_string(variant_override);
      }
      if (generate->parsed()) return cmd_generate(run, out_dir);
      if (train_cmd->parsed()) return cmd_train(run, data_dir, out_dir);
      return cmd_gradcheck(run);
    }
    if (eval_cmd->parsed()) return cmd_eval(checkpoint_path, data_path, sidecar_path, compare);
    if (predict->parsed()) return cmd_predict(checkpoint_path);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
