/*
 * Copyright 2026 The faithkit Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "commands.h"

#include <fstream>
#include <iostream>
#include <sstream>

namespace faithkit::cli {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

void log(const std::string& msg) { std::cerr << "[faithkit] " << msg << '\n'; }

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void write_json(const fs::path& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
  log("wrote " + path.string());
}

json read_json(const fs::path& path, const std::string& what) {
  std::ifstream in(path);
  if (!in) {
    throw ArtifactError("missing " + what + " artifact: " + path.string());
  }
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ArtifactError("unreadable " + what + " artifact " + path.string() +
                        ": " + e.what());
  }
}

void check_hash(const std::string& found, const RunConfig& cfg, Stage stage,
                const fs::path& path, bool force) {
  const std::string expected = cfg.hash(stage);
  if (found == expected) return;
  const std::string msg = path.string() + " was produced by config " + found +
                          " but the current " + std::string(stage_name(stage)) +
                          " config hashes to " + expected;
  if (!force) throw ArtifactError(msg + " (rerun upstream or pass --force)");
  log("warning: " + msg + "; continuing because of --force");
}

Dataset build_dataset(const RunConfig& cfg) {
  if (cfg.text("task.kind") == "csv") {
    CsvOptions o;
    o.target_column = cfg.text("task.target_column");
    o.standardize = cfg.flag("task.standardize");
    o.train_fraction = cfg.number("task.train_fraction");
    o.split_seed = cfg.seed();
    return load_csv(cfg.text("task.csv_path"), o);
  }
  return synth_linear(cfg.count("task.elements"), cfg.count("task.samples"),
                      cfg.seed(), cfg.number("task.train_fraction"))
      .dataset;
}

RemovalStrategy build_strategy(const RunConfig& cfg, const Dataset& ds) {
  const std::string kind = cfg.text("removal.kind");
  if (kind == "zero") {
    return RemovalStrategy::baseline_replace(
        Instance(ds.elements(), ds.block_dim(), 0.0));
  }
  if (kind == "gaussian_noise") {
    return RemovalStrategy::gaussian_noise(
        training_mean(ds), cfg.number("removal.sigma"), cfg.seed());
  }
  return RemovalStrategy::mean_replace(ds);
}

std::vector<Instance> first_of(const Dataset& ds,
                               const std::vector<std::size_t>& idx,
                               std::size_t limit) {
  std::vector<Instance> out;
  for (std::size_t i : idx) {
    if (limit != 0 && out.size() == limit) break;
    out.push_back(ds.instances[i]);
  }
  return out;
}

ModelPtr load_model_artifact(const RunConfig& cfg, bool force) {
  const fs::path path = cfg.out_dir() / "model.json";
  const json j = read_json(path, "model");
  check_hash(j.value("config_hash", ""), cfg, Stage::kModel, path, force);
  return load_model(j.at("checkpoint"));
}

std::vector<SignalPair> load_signals_artifact(const RunConfig& cfg, bool force) {
  const fs::path path = cfg.out_dir() / "signals.jsonl";
  std::ifstream in(path);
  if (!in) throw ArtifactError("missing signals artifact: " + path.string());
  std::string hash;
  auto pairs = read_signals_jsonl(in, &hash);
  if (pairs.empty()) throw ArtifactError("signals artifact is empty: " + path.string());
  check_hash(hash, cfg, Stage::kSignals, path, force);
  return pairs;
}

ExplainerNet load_explainer_artifact(const RunConfig& cfg, bool force) {
  const fs::path path = cfg.out_dir() / "explainer.json";
  const json j = read_json(path, "explainer");
  check_hash(j.value("config_hash", ""), cfg, Stage::kExplainer, path, force);
  return load_explainer(j.at("checkpoint"));
}

json instance_json(const Instance& x) {
  return {{"elements", x.elements()},
          {"block_dim", x.block_dim()},
          {"values", std::vector<double>(x.values().begin(), x.values().end())}};
}

Instance instance_from_json(const json& j) {
  return Instance(j.at("elements"), j.at("block_dim"),
                  j.at("values").get<std::vector<double>>());
}

Instance parse_input(const std::string& text, const Dataset& ds) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(cell, &used));
      if (used != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw std::invalid_argument("--input: '" + cell + "' is not a number");
    }
  }
  if (values.size() != ds.elements() * ds.block_dim()) {
    throw std::invalid_argument(
        "--input has " + std::to_string(values.size()) + " values, the task needs " +
        std::to_string(ds.elements() * ds.block_dim()));
  }
  return Instance(ds.elements(), ds.block_dim(), std::move(values));
}

std::vector<Instance> lc_samples(const RunConfig& cfg, const Dataset& ds) {
  return first_of(ds, ds.split.train, cfg.count("explainer.lc_samples"));
}

std::vector<Instance> test_samples(const RunConfig& cfg, const Dataset& ds) {
  return first_of(ds, ds.split.test, cfg.count("benchmark.test_samples"));
}

}  // namespace

void write_effective_config(const RunConfig& config, const std::string& command) {
  json hashes = json::object();
  for (Stage s : {Stage::kModel, Stage::kSignals, Stage::kExplainer,
                  Stage::kBenchmark}) {
    hashes[std::string(stage_name(s))] = config.hash(s);
  }
  write_json(config.out_dir() / (command + ".effective_config.json"),
             {{"command", command}, {"values", config.values()},
              {"config_hashes", hashes}});
}

void cmd_train_model(const CommandOptions& opts) {
  const RunConfig& cfg = opts.config;
  const Dataset ds = build_dataset(cfg);
  log("training " + cfg.text("model.kind") + " on " + std::to_string(ds.size()) +
      " samples");
  const TrainedModel tm = train_model(ds, cfg.model_architecture(),
                                      cfg.model_train_config(), cfg.seed());
  std::vector<std::size_t> labels;
  for (std::size_t i : ds.split.test) labels.push_back(ds.labels[i]);
  const double acc =
      ds.split.test.empty()
          ? 0.0
          : accuracy(*tm.model, ds.subset(ds.split.test), labels);
  log("held-out accuracy " + std::to_string(acc));
  write_json(cfg.out_dir() / "model.json",
             {{"config_hash", cfg.hash(Stage::kModel)},
              {"test_accuracy", acc},
              {"checkpoint", model_checkpoint(*tm.model, cfg.seed())}});
  auto out = open_out(cfg.out_dir() / "model_training.csv");
  out.precision(17);
  out << "epoch,loss\n";
  for (std::size_t e = 0; e < tm.loss_curve.size(); ++e) {
    out << e << ',' << tm.loss_curve[e] << '\n';
  }
}

void cmd_explain(const CommandOptions& opts) {
  const RunConfig& cfg = opts.config;
  const Dataset ds = build_dataset(cfg);
  const ModelPtr model = load_model_artifact(cfg, opts.force);
  Instance x;
  json source;
  if (!opts.input.empty()) {
    x = parse_input(opts.input, ds);
    source = "input";
  } else {
    const std::size_t row =
        opts.row ? *opts.row : (ds.split.test.empty() ? 0 : ds.split.test.front());
    if (row >= ds.size()) {
      throw std::invalid_argument("--row " + std::to_string(row) +
                                  " is out of range (dataset has " +
                                  std::to_string(ds.size()) + " rows)");
    }
    x = ds.instances[row];
    source = row;
  }
  const RemovalStrategy strat = build_strategy(cfg, ds);
  const TargetedModel tm = target_prediction(model, x);
  const ExplainerConfig ecfg = cfg.explainer_config();
  const SaliencyExplanation e = explain(opts.method, x, tm, strat, ecfg);
  const fs::path path = opts.output.empty()
                            ? cfg.out_dir() / ("explanation_" + opts.method + ".json")
                            : opts.output;
  write_json(path, {{"config_hash", cfg.hash(Stage::kSignals)},
                    {"row", source},
                    {"instance", instance_json(x)},
                    {"target_class", tm.target_class()},
                    {"explanation", e.to_json()},
                    {"seed", ecfg.seed},
                    {"explainer_config", ecfg.to_json()}});
}

void cmd_evaluate(const CommandOptions& opts) {
  const RunConfig& cfg = opts.config;
  const Dataset ds = build_dataset(cfg);
  const ModelPtr model = load_model_artifact(cfg, opts.force);
  const json j = read_json(opts.explanation, "explanation");
  Instance x;
  std::vector<double> scores;
  std::size_t target = 0;
  try {
    x = instance_from_json(j.at("instance"));
    scores = j.at("explanation").at("scores").get<std::vector<double>>();
    target = j.at("target_class");
  } catch (const json::exception& e) {
    throw ArtifactError("explanation file " + opts.explanation.string() +
                        " lacks a field: " + e.what());
  }
  const TargetedModel tm(model, target);
  const MetricReport report = evaluate_all(scores, x, tm, build_strategy(cfg, ds),
                                           cfg.metric_config());
  const fs::path path =
      opts.output.empty() ? cfg.out_dir() / "evaluation.json" : opts.output;
  write_json(path, {{"config_hash", cfg.hash(Stage::kSignals)},
                    {"explanation_method", j.at("explanation").value("method_tag", "")},
                    {"report", report.to_json(/*include_timing=*/false)}});
}

void cmd_signals(const CommandOptions& opts) {
  const RunConfig& cfg = opts.config;
  const Dataset ds = build_dataset(cfg);
  const ModelPtr model = load_model_artifact(cfg, opts.force);
  const PipelineConfig pcfg = cfg.pipeline_config();
  const auto xs = first_of(ds, ds.split.train, cfg.count("signals.samples"));
  std::vector<std::size_t> ids;
  for (std::size_t k = 0; k < xs.size(); ++k) ids.push_back(ds.split.train[k]);
  log("explaining " + std::to_string(xs.size()) + " samples with " +
      std::to_string(pcfg.methods.size()) + " methods");
  const auto samples =
      generate_signals(xs, ids, model, pcfg.methods, cfg.explainer_config(),
                       build_strategy(cfg, ds), cfg.metric_config(), cfg.threads());
  const SignalSet set = process_signals(samples, pcfg);
  const std::string hash = cfg.hash(Stage::kSignals);
  {
    auto out = open_out(cfg.out_dir() / "signals.jsonl");
    write_signals_jsonl(out, set.pairs, hash);
  }
  json summary = json::array();
  std::size_t failures = 0;
  for (std::size_t s = 0; s < set.summary.size(); ++s) {
    const auto& r = set.summary[s];
    summary.push_back({{"sample", r.sample_index},
                       {"k", r.k},
                       {"k_dedup", r.k_dedup},
                       {"k_filter", r.k_filter},
                       {"guard_used", r.guard_used},
                       {"failures", samples[s].failures}});
    failures += samples[s].failures.size();
    for (const auto& f : samples[s].failures) {
      log("sample " + std::to_string(r.sample_index) + ": " + f);
    }
  }
  log(std::to_string(set.pairs.size()) + " signal pairs from " +
      std::to_string(samples.size()) + " samples");
  write_json(cfg.out_dir() / "signals_summary.json",
             {{"config_hash", hash},
              {"pairs", set.pairs.size()},
              {"explainer_failures", failures},
              {"pipeline", pcfg.to_json()},
              {"samples", summary}});
}

void cmd_train_explainer(const CommandOptions& opts) {
  const RunConfig& cfg = opts.config;
  const Dataset ds = build_dataset(cfg);
  const ModelPtr model = load_model_artifact(cfg, opts.force);
  const auto pairs = load_signals_artifact(cfg, opts.force);
  const ExplainerTrainConfig tcfg = cfg.explainer_train_config();
  const auto lc = lc_samples(cfg, ds);
  log("training explainer on " + std::to_string(pairs.size()) + " pairs and " +
      std::to_string(lc.size()) + " local-correlation samples");
  TrainedExplainer trained;
  try {
    trained = train_explainer(pairs, lc, model, build_strategy(cfg, ds), tcfg);
  } catch (const ExplainerDivergence& e) {
    write_json(cfg.out_dir() / "explainer_last_good.json",
               {{"config_hash", cfg.hash(Stage::kExplainer)},
                {"diverged_at_epoch", e.epoch()},
                {"checkpoint", e.last_good().to_json()}});
    throw;
  }
  json ckpt = explainer_checkpoint(trained, tcfg);
  write_json(cfg.out_dir() / "explainer.json",
             {{"config_hash", cfg.hash(Stage::kExplainer)}, {"checkpoint", ckpt}});
  auto out = open_out(cfg.out_dir() / "explainer_training.csv");
  write_training_log_csv(out, trained.log);
}

void cmd_benchmark(const CommandOptions& opts) {
  const RunConfig& cfg = opts.config;
  const Dataset ds = build_dataset(cfg);
  const ModelPtr model = load_model_artifact(cfg, opts.force);
  const ExplainerNet net = load_explainer_artifact(cfg, opts.force);
  const RemovalStrategy strat = build_strategy(cfg, ds);
  const ExplainerConfig ecfg = cfg.explainer_config();
  const BenchmarkConfig bcfg = cfg.benchmark_config();
  const auto test = test_samples(cfg, ds);

  std::vector<BenchMethod> methods{explainer_bench_method("deepfaith", net)};
  for (const auto& tag : cfg.texts("explainers.methods")) {
    methods.push_back(baseline_bench_method(tag, strat, ecfg));
  }
  log("benchmarking " + std::to_string(methods.size()) + " methods on " +
      std::to_string(test.size()) + " test samples");
  std::vector<CurveRecord> curves;
  BenchmarkResult result = run_benchmark(test, model, methods, strat, bcfg, &curves);
  result.config["config_hash"] = cfg.hash(Stage::kBenchmark);
  emit_report(result, curves, cfg.out_dir());
  for (const auto& e : result.excluded) log("excluded " + e);

  if (cfg.flag("benchmark.ablation")) {
    const auto pairs = load_signals_artifact(cfg, opts.force);
    log("ablation: training three explainers");
    const AblationResult ab =
        run_ablation(pairs, lc_samples(cfg, ds), test, model, strat,
                     cfg.explainer_train_config(), bcfg);
    json j = ab.to_json();
    j["config_hash"] = cfg.hash(Stage::kBenchmark);
    j["objective_best_or_tied"] = ab.objective_best_or_tied(1e-3);
    write_json(cfg.out_dir() / "ablation.json", j);
  }
}

}  // namespace faithkit::cli
