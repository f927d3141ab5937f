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

#include "run_config.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <stdexcept>

namespace faithkit::cli {

namespace {

using json = nlohmann::json;

json default_values() {
  const std::vector<std::string> methods = baseline_method_tags();
  return json{
      {"seed", 1u},
      {"out", "faithkit_run"},
      {"threads", 1u},

      {"task.kind", "synth_linear"},
      {"task.elements", 8u},
      {"task.samples", 600u},
      {"task.train_fraction", 0.8},
      {"task.csv_path", ""},
      {"task.target_column", ""},
      {"task.standardize", true},

      {"model.kind", "mlp"},
      {"model.hidden", json::array({16u})},
      {"model.activation", "tanh"},
      {"model.epochs", 60u},
      {"model.batch_size", 32u},
      {"model.learning_rate", 0.1},
      {"model.momentum", 0.9},
      {"model.l2", 1e-4},

      {"removal.kind", "mean_replace"},
      {"removal.sigma", 0.1},

      {"explainers.methods", methods},
      {"explainers.ig_steps", 64u},
      {"explainers.lime_masks", 256u},
      {"explainers.lime_kernel_width", 0.25},
      {"explainers.lime_ridge", 1e-3},
      {"explainers.shap_exact_limit", 12u},
      {"explainers.shap_samples", 2048u},

      {"metrics.delta", "abs_diff"},
      {"metrics.delta_minus", "confidence_ratio"},
      {"metrics.tau", "pearson"},
      {"metrics.tau_mc", "spearman"},
      {"metrics.fc_exact_limit", 16u},
      {"metrics.fc_budget", 256u},
      {"metrics.inf_samples", 64u},
      {"metrics.inf_distinct", false},
      {"metrics.fe_samples", 32u},
      {"metrics.mc_sequence", "singletons"},
      {"metrics.flip_rule", "argmax"},
      {"metrics.flip_threshold", 0.5},

      {"signals.samples", 200u},
      {"signals.dedup_threshold", 0.95},
      {"signals.p", 0.5},
      {"signals.quantile_scope", "per_sample"},

      {"explainer.hidden", 16u},
      {"explainer.depth", 1u},
      {"explainer.per_element_encoder", false},
      {"explainer.gated_mixing", true},
      {"explainer.epochs", 200u},
      {"explainer.batch_size", 32u},
      {"explainer.optimizer", "momentum"},
      {"explainer.learning_rate", 0.02},
      {"explainer.momentum", 0.9},
      {"explainer.alpha_mid_fraction", 0.6},
      {"explainer.alpha_width_fraction", 0.08},
      {"explainer.loss", "objective"},
      {"explainer.lc_mode", "exact"},
      {"explainer.lc_subsets", 64u},
      {"explainer.lc_samples", 0u},
      {"explainer.pc_similarity", "pearson"},

      {"benchmark.test_samples", 100u},
      {"benchmark.latency_samples", 50u},
      {"benchmark.warmup", 5u},
      {"benchmark.ablation", false},
  };
}

const json& defaults() {
  static const json d = default_values();
  return d;
}

bool is_count(const json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0);
}

bool same_kind(const json& def, const json& v) {
  if (def.is_boolean()) return v.is_boolean();
  if (def.is_string()) return v.is_string();
  if (def.is_number_float()) return v.is_number();
  if (def.is_number()) return is_count(v);
  if (def.is_array()) {
    if (!v.is_array()) return false;
    if (def.empty()) return true;
    for (const auto& e : v) {
      if (!same_kind(def.front(), e)) return false;
    }
    return true;
  }
  return false;
}

std::string kind_name(const json& def) {
  if (def.is_boolean()) return "a boolean";
  if (def.is_string()) return "a string";
  if (def.is_number_float()) return "a number";
  if (def.is_number()) return "a non-negative integer";
  return "a list of " + kind_name(def.front()) + "s";
}

Stage stage_of(const std::string& key) {
  auto starts = [&](std::string_view p) { return key.rfind(p, 0) == 0; };
  if (starts("explainer.")) return Stage::kExplainer;
  if (starts("benchmark.")) return Stage::kBenchmark;
  if (starts("removal.") || starts("explainers.") || starts("metrics.") ||
      starts("signals.")) {
    return Stage::kSignals;
  }
  return Stage::kModel;
}

// Keys that never change artifact contents.
bool hash_exempt(const std::string& key) {
  return key == "out" || key == "threads";
}

}  // namespace

std::string_view stage_name(Stage s) {
  switch (s) {
    case Stage::kModel:
      return "model";
    case Stage::kSignals:
      return "signals";
    case Stage::kExplainer:
      return "explainer";
    case Stage::kBenchmark:
      return "benchmark";
  }
  return "?";
}

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error([&] {
        std::string msg = "invalid configuration:";
        for (const auto& p : problems) msg += "\n  " + p;
        return msg;
      }()),
      problems_(std::move(problems)) {}

RunConfig::RunConfig() : values_(defaults()) {}

void RunConfig::set_value(const std::string& key, const json& value,
                          std::vector<std::string>& problems) {
  const auto it = defaults().find(key);
  if (it == defaults().end()) {
    problems.push_back("unknown key '" + key + "'");
    return;
  }
  if (!same_kind(*it, value)) {
    problems.push_back("'" + key + "' must be " + kind_name(*it) + ", got " +
                       value.dump());
    return;
  }
  values_[key] = it->is_number_float() ? json(value.get<double>()) : value;
}

void RunConfig::merge(const json& flat, std::vector<std::string>& problems) {
  if (!flat.is_object()) {
    problems.push_back("config file must hold a JSON object of dotted keys");
    return;
  }
  for (const auto& [key, value] : flat.items()) set_value(key, value, problems);
}

void RunConfig::set(std::string_view assignment,
                    std::vector<std::string>& problems) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    problems.push_back("override '" + std::string(assignment) +
                       "' is not KEY=VALUE");
    return;
  }
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  json value = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (value.is_discarded()) value = text;
  set_value(key, value, problems);
}

const json& RunConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw std::out_of_range("no config key " + key);
  return *it;
}

double RunConfig::number(const std::string& key) const {
  return get(key).get<double>();
}
std::size_t RunConfig::count(const std::string& key) const {
  return get(key).get<std::size_t>();
}
bool RunConfig::flag(const std::string& key) const { return get(key).get<bool>(); }
std::string RunConfig::text(const std::string& key) const {
  return get(key).get<std::string>();
}
std::vector<std::string> RunConfig::texts(const std::string& key) const {
  return get(key).get<std::vector<std::string>>();
}
std::vector<std::size_t> RunConfig::counts(const std::string& key) const {
  return get(key).get<std::vector<std::size_t>>();
}

std::vector<std::string> RunConfig::validate() const {
  std::vector<std::string> p;
  auto one_of = [&](const std::string& key,
                    std::initializer_list<std::string_view> allowed) {
    const std::string v = text(key);
    for (auto a : allowed) {
      if (v == a) return;
    }
    std::string list;
    for (auto a : allowed) list += (list.empty() ? "" : ", ") + std::string(a);
    p.push_back("'" + key + "' must be one of {" + list + "}, got '" + v + "'");
  };
  auto positive = [&](const std::string& key) {
    if (!(number(key) > 0.0)) p.push_back("'" + key + "' must be > 0");
  };
  auto at_least = [&](const std::string& key, std::size_t lo) {
    if (count(key) < lo) {
      p.push_back("'" + key + "' must be >= " + std::to_string(lo));
    }
  };
  auto open_unit = [&](const std::string& key) {
    const double v = number(key);
    if (!(v > 0.0 && v < 1.0)) p.push_back("'" + key + "' must lie in (0, 1)");
  };
  auto half_open_unit = [&](const std::string& key) {
    const double v = number(key);
    if (!(v >= 0.0 && v < 1.0)) p.push_back("'" + key + "' must lie in [0, 1)");
  };

  if (text("out").empty()) p.push_back("'out' must not be empty");
  at_least("threads", 1);

  one_of("task.kind", {"synth_linear", "csv"});
  if (text("task.kind") == "csv") {
    const std::string path = text("task.csv_path");
    if (path.empty()) {
      p.push_back("'task.csv_path' is required when task.kind is csv");
    } else if (!std::filesystem::exists(path)) {
      p.push_back("'task.csv_path' does not exist: " + path);
    }
    if (text("task.target_column").empty()) {
      p.push_back("'task.target_column' is required when task.kind is csv");
    }
  } else {
    at_least("task.elements", 2);
    at_least("task.samples", 10);
  }
  open_unit("task.train_fraction");

  one_of("model.kind", {"mlp", "linear"});
  one_of("model.activation", {"tanh", "sigmoid", "relu"});
  for (std::size_t h : counts("model.hidden")) {
    if (h == 0) p.push_back("'model.hidden' entries must be > 0");
  }
  at_least("model.epochs", 1);
  at_least("model.batch_size", 1);
  positive("model.learning_rate");
  half_open_unit("model.momentum");
  if (number("model.l2") < 0.0) p.push_back("'model.l2' must be >= 0");

  one_of("removal.kind", {"mean_replace", "zero", "gaussian_noise"});
  positive("removal.sigma");

  {
    const auto methods = texts("explainers.methods");
    const auto& known = baseline_method_tags();
    for (const auto& m : methods) {
      if (std::find(known.begin(), known.end(), m) == known.end()) {
        p.push_back("'explainers.methods' has unknown method '" + m + "'");
      }
    }
    if (std::set<std::string>(methods.begin(), methods.end()).size() < 2) {
      p.push_back("'explainers.methods' needs at least 2 distinct methods");
    }
  }
  at_least("explainers.ig_steps", 1);
  at_least("explainers.lime_masks", 4);
  positive("explainers.lime_kernel_width");
  if (number("explainers.lime_ridge") < 0.0) {
    p.push_back("'explainers.lime_ridge' must be >= 0");
  }
  at_least("explainers.shap_samples", 2);

  one_of("metrics.delta", {"abs_diff", "half_squared"});
  one_of("metrics.delta_minus", {"confidence_ratio", "raw_confidence"});
  one_of("metrics.tau", {"pearson", "spearman"});
  one_of("metrics.tau_mc", {"pearson", "spearman"});
  if (count("metrics.fc_exact_limit") > 16) {
    p.push_back("'metrics.fc_exact_limit' must be <= 16");
  }
  at_least("metrics.fc_budget", 2);
  at_least("metrics.inf_samples", 2);
  at_least("metrics.fe_samples", 2);
  one_of("metrics.mc_sequence", {"singletons", "prefixes"});
  one_of("metrics.flip_rule", {"argmax", "threshold"});
  {
    const double t = number("metrics.flip_threshold");
    if (!(t > 0.0 && t <= 1.0)) {
      p.push_back("'metrics.flip_threshold' must lie in (0, 1]");
    }
  }

  at_least("signals.samples", 1);
  {
    const double t = number("signals.dedup_threshold");
    if (!(t > 0.0 && t <= 1.0)) {
      p.push_back("'signals.dedup_threshold' must lie in (0, 1]");
    }
  }
  open_unit("signals.p");
  one_of("signals.quantile_scope", {"per_sample", "global"});

  at_least("explainer.hidden", 1);
  at_least("explainer.epochs", 1);
  at_least("explainer.batch_size", 1);
  one_of("explainer.optimizer", {"momentum", "adam"});
  positive("explainer.learning_rate");
  half_open_unit("explainer.momentum");
  if (number("explainer.alpha_mid_fraction") < 0.0) {
    p.push_back("'explainer.alpha_mid_fraction' must be >= 0");
  }
  positive("explainer.alpha_width_fraction");
  one_of("explainer.loss", {"objective", "pattern_only", "local_only"});
  one_of("explainer.lc_mode", {"exact", "sampled"});
  at_least("explainer.lc_subsets", 2);
  one_of("explainer.pc_similarity", {"pearson", "cosine"});

  at_least("benchmark.latency_samples", 1);
  return p;
}

nlohmann::json RunConfig::stage_values(Stage s) const {
  json out = json::object();
  for (const auto& [key, value] : values_.items()) {
    if (!hash_exempt(key) && stage_of(key) <= s) out[key] = value;
  }
  return out;
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string RunConfig::hash(Stage s) const {
  return fnv1a_hex(stage_values(s).dump());
}

ModelArchitecture RunConfig::model_architecture() const {
  ModelArchitecture a;
  a.kind = text("model.kind");
  a.hidden = counts("model.hidden");
  a.activation = activation_from_string(text("model.activation"));
  return a;
}

ModelTrainConfig RunConfig::model_train_config() const {
  ModelTrainConfig c;
  c.epochs = count("model.epochs");
  c.batch_size = count("model.batch_size");
  c.learning_rate = number("model.learning_rate");
  c.momentum = number("model.momentum");
  c.l2 = number("model.l2");
  return c;
}

ExplainerConfig RunConfig::explainer_config() const {
  ExplainerConfig c;
  c.delta = delta_kind_from_string(text("metrics.delta"));
  c.ig_steps = count("explainers.ig_steps");
  c.lime_masks = count("explainers.lime_masks");
  c.lime_kernel_width = number("explainers.lime_kernel_width");
  c.lime_ridge = number("explainers.lime_ridge");
  c.shap_exact_limit = count("explainers.shap_exact_limit");
  c.shap_samples = count("explainers.shap_samples");
  c.seed = seed();
  return c;
}

MetricConfig RunConfig::metric_config() const {
  MetricConfig c;
  c.effects.delta = delta_kind_from_string(text("metrics.delta"));
  c.effects.preservation =
      preservation_kind_from_string(text("metrics.delta_minus"));
  c.effects.tau = correlation_kind_from_string(text("metrics.tau"));
  c.mc_tau = correlation_kind_from_string(text("metrics.tau_mc"));
  c.fc_exact_limit = count("metrics.fc_exact_limit");
  c.fc_budget = count("metrics.fc_budget");
  c.inf_samples = count("metrics.inf_samples");
  c.inf_distinct = flag("metrics.inf_distinct");
  c.fe_samples = count("metrics.fe_samples");
  c.mc_sequence = text("metrics.mc_sequence") == "singletons"
                      ? McSequence::kSingletons
                      : McSequence::kPrefixes;
  c.flip_rule = text("metrics.flip_rule") == "argmax" ? FlipRule::kArgmax
                                                      : FlipRule::kThreshold;
  c.flip_threshold = number("metrics.flip_threshold");
  c.seed = seed();
  return c;
}

PipelineConfig RunConfig::pipeline_config() const {
  PipelineConfig c;
  c.dedup_threshold = number("signals.dedup_threshold");
  c.p = number("signals.p");
  c.methods = texts("explainers.methods");
  c.scope = text("signals.quantile_scope") == "global" ? QuantileScope::kGlobal
                                                       : QuantileScope::kPerSample;
  return c;
}

ExplainerTrainConfig RunConfig::explainer_train_config() const {
  ExplainerTrainConfig c;
  c.hidden = count("explainer.hidden");
  c.depth = count("explainer.depth");
  c.per_element_encoder = flag("explainer.per_element_encoder");
  c.gated_mixing = flag("explainer.gated_mixing");
  c.epochs = count("explainer.epochs");
  c.batch_size = count("explainer.batch_size");
  c.optimizer = optimizer_from_string(text("explainer.optimizer"));
  c.learning_rate = number("explainer.learning_rate");
  c.momentum = number("explainer.momentum");
  c.alpha_mid_fraction = number("explainer.alpha_mid_fraction");
  c.alpha_width_fraction = number("explainer.alpha_width_fraction");
  c.loss = loss_selection_from_string(text("explainer.loss"));
  c.lc_mode =
      text("explainer.lc_mode") == "exact" ? LcMode::kExact : LcMode::kSampled;
  c.lc_subsets = count("explainer.lc_subsets");
  c.pc_similarity = pc_similarity_from_string(text("explainer.pc_similarity"));
  c.effects = metric_config().effects;
  c.seed = seed();
  return c;
}

BenchmarkConfig RunConfig::benchmark_config() const {
  BenchmarkConfig c;
  c.metrics = metric_config();
  c.latency_samples = count("benchmark.latency_samples");
  c.warmup = count("benchmark.warmup");
  c.threads = threads();
  return c;
}

}  // namespace faithkit::cli
