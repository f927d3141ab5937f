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

// faithkit command-line tool. Every subcommand shares --config/--set/--seed/
// --out/--threads/--force; artifacts go to the output directory.
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>

#include "CLI11.hpp"
#include "commands.h"

namespace {

using faithkit::cli::CommandOptions;
using faithkit::cli::ConfigError;
using faithkit::cli::RunConfig;
using json = nlohmann::json;

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

struct CommonFlags {
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::size_t> threads;
  bool force = false;
};

// Nested objects in config files flatten to dotted keys.
void flatten(const json& j, const std::string& prefix, json& flat) {
  for (const auto& [k, v] : j.items()) {
    const std::string key = prefix.empty() ? k : prefix + "." + k;
    if (v.is_object()) {
      flatten(v, key, flat);
    } else {
      flat[key] = v;
    }
  }
}

RunConfig build_config(const CommonFlags& f) {
  RunConfig cfg;
  std::vector<std::string> problems;
  if (!f.config_path.empty()) {
    std::ifstream in(f.config_path);
    if (!in) {
      problems.push_back("cannot open config file " + f.config_path);
    } else {
      try {
        const json j = json::parse(in);
        if (!j.is_object()) {
          problems.push_back(f.config_path + ": top level must be an object");
        } else {
          json flat = json::object();
          flatten(j, "", flat);
          cfg.merge(flat, problems);
        }
      } catch (const json::parse_error& e) {
        problems.push_back(f.config_path + ": " + e.what());
      }
    }
  }
  for (const auto& s : f.sets) cfg.set(s, problems);
  if (f.seed) cfg.set_value("seed", *f.seed, problems);
  if (!f.out.empty()) cfg.set_value("out", f.out, problems);
  if (f.threads) cfg.set_value("threads", *f.threads, problems);
  for (auto& p : cfg.validate()) problems.push_back(std::move(p));
  if (!problems.empty()) throw ConfigError(std::move(problems));
  return cfg;
}

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "JSON config file")
      ->check(CLI::ExistingFile);
  cmd->add_option("--set", f.sets, "Override one key, KEY=VALUE (repeatable)");
  cmd->add_option("--seed", f.seed, "Master seed");
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--threads", f.threads, "Worker threads");
  cmd->add_flag("--force", f.force,
                "Use upstream artifacts even if their config hash differs");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Saliency explanation faithfulness toolkit"};
  app.require_subcommand(1);

  CommonFlags flags;
  CommandOptions opts;
  std::string row_text;
  std::string explanation_path;
  std::string output_path;
  bool print_config = false;

  struct Entry {
    const char* name;
    const char* help;
    void (*run)(const CommandOptions&);
  };
  const Entry entries[] = {
      {"train-model", "Train the predictive model", faithkit::cli::cmd_train_model},
      {"explain", "Explain one input with one method", faithkit::cli::cmd_explain},
      {"evaluate", "Score a saved explanation on every metric",
       faithkit::cli::cmd_evaluate},
      {"signals", "Generate filtered training signals", faithkit::cli::cmd_signals},
      {"train-explainer", "Train the explainer network",
       faithkit::cli::cmd_train_explainer},
      {"benchmark", "Rank the explainer against the baselines",
       faithkit::cli::cmd_benchmark},
  };
  std::vector<std::pair<CLI::App*, const Entry*>> commands;
  for (const Entry& e : entries) {
    CLI::App* cmd = app.add_subcommand(e.name, e.help);
    add_common(cmd, flags);
    cmd->add_flag("--print-config", print_config,
                  "Print the effective config and exit");
    commands.emplace_back(cmd, &e);
  }
  CLI::App* explain = app.get_subcommand("explain");
  explain->add_option("--method", opts.method, "Explanation method tag")->required();
  explain->add_option("--row", row_text, "Dataset row to explain");
  explain->add_option("--input", opts.input, "Comma-separated input values")
      ->excludes("--row");
  explain->add_option("--output", output_path, "Output file");
  CLI::App* evaluate = app.get_subcommand("evaluate");
  evaluate->add_option("--explanation", explanation_path, "Explanation JSON")
      ->required();
  evaluate->add_option("--output", output_path, "Output file");
  app.get_subcommand("benchmark")
      ->add_flag("--ablation", "Also run the loss ablation (benchmark.ablation=true)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  const Entry* chosen = nullptr;
  std::string name;
  for (const auto& [cmd, e] : commands) {
    if (cmd->parsed()) {
      chosen = e;
      name = e->name;
    }
  }
  if (name == "benchmark" && app.get_subcommand("benchmark")->count("--ablation")) {
    flags.sets.push_back("benchmark.ablation=true");
  }

  try {
    opts.config = build_config(flags);
  } catch (const ConfigError& e) {
    std::cerr << "faithkit: invalid configuration\n";
    for (const auto& p : e.problems()) std::cerr << "  - " << p << '\n';
    return kExitConfig;
  }
  if (print_config) {
    std::cout << opts.config.values().dump(2) << '\n';
    return 0;
  }
  opts.force = flags.force;
  opts.explanation = explanation_path;
  opts.output = output_path;
  if (!row_text.empty()) {
    try {
      std::size_t used = 0;
      opts.row = std::stoull(row_text, &used);
      if (used != row_text.size()) throw std::invalid_argument(row_text);
    } catch (const std::exception&) {
      std::cerr << "faithkit: --row must be a non-negative integer\n";
      return kExitConfig;
    }
  }
  if (name == "explain") {
    const auto& tags = faithkit::baseline_method_tags();
    if (std::find(tags.begin(), tags.end(), opts.method) == tags.end()) {
      std::cerr << "faithkit: unknown --method '" << opts.method << "'\n";
      return kExitConfig;
    }
  }

  try {
    faithkit::cli::write_effective_config(opts.config, name);
    chosen->run(opts);
  } catch (const faithkit::cli::ArtifactError& e) {
    std::cerr << "faithkit " << name << ": " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "faithkit " << name << ": " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
