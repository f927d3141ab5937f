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

#ifndef FAITHKIT_TOOLS_COMMANDS_H_
#define FAITHKIT_TOOLS_COMMANDS_H_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "run_config.h"

namespace faithkit::cli {

// Upstream artifact missing, unreadable or produced by another config.
class ArtifactError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CommandOptions {
  RunConfig config;
  bool force = false;  // accept artifacts whose config hash differs
  // explain
  std::string method;
  std::optional<std::size_t> row;
  std::string input;  // comma-separated values; overrides row
  // evaluate
  std::filesystem::path explanation;
  // explain / evaluate
  std::filesystem::path output;
};

void cmd_train_model(const CommandOptions& opts);
void cmd_explain(const CommandOptions& opts);
void cmd_evaluate(const CommandOptions& opts);
void cmd_signals(const CommandOptions& opts);
void cmd_train_explainer(const CommandOptions& opts);
void cmd_benchmark(const CommandOptions& opts);

// Writes <command>.effective_config.json into the output directory.
void write_effective_config(const RunConfig& config, const std::string& command);

}  // namespace faithkit::cli

#endif  // FAITHKIT_TOOLS_COMMANDS_H_
