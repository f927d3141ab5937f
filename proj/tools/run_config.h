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

#ifndef FAITHKIT_TOOLS_RUN_CONFIG_H_
#define FAITHKIT_TOOLS_RUN_CONFIG_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "faithkit/bench.h"
#include "faithkit/data.h"
#include "faithkit/explainer_net.h"
#include "faithkit/explainers.h"
#include "faithkit/metrics.h"
#include "faithkit/models.h"
#include "faithkit/signals.h"

namespace faithkit::cli {

// Pipeline stages in dependency order. An artifact's config hash covers the
// keys of its own stage and every earlier one.
enum class Stage { kModel, kSignals, kExplainer, kBenchmark };

std::string_view stage_name(Stage s);

// Thrown with every problem found, one per entry.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

// Run configuration with flat dotted keys ("signals.p"). Every key has a
// typed default; unknown keys and type mismatches are errors.
class RunConfig {
 public:
  RunConfig();

  // Merges a flat JSON object. Problems are appended, not thrown.
  void merge(const nlohmann::json& flat, std::vector<std::string>& problems);
  // KEY=VALUE where VALUE is parsed as JSON, falling back to a plain string.
  void set(std::string_view assignment, std::vector<std::string>& problems);
  void set_value(const std::string& key, const nlohmann::json& value,
                 std::vector<std::string>& problems);

  // Range and enum checks over the merged values.
  std::vector<std::string> validate() const;

  const nlohmann::json& values() const { return values_; }
  nlohmann::json stage_values(Stage s) const;
  // 16 hex digits of 64-bit FNV-1a over the canonical stage JSON.
  std::string hash(Stage s) const;

  double number(const std::string& key) const;
  std::size_t count(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::string text(const std::string& key) const;
  std::vector<std::string> texts(const std::string& key) const;
  std::vector<std::size_t> counts(const std::string& key) const;

  std::uint64_t seed() const { return count("seed"); }
  std::filesystem::path out_dir() const { return text("out"); }
  std::size_t threads() const { return count("threads"); }

  // Typed views used by the commands.
  ModelArchitecture model_architecture() const;
  ModelTrainConfig model_train_config() const;
  ExplainerConfig explainer_config() const;
  MetricConfig metric_config() const;
  PipelineConfig pipeline_config() const;
  ExplainerTrainConfig explainer_train_config() const;
  BenchmarkConfig benchmark_config() const;

 private:
  const nlohmann::json& get(const std::string& key) const;

  nlohmann::json values_;  // object keyed by dotted name, sorted
};

std::string fnv1a_hex(std::string_view bytes);

}  // namespace faithkit::cli

#endif  // FAITHKIT_TOOLS_RUN_CONFIG_H_
