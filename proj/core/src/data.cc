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

#include "faithkit/data.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "faithkit/math.h"

namespace faithkit {

Instance::Instance(std::size_t n, std::size_t d, double fill)
    : n_(n), d_(d), values_(n * d, fill) {
  if (n == 0 || d == 0) throw std::invalid_argument("Instance: empty shape");
}

Instance::Instance(std::size_t n, std::size_t d, std::vector<double> values)
    : n_(n), d_(d), values_(std::move(values)) {
  if (n == 0 || d == 0) throw std::invalid_argument("Instance: empty shape");
  if (values_.size() != n * d) {
    throw std::invalid_argument("Instance: expected " + std::to_string(n * d) +
                                " values, got " +
                                std::to_string(values_.size()));
  }
  if (!all_finite(values_)) {
    throw std::invalid_argument("Instance: non-finite entry");
  }
}

Instance Instance::from_row(std::vector<double> row) {
  const std::size_t n = row.size();
  return Instance(n, 1, std::move(row));
}

std::vector<Instance> Dataset::subset(
    std::span<const std::size_t> indices) const {
  std::vector<Instance> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(instances.at(i));
  return out;
}

Split make_split(std::size_t count, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) {
    throw std::invalid_argument("make_split: train_fraction must be in (0, 1]");
  }
  std::vector<std::size_t> idx(count);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(mix_seed(seed, 0x5b1));
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto n_train = static_cast<std::size_t>(
      std::llround(train_fraction * static_cast<double>(count)));
  Split split;
  split.train.assign(idx.begin(), idx.begin() + n_train);
  split.test.assign(idx.begin() + n_train, idx.end());
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    // Trim whitespace and a trailing CR.
    const auto first = cell.find_first_not_of(" \t\r\"");
    const auto last = cell.find_last_not_of(" \t\r\"");
    cells.push_back(first == std::string::npos
                        ? std::string()
                        : cell.substr(first, last - first + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

bool parse_double(const std::string& text, double& out) {
  if (text.empty()) return false;
  const char* begin = text.data();
  const char* end = begin + text.size();
  if (*begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_csv: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("load_csv: missing header row in " + path.string());
  }
  // Strip a UTF-8 byte-order mark.
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
    line.erase(0, 3);
  }
  const auto header = split_csv_line(line);
  const auto target_it =
      std::find(header.begin(), header.end(), options.target_column);
  if (target_it == header.end()) {
    throw std::invalid_argument("load_csv: unknown target column '" +
                                options.target_column + "'");
  }
  const auto target_col =
      static_cast<std::size_t>(target_it - header.begin());

  Dataset ds;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c != target_col) ds.feature_names.push_back(header[c]);
  }
  const std::size_t n = ds.feature_names.size();
  if (n == 0) throw std::invalid_argument("load_csv: no feature columns");

  std::vector<std::vector<double>> rows;
  std::vector<double> targets;
  std::size_t row_number = 1;
  while (std::getline(in, line)) {
    ++row_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw std::invalid_argument(
          "load_csv: row " + std::to_string(row_number) + " has " +
          std::to_string(cells.size()) + " cells, expected " +
          std::to_string(header.size()));
    }
    std::vector<double> row;
    row.reserve(n);
    double target = 0.0;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      double value = 0.0;
      if (!parse_double(cells[c], value)) {
        throw std::invalid_argument("load_csv: non-numeric cell at row " +
                                    std::to_string(row_number) + ", column '" +
                                    header[c] + "': '" + cells[c] + "'");
      }
      if (c == target_col) {
        target = value;
      } else {
        row.push_back(value);
      }
    }
    rows.push_back(std::move(row));
    targets.push_back(target);
  }
  if (rows.empty()) throw std::invalid_argument("load_csv: no data rows");

  ds.feature_means.assign(n, 0.0);
  ds.feature_stds.assign(n, 1.0);
  if (options.standardize) {
    const double count = static_cast<double>(rows.size());
    for (std::size_t c = 0; c < n; ++c) {
      double mean = 0.0;
      for (const auto& row : rows) mean += row[c];
      mean /= count;
      double var = 0.0;
      for (const auto& row : rows) var += (row[c] - mean) * (row[c] - mean);
      const double std =
          rows.size() > 1 ? std::sqrt(var / (count - 1.0)) : 0.0;
      ds.feature_means[c] = mean;
      // Constant columns keep their values.
      if (!(std > 0.0)) {
        ds.feature_means[c] = 0.0;
        ds.feature_stds[c] = 1.0;
        continue;
      }
      ds.feature_stds[c] = std;
      for (auto& row : rows) row[c] = (row[c] - mean) / std;
    }
  }

  std::map<double, std::size_t> classes;
  for (double t : targets) classes.emplace(t, 0);
  std::size_t next = 0;
  for (auto& [value, index] : classes) index = next++;
  ds.num_classes = classes.size();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    ds.instances.push_back(Instance::from_row(std::move(rows[r])));
    ds.labels.push_back(classes.at(targets[r]));
  }
  ds.split_seed = options.split_seed;
  ds.split = make_split(ds.size(), options.train_fraction, options.split_seed);
  return ds;
}

SyntheticTask synth_linear(std::size_t n, std::size_t num_samples,
                           std::uint64_t seed, double train_fraction) {
  if (n < 2) throw std::invalid_argument("synth_linear: n must be >= 2");
  if (num_samples < 1) {
    throw std::invalid_argument("synth_linear: num_samples must be >= 1");
  }
  std::mt19937_64 rng(mix_seed(seed, 0xc0ef));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  SyntheticTask task;
  task.coefficients.resize(n);
  for (auto& c : task.coefficients) c = unit(rng);
  task.threshold = 0.5 * std::accumulate(task.coefficients.begin(),
                                         task.coefficients.end(), 0.0);

  Dataset& ds = task.dataset;
  ds.num_classes = 2;
  for (std::size_t i = 0; i < n; ++i) {
    ds.feature_names.push_back("x" + std::to_string(i));
  }
  ds.feature_means.assign(n, 0.0);
  ds.feature_stds.assign(n, 1.0);
  std::mt19937_64 sample_rng(mix_seed(seed, 0xda7a));
  for (std::size_t s = 0; s < num_samples; ++s) {
    std::vector<double> row(n);
    double score = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      row[i] = unit(sample_rng);
      score += task.coefficients[i] * row[i];
    }
    ds.labels.push_back(score > task.threshold ? 1 : 0);
    ds.instances.push_back(Instance::from_row(std::move(row)));
  }
  ds.split_seed = seed;
  ds.split = make_split(num_samples, train_fraction, seed);
  return task;
}

Instance mean_instance(std::span<const Instance> instances) {
  if (instances.empty()) {
    throw std::invalid_argument("mean_instance: no instances");
  }
  Instance mean(instances.front().elements(), instances.front().block_dim());
  for (const auto& x : instances) {
    if (!x.same_shape(mean)) {
      throw std::invalid_argument("mean_instance: shape mismatch");
    }
    for (std::size_t k = 0; k < x.size(); ++k) {
      mean.values()[k] += x.values()[k];
    }
  }
  for (auto& v : mean.values()) v /= static_cast<double>(instances.size());
  return mean;
}

Instance training_mean(const Dataset& dataset) {
  const auto train = dataset.subset(dataset.split.train);
  return mean_instance(train.empty() ? dataset.instances : train);
}

}  // namespace faithkit
