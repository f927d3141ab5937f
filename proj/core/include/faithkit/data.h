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

#ifndef FAITHKIT_DATA_H_
#define FAITHKIT_DATA_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace faithkit {

// An input of n elements, each a d-dimensional block, stored row-major.
class Instance {
 public:
  Instance() = default;
  Instance(std::size_t n, std::size_t d, double fill = 0.0);
  // Throws std::invalid_argument on shape mismatch or non-finite entries.
  Instance(std::size_t n, std::size_t d, std::vector<double> values);
  // Tabular convenience: n scalar features, d = 1.
  static Instance from_row(std::vector<double> row);

  std::size_t elements() const { return n_; }
  std::size_t block_dim() const { return d_; }
  std::size_t size() const { return values_.size(); }

  double at(std::size_t i, std::size_t j) const { return values_[i * d_ + j]; }
  double& at(std::size_t i, std::size_t j) { return values_[i * d_ + j]; }

  std::span<const double> element(std::size_t i) const {
    return {values_.data() + i * d_, d_};
  }
  std::span<double> element(std::size_t i) {
    return {values_.data() + i * d_, d_};
  }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  bool same_shape(const Instance& other) const {
    return n_ == other.n_ && d_ == other.d_;
  }

  friend bool operator==(const Instance&, const Instance&) = default;

 private:
  std::size_t n_ = 0;
  std::size_t d_ = 0;
  std::vector<double> values_;
};

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

struct Dataset {
  std::vector<Instance> instances;
  std::vector<std::size_t> labels;
  std::size_t num_classes = 0;
  std::vector<std::string> feature_names;
  // Column statistics used for standardization (mean 0 / std 1 if none).
  std::vector<double> feature_means;
  std::vector<double> feature_stds;
  Split split;
  std::uint64_t split_seed = 0;

  std::size_t size() const { return instances.size(); }
  std::size_t elements() const {
    return instances.empty() ? 0 : instances.front().elements();
  }
  std::size_t block_dim() const {
    return instances.empty() ? 0 : instances.front().block_dim();
  }
  std::vector<Instance> subset(std::span<const std::size_t> indices) const;
};

// Seeded shuffle, first round(train_fraction * count) indices go to train.
Split make_split(std::size_t count, double train_fraction, std::uint64_t seed);

struct CsvOptions {
  std::string target_column;
  bool standardize = false;
  double train_fraction = 0.8;
  std::uint64_t split_seed = 0;
};

// Loads a header-first CSV; every non-target column becomes a scalar feature.
// Target values are mapped to class indices in order of first appearance
// after sorting the distinct values numerically.
Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options);

struct SyntheticTask {
  Dataset dataset;
  std::vector<double> coefficients;
  double threshold = 0.0;
};

// Features i.i.d. uniform on [0, 1]; label = [sum_i c_i (x_i - 1/2) > 0] with
// c_i >= 0 drawn from the seed.
SyntheticTask synth_linear(std::size_t n, std::size_t num_samples,
                           std::uint64_t seed, double train_fraction = 0.8);

// Per-element mean over the given instances.
Instance mean_instance(std::span<const Instance> instances);
Instance training_mean(const Dataset& dataset);

}  // namespace faithkit

#endif  // FAITHKIT_DATA_H_
