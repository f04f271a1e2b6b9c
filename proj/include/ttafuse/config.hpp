// Copyright 2026 The ttafuse Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#ifndef TTAFUSE_CONFIG_HPP
#define TTAFUSE_CONFIG_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>

#include "json.hpp"
#include "ttafuse/augment.hpp"
#include "ttafuse/fusion.hpp"
#include "ttafuse/metrics.hpp"
#include "ttafuse/predictor.hpp"
#include "ttafuse/preprocess.hpp"

namespace ttafuse {

// Everything a pipeline run needs, read from a single JSON document. Keys
// that are absent take their defaults; unknown keys are rejected.
struct PipelineConfig {
  ScaleWindow ct_window = default_ct_window();
  ScaleWindow pet_window = default_pet_window();
  std::optional<double> crop_threshold;  // default: ct_window.out_min + 1e-3
  Index crop_margin = 0;
  AugmentationSet augmentations = default_augmentation_set();
  std::optional<CoefficientVector> coefficients;
  PredictorBinding predictor = oracle_binding({});
  double theta = kDefaultTheta;
  Connectivity connectivity = Connectivity::k26;
  std::uint64_t seed = 0;

  double effective_crop_threshold() const;
  void validate() const;
};

PipelineConfig config_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const PipelineConfig& config);
PipelineConfig load_config(const std::filesystem::path& path);

nlohmann::ordered_json to_json(const ScaleWindow& w);
ScaleWindow window_from_json(const nlohmann::json& j);

// Train / eval / test fractions.
struct SplitSpec {
  std::array<double, 3> fractions{0.78, 0.12, 0.10};
  std::uint64_t seed = 0;

  void validate() const;
};

struct Split {
  std::vector<std::string> train;
  std::vector<std::string> eval;
  std::vector<std::string> test;
};

// Largest-remainder apportionment of `count` items; remainders are handed
// out in decreasing order of fractional part, ties to the earlier part.
std::array<std::size_t, 3> split_sizes(std::size_t count, const std::array<double, 3>& fractions);

// Seeded Fisher-Yates shuffle followed by contiguous partition.
Split split_cases(const std::vector<std::string>& case_ids, const SplitSpec& spec);

}  // namespace ttafuse

#endif  // TTAFUSE_CONFIG_HPP
