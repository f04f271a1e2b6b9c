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


#include "ttafuse/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "ttafuse/random.hpp"

namespace ttafuse {
namespace {

void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                    const char* where) {
  if (!j.is_object()) throw ParseError(std::string(where) + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw ParseError("unknown key '" + key + "' in " + where);
    }
  }
}

}  // namespace

nlohmann::ordered_json to_json(const ScaleWindow& w) {
  nlohmann::ordered_json j;
  j["in_min"] = w.in_min;
  j["in_max"] = w.in_max;
  j["out_min"] = w.out_min;
  j["out_max"] = w.out_max;
  j["clamp"] = w.clamp;
  return j;
}

ScaleWindow window_from_json(const nlohmann::json& j) {
  reject_unknown(j, {"in_min", "in_max", "out_min", "out_max", "clamp"}, "window");
  ScaleWindow w;
  try {
    w.in_min = j.at("in_min").get<double>();
    w.in_max = j.at("in_max").get<double>();
    w.out_min = j.value("out_min", 0.0);
    w.out_max = j.value("out_max", 1.0);
    w.clamp = j.value("clamp", true);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed window: ") + e.what());
  }
  w.validate();
  return w;
}

double PipelineConfig::effective_crop_threshold() const {
  return crop_threshold.value_or(ct_window.out_min + 1e-3);
}

void PipelineConfig::validate() const {
  ct_window.validate();
  pet_window.validate();
  if (crop_margin < 0) throw ParameterError("crop_margin must be >= 0");
  augmentations.validate();
  predictor.validate();
  if (!(theta > 0.0 && theta < 1.0)) throw ParameterError("theta must lie in (0, 1)");
  if (coefficients) {
    coefficients->validate();
    if (static_cast<std::size_t>(coefficients->size()) != augmentations.size()) {
      throw ParameterError("config has " + std::to_string(coefficients->size()) +
                           " coefficients for " + std::to_string(augmentations.size()) +
                           " augmentations");
    }
  }
}

PipelineConfig config_from_json(const nlohmann::json& j) {
  reject_unknown(j,
                 {"ct_window", "pet_window", "crop_threshold", "crop_margin", "augmentations",
                  "coefficients", "predictor", "theta", "connectivity", "seed"},
                 "config");
  PipelineConfig c;
  try {
    if (j.contains("ct_window")) c.ct_window = window_from_json(j.at("ct_window"));
    if (j.contains("pet_window")) c.pet_window = window_from_json(j.at("pet_window"));
    if (j.contains("crop_threshold") && !j.at("crop_threshold").is_null()) {
      c.crop_threshold = j.at("crop_threshold").get<double>();
    }
    if (j.contains("crop_margin")) c.crop_margin = j.at("crop_margin").get<Index>();
    if (j.contains("augmentations")) {
      c.augmentations = augmentations_from_json(j.at("augmentations"));
    }
    if (j.contains("coefficients") && !j.at("coefficients").is_null()) {
      c.coefficients = coefficients_from_json(j.at("coefficients"));
    }
    if (j.contains("predictor")) c.predictor = predictor_from_json(j.at("predictor"));
    if (j.contains("theta")) c.theta = j.at("theta").get<double>();
    if (j.contains("connectivity")) {
      c.connectivity = connectivity_from_int(j.at("connectivity").get<int>());
    }
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed config: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::ordered_json to_json(const PipelineConfig& c) {
  nlohmann::ordered_json j;
  j["ct_window"] = to_json(c.ct_window);
  j["pet_window"] = to_json(c.pet_window);
  if (c.crop_threshold) j["crop_threshold"] = *c.crop_threshold;
  j["crop_margin"] = c.crop_margin;
  j["augmentations"] = to_json(c.augmentations);
  if (c.coefficients) j["coefficients"] = to_json(*c.coefficients);
  j["predictor"] = to_json(c.predictor);
  j["theta"] = c.theta;
  j["connectivity"] = static_cast<int>(c.connectivity);
  j["seed"] = c.seed;
  return j;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

void SplitSpec::validate() const {
  for (double f : fractions) {
    if (!(f > 0.0)) throw ParameterError("split fractions must be positive");
  }
  const double sum = fractions[0] + fractions[1] + fractions[2];
  if (std::abs(sum - 1.0) > 1e-9) throw ParameterError("split fractions must sum to 1");
}

std::array<std::size_t, 3> split_sizes(std::size_t count, const std::array<double, 3>& fractions) {
  std::array<std::size_t, 3> sizes{};
  std::array<double, 3> remainders{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double quota = fractions[i] * static_cast<double>(count);
    // Nudge so quotas like 0.12 * 100 = 11.999999999999998 floor to 12.
    const double floored = std::floor(quota + 1e-9);
    sizes[i] = static_cast<std::size_t>(floored);
    remainders[i] = std::max(0.0, quota - floored);
    assigned += sizes[i];
  }
  std::array<std::size_t, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainders[a] > remainders[b]; });
  for (std::size_t k = 0; assigned < count; k = (k + 1) % 3) {
    ++sizes[order[k]];
    ++assigned;
  }
  return sizes;
}

Split split_cases(const std::vector<std::string>& case_ids, const SplitSpec& spec) {
  spec.validate();
  std::vector<std::string> ids = case_ids;
  Rng rng(mix_seed(spec.seed));
  for (std::size_t i = ids.size(); i > 1; --i) {
    std::swap(ids[i - 1], ids[uniform_index(rng, i)]);
  }
  const auto sizes = split_sizes(ids.size(), spec.fractions);
  Split split;
  auto first = ids.begin();
  split.train.assign(first, first + static_cast<std::ptrdiff_t>(sizes[0]));
  first += static_cast<std::ptrdiff_t>(sizes[0]);
  split.eval.assign(first, first + static_cast<std::ptrdiff_t>(sizes[1]));
  first += static_cast<std::ptrdiff_t>(sizes[1]);
  split.test.assign(first, ids.end());
  return split;
}

}  // namespace ttafuse
