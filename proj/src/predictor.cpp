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


#include "ttafuse/predictor.hpp"

#include <stdlib.h>

#include <cmath>
#include <random>

#include "ttafuse/parallel.hpp"
#include "ttafuse/random.hpp"
#include "ttafuse/volume_io.hpp"

namespace ttafuse {
namespace {

namespace fs = std::filesystem;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

// Unique scratch directory removed on scope exit.
class ScratchDir {
 public:
  ScratchDir() {
    std::string pattern = (fs::temp_directory_path() / "ttafuse-XXXXXX").string();
    if (mkdtemp(pattern.data()) == nullptr) throw IoError("cannot create temporary directory");
    path_ = pattern;
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

class SlotGuard {
 public:
  explicit SlotGuard(WorkerLimiter* limiter) : limiter_(limiter) {
    if (limiter_) limiter_->acquire();
  }
  ~SlotGuard() {
    if (limiter_) limiter_->release();
  }
  SlotGuard(const SlotGuard&) = delete;
  SlotGuard& operator=(const SlotGuard&) = delete;

 private:
  WorkerLimiter* limiter_;
};

void replace_all(std::string& s, const std::string& from, const std::string& to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos;
       pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

Volume3D predict_oracle(const OracleParams& p, const Volume3D& pet, const std::string& case_id,
                        int aug_index) {
  Volume3D prob(pet.geometry);
  const double bias = p.bias(aug_index);
  Rng rng(mix_seed(mix_seed(p.seed, stable_hash(case_id)), static_cast<std::uint64_t>(aug_index)));
  std::normal_distribution<double> normal(0.0, p.noise_sigma > 0.0 ? p.noise_sigma : 1.0);
  for (Index i = 0; i < pet.size(); ++i) {
    double v = 1.0 / (1.0 + std::exp(-(pet.data[i] - p.pet_threshold) / p.softness)) + bias;
    if (p.noise_sigma > 0.0) v += normal(rng);
    prob.data[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
  }
  return prob;
}

Volume3D predict_precomputed(const bindings::Precomputed& b, const std::string& case_id,
                             int aug_index) {
  const fs::path dir = b.directory / case_id;
  const std::string name = "aug_" + std::to_string(aug_index);
  for (const char* ext : {".nii", ".nii.gz"}) {
    const fs::path candidate = dir / (name + ext);
    if (fs::exists(candidate)) return read_nifti(candidate);
  }
  throw NotFoundError("missing precomputed prediction " + (dir / (name + ".nii")).string());
}

Volume3D predict_subprocess(const bindings::Subprocess& b, const Volume3D& ct,
                            const Volume3D& pet) {
  SlotGuard slot(b.limiter.get());
  ScratchDir scratch;
  const fs::path ct_path = scratch.path() / "ct.nii";
  const fs::path pet_path = scratch.path() / "pet.nii";
  const fs::path out_path = scratch.path() / "out.nii";
  write_nifti(ct, ct_path);
  write_nifti(pet, pet_path);

  std::string command = b.command_template;
  replace_all(command, "{ct}", ct_path.string());
  replace_all(command, "{pet}", pet_path.string());
  replace_all(command, "{out}", out_path.string());

  const ProcessResult result = run_command(command, b.timeout_seconds);
  if (result.timed_out) {
    throw PredictorFailure("predictor timed out after " + std::to_string(b.timeout_seconds) +
                               " s: " + command,
                           result.output);
  }
  if (result.exit_code != 0) {
    throw PredictorFailure(
        "predictor exited with status " + std::to_string(result.exit_code) + ": " + command,
        result.output);
  }
  if (!fs::exists(out_path)) {
    throw PredictorFailure("predictor produced no output file: " + command, result.output);
  }
  try {
    return read_nifti(out_path);
  } catch (const Error& e) {
    throw ContractViolation(std::string("unreadable predictor output: ") + e.what());
  }
}

}  // namespace

void WorkerLimiter::acquire() {
  std::unique_lock lock(mutex_);
  cv_.wait(lock, [&] { return free_ > 0; });
  --free_;
}

void WorkerLimiter::release() {
  {
    std::lock_guard lock(mutex_);
    ++free_;
  }
  cv_.notify_one();
}

void OracleParams::validate() const {
  if (!(softness > 0.0)) throw ParameterError("oracle softness must be > 0");
  if (!(noise_sigma >= 0.0)) throw ParameterError("oracle noise_sigma must be >= 0");
}

double OracleParams::bias(int aug_index) const {
  const auto it = per_augmentation_bias.find(aug_index);
  return it == per_augmentation_bias.end() ? 0.0 : it->second;
}

void PredictorBinding::validate() const {
  std::visit(Overloaded{
                 [](const bindings::Precomputed&) {},
                 [](const bindings::Subprocess& s) {
                   for (const char* ph : {"{ct}", "{pet}", "{out}"}) {
                     if (s.command_template.find(ph) == std::string::npos) {
                       throw ParameterError(std::string("command template lacks placeholder ") +
                                            ph);
                     }
                   }
                   if (!(s.timeout_seconds > 0.0)) {
                     throw ParameterError("predictor timeout must be > 0");
                   }
                 },
                 [](const bindings::SyntheticOracle& o) { o.params.validate(); },
             },
             mode);
}

PredictorBinding precomputed_binding(fs::path directory) {
  return {bindings::Precomputed{std::move(directory)}};
}

PredictorBinding subprocess_binding(std::string command_template, double timeout_seconds,
                                    unsigned max_workers) {
  bindings::Subprocess s{std::move(command_template), timeout_seconds, max_workers, nullptr};
  s.limiter = std::make_shared<WorkerLimiter>(max_workers == 0 ? default_jobs() : max_workers);
  PredictorBinding b{std::move(s)};
  b.validate();
  return b;
}

PredictorBinding oracle_binding(OracleParams params) {
  PredictorBinding b{bindings::SyntheticOracle{std::move(params)}};
  b.validate();
  return b;
}

void validate_prediction(const Volume3D& prob, const Volume3D& reference) {
  if (!geometry_match(prob, reference)) {
    throw ContractViolation("prediction geometry does not match its input");
  }
  if (prob.data.size() != prob.geometry.voxel_count()) {
    throw ContractViolation("prediction data length does not match dims");
  }
  for (Index i = 0; i < prob.size(); ++i) {
    const float v = prob.data[i];
    if (!std::isfinite(v)) throw ContractViolation("prediction contains a non-finite value");
    if (v < 0.0f || v > 1.0f) {
      throw ContractViolation("prediction value " + std::to_string(v) + " outside [0, 1]");
    }
  }
}

Volume3D predict(const PredictorBinding& binding, const Volume3D& ct, const Volume3D& pet,
                 const std::string& case_id, int aug_index) {
  if (!geometry_match(ct, pet)) throw ParameterError("predict: CT and PET geometry differ");
  Volume3D prob = std::visit(
      Overloaded{
          [&](const bindings::Precomputed& b) { return predict_precomputed(b, case_id, aug_index); },
          [&](const bindings::Subprocess& b) { return predict_subprocess(b, ct, pet); },
          [&](const bindings::SyntheticOracle& b) {
            return predict_oracle(b.params, pet, case_id, aug_index);
          },
      },
      binding.mode);
  validate_prediction(prob, ct);
  return prob;
}

nlohmann::ordered_json to_json(const OracleParams& p) {
  nlohmann::ordered_json j;
  j["pet_threshold"] = p.pet_threshold;
  j["softness"] = p.softness;
  nlohmann::ordered_json bias = nlohmann::ordered_json::object();
  for (const auto& [index, value] : p.per_augmentation_bias) bias[std::to_string(index)] = value;
  j["per_augmentation_bias"] = bias;
  j["noise_sigma"] = p.noise_sigma;
  j["seed"] = p.seed;
  return j;
}

OracleParams oracle_params_from_json(const nlohmann::json& j) {
  OracleParams p;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "pet_threshold") {
        p.pet_threshold = value.get<double>();
      } else if (key == "softness") {
        p.softness = value.get<double>();
      } else if (key == "noise_sigma") {
        p.noise_sigma = value.get<double>();
      } else if (key == "seed") {
        p.seed = value.get<std::uint64_t>();
      } else if (key == "per_augmentation_bias") {
        for (const auto& [index, bias] : value.items()) {
          p.per_augmentation_bias[std::stoi(index)] = bias.get<double>();
        }
      } else {
        throw ParseError("unknown key '" + key + "' in oracle parameters");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed oracle parameters: ") + e.what());
  } catch (const std::invalid_argument&) {
    throw ParseError("per_augmentation_bias keys must be integers");
  }
  p.validate();
  return p;
}

nlohmann::ordered_json to_json(const PredictorBinding& binding) {
  nlohmann::ordered_json j;
  std::visit(Overloaded{
                 [&](const bindings::Precomputed& b) {
                   j["mode"] = "precomputed";
                   j["directory"] = b.directory.string();
                 },
                 [&](const bindings::Subprocess& b) {
                   j["mode"] = "subprocess";
                   j["command"] = b.command_template;
                   j["timeout_seconds"] = b.timeout_seconds;
                   j["max_workers"] = b.max_workers;
                 },
                 [&](const bindings::SyntheticOracle& b) {
                   j["mode"] = "oracle";
                   j["oracle"] = to_json(b.params);
                 },
             },
             binding.mode);
  return j;
}

PredictorBinding predictor_from_json(const nlohmann::json& j) {
  try {
    const auto mode = j.at("mode").get<std::string>();
    auto allow = [&](std::initializer_list<const char*> keys) {
      for (const auto& [key, value] : j.items()) {
        if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; })) {
          throw ParseError("unknown key '" + key + "' in predictor");
        }
      }
    };
    if (mode == "precomputed") {
      allow({"mode", "directory"});
      return precomputed_binding(j.at("directory").get<std::string>());
    }
    if (mode == "subprocess") {
      allow({"mode", "command", "timeout_seconds", "max_workers"});
      return subprocess_binding(j.at("command").get<std::string>(),
                                j.value("timeout_seconds", 3600.0), j.value("max_workers", 0u));
    }
    if (mode == "oracle") {
      allow({"mode", "oracle"});
      return oracle_binding(j.contains("oracle") ? oracle_params_from_json(j.at("oracle"))
                                                 : OracleParams{});
    }
    throw ParseError("unknown predictor mode '" + mode + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed predictor: ") + e.what());
  }
}

}  // namespace ttafuse
