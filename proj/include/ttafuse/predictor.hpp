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


#ifndef TTAFUSE_PREDICTOR_HPP
#define TTAFUSE_PREDICTOR_HPP

#include <condition_variable>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <variant>

#include "json.hpp"
#include "ttafuse/volume.hpp"

namespace ttafuse {

// Synthetic stand-in for a trained network: a soft threshold on PET with a
// per-augmentation additive bias and seeded noise.
struct OracleParams {
  double pet_threshold = 0.2;
  double softness = 0.02;
  std::map<int, double> per_augmentation_bias;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
  double bias(int aug_index) const;
  bool operator==(const OracleParams&) const = default;
};

// Counting semaphore shared by copies of a subprocess binding.
class WorkerLimiter {
 public:
  explicit WorkerLimiter(unsigned slots) : free_(slots == 0 ? 1 : slots) {}
  void acquire();
  void release();

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  unsigned free_;
};

namespace bindings {

// Reads `<directory>/<case_id>/aug_<index>.nii[.gz]`.
struct Precomputed {
  std::filesystem::path directory;
  bool operator==(const Precomputed&) const = default;
};

// Runs an external command. `{ct}`, `{pet}` and `{out}` in the template are
// replaced by temporary NIfTI paths.
struct Subprocess {
  std::string command_template;
  double timeout_seconds = 3600.0;
  unsigned max_workers = 0;  // 0: number of processors
  std::shared_ptr<WorkerLimiter> limiter;

  bool operator==(const Subprocess& o) const {
    return command_template == o.command_template && timeout_seconds == o.timeout_seconds &&
           max_workers == o.max_workers;
  }
};

struct SyntheticOracle {
  OracleParams params;
  bool operator==(const SyntheticOracle&) const = default;
};

}  // namespace bindings

struct PredictorBinding {
  std::variant<bindings::Precomputed, bindings::Subprocess, bindings::SyntheticOracle> mode;

  void validate() const;
  bool operator==(const PredictorBinding&) const = default;
};

PredictorBinding precomputed_binding(std::filesystem::path directory);
PredictorBinding subprocess_binding(std::string command_template, double timeout_seconds,
                                    unsigned max_workers = 0);
PredictorBinding oracle_binding(OracleParams params);

// Voxelwise lesion probability for one (possibly augmented) CT/PET pair.
// Results are validated against the CT geometry before being returned.
Volume3D predict(const PredictorBinding& binding, const Volume3D& ct, const Volume3D& pet,
                 const std::string& case_id, int aug_index);

// Throws ContractViolation unless prob matches the reference geometry and
// every value is finite and within [0, 1].
void validate_prediction(const Volume3D& prob, const Volume3D& reference);

nlohmann::ordered_json to_json(const PredictorBinding& binding);
PredictorBinding predictor_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const OracleParams& params);
OracleParams oracle_params_from_json(const nlohmann::json& j);

// Result of running a shell command with a deadline.
struct ProcessResult {
  int exit_code = -1;
  bool timed_out = false;
  std::string output;  // interleaved stdout and stderr
};

ProcessResult run_command(const std::string& command, double timeout_seconds);

}  // namespace ttafuse

#endif  // TTAFUSE_PREDICTOR_HPP
