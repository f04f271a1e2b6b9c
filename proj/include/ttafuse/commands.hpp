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


#ifndef TTAFUSE_COMMANDS_HPP
#define TTAFUSE_COMMANDS_HPP

#include <exception>
#include <filesystem>
#include <ostream>

#include "ttafuse/config.hpp"
#include "ttafuse/phantom.hpp"

namespace ttafuse {

// Process exit codes shared by every command.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitPredictor = 3,
};

int exit_code_for(const std::exception& e);

int cmd_preprocess(const PipelineConfig& config, const std::filesystem::path& in_dir,
                   const std::filesystem::path& out_dir, unsigned jobs, std::ostream& log);

// Writes the fused mask to out_path and the soft fused map next to it
// (`<stem>_prob.nii[.gz]`). Both are restored to the uncropped frame when the
// case carries a bbox.json.
int cmd_tta(const PipelineConfig& config, const std::filesystem::path& case_dir,
            const std::filesystem::path& out_path, unsigned jobs, std::ostream& log);

enum class OptimizeMethod { kHeuristic, kGrid, kAscent };

OptimizeMethod optimize_method_from_string(const std::string& s);

struct OptimizeOptions {
  OptimizeMethod method = OptimizeMethod::kAscent;
  double grid_step = 0.1;
  double floor = 0.01;
  double ascent_step = 0.5;  // fraction of n; coarse first sweep, then shrink
  double shrink = 0.5;
  int max_rounds = 50;
};

// Writes the coefficient JSON to out_path and the optimization report to
// `<stem>.report.json` beside it.
int cmd_optimize(const PipelineConfig& config, const std::filesystem::path& val_dir,
                 const std::filesystem::path& out_path, const OptimizeOptions& options,
                 unsigned jobs, std::ostream& log);

// Writes the report JSON to report_path and the CSV beside it.
int cmd_evaluate(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir,
                 const std::filesystem::path& report_path, Connectivity connectivity,
                 std::ostream& log);

int cmd_split(const std::filesystem::path& case_list, const SplitSpec& spec,
              const std::filesystem::path& out_path, std::ostream& log);

int cmd_synth(const std::filesystem::path& out_dir, int n_cases, const PhantomParams& params,
              unsigned jobs, std::ostream& log);

std::filesystem::path soft_map_path(const std::filesystem::path& mask_path);
std::filesystem::path report_path_for(const std::filesystem::path& coefficients_path);

}  // namespace ttafuse

#endif  // TTAFUSE_COMMANDS_HPP
