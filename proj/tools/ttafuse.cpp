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


// ttafuse: test-time augmentation fusion for PET/CT lesion segmentation.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "ttafuse/commands.hpp"
#include "ttafuse/parallel.hpp"

namespace {

using ttafuse::PipelineConfig;

std::optional<std::string> g_config_path;
unsigned g_jobs = 0;
std::optional<std::uint64_t> g_seed;

PipelineConfig resolve_config() {
  PipelineConfig config = g_config_path ? ttafuse::load_config(*g_config_path) : PipelineConfig{};
  if (g_seed) config.seed = *g_seed;
  return config;
}

unsigned jobs() { return g_jobs == 0 ? ttafuse::default_jobs() : g_jobs; }

// Config problems are usage errors regardless of which layer noticed them.
template <typename Fn>
int with_config(Fn&& fn) {
  PipelineConfig config;
  try {
    config = resolve_config();
  } catch (const std::exception& e) {
    std::cerr << "error: invalid config: " << e.what() << "\n";
    return ttafuse::kExitUsage;
  }
  return fn(config);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Test-time augmentation fusion for PET/CT lesion segmentation"};
  app.require_subcommand(1);
  app.add_option("--config", g_config_path, "Pipeline JSON config");
  app.add_option("--jobs", g_jobs, "Worker threads (default: number of processors)");
  app.add_option("--seed", g_seed, "Seed override");

  int status = ttafuse::kExitOk;

  auto* preprocess = app.add_subcommand("preprocess", "Scale intensities and crop to the CT foreground");
  std::string pre_in, pre_out;
  std::optional<double> pre_threshold;
  std::optional<long> pre_margin;
  preprocess->add_option("--in", pre_in, "Input directory (one subdirectory per case)")->required();
  preprocess->add_option("--out", pre_out, "Output directory")->required();
  preprocess->add_option("--crop-threshold", pre_threshold, "Foreground threshold on scaled CT");
  preprocess->add_option("--crop-margin", pre_margin, "Crop margin in voxels");
  preprocess->callback([&] {
    status = with_config([&](PipelineConfig config) {
      if (pre_threshold) config.crop_threshold = *pre_threshold;
      if (pre_margin) config.crop_margin = *pre_margin;
      return ttafuse::cmd_preprocess(config, pre_in, pre_out, jobs(), std::cerr);
    });
  });

  auto* tta = app.add_subcommand("tta", "Fuse augmented predictions for one case");
  std::string tta_case, tta_out;
  std::optional<double> tta_theta;
  tta->add_option("--case", tta_case, "Case directory")->required();
  tta->add_option("--out", tta_out, "Output mask path (.nii or .nii.gz)")->required();
  tta->add_option("--theta", tta_theta, "Binarization threshold");
  tta->callback([&] {
    status = with_config([&](PipelineConfig config) {
      if (tta_theta) config.theta = *tta_theta;
      return ttafuse::cmd_tta(config, tta_case, tta_out, jobs(), std::cerr);
    });
  });

  auto* optimize = app.add_subcommand("optimize", "Learn fusion coefficients on validation cases");
  std::string opt_val, opt_out, opt_method = "ascent";
  ttafuse::OptimizeOptions opt_options;
  optimize->add_option("--val", opt_val, "Validation directory (cases with seg)")->required();
  optimize->add_option("--out", opt_out, "Coefficient JSON output path")->required();
  optimize->add_option("--method", opt_method, "heuristic, grid or ascent")
      ->check(CLI::IsMember({"heuristic", "grid", "ascent"}));
  optimize->add_option("--step", opt_options.grid_step, "Grid lattice step (fraction of n)");
  optimize->add_option("--floor", opt_options.floor, "Heuristic weight floor");
  optimize->add_option("--ascent-step", opt_options.ascent_step,
                       "Initial ascent step (fraction of n)");
  optimize->add_option("--shrink", opt_options.shrink, "Ascent step shrink factor");
  optimize->add_option("--max-rounds", opt_options.max_rounds, "Ascent sweep limit");
  optimize->callback([&] {
    status = with_config([&](const PipelineConfig& config) {
      opt_options.method = ttafuse::optimize_method_from_string(opt_method);
      return ttafuse::cmd_optimize(config, opt_val, opt_out, opt_options, jobs(), std::cerr);
    });
  });

  auto* evaluate = app.add_subcommand("evaluate", "Score predicted masks against ground truth");
  std::string ev_pred, ev_gt, ev_report;
  std::optional<int> ev_connectivity;
  evaluate->add_option("--pred", ev_pred, "Prediction directory")->required();
  evaluate->add_option("--gt", ev_gt, "Ground-truth directory")->required();
  evaluate->add_option("--report", ev_report, "Report JSON path (CSV written alongside)")
      ->required();
  evaluate->add_option("--connectivity", ev_connectivity, "6, 18 or 26")
      ->check(CLI::IsMember({6, 18, 26}));
  evaluate->callback([&] {
    status = with_config([&](const PipelineConfig& config) {
      const auto conn = ev_connectivity ? ttafuse::connectivity_from_int(*ev_connectivity)
                                        : config.connectivity;
      return ttafuse::cmd_evaluate(ev_pred, ev_gt, ev_report, conn, std::cerr);
    });
  });

  auto* split = app.add_subcommand("split", "Partition case ids into train/eval/test");
  std::string split_cases, split_out;
  std::vector<double> split_fractions{0.78, 0.12, 0.10};
  split->add_option("--cases", split_cases, "Text file with one case id per line")->required();
  split->add_option("--out", split_out, "Output JSON path")->required();
  split->add_option("--fractions", split_fractions, "train eval test fractions")
      ->expected(3)
      ->delimiter(',');
  split->callback([&] {
    status = with_config([&](const PipelineConfig& config) {
      ttafuse::SplitSpec spec;
      std::copy(split_fractions.begin(), split_fractions.end(), spec.fractions.begin());
      spec.seed = config.seed;
      return ttafuse::cmd_split(split_cases, spec, split_out, std::cerr);
    });
  });

  auto* synth = app.add_subcommand("synth", "Generate a synthetic PET/CT phantom dataset");
  std::string synth_out;
  int synth_cases = 10;
  std::vector<long> synth_dims{64, 64, 64};
  std::vector<int> synth_lesions{1, 3};
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--cases", synth_cases, "Number of cases");
  synth->add_option("--dims", synth_dims, "Grid size nx,ny,nz")->expected(3)->delimiter(',');
  synth->add_option("--lesions", synth_lesions, "Lesion count range min,max")
      ->expected(2)
      ->delimiter(',');
  synth->callback([&] {
    status = with_config([&](const PipelineConfig& config) {
      ttafuse::PhantomParams params;
      params.dims = ttafuse::Dims(synth_dims[0], synth_dims[1], synth_dims[2]);
      params.min_lesions = synth_lesions[0];
      params.max_lesions = synth_lesions[1];
      params.seed = config.seed;
      return ttafuse::cmd_synth(synth_out, synth_cases, params, jobs(), std::cerr);
    });
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : ttafuse::kExitUsage;
  } catch (const ttafuse::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return ttafuse::exit_code_for(e);
  }
  return status;
}
