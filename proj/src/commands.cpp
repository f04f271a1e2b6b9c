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


#include "ttafuse/commands.hpp"

#include <algorithm>
#include <memory>
#include <mutex>
#include <sstream>

#include "ttafuse/coeffopt.hpp"
#include "ttafuse/dataset.hpp"
#include "ttafuse/parallel.hpp"
#include "ttafuse/volume_io.hpp"

namespace ttafuse {
namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

// Runs body, reporting any library error on `log` and mapping it to an exit
// code.
template <typename Body>
int guarded(std::ostream& log, Body&& body) {
  try {
    return body();
  } catch (const PredictorFailure& e) {
    log << "error: " << e.what() << "\n";
    if (!e.diagnostics().empty()) log << "predictor output:\n" << e.diagnostics() << "\n";
    return kExitPredictor;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const PredictorFailure*>(&e)) return kExitPredictor;
  if (dynamic_cast<const UsageError*>(&e) || dynamic_cast<const ParseError*>(&e)) {
    return kExitUsage;
  }
  return kExitData;
}

fs::path soft_map_path(const fs::path& mask_path) {
  std::string name = mask_path.filename().string();
  std::string ext;
  for (const std::string candidate : {".nii.gz", ".nii"}) {
    if (name.size() > candidate.size() && name.ends_with(candidate)) {
      ext = candidate;
      break;
    }
  }
  if (ext.empty()) ext = ".nii";
  else name.resize(name.size() - ext.size());
  return mask_path.parent_path() / (name + "_prob" + ext);
}

fs::path report_path_for(const fs::path& coefficients_path) {
  fs::path p = coefficients_path;
  p.replace_extension(".report.json");
  return p;
}

int cmd_preprocess(const PipelineConfig& config, const fs::path& in_dir, const fs::path& out_dir,
                   unsigned jobs, std::ostream& log) {
  return guarded(log, [&] {
    const auto ids = discover_cases(in_dir);
    if (ids.empty()) throw UsageError("no case directories found in " + in_dir.string());
    std::mutex log_mutex;
    std::vector<char> failed(ids.size(), 0);
    parallel_for(ids.size(), jobs, [&](std::size_t i) {
      try {
        const CaseFiles files = load_case(in_dir / ids[i]);
        const Volume3D ct = scale_intensity(files.ct, config.ct_window);
        const Volume3D pet = scale_intensity(files.pet, config.pet_window);
        const BBox box =
            foreground_bbox(ct, config.effective_crop_threshold(), config.crop_margin);
        const fs::path dst = out_dir / ids[i];
        fs::create_directories(dst);
        write_nifti(crop(ct, box), dst / "ct.nii");
        write_nifti(crop(pet, box), dst / "pet.nii");
        if (files.seg) write_mask(crop(*files.seg, box), dst / "seg.nii");
        write_crop_record({box, files.ct.geometry}, dst / "bbox.json");
      } catch (const std::exception& e) {
        std::lock_guard lock(log_mutex);
        log << "case " << ids[i] << ": " << e.what() << "\n";
        failed[i] = 1;
      }
    });
    const auto failures = std::count(failed.begin(), failed.end(), 1);
    if (failures > 0) {
      log << failures << " of " << ids.size() << " cases failed\n";
      return static_cast<int>(kExitData);
    }
    return static_cast<int>(kExitOk);
  });
}

int cmd_tta(const PipelineConfig& config, const fs::path& case_dir, const fs::path& out_path,
            unsigned jobs, std::ostream& log) {
  return guarded(log, [&] {
    if (!config.coefficients) {
      throw UsageError("config has no coefficients; run `optimize` first or add them");
    }
    const CaseFiles files = load_case(case_dir);
    TtaResult result = tta_fuse(config.predictor, files.ct, files.pet, config.augmentations,
                                *config.coefficients, config.theta, files.case_id, jobs);
    const fs::path record_path = case_dir / "bbox.json";
    if (fs::exists(record_path)) {
      const CropRecord record = read_crop_record(record_path);
      result.probability = uncrop(result.probability, record.box, record.full);
      result.mask = uncrop(result.mask, record.box, record.full);
    }
    if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
    write_mask(result.mask, out_path);
    write_nifti(result.probability, soft_map_path(out_path));
    return static_cast<int>(kExitOk);
  });
}

OptimizeMethod optimize_method_from_string(const std::string& s) {
  if (s == "heuristic") return OptimizeMethod::kHeuristic;
  if (s == "grid") return OptimizeMethod::kGrid;
  if (s == "ascent") return OptimizeMethod::kAscent;
  throw UsageError("unknown optimize method '" + s + "' (heuristic, grid, ascent)");
}

int cmd_optimize(const PipelineConfig& config, const fs::path& val_dir, const fs::path& out_path,
                 const OptimizeOptions& options, unsigned jobs, std::ostream& log) {
  return guarded(log, [&] {
    std::vector<ValidationCase> cases;
    for (const auto& id : discover_cases(val_dir)) {
      if (!has_segmentation(val_dir / id)) continue;
      CaseFiles files = load_case(val_dir / id);
      cases.push_back({files.case_id, std::move(files.ct), std::move(files.pet),
                       std::move(*files.seg)});
    }
    if (cases.empty()) throw UsageError("no cases with ground truth (seg) in " + val_dir.string());

    const auto& augs = config.augmentations;
    const double n = static_cast<double>(augs.size());
    auto cache = std::make_shared<const PredictionCache>(config.predictor, cases, augs, jobs);
    const FusionObjective objective(cache, config.theta);
    const ImprovementTable table = measure_improvements(*cache, config.theta);
    const CoefficientVector heuristic = heuristic_weights(table, n, options.floor);
    const double heuristic_objective = objective(heuristic);

    ordered_json report;
    report["case_count"] = cases.size();
    report["augmentations"] = to_json(augs);
    report["improvement_table"] = to_json(table);
    report["uniform_objective"] = objective(CoefficientVector::uniform(augs.size()));
    report["heuristic"] = {{"coefficients", to_json(heuristic)},
                           {"objective", heuristic_objective}};

    CoefficientVector chosen = heuristic;
    double chosen_objective = heuristic_objective;
    auto trace = ordered_json::array();
    switch (options.method) {
      case OptimizeMethod::kHeuristic:
        report["method"] = "heuristic";
        break;
      case OptimizeMethod::kGrid: {
        report["method"] = "grid";
        const GridResult grid = grid_search(objective, n, options.grid_step, jobs);
        chosen = grid.best;
        chosen_objective = grid.best_objective;
        report["grid"] = {{"step", options.grid_step}, {"lattice_size", grid.lattice_size}};
        break;
      }
      case OptimizeMethod::kAscent: {
        report["method"] = "ascent";
        const AscentResult ascent = coordinate_ascent(objective, heuristic, options.ascent_step * n,
                                                      options.shrink, options.max_rounds);
        chosen = ascent.w;
        chosen_objective = ascent.objective;
        for (const auto& move : ascent.trace) {
          trace.push_back({{"round", move.round},
                           {"to", move.to},
                           {"from", move.from},
                           {"delta", move.delta},
                           {"objective", move.objective}});
        }
        report["ascent"] = {{"initial_step", options.ascent_step * n},
                            {"shrink", options.shrink},
                            {"max_rounds", options.max_rounds},
                            {"rounds", ascent.rounds},
                            {"evaluations", ascent.evaluations}};
        break;
      }
    }
    report["coefficients"] = to_json(chosen);
    report["objective"] = chosen_objective;
    report["trace"] = trace;

    write_text(out_path, to_json(chosen).dump(2) + "\n");
    write_text(report_path_for(out_path), report.dump(2) + "\n");
    log << "mean validation Dice " << chosen_objective << " over " << cases.size() << " cases\n";
    return static_cast<int>(kExitOk);
  });
}

int cmd_evaluate(const fs::path& pred_dir, const fs::path& gt_dir, const fs::path& report_path,
                 Connectivity connectivity, std::ostream& log) {
  return guarded(log, [&] {
    const auto preds = discover_masks(pred_dir);
    const auto gts = discover_masks(gt_dir);
    std::vector<std::string> unpaired;
    std::vector<CaseScore> scores;
    for (const auto& [id, gt_path] : gts) {
      const auto it = preds.find(id);
      if (it == preds.end()) {
        unpaired.push_back(id);
        continue;
      }
      scores.push_back(score_case(id, read_mask(it->second), read_mask(gt_path), connectivity));
    }
    for (const auto& [id, path] : preds) {
      if (!gts.contains(id)) unpaired.push_back(id);
    }
    std::sort(unpaired.begin(), unpaired.end());

    const EvalReport report = summarize(std::move(scores));
    ordered_json j = to_json(report);
    j["connectivity"] = static_cast<int>(connectivity);
    j["unpaired"] = unpaired;
    write_text(report_path, j.dump(2) + "\n");
    fs::path csv = report_path;
    csv.replace_extension(".csv");
    write_text(csv, to_csv(report));

    if (!unpaired.empty()) {
      for (const auto& id : unpaired) log << "unpaired case: " << id << "\n";
      return static_cast<int>(kExitData);
    }
    return static_cast<int>(kExitOk);
  });
}

int cmd_split(const fs::path& case_list, const SplitSpec& spec, const fs::path& out_path,
              std::ostream& log) {
  return guarded(log, [&] {
    const auto ids = read_case_list(case_list);
    if (ids.empty()) throw UsageError("case list " + case_list.string() + " is empty");
    const Split split = split_cases(ids, spec);
    ordered_json j;
    j["seed"] = spec.seed;
    j["fractions"] = spec.fractions;
    j["train"] = split.train;
    j["eval"] = split.eval;
    j["test"] = split.test;
    write_text(out_path, j.dump(2) + "\n");
    return static_cast<int>(kExitOk);
  });
}

int cmd_synth(const fs::path& out_dir, int n_cases, const PhantomParams& params, unsigned jobs,
              std::ostream& log) {
  return guarded(log, [&] {
    if (n_cases < 1) throw UsageError("synth needs at least one case");
    params.validate();
    parallel_for(static_cast<std::size_t>(n_cases), jobs, [&](std::size_t i) {
      const PhantomCase phantom = generate_phantom(params, static_cast<int>(i));
      const fs::path dir = out_dir / phantom.case_id;
      fs::create_directories(dir);
      write_nifti(phantom.ct, dir / "ct.nii.gz");
      write_nifti(phantom.pet, dir / "pet.nii.gz");
      write_mask(phantom.seg, dir / "seg.nii.gz");
    });
    return static_cast<int>(kExitOk);
  });
}

}  // namespace ttafuse
