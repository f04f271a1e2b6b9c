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


#ifndef TTAFUSE_METRICS_HPP
#define TTAFUSE_METRICS_HPP

#include <string>
#include <vector>

#include "json.hpp"
#include "ttafuse/volume.hpp"

namespace ttafuse {

enum class Connectivity { k6 = 6, k18 = 18, k26 = 26 };

Connectivity connectivity_from_int(int value);

// 2|A and B| / (|A| + |B|); two empty masks score 1.
double dice(const MaskVolume& pred, const MaskVolume& gt);

struct Components {
  LabelVolume labels;  // 0 = background, 1..count
  int count = 0;
  std::vector<Index> sizes;  // sizes[k-1] is the voxel count of label k
};

Components connected_components(const MaskVolume& mask, Connectivity connectivity);

// Volume (mL) of predicted components that do not touch the ground truth.
double fp_volume(const MaskVolume& pred, const MaskVolume& gt,
                 Connectivity connectivity = Connectivity::k26);

// Volume (mL) of ground-truth components the prediction misses entirely.
double fn_volume(const MaskVolume& pred, const MaskVolume& gt,
                 Connectivity connectivity = Connectivity::k26);

struct CaseScore {
  std::string case_id;
  double dice = 0.0;
  double fp_volume_ml = 0.0;
  double fn_volume_ml = 0.0;
};

struct EvalReport {
  std::vector<CaseScore> per_case;
  double mean_dice = 0.0;
  double mean_fp_volume_ml = 0.0;
  double mean_fn_volume_ml = 0.0;
  std::size_t case_count = 0;
};

struct CasePair {
  std::string case_id;
  MaskVolume pred;
  MaskVolume gt;
};

CaseScore score_case(const std::string& case_id, const MaskVolume& pred, const MaskVolume& gt,
                     Connectivity connectivity = Connectivity::k26);

EvalReport evaluate(const std::vector<CasePair>& pairs,
                    Connectivity connectivity = Connectivity::k26);

// Aggregates already-computed per-case scores.
EvalReport summarize(std::vector<CaseScore> scores);

nlohmann::ordered_json to_json(const EvalReport& report);

// Header `case_id,dice,fp_volume_ml,fn_volume_ml`, one row per case, then a
// `mean` row.
std::string to_csv(const EvalReport& report);

}  // namespace ttafuse

#endif  // TTAFUSE_METRICS_HPP
