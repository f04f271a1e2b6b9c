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


#include "ttafuse/metrics.hpp"

#include <array>
#include <deque>
#include <iomanip>
#include <sstream>

namespace ttafuse {
namespace {

std::vector<Dims> neighbour_offsets(Connectivity connectivity) {
  std::vector<Dims> offsets;
  for (Index dz = -1; dz <= 1; ++dz) {
    for (Index dy = -1; dy <= 1; ++dy) {
      for (Index dx = -1; dx <= 1; ++dx) {
        const Index manhattan = std::abs(dx) + std::abs(dy) + std::abs(dz);
        if (manhattan == 0) continue;
        if (connectivity == Connectivity::k6 && manhattan > 1) continue;
        if (connectivity == Connectivity::k18 && manhattan > 2) continue;
        offsets.emplace_back(dx, dy, dz);
      }
    }
  }
  return offsets;
}

void require_match(const MaskVolume& a, const MaskVolume& b) {
  if (!geometry_match(a, b)) throw ParameterError("mask geometries differ");
}

// Voxels of `a`'s components that never intersect `b`.
Index untouched_component_voxels(const MaskVolume& a, const MaskVolume& b,
                                 Connectivity connectivity) {
  const Components cc = connected_components(a, connectivity);
  std::vector<char> touches(static_cast<std::size_t>(cc.count) + 1, 0);
  for (Index i = 0; i < a.size(); ++i) {
    if (cc.labels.data[i] > 0 && b.data[i]) touches[static_cast<std::size_t>(cc.labels.data[i])] = 1;
  }
  Index voxels = 0;
  for (int k = 1; k <= cc.count; ++k) {
    if (!touches[static_cast<std::size_t>(k)]) voxels += cc.sizes[static_cast<std::size_t>(k - 1)];
  }
  return voxels;
}

}  // namespace

Connectivity connectivity_from_int(int value) {
  switch (value) {
    case 6: return Connectivity::k6;
    case 18: return Connectivity::k18;
    case 26: return Connectivity::k26;
    default: throw ParameterError("connectivity must be 6, 18 or 26");
  }
}

double dice(const MaskVolume& pred, const MaskVolume& gt) {
  require_match(pred, gt);
  Index both = 0, p = 0, g = 0;
  for (Index i = 0; i < pred.size(); ++i) {
    const bool a = pred.data[i] != 0;
    const bool b = gt.data[i] != 0;
    p += a;
    g += b;
    both += a && b;
  }
  if (p + g == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(p + g);
}

Components connected_components(const MaskVolume& mask, Connectivity connectivity) {
  const auto offsets = neighbour_offsets(connectivity);
  const Dims& n = mask.dims();
  Components cc;
  cc.labels = LabelVolume(mask.geometry, 0);
  std::deque<Dims> queue;
  for (Index z = 0; z < n[2]; ++z) {
    for (Index y = 0; y < n[1]; ++y) {
      for (Index x = 0; x < n[0]; ++x) {
        if (!mask(x, y, z) || cc.labels(x, y, z) != 0) continue;
        const int label = ++cc.count;
        Index size = 0;
        cc.labels(x, y, z) = label;
        queue.emplace_back(x, y, z);
        while (!queue.empty()) {
          const Dims p = queue.front();
          queue.pop_front();
          ++size;
          for (const Dims& d : offsets) {
            const Dims q = p + d;
            if ((q < 0).any() || (q >= n).any()) continue;
            if (mask(q[0], q[1], q[2]) && cc.labels(q[0], q[1], q[2]) == 0) {
              cc.labels(q[0], q[1], q[2]) = label;
              queue.push_back(q);
            }
          }
        }
        cc.sizes.push_back(size);
      }
    }
  }
  return cc;
}

double fp_volume(const MaskVolume& pred, const MaskVolume& gt, Connectivity connectivity) {
  require_match(pred, gt);
  return static_cast<double>(untouched_component_voxels(pred, gt, connectivity)) *
         pred.geometry.voxel_volume_ml();
}

double fn_volume(const MaskVolume& pred, const MaskVolume& gt, Connectivity connectivity) {
  require_match(pred, gt);
  return static_cast<double>(untouched_component_voxels(gt, pred, connectivity)) *
         gt.geometry.voxel_volume_ml();
}

CaseScore score_case(const std::string& case_id, const MaskVolume& pred, const MaskVolume& gt,
                     Connectivity connectivity) {
  if (!geometry_match(pred, gt)) {
    throw ParameterError("case " + case_id + ": prediction and ground truth geometry differ");
  }
  return {case_id, dice(pred, gt), fp_volume(pred, gt, connectivity),
          fn_volume(pred, gt, connectivity)};
}

EvalReport summarize(std::vector<CaseScore> scores) {
  EvalReport report;
  report.per_case = std::move(scores);
  report.case_count = report.per_case.size();
  if (report.case_count == 0) return report;
  for (const auto& s : report.per_case) {
    report.mean_dice += s.dice;
    report.mean_fp_volume_ml += s.fp_volume_ml;
    report.mean_fn_volume_ml += s.fn_volume_ml;
  }
  const auto count = static_cast<double>(report.case_count);
  report.mean_dice /= count;
  report.mean_fp_volume_ml /= count;
  report.mean_fn_volume_ml /= count;
  return report;
}

EvalReport evaluate(const std::vector<CasePair>& pairs, Connectivity connectivity) {
  std::vector<CaseScore> scores;
  scores.reserve(pairs.size());
  for (const auto& pair : pairs) {
    scores.push_back(score_case(pair.case_id, pair.pred, pair.gt, connectivity));
  }
  return summarize(std::move(scores));
}

nlohmann::ordered_json to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["case_count"] = report.case_count;
  j["mean_dice"] = report.mean_dice;
  j["mean_fp_volume_ml"] = report.mean_fp_volume_ml;
  j["mean_fn_volume_ml"] = report.mean_fn_volume_ml;
  auto cases = nlohmann::ordered_json::array();
  for (const auto& s : report.per_case) {
    nlohmann::ordered_json c;
    c["case_id"] = s.case_id;
    c["dice"] = s.dice;
    c["fp_volume_ml"] = s.fp_volume_ml;
    c["fn_volume_ml"] = s.fn_volume_ml;
    cases.push_back(c);
  }
  j["per_case"] = cases;
  return j;
}

std::string to_csv(const EvalReport& report) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "case_id,dice,fp_volume_ml,fn_volume_ml\n";
  for (const auto& s : report.per_case) {
    os << s.case_id << ',' << s.dice << ',' << s.fp_volume_ml << ',' << s.fn_volume_ml << '\n';
  }
  os << "mean," << report.mean_dice << ',' << report.mean_fp_volume_ml << ','
     << report.mean_fn_volume_ml << '\n';
  return os.str();
}

}  // namespace ttafuse
