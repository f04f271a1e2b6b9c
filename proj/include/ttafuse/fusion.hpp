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


#ifndef TTAFUSE_FUSION_HPP
#define TTAFUSE_FUSION_HPP

#include <string>
#include <vector>

#include "json.hpp"
#include "ttafuse/augment.hpp"
#include "ttafuse/predictor.hpp"
#include "ttafuse/volume.hpp"

namespace ttafuse {

// Nonnegative contribution weights constrained to sum to n.
struct CoefficientVector {
  Eigen::VectorXd omegas;
  double n = 1.0;

  Index size() const { return omegas.size(); }

  // Throws ParameterError if any weight is negative or the sum is off by more
  // than 1e-9 relative.
  void validate() const;

  // omega_i = 1, n = m: the plain unweighted TTA mean.
  static CoefficientVector uniform(Index m);
  // All weight on entry `index`.
  static CoefficientVector one_hot(Index m, Index index, double n);
};

inline constexpr double kSimplexTolerance = 1e-9;

// Per-augmentation probability maps, already mapped back to the reference
// frame, for one case.
struct PredictionSet {
  std::string case_id;
  std::vector<Volume3D> maps;

  std::size_t size() const { return maps.size(); }
  const Geometry& geometry() const { return maps.front().geometry; }
  void validate() const;
};

// Voxelwise (1/n) * sum_i omega_i * map_i. Accumulates in double in index
// order, so the result is independent of how the maps were produced.
Volume3D fuse(const PredictionSet& preds, const CoefficientVector& w);

// Single-voxel kernel shared with the cached optimizer objective.
template <typename Values>
float fuse_voxel(const Values& values, const CoefficientVector& w) {
  double acc = 0.0;
  for (Index i = 0; i < w.size(); ++i) acc += w.omegas[i] * static_cast<double>(values[i]);
  const auto v = static_cast<float>(acc / w.n);
  return v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
}

inline constexpr double kDefaultTheta = 0.5;

// voxel = 1 iff prob >= theta. theta must lie in (0, 1).
MaskVolume binarize(const Volume3D& prob, double theta = kDefaultTheta);

// Runs every augmentation through the predictor and maps each result back to
// the reference frame. Branches run on up to `jobs` threads; the output order
// follows the augmentation order.
PredictionSet aligned_predictions(const PredictorBinding& binding, const Volume3D& ct,
                                  const Volume3D& pet, const AugmentationSet& augs,
                                  const std::string& case_id, unsigned jobs = 1);

struct TtaResult {
  Volume3D probability;
  MaskVolume mask;
};

TtaResult tta_fuse(const PredictorBinding& binding, const Volume3D& ct, const Volume3D& pet,
                   const AugmentationSet& augs, const CoefficientVector& w, double theta,
                   const std::string& case_id = "case", unsigned jobs = 1);

MaskVolume tta_predict(const PredictorBinding& binding, const Volume3D& ct, const Volume3D& pet,
                       const AugmentationSet& augs, const CoefficientVector& w,
                       double theta = kDefaultTheta, const std::string& case_id = "case",
                       unsigned jobs = 1);

nlohmann::ordered_json to_json(const CoefficientVector& w);
CoefficientVector coefficients_from_json(const nlohmann::json& j);

}  // namespace ttafuse

#endif  // TTAFUSE_FUSION_HPP
