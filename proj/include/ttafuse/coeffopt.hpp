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


#ifndef TTAFUSE_COEFFOPT_HPP
#define TTAFUSE_COEFFOPT_HPP

#include <atomic>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "ttafuse/augment.hpp"
#include "ttafuse/fusion.hpp"
#include "ttafuse/predictor.hpp"

namespace ttafuse {

struct ValidationCase {
  std::string case_id;
  Volume3D ct;
  Volume3D pet;
  MaskVolume gt;

  void validate() const;
};

// Mean single-augmentation Dice relative to the identity augmentation.
struct ImprovementTable {
  double baseline_dice = 0.0;
  std::vector<double> deltas;          // deltas[0] == 0
  std::vector<double> augmentation_dice;  // mean Dice of each augmentation alone

  std::size_t size() const { return deltas.size(); }
};

// Aligned per-augmentation predictions for every validation case. The
// predictor runs exactly once per (case, augmentation).
class PredictionCache {
 public:
  PredictionCache(const PredictorBinding& binding, const std::vector<ValidationCase>& cases,
                  const AugmentationSet& augs, unsigned jobs = 1);
  PredictionCache(std::vector<PredictionSet> sets, std::vector<MaskVolume> ground_truth);

  const std::vector<PredictionSet>& sets() const { return sets_; }
  const std::vector<MaskVolume>& ground_truth() const { return ground_truth_; }
  std::size_t case_count() const { return sets_.size(); }
  std::size_t augmentation_count() const { return sets_.front().size(); }

 private:
  std::vector<PredictionSet> sets_;
  std::vector<MaskVolume> ground_truth_;
};

// Mean per-case Dice of binarize(fuse(preds, w), theta) against ground truth.
//
// Voxels where every map is below theta (or every map is at or above it) are
// decided for any weights, since the fused value is a convex combination.
// Only the remaining voxels are re-fused per evaluation, with the same
// per-voxel kernel as fuse(), so the result equals the direct computation.
class FusionObjective {
 public:
  FusionObjective(std::shared_ptr<const PredictionCache> cache, double theta = kDefaultTheta);

  double operator()(const CoefficientVector& w) const;
  double case_dice(std::size_t case_index, const CoefficientVector& w) const;

  std::size_t augmentation_count() const { return m_; }
  std::size_t evaluations() const { return evaluations_.load(); }
  double theta() const { return theta_; }
  const PredictionCache& cache() const { return *cache_; }

 private:
  struct CaseTerms {
    Index fixed_positive = 0;      // voxels positive for every w
    Index fixed_intersection = 0;  // of those, inside the ground truth
    Index gt_count = 0;
    Eigen::Array<float, Eigen::Dynamic, Eigen::Dynamic> open_values;  // voxels x m
    std::vector<std::uint8_t> open_gt;
  };

  std::shared_ptr<const PredictionCache> cache_;
  double theta_;
  std::size_t m_;
  std::vector<CaseTerms> terms_;
  mutable std::atomic<std::size_t> evaluations_{0};
};

ImprovementTable measure_improvements(const PredictionCache& cache, double theta = kDefaultTheta);
ImprovementTable measure_improvements(const PredictorBinding& binding,
                                      const std::vector<ValidationCase>& cases,
                                      const AugmentationSet& augs, double theta = kDefaultTheta,
                                      unsigned jobs = 1);

inline constexpr double kDefaultFloor = 0.01;

// raw_i = max(delta_i - min_j delta_j, 0) + floor, scaled to sum to n.
CoefficientVector heuristic_weights(const ImprovementTable& table, double n,
                                    double floor = kDefaultFloor);

struct GridEntry {
  Eigen::VectorXd omegas;
  double objective = 0.0;
};

struct GridResult {
  CoefficientVector best;
  double best_objective = 0.0;
  std::size_t lattice_size = 0;
  std::vector<GridEntry> log;  // every lattice point, enumeration order
};

inline constexpr std::size_t kMaxLatticePoints = 1'000'000;

// Number of points {k in N^m : sum k = K}; saturates above the guard.
std::size_t lattice_size(std::size_t m, std::size_t divisions);

// Exhaustive search over omega_i = k_i * step * n with sum k_i = 1/step.
// Points are enumerated in lexicographic order of k and only a strictly
// better objective replaces the incumbent, so ties resolve to the
// lexicographically smallest omega.
GridResult grid_search(const FusionObjective& objective, double n, double step,
                       unsigned jobs = 1, bool keep_log = false);

CoefficientVector grid_search(const PredictorBinding& binding,
                              const std::vector<ValidationCase>& cases,
                              const AugmentationSet& augs, double n, double step,
                              double theta = kDefaultTheta);

struct AscentMove {
  int round = 0;
  int to = 0;
  int from = 0;
  double delta = 0.0;
  double objective = 0.0;
};

struct AscentResult {
  CoefficientVector w;
  double objective = 0.0;
  double initial_objective = 0.0;
  int rounds = 0;
  std::size_t evaluations = 0;
  std::vector<AscentMove> trace;
};

inline constexpr double kMinAscentStep = 1e-3;

// Pairwise weight transfers: each sweep tries moving `step` of weight from
// omega_j to omega_i for every ordered pair (capped at omega_j) and keeps a
// move only if the objective strictly improves. A sweep without an accepted
// move multiplies the step by `shrink`. Stops after `max_rounds` sweeps or
// once the step falls below 1e-3.
AscentResult coordinate_ascent(const FusionObjective& objective, const CoefficientVector& w0,
                               double step0, double shrink, int max_rounds);

CoefficientVector coordinate_ascent(const PredictorBinding& binding,
                                    const std::vector<ValidationCase>& cases,
                                    const AugmentationSet& augs, const CoefficientVector& w0,
                                    double step0, double shrink, int max_rounds,
                                    double theta = kDefaultTheta);

// Euclidean projection onto {w >= 0, sum w = n}.
CoefficientVector project_to_simplex(const Eigen::VectorXd& raw, double n);

nlohmann::ordered_json to_json(const ImprovementTable& table);

}  // namespace ttafuse

#endif  // TTAFUSE_COEFFOPT_HPP
