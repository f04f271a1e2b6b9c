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


#include "ttafuse/coeffopt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ttafuse/metrics.hpp"
#include "ttafuse/parallel.hpp"

namespace ttafuse {
namespace {

void enumerate_compositions(std::size_t m, int total, std::vector<int>& k, std::size_t pos,
                            std::vector<std::vector<int>>& out) {
  if (pos + 1 == m) {
    k[pos] = total;
    out.push_back(k);
    return;
  }
  for (int v = 0; v <= total; ++v) {
    k[pos] = v;
    enumerate_compositions(m, total - v, k, pos + 1, out);
  }
}

int lattice_divisions(double step) {
  if (!(step > 0.0 && step <= 1.0)) throw ParameterError("grid step must lie in (0, 1]");
  const double inverse = 1.0 / step;
  const auto divisions = static_cast<int>(std::llround(inverse));
  if (std::abs(divisions * step - 1.0) > 1e-9) {
    throw ParameterError("grid step must divide 1 evenly (1/step integer)");
  }
  return divisions;
}

}  // namespace

void ValidationCase::validate() const {
  if (!geometry_match(ct, pet) || !geometry_match(ct, gt)) {
    throw ParameterError("validation case " + case_id + " has mismatched geometry");
  }
}

PredictionCache::PredictionCache(const PredictorBinding& binding,
                                 const std::vector<ValidationCase>& cases,
                                 const AugmentationSet& augs, unsigned jobs) {
  if (cases.empty()) throw ParameterError("no validation cases");
  augs.validate();
  sets_.resize(cases.size());
  ground_truth_.resize(cases.size());
  parallel_for(cases.size(), jobs, [&](std::size_t c) {
    const auto& vc = cases[c];
    vc.validate();
    sets_[c] = aligned_predictions(binding, vc.ct, vc.pet, augs, vc.case_id, 1);
    ground_truth_[c] = vc.gt;
  });
}

PredictionCache::PredictionCache(std::vector<PredictionSet> sets,
                                 std::vector<MaskVolume> ground_truth)
    : sets_(std::move(sets)), ground_truth_(std::move(ground_truth)) {
  if (sets_.empty()) throw ParameterError("no validation cases");
  if (sets_.size() != ground_truth_.size()) {
    throw ParameterError("prediction and ground-truth counts differ");
  }
  for (std::size_t c = 0; c < sets_.size(); ++c) {
    sets_[c].validate();
    if (sets_[c].size() != sets_.front().size()) {
      throw ParameterError("cases have different augmentation counts");
    }
    if (!geometry_match(sets_[c].geometry(), ground_truth_[c].geometry)) {
      throw ParameterError("case " + sets_[c].case_id + ": ground truth geometry differs");
    }
  }
}

FusionObjective::FusionObjective(std::shared_ptr<const PredictionCache> cache, double theta)
    : cache_(std::move(cache)), theta_(theta), m_(cache_->augmentation_count()) {
  if (!(theta > 0.0 && theta < 1.0)) throw ParameterError("threshold must lie in (0, 1)");
  terms_.resize(cache_->case_count());
  for (std::size_t c = 0; c < cache_->case_count(); ++c) {
    const auto& maps = cache_->sets()[c].maps;
    const auto& gt = cache_->ground_truth()[c];
    CaseTerms& t = terms_[c];
    std::vector<Index> open;
    for (Index v = 0; v < gt.size(); ++v) {
      const bool in_gt = gt.data[v] != 0;
      t.gt_count += in_gt;
      std::size_t above = 0;
      for (const auto& map : maps) above += static_cast<double>(map.data[v]) >= theta;
      if (above == m_) {
        ++t.fixed_positive;
        t.fixed_intersection += in_gt;
      } else if (above > 0) {
        open.push_back(v);
      }
    }
    t.open_values.resize(static_cast<Index>(m_), static_cast<Index>(open.size()));
    t.open_gt.resize(open.size());
    for (std::size_t k = 0; k < open.size(); ++k) {
      for (std::size_t i = 0; i < m_; ++i) {
        t.open_values(static_cast<Index>(i), static_cast<Index>(k)) = maps[i].data[open[k]];
      }
      t.open_gt[k] = gt.data[open[k]] != 0;
    }
  }
}

double FusionObjective::case_dice(std::size_t case_index, const CoefficientVector& w) const {
  const CaseTerms& t = terms_[case_index];
  Index positive = t.fixed_positive;
  Index intersection = t.fixed_intersection;
  const Index open = t.open_values.cols();
  const float* values = t.open_values.data();
  for (Index k = 0; k < open; ++k) {
    if (static_cast<double>(fuse_voxel(values + k * static_cast<Index>(m_), w)) >= theta_) {
      ++positive;
      intersection += t.open_gt[static_cast<std::size_t>(k)];
    }
  }
  const Index denom = positive + t.gt_count;
  if (denom == 0) return 1.0;
  return 2.0 * static_cast<double>(intersection) / static_cast<double>(denom);
}

double FusionObjective::operator()(const CoefficientVector& w) const {
  if (static_cast<std::size_t>(w.size()) != m_) {
    throw ParameterError("objective: coefficient count does not match augmentation count");
  }
  w.validate();
  ++evaluations_;
  double sum = 0.0;
  for (std::size_t c = 0; c < terms_.size(); ++c) sum += case_dice(c, w);
  return sum / static_cast<double>(terms_.size());
}

ImprovementTable measure_improvements(const PredictionCache& cache, double theta) {
  const std::size_t m = cache.augmentation_count();
  ImprovementTable table;
  table.augmentation_dice.assign(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double sum = 0.0;
    for (std::size_t c = 0; c < cache.case_count(); ++c) {
      sum += dice(binarize(cache.sets()[c].maps[i], theta), cache.ground_truth()[c]);
    }
    table.augmentation_dice[i] = sum / static_cast<double>(cache.case_count());
  }
  table.baseline_dice = table.augmentation_dice[0];
  table.deltas.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    table.deltas[i] = i == 0 ? 0.0 : table.augmentation_dice[i] - table.baseline_dice;
  }
  return table;
}

ImprovementTable measure_improvements(const PredictorBinding& binding,
                                      const std::vector<ValidationCase>& cases,
                                      const AugmentationSet& augs, double theta, unsigned jobs) {
  if (cases.empty()) throw ParameterError("measure_improvements: empty case list");
  return measure_improvements(PredictionCache(binding, cases, augs, jobs), theta);
}

CoefficientVector heuristic_weights(const ImprovementTable& table, double n, double floor) {
  if (!(floor > 0.0)) throw ParameterError("heuristic floor must be > 0");
  if (!(n > 0.0)) throw ParameterError("normalizer n must be > 0");
  if (table.deltas.empty()) throw ParameterError("improvement table is empty");
  const Eigen::Map<const Eigen::ArrayXd> deltas(table.deltas.data(),
                                                static_cast<Index>(table.deltas.size()));
  const Eigen::ArrayXd raw = (deltas - deltas.minCoeff()).max(0.0) + floor;
  CoefficientVector w{(n * raw / raw.sum()).matrix(), n};
  w.validate();
  return w;
}

std::size_t lattice_size(std::size_t m, std::size_t divisions) {
  // C(divisions + m - 1, m - 1), saturating.
  const std::size_t k = m - 1;
  double count = 1.0;
  for (std::size_t i = 1; i <= k; ++i) {
    count = count * static_cast<double>(divisions + i) / static_cast<double>(i);
    if (count > 1e18) return static_cast<std::size_t>(-1);
  }
  return static_cast<std::size_t>(std::llround(count));
}

GridResult grid_search(const FusionObjective& objective, double n, double step, unsigned jobs,
                       bool keep_log) {
  if (!(n > 0.0)) throw ParameterError("normalizer n must be > 0");
  const std::size_t m = objective.augmentation_count();
  const int divisions = lattice_divisions(step);
  const std::size_t size = lattice_size(m, static_cast<std::size_t>(divisions));
  if (size > kMaxLatticePoints) {
    throw ParameterError("grid lattice has " +
                         (size == static_cast<std::size_t>(-1) ? std::string("too many")
                                                               : std::to_string(size)) +
                         " points; the limit is " + std::to_string(kMaxLatticePoints) +
                         " (use fewer augmentations or a coarser step)");
  }

  std::vector<std::vector<int>> points;
  points.reserve(size);
  std::vector<int> k(m, 0);
  enumerate_compositions(m, divisions, k, 0, points);

  auto to_weights = [&](const std::vector<int>& ks) {
    CoefficientVector w{Eigen::VectorXd(static_cast<Index>(m)), n};
    for (std::size_t i = 0; i < m; ++i) {
      w.omegas[static_cast<Index>(i)] = n * ks[i] / divisions;
    }
    return w;
  };

  std::vector<double> values(points.size());
  parallel_for(points.size(), jobs, [&](std::size_t p) { values[p] = objective(to_weights(points[p])); });

  GridResult result;
  result.lattice_size = points.size();
  std::size_t best = 0;
  for (std::size_t p = 1; p < points.size(); ++p) {
    if (values[p] > values[best]) best = p;
  }
  result.best = to_weights(points[best]);
  result.best_objective = values[best];
  if (keep_log) {
    result.log.reserve(points.size());
    for (std::size_t p = 0; p < points.size(); ++p) {
      result.log.push_back({to_weights(points[p]).omegas, values[p]});
    }
  }
  return result;
}

CoefficientVector grid_search(const PredictorBinding& binding,
                              const std::vector<ValidationCase>& cases,
                              const AugmentationSet& augs, double n, double step, double theta) {
  auto cache = std::make_shared<const PredictionCache>(binding, cases, augs);
  return grid_search(FusionObjective(cache, theta), n, step).best;
}

AscentResult coordinate_ascent(const FusionObjective& objective, const CoefficientVector& w0,
                               double step0, double shrink, int max_rounds) {
  if (!(shrink > 0.0 && shrink < 1.0)) throw ParameterError("shrink must lie in (0, 1)");
  if (!(step0 > 0.0)) throw ParameterError("initial step must be > 0");
  w0.validate();
  const Index m = w0.size();
  const std::size_t evals_before = objective.evaluations();

  AscentResult result;
  result.w = w0;
  result.objective = objective(w0);
  result.initial_objective = result.objective;

  double step = step0;
  while (result.rounds < max_rounds && step >= kMinAscentStep) {
    ++result.rounds;
    bool accepted = false;
    for (Index to = 0; to < m; ++to) {
      for (Index from = 0; from < m; ++from) {
        if (to == from) continue;
        const double available = result.w.omegas[from];
        if (available <= 0.0) continue;
        const double delta = std::min(step, available);
        CoefficientVector candidate = result.w;
        candidate.omegas[to] += delta;
        candidate.omegas[from] = delta == available ? 0.0 : available - delta;
        const double value = objective(candidate);
        if (value > result.objective) {
          result.w = std::move(candidate);
          result.objective = value;
          result.trace.push_back({result.rounds, static_cast<int>(to), static_cast<int>(from),
                                  delta, value});
          accepted = true;
        }
      }
    }
    if (!accepted) step *= shrink;
  }
  result.evaluations = objective.evaluations() - evals_before;
  return result;
}

CoefficientVector coordinate_ascent(const PredictorBinding& binding,
                                    const std::vector<ValidationCase>& cases,
                                    const AugmentationSet& augs, const CoefficientVector& w0,
                                    double step0, double shrink, int max_rounds, double theta) {
  auto cache = std::make_shared<const PredictionCache>(binding, cases, augs);
  return coordinate_ascent(FusionObjective(cache, theta), w0, step0, shrink, max_rounds).w;
}

CoefficientVector project_to_simplex(const Eigen::VectorXd& raw, double n) {
  if (raw.size() == 0) throw ParameterError("project_to_simplex: empty input");
  if (!(n > 0.0)) throw ParameterError("normalizer n must be > 0");
  std::vector<double> sorted(raw.data(), raw.data() + raw.size());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double tau = 0.0;
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    cumulative += sorted[j];
    const double candidate = (cumulative - n) / static_cast<double>(j + 1);
    if (sorted[j] - candidate > 0.0) tau = candidate;
  }
  CoefficientVector w{(raw.array() - tau).max(0.0).matrix(), n};
  // Absorb rounding so the sum constraint holds tightly.
  const double sum = w.omegas.sum();
  if (sum > 0.0) w.omegas *= n / sum;
  return w;
}

nlohmann::ordered_json to_json(const ImprovementTable& table) {
  nlohmann::ordered_json j;
  j["baseline_dice"] = table.baseline_dice;
  j["deltas"] = table.deltas;
  j["augmentation_dice"] = table.augmentation_dice;
  return j;
}

}  // namespace ttafuse
