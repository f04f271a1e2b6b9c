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


#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "ttafuse/coeffopt.hpp"
#include "ttafuse/metrics.hpp"
#include "ttafuse/phantom.hpp"
#include "ttafuse/preprocess.hpp"

using namespace ttafuse;
namespace tf = ttafuse::transforms;

namespace {

std::shared_ptr<const PredictionCache> cache_of(std::vector<PredictionSet> sets,
                                               std::vector<MaskVolume> gt) {
  return std::make_shared<const PredictionCache>(std::move(sets), std::move(gt));
}

std::vector<ValidationCase> phantom_cases(int count, std::uint64_t seed, Index side = 24) {
  PhantomParams params;
  params.dims = Dims::Constant(side);
  params.seed = seed;
  std::vector<ValidationCase> out;
  for (int i = 0; i < count; ++i) {
    const PhantomCase c = generate_phantom(params, i);
    out.push_back({c.case_id, scale_intensity(c.ct, default_ct_window()),
                   scale_intensity(c.pet, default_pet_window()), c.seg});
  }
  return out;
}

// Oracle that under-segments at bias 0, so positive biases help.
PredictorBinding skewed_oracle(std::map<int, double> biases, std::uint64_t seed) {
  OracleParams p;
  p.pet_threshold = 0.3;
  p.noise_sigma = 0.05;
  p.seed = seed;
  p.per_augmentation_bias = std::move(biases);
  return oracle_binding(p);
}

AugmentationSet three_augs() {
  AugmentationSet a;
  a.specs = {{tf::Identity{}}, {tf::Flip{1}}, {tf::Flip{2}}};
  return a;
}

double direct_objective(const PredictionCache& cache, const CoefficientVector& w, double theta) {
  double total = 0;
  for (std::size_t c = 0; c < cache.case_count(); ++c)
    total += oracle::dice(binarize(fuse(cache.sets()[c], w), theta), cache.ground_truth()[c]);
  return total / static_cast<double>(cache.case_count());
}

}  // namespace

TEST_CASE("heuristic worked example") {
  ImprovementTable t;
  t.deltas = {0.0, 0.02, 0.01};
  const CoefficientVector w = heuristic_weights(t, 3.0, 0.01);
  CHECK(w.omegas[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(w.omegas[1] == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(w.omegas[2] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(w.omegas.sum() - 3.0) <= 1e-9);
}

TEST_CASE("heuristic symmetry and limits") {
  ImprovementTable t;
  t.deltas = {0.0, 0.0, 0.0, 0.0};
  const CoefficientVector u = heuristic_weights(t, 4.0);
  CHECK((u.omegas.array() - 1.0).abs().maxCoeff() < 1e-12);
  t.deltas = {0.0, 0.3, 0.0};
  CHECK(heuristic_weights(t, 3.0, 1e-9).omegas[1] == doctest::Approx(3.0).epsilon(1e-6));
  CHECK_THROWS_AS(heuristic_weights(t, 3.0, 0.0), ParameterError);
}

TEST_CASE("property: heuristic ordering follows the improvement ordering") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> d(-0.2, 0.2);
  std::uniform_int_distribution<int> size(1, 12);
  for (int trial = 0; trial < 1000; ++trial) {
    ImprovementTable t;
    t.deltas.push_back(0.0);
    const int m = size(rng);
    for (int i = 1; i < m; ++i) t.deltas.push_back(trial % 5 == 0 ? std::round(d(rng) * 20) / 20 : d(rng));
    const double n = 0.5 + trial % 7;
    const CoefficientVector w = heuristic_weights(t, n);
    CHECK(std::abs(w.omegas.sum() - n) <= 1e-9 * n);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        if (t.deltas[i] > t.deltas[j]) CHECK(w.omegas[i] > w.omegas[j]);
        if (t.deltas[i] == t.deltas[j]) CHECK(w.omegas[i] == doctest::Approx(w.omegas[j]));
      }
  }
}

TEST_CASE("improvement table arithmetic") {
  // 100 ground-truth voxels; predictions overlapping 75, 77 and 76 of them.
  const Geometry g = oracle::geometry(10, 10, 2);
  MaskVolume gt(g);
  gt.data.head(100).setOnes();
  PredictionSet s;
  s.case_id = "x";
  for (Index start : {25, 23, 24}) {
    Volume3D map(g);
    map.data.segment(start, 100).setOnes();
    s.maps.push_back(map);
  }
  const ImprovementTable t = measure_improvements(*cache_of({s}, {gt}));
  CHECK(t.baseline_dice == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(t.deltas[0] == 0.0);
  CHECK(t.deltas[1] == doctest::Approx(0.02).epsilon(1e-12));
  CHECK(t.deltas[2] == doctest::Approx(0.01).epsilon(1e-12));
  const CoefficientVector w = heuristic_weights(t, 3.0);
  CHECK(w.omegas[1] > w.omegas[2]);
  CHECK(w.omegas[2] > w.omegas[0]);
}

TEST_CASE("measure_improvements on oracle phantoms") {
  const auto cases = phantom_cases(3, 21);
  SUBCASE("flips commute with a voxelwise oracle") {
    const auto t = measure_improvements(oracle_binding({}), cases, three_augs(), 0.5, 2);
    for (double d : t.deltas) CHECK(d == 0.0);
  }
  SUBCASE("a bias toward the lesion helps") {
    OracleParams p;
    p.pet_threshold = 0.3;
    p.per_augmentation_bias = {{1, 0.2}};
    const auto t = measure_improvements(oracle_binding(p), cases, three_augs(), 0.5, 2);
    CHECK(t.deltas[1] > 0.0);
    CHECK(t.deltas[2] == 0.0);
  }
  CHECK_THROWS_AS(measure_improvements(oracle_binding({}), {}, three_augs()), ParameterError);
}

TEST_CASE("property: pruned objective equals direct fuse, binarize, dice") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const Index m = 2 + trial % 4;
    const Geometry g = oracle::random_small_geometry(rng, 8);
    std::vector<PredictionSet> sets;
    std::vector<MaskVolume> gts;
    for (int c = 0; c < 3; ++c) {
      PredictionSet s;
      s.case_id = "c" + std::to_string(c);
      for (Index i = 0; i < m; ++i) s.maps.push_back(oracle::random_volume(rng, g));
      sets.push_back(s);
      gts.push_back(oracle::random_mask(rng, g, 0.3));
    }
    const auto cache = cache_of(sets, gts);
    const double theta = trial % 2 ? 0.5 : 0.35;
    const FusionObjective objective(cache, theta);
    for (int k = 0; k < 10; ++k) {
      std::exponential_distribution<double> e(1.0);
      CoefficientVector w;
      w.n = static_cast<double>(m);
      w.omegas.resize(m);
      for (Index i = 0; i < m; ++i) w.omegas[i] = k == 0 && i > 0 ? 0.0 : e(rng);
      w.omegas *= w.n / w.omegas.sum();
      CHECK(objective(w) == direct_objective(*cache, w, theta));
    }
  }
}

TEST_CASE("grid search") {
  SUBCASE("single augmentation") {
    std::mt19937_64 rng(2);
    const Geometry g = oracle::geometry(4, 4, 4);
    PredictionSet s{"a", {oracle::random_volume(rng, g)}};
    const FusionObjective obj(cache_of({s}, {oracle::random_mask(rng, g, 0.5)}));
    const GridResult r = grid_search(obj, 2.0, 0.1);
    CHECK(r.lattice_size == 1);
    CHECK(r.best.omegas.size() == 1);
    CHECK(r.best.omegas[0] == 2.0);
  }
  SUBCASE("a corrupted second map gets no weight") {
    const Geometry g = oracle::geometry(6, 6, 6);
    std::mt19937_64 rng(3);
    const MaskVolume gt = oracle::random_mask(rng, g, 0.3);
    Volume3D good(g), bad(g);
    for (Index i = 0; i < g.voxel_count(); ++i) {
      good.data[i] = gt.data[i] ? 0.55f : 0.45f;
      bad.data[i] = gt.data[i] ? 0.0f : 1.0f;
    }
    const FusionObjective obj(cache_of({PredictionSet{"a", {good, bad}}}, {gt}));
    const GridResult r = grid_search(obj, 2.0, 0.1, 2, true);
    CHECK(r.best.omegas[0] == doctest::Approx(2.0));
    CHECK(r.best.omegas[1] == 0.0);
    CHECK(r.best_objective == 1.0);
    REQUIRE(r.log.size() == 11);
    int winners = 0;
    for (const auto& e : r.log) winners += e.objective == 1.0;
    CHECK(winners == 1);
  }
  SUBCASE("log argmax, heuristic and ascent comparisons on a phantom problem") {
    const auto cases = phantom_cases(4, 5);
    const auto binding = skewed_oracle({{1, 0.15}, {2, -0.3}}, 1);
    const auto cache = std::make_shared<const PredictionCache>(binding, cases, three_augs(), 2);
    const FusionObjective obj(cache);
    const GridResult r = grid_search(obj, 3.0, 0.1, 4, true);
    CHECK(r.lattice_size == 66);
    REQUIRE(r.log.size() == 66);
    double best = -1;
    std::size_t arg = 0;
    for (std::size_t i = 0; i < r.log.size(); ++i)
      if (r.log[i].objective > best) {
        best = r.log[i].objective;
        arg = i;
      }
    CHECK(best == r.best_objective);
    CHECK(r.log[arg].omegas == r.best.omegas);
    CHECK(obj(r.best) == r.best_objective);

    const CoefficientVector h = heuristic_weights(measure_improvements(*cache), 3.0);
    CHECK(r.best_objective >= obj(h));

    CHECK(grid_search(binding, cases, three_augs(), 3.0, 0.1).omegas == r.best.omegas);

    const AscentResult a = coordinate_ascent(obj, CoefficientVector::uniform(3), 0.3, 0.5, 50);
    CHECK(a.objective >= a.initial_objective);
    CHECK(a.objective == obj(a.w));
    double prev = a.initial_objective;
    for (const auto& move : a.trace) {
      CHECK(move.objective > prev);
      prev = move.objective;
    }
    CHECK(std::abs(a.w.omegas.sum() - 3.0) <= 1e-9 * 3.0);
    CHECK(a.w.omegas.minCoeff() >= 0.0);
  }
  SUBCASE("parameter checks") {
    std::mt19937_64 rng(4);
    const Geometry g = oracle::geometry(2, 2, 2);
    PredictionSet s{"a", {}};
    for (int i = 0; i < 12; ++i) s.maps.push_back(oracle::random_volume(rng, g));
    const FusionObjective obj(cache_of({s}, {oracle::random_mask(rng, g, 0.5)}));
    CHECK_THROWS_AS(grid_search(obj, 12.0, 0.01), ParameterError);
    CHECK_THROWS_AS(grid_search(obj, 12.0, 0.3), ParameterError);
    CHECK(lattice_size(3, 10) == 66);
    CHECK(lattice_size(11, 10) == 184756);
  }
}

TEST_CASE("coordinate ascent is locally optimal at a grid optimum") {
  const Geometry g = oracle::geometry(5, 5, 5);
  std::mt19937_64 rng(9);
  const MaskVolume gt = oracle::random_mask(rng, g, 0.3);
  Volume3D perfect(g), zeros(g);
  for (Index i = 0; i < g.voxel_count(); ++i) perfect.data[i] = gt.data[i];
  const FusionObjective obj(cache_of({PredictionSet{"a", {perfect, zeros}}}, {gt}));
  const GridResult r = grid_search(obj, 2.0, 0.1);
  const AscentResult a = coordinate_ascent(obj, r.best, 0.05, 0.5, 20);
  CHECK(a.trace.empty());
  CHECK(a.w.omegas == r.best.omegas);
  CHECK(a.objective == r.best_objective);
}

TEST_CASE("property: coordinate ascent never lowers the objective") {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 15; ++trial) {
    const Index m = 2 + trial % 3;
    const Geometry g = oracle::geometry(6, 6, 6);
    PredictionSet s{"a", {}};
    for (Index i = 0; i < m; ++i) s.maps.push_back(oracle::random_volume(rng, g));
    const FusionObjective obj(cache_of({s}, {oracle::random_mask(rng, g, 0.4)}));
    const CoefficientVector w0 = CoefficientVector::one_hot(m, trial % m, static_cast<double>(m));
    const AscentResult a = coordinate_ascent(obj, w0, 0.5, 0.5, 30);
    CHECK(a.objective >= obj(w0));
    CHECK_NOTHROW(a.w.validate());
  }
}

TEST_CASE("project_to_simplex") {
  const Eigen::Vector3d on(0.5, 1.5, 1.0);
  CHECK((project_to_simplex(on, 3.0).omegas - on).cwiseAbs().maxCoeff() < 1e-12);
  const CoefficientVector c = project_to_simplex(Eigen::Vector2d(2.0, 0.0), 1.0);
  CHECK(c.omegas[0] == doctest::Approx(1.0));
  CHECK(c.omegas[1] == 0.0);

  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> d(-2.0, 4.0);
  const int divisions = 300;
  for (int trial = 0; trial < 50; ++trial) {
    const std::vector<double> raw{d(rng), d(rng), d(rng)};
    const double n = 1.0 + trial % 3;
    const CoefficientVector p = project_to_simplex(Eigen::Vector3d(raw[0], raw[1], raw[2]), n);
    const auto lat = oracle::lattice_projection3(raw, n, divisions);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(p.omegas[i] - lat[i]) <= 2.0 * n / divisions);
    CHECK(std::abs(p.omegas.sum() - n) <= 1e-9 * n);
  }
}
