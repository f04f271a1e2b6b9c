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


#include <cstring>
#include <numeric>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "ttafuse/fusion.hpp"
#include "ttafuse/metrics.hpp"
#include "ttafuse/phantom.hpp"
#include "ttafuse/preprocess.hpp"

using namespace ttafuse;
namespace tf = ttafuse::transforms;

namespace {

PredictionSet random_set(std::mt19937_64& rng, Index m, const Geometry& g) {
  PredictionSet s;
  s.case_id = "r";
  for (Index i = 0; i < m; ++i) s.maps.push_back(oracle::random_volume(rng, g));
  return s;
}

CoefficientVector random_simplex(std::mt19937_64& rng, Index m, double n) {
  std::exponential_distribution<double> e(1.0);
  CoefficientVector w;
  w.omegas.resize(m);
  for (Index i = 0; i < m; ++i) w.omegas[i] = e(rng);
  w.omegas *= n / w.omegas.sum();
  w.n = n;
  return w;
}

bool bitwise_equal(const Volume3D& a, const Volume3D& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data.data(), b.data.data(), sizeof(float) * a.size()) == 0;
}

}  // namespace

TEST_CASE("hand-computed fusion example") {
  PredictionSet s;
  s.maps = {Volume3D(oracle::geometry(1, 1, 1), 0.8f), Volume3D(oracle::geometry(1, 1, 1), 0.4f)};
  CoefficientVector w;
  w.omegas = Eigen::Vector2d(1.5, 0.5);
  w.n = 2;
  CHECK(fuse(s, w).data[0] == doctest::Approx(0.7).epsilon(1e-7));
  CHECK(fuse(s, w).data[0] == doctest::Approx(oracle::fuse_scalar({0.8, 0.4}, {1.5, 0.5}, 2)));
}

TEST_CASE("property: fusion identities on random 8^3 sets") {
  std::mt19937_64 rng(42);
  const Geometry g = oracle::geometry(8, 8, 8);
  for (int trial = 0; trial < 30; ++trial) {
    const Index m = 1 + trial % 6;
    const PredictionSet s = random_set(rng, m, g);

    for (Index i = 0; i < m; ++i) CHECK(bitwise_equal(fuse(s, CoefficientVector::one_hot(m, i, 2.5)), s.maps[i]));

    Eigen::ArrayXd mean = Eigen::ArrayXd::Zero(g.voxel_count());
    for (const auto& map : s.maps) mean += map.data.cast<double>();
    mean /= static_cast<double>(m);
    CHECK((fuse(s, CoefficientVector::uniform(m)).data.cast<double>() - mean).abs().maxCoeff() <= 1e-6);

    const CoefficientVector w = random_simplex(rng, m, 3.0);
    CoefficientVector scaled = w;
    scaled.omegas *= 7.0;
    scaled.n *= 7.0;
    const Volume3D a = fuse(s, w);
    CHECK((a.data - fuse(s, scaled).data).abs().maxCoeff() <= 1e-6f);

    // Voxelwise agreement with the scalar formula, permutation invariance, bounds.
    std::vector<double> om(w.omegas.data(), w.omegas.data() + m);
    for (Index v = 0; v < a.size(); v += 37) {
      std::vector<double> vals;
      for (const auto& map : s.maps) vals.push_back(map.data[v]);
      CHECK(a.data[v] == doctest::Approx(oracle::fuse_scalar(vals, om, w.n)).epsilon(1e-6));
    }
    std::vector<Index> perm(static_cast<std::size_t>(m));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    PredictionSet ps = s;
    CoefficientVector pw = w;
    for (Index i = 0; i < m; ++i) {
      ps.maps[i] = s.maps[perm[i]];
      pw.omegas[i] = w.omegas[perm[i]];
    }
    CHECK((fuse(ps, pw).data - a.data).abs().maxCoeff() <= 1e-6f);
    CHECK(a.data.minCoeff() >= 0.0f);
    CHECK(a.data.maxCoeff() <= 1.0f);
  }
}

TEST_CASE("fuse_voxel agrees with fuse") {
  std::mt19937_64 rng(1);
  const PredictionSet s = random_set(rng, 4, oracle::geometry(5, 5, 5));
  const CoefficientVector w = random_simplex(rng, 4, 4.0);
  const Volume3D f = fuse(s, w);
  for (Index v = 0; v < f.size(); ++v) {
    std::array<float, 4> vals;
    for (int i = 0; i < 4; ++i) vals[i] = s.maps[i].data[v];
    CHECK(fuse_voxel(vals, w) == f.data[v]);
  }
}

TEST_CASE("coefficient validation") {
  PredictionSet s;
  std::mt19937_64 rng(2);
  s = random_set(rng, 3, oracle::geometry(2, 2, 2));
  CoefficientVector w;
  w.omegas = Eigen::Vector3d(1.0, 1.0, 0.5);
  w.n = 3;
  CHECK_THROWS_AS(fuse(s, w), ParameterError);
  w.omegas = Eigen::Vector3d(2.0, 1.5, -0.5);
  CHECK_THROWS_AS(fuse(s, w), ParameterError);
  w.omegas = Eigen::Vector2d(1.5, 1.5);
  CHECK_THROWS_AS(fuse(s, w), ParameterError);
  s.maps[1] = Volume3D(oracle::geometry(2, 2, 3));
  CHECK_THROWS_AS(fuse(s, CoefficientVector::uniform(3)), ContractViolation);
  CHECK(coefficients_from_json(nlohmann::json::parse(to_json(random_simplex(rng, 5, 5.0)).dump())).size() == 5);
}

TEST_CASE("binarize") {
  Volume3D p(oracle::geometry(3, 1, 1), 0.49f);
  CHECK((binarize(p, 0.5).data == 0).all());
  p.data[1] = 0.5f;
  CHECK(binarize(p, 0.5).data[1] == 1);
  CHECK_THROWS_AS(binarize(p, 0.0), ParameterError);
  CHECK_THROWS_AS(binarize(p, 1.0), ParameterError);

  std::mt19937_64 rng(3);
  const Volume3D r = oracle::random_volume(rng, oracle::geometry(7, 7, 7));
  for (double theta : {0.1, 0.37, 0.5, 0.9}) {
    const MaskVolume m = binarize(r, theta);
    for (Index i = 0; i < r.size(); ++i) CHECK(m.data[i] == (r.data[i] >= theta ? 1 : 0));
  }
}

TEST_CASE("TTA degenerate and exact-inverse cases") {
  PhantomParams params;
  params.dims = Dims(24, 24, 24);
  params.seed = 5;
  const PhantomCase c = generate_phantom(params, 0);
  const Volume3D ct = scale_intensity(c.ct, default_ct_window());
  const Volume3D pet = scale_intensity(c.pet, default_pet_window());
  const auto binding = oracle_binding({});

  AugmentationSet identity;
  identity.specs = {{tf::Identity{}}};
  CHECK(tta_predict(binding, ct, pet, identity, CoefficientVector{Eigen::VectorXd::Constant(1, 2.0), 2.0},
                    0.5, c.case_id) == binarize(predict(binding, ct, pet, c.case_id, 0), 0.5));

  AugmentationSet flips;
  flips.specs = {{tf::Identity{}}, {tf::Flip{1}}, {tf::Flip{2}}, {tf::Flip{3}}};
  const PredictionSet aligned = aligned_predictions(binding, ct, pet, flips, c.case_id, 2);
  for (const auto& map : aligned.maps) CHECK(map == aligned.maps[0]);
  CHECK(tta_predict(binding, ct, pet, flips, CoefficientVector::uniform(4), 0.5, c.case_id) ==
        binarize(aligned.maps[0], 0.5));
}

TEST_CASE("uniform TTA over the default set beats the worst single augmentation") {
  PhantomParams params;
  params.dims = Dims(32, 32, 32);
  params.seed = 11;
  OracleParams op;
  op.noise_sigma = 0.1;
  op.pet_threshold = 0.25;
  op.seed = 2;
  const auto binding = oracle_binding(op);
  const AugmentationSet augs = default_augmentation_set();
  for (int i = 0; i < 3; ++i) {
    const PhantomCase c = generate_phantom(params, i);
    const Volume3D ct = scale_intensity(c.ct, default_ct_window());
    const Volume3D pet = scale_intensity(c.pet, default_pet_window());
    const PredictionSet aligned = aligned_predictions(binding, ct, pet, augs, c.case_id, 4);
    double worst = 1.0;
    for (const auto& map : aligned.maps) worst = std::min(worst, dice(binarize(map), c.seg));
    const MaskVolume fused = binarize(fuse(aligned, CoefficientVector::uniform(11)));
    CHECK(dice(fused, c.seg) >= worst);
    CHECK(tta_predict(binding, ct, pet, augs, CoefficientVector::uniform(11), 0.5, c.case_id, 3) == fused);
  }
}
