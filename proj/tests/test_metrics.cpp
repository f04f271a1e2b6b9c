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
#include "ttafuse/metrics.hpp"

using namespace ttafuse;

namespace {

std::vector<std::int32_t> label_vector(const Components& c) {
  return {c.labels.data.data(), c.labels.data.data() + c.labels.size()};
}

MaskVolume cube(const Geometry& g, Dims lo, Index side) {
  MaskVolume m(g);
  for (Index z = lo[2]; z < lo[2] + side; ++z)
    for (Index y = lo[1]; y < lo[1] + side; ++y)
      for (Index x = lo[0]; x < lo[0] + side; ++x) m(x, y, z) = 1;
  return m;
}

}  // namespace

TEST_CASE("dice examples") {
  const Geometry g = oracle::geometry(4, 4, 4);
  const MaskVolume a = cube(g, Dims(0, 0, 0), 2);
  CHECK(dice(a, a) == 1.0);
  CHECK(dice(a, cube(g, Dims(2, 2, 2), 2)) == 0.0);
  CHECK(dice(MaskVolume(g), MaskVolume(g)) == 1.0);

  MaskVolume p(g), t(g);
  p(0, 0, 0) = p(1, 0, 0) = 1;
  t(0, 0, 0) = t(3, 3, 3) = 1;
  CHECK(dice(p, t) == 0.5);
  CHECK_THROWS_AS(dice(p, MaskVolume(oracle::geometry(4, 4, 5))), ParameterError);
}

TEST_CASE("connected component examples") {
  const Geometry g = oracle::geometry(3, 3, 3);
  CHECK(connected_components(MaskVolume(g), Connectivity::k26).count == 0);
  MaskVolume m(g);
  m(0, 0, 0) = m(1, 1, 1) = 1;
  CHECK(connected_components(m, Connectivity::k26).count == 1);
  CHECK(connected_components(m, Connectivity::k18).count == 2);
  CHECK(connected_components(m, Connectivity::k6).count == 2);
  MaskVolume e(g);
  e(0, 0, 0) = e(1, 1, 0) = 1;
  CHECK(connected_components(e, Connectivity::k18).count == 1);
  CHECK(connected_components(e, Connectivity::k6).count == 2);
  CHECK_THROWS_AS(connectivity_from_int(8), ParameterError);
}

TEST_CASE("fp and fn volume examples") {
  Geometry g = oracle::geometry(8, 8, 8, 2.0);
  const MaskVolume gt = cube(g, Dims(0, 0, 0), 3);
  CHECK(fp_volume(cube(g, Dims(0, 0, 0), 2), gt) == 0.0);
  const MaskVolume blob = cube(g, Dims(5, 5, 5), 2);
  MaskVolume pred = blob;
  pred(0, 0, 0) = 1;
  CHECK(fp_volume(pred, gt) == doctest::Approx(0.064).epsilon(1e-12));

  // A component touching gt by a single voxel is exempt.
  MaskVolume bridge = cube(g, Dims(2, 2, 2), 3);
  CHECK(fp_volume(bridge, gt) == 0.0);

  const Geometry g1 = oracle::geometry(8, 8, 8, 1.0);
  const MaskVolume lesion = cube(g1, Dims(4, 4, 4), 3);
  CHECK(fn_volume(lesion, lesion) == 0.0);
  CHECK(fn_volume(MaskVolume(g1), lesion) == doctest::Approx(0.027).epsilon(1e-12));
}

TEST_CASE("property: labeling, dice and volumes match brute-force oracles") {
  std::mt19937_64 rng(123);
  for (int trial = 0; trial < 300; ++trial) {
    const Geometry g = oracle::random_small_geometry(rng, 8);
    std::uniform_real_distribution<double> density(0.05, 0.6);
    const MaskVolume p = oracle::random_mask(rng, g, density(rng));
    const MaskVolume t = oracle::random_mask(rng, g, density(rng));
    CHECK(dice(p, t) == oracle::dice(p, t));
    for (Connectivity c : {Connectivity::k6, Connectivity::k18, Connectivity::k26}) {
      const int ci = static_cast<int>(c);
      const Components comp = connected_components(p, c);
      CHECK(oracle::same_partition(label_vector(comp), oracle::relaxation_labels(p, ci)));
      Index total = 0;
      for (Index s : comp.sizes) total += s;
      CHECK(total == static_cast<Index>((p.data != 0).count()));
      CHECK(fp_volume(p, t, c) == oracle::fp_volume(p, t, ci));
      CHECK(fn_volume(p, t, c) == oracle::fn_volume(p, t, ci));
      CHECK(fn_volume(p, t, c) == fp_volume(t, p, c));
    }
  }
}

TEST_CASE("evaluation report") {
  const Geometry g = oracle::geometry(4, 4, 4);
  const MaskVolume a = cube(g, Dims(0, 0, 0), 2);
  const EvalReport single = evaluate({{"x", a, a}});
  CHECK(single.case_count == 1);
  CHECK(single.mean_dice == 1.0);
  CHECK(single.mean_fp_volume_ml == 0.0);
  CHECK(single.mean_fn_volume_ml == 0.0);

  const EvalReport two = summarize({{"a", 0.4, 1.0, 0.0}, {"b", 0.6, 3.0, 2.0}});
  CHECK(two.mean_dice == doctest::Approx(0.5));
  CHECK(two.mean_fp_volume_ml == doctest::Approx(2.0));
  CHECK(two.mean_fn_volume_ml == doctest::Approx(1.0));
  const auto j = to_json(two);
  CHECK(j["case_count"] == 2);
  CHECK(j["per_case"][1]["case_id"] == "b");
  const std::string csv = to_csv(two);
  CHECK(csv.rfind("case_id,dice,fp_volume_ml,fn_volume_ml\n", 0) == 0);
  CHECK(csv.find("\nmean,") != std::string::npos);
  CHECK(summarize({}).case_count == 0);
}
