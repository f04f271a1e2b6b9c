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


#include "ttafuse/phantom.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <vector>

#include "ttafuse/preprocess.hpp"
#include "ttafuse/random.hpp"

namespace ttafuse {
namespace {

struct Lesion {
  Eigen::Array3d centre;
  double sigma;
  double peak;
};

double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform_unit(rng); }

}  // namespace

void PhantomParams::validate() const {
  if ((dims < 16).any()) throw ParameterError("phantom dims must be >= 16 per axis");
  if ((spacing.array() <= 0.0).any()) throw ParameterError("phantom spacing must be positive");
  if (min_lesions < 0 || max_lesions < min_lesions) {
    throw ParameterError("phantom lesion range must satisfy 0 <= min <= max");
  }
}

std::string phantom_case_id(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "case_%03d", index);
  return buf;
}

PhantomCase generate_phantom(const PhantomParams& params, int index) {
  params.validate();
  Rng rng(mix_seed(params.seed, static_cast<std::uint64_t>(index)));
  std::normal_distribution<double> normal(0.0, 1.0);

  Geometry g;
  g.dims = params.dims;
  g.spacing = params.spacing;
  g.origin = -0.5 * (params.dims.cast<double>().matrix() - Eigen::Vector3d::Ones())
                        .cwiseProduct(params.spacing);

  const Eigen::Array3d n = params.dims.cast<double>();
  const Eigen::Array3d centre = (n - 1.0) / 2.0;
  const Eigen::Array3d semi_axes =
      n * Eigen::Array3d(0.40, 0.34, 0.44) * uniform(rng, 0.95, 1.05);

  const int lesion_count =
      params.min_lesions +
      static_cast<int>(uniform_index(
          rng, static_cast<std::uint64_t>(params.max_lesions - params.min_lesions + 1)));
  std::vector<Lesion> lesions;
  for (int l = 0; l < lesion_count; ++l) {
    // Uniform point in the inner 60% of the body ellipsoid.
    Eigen::Array3d u;
    do {
      u = Eigen::Array3d(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1));
    } while (u.matrix().squaredNorm() > 1.0);
    lesions.push_back({centre + 0.6 * u * semi_axes, uniform(rng, 1.5, 3.0), uniform(rng, 6.0, 12.0)});
  }

  PhantomCase out;
  out.case_id = phantom_case_id(index);
  out.ct = Volume3D(g);
  out.pet = Volume3D(g);
  for (Index z = 0; z < g.dims[2]; ++z) {
    for (Index y = 0; y < g.dims[1]; ++y) {
      for (Index x = 0; x < g.dims[0]; ++x) {
        const Eigen::Array3d p(static_cast<double>(x), static_cast<double>(y),
                               static_cast<double>(z));
        const bool inside = (((p - centre) / semi_axes).square().sum()) <= 1.0;
        double ct = inside ? 180.0 + 10.0 * normal(rng) : -1000.0 + 5.0 * normal(rng);
        double pet = inside ? 1.0 + 0.1 * normal(rng) : std::abs(0.02 * normal(rng));
        for (const auto& lesion : lesions) {
          const double r2 = (p - lesion.centre).square().sum();
          pet += lesion.peak * std::exp(-r2 / (2.0 * lesion.sigma * lesion.sigma));
        }
        out.ct(x, y, z) = static_cast<float>(ct);
        out.pet(x, y, z) = static_cast<float>(std::max(pet, 0.0));
      }
    }
  }

  const Volume3D scaled = scale_intensity(out.pet, default_pet_window());
  out.seg = MaskVolume(g, (scaled.data.cast<double>() > kPhantomLesionLevel).cast<std::uint8_t>());
  return out;
}

}  // namespace ttafuse
