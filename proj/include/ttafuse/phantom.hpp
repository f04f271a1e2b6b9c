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


#ifndef TTAFUSE_PHANTOM_HPP
#define TTAFUSE_PHANTOM_HPP

#include <cstdint>
#include <string>

#include "ttafuse/volume.hpp"

namespace ttafuse {

// Desk-scale CT/PET phantom: a soft-tissue ellipsoid in air (CT, HU) and a
// low-uptake body with Gaussian hot lesions (PET, SUV). The ground truth is
// every voxel whose PET, after the default PET window, exceeds the default
// oracle threshold.
struct PhantomParams {
  Dims dims = Dims::Constant(64);
  Eigen::Vector3d spacing = Eigen::Vector3d::Constant(2.0);
  int min_lesions = 1;
  int max_lesions = 3;
  std::uint64_t seed = 0;

  void validate() const;
};

struct PhantomCase {
  std::string case_id;
  Volume3D ct;
  Volume3D pet;
  MaskVolume seg;
};

std::string phantom_case_id(int index);

PhantomCase generate_phantom(const PhantomParams& params, int index);

// Scaled-PET level that defines the phantom ground truth.
inline constexpr double kPhantomLesionLevel = 0.2;

}  // namespace ttafuse

#endif  // TTAFUSE_PHANTOM_HPP
