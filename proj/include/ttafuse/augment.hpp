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


#ifndef TTAFUSE_AUGMENT_HPP
#define TTAFUSE_AUGMENT_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"
#include "ttafuse/volume.hpp"

namespace ttafuse {

enum class Channel { kCt, kPet, kBoth };
enum class Plane { kXY, kYZ, kXZ };

namespace transforms {

struct Identity {
  bool operator==(const Identity&) const = default;
};

// Reflects along spatial axis 1 (x), 2 (y) or 3 (z).
struct Flip {
  int axis = 1;
  bool operator==(const Flip&) const = default;
};

// k quarter turns in the given plane.
struct Rotate90 {
  Plane plane = Plane::kXY;
  int k = 1;
  bool operator==(const Rotate90&) const = default;
};

// Adds offset_fraction * (max - min) of the targeted channel.
struct ShiftIntensity {
  double offset_fraction = 0.1;
  bool operator==(const ShiftIntensity&) const = default;
};

struct GaussianNoise {
  double sigma = 0.05;
  std::uint64_t seed = 7;
  bool operator==(const GaussianNoise&) const = default;
};

// Magnification about the volume centre; dims are preserved.
struct Zoom {
  double factor = 1.0;
  bool operator==(const Zoom&) const = default;
};

}  // namespace transforms

using TransformKind = std::variant<transforms::Identity, transforms::Flip, transforms::Rotate90,
                                   transforms::ShiftIntensity, transforms::GaussianNoise,
                                   transforms::Zoom>;

struct TransformSpec {
  TransformKind kind = transforms::Identity{};
  Channel target = Channel::kBoth;  // intensity kinds only

  void validate() const;
  std::string describe() const;
  bool operator==(const TransformSpec& o) const;
};

// Ordered list of augmentations; the position of a spec is the index i of
// its fusion coefficient. specs[0] is always Identity.
struct AugmentationSet {
  std::vector<TransformSpec> specs;

  std::size_t size() const { return specs.size(); }
  const TransformSpec& operator[](std::size_t i) const { return specs[i]; }
  void validate() const;
  bool operator==(const AugmentationSet&) const = default;
};

bool is_spatial(const TransformSpec& spec);

// Applies spec to a CT/PET pair. Spatial kinds move both channels; intensity
// kinds only touch the targeted channel(s).
std::pair<Volume3D, Volume3D> apply(const TransformSpec& spec, const Volume3D& ct,
                                    const Volume3D& pet);

// Applies only the spatial part of spec to a single volume.
Volume3D apply_spatial(const TransformSpec& spec, const Volume3D& vol);

// Maps a prediction made in the augmented frame back to the reference frame.
Volume3D invert_on_prediction(const TransformSpec& spec, const Volume3D& prob);

AugmentationSet default_augmentation_set();

// Voxel-level primitives, exposed for testing.
template <typename Scalar>
Volume<Scalar> flip(const Volume<Scalar>& v, int axis);
template <typename Scalar>
Volume<Scalar> rotate90(const Volume<Scalar>& v, Plane plane, int k);
Volume3D zoom(const Volume3D& v, double factor);

nlohmann::ordered_json to_json(const TransformSpec& spec);
TransformSpec transform_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const AugmentationSet& augs);
AugmentationSet augmentations_from_json(const nlohmann::json& j);

std::string to_string(Channel c);
std::string to_string(Plane p);

}  // namespace ttafuse

#endif  // TTAFUSE_AUGMENT_HPP
