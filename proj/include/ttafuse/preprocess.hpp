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


#ifndef TTAFUSE_PREPROCESS_HPP
#define TTAFUSE_PREPROCESS_HPP

#include "ttafuse/volume.hpp"

namespace ttafuse {

// Linear intensity window. With clamp set, inputs are clipped to
// [in_min, in_max] before mapping.
struct ScaleWindow {
  double in_min = 0.0;
  double in_max = 1.0;
  double out_min = 0.0;
  double out_max = 1.0;
  bool clamp = true;

  void validate() const;
  bool operator==(const ScaleWindow&) const = default;
};

// Literal CT and PET windows used by the reference pipeline.
inline ScaleWindow default_ct_window() { return {100.0, 250.0, 0.0, 1.0, true}; }
inline ScaleWindow default_pet_window() { return {0.0, 15.0, 0.0, 1.0, true}; }

// Half-open voxel box [lo, hi).
struct BBox {
  Dims lo = Dims::Zero();
  Dims hi = Dims::Zero();

  Dims extent() const { return hi - lo; }
  bool operator==(const BBox& o) const { return (lo == o.lo).all() && (hi == o.hi).all(); }
};

inline BBox full_box(const Dims& dims) { return {Dims::Zero(), dims}; }

Volume3D scale_intensity(const Volume3D& vol, const ScaleWindow& w);

// Tightest box around voxels strictly above `threshold`, dilated by `margin`
// and clipped to the volume. Falls back to the whole volume when nothing
// exceeds the threshold.
BBox foreground_bbox(const Volume3D& ct, double threshold, Index margin);

namespace detail {
void check_box(const BBox& box, const Dims& dims);
}

template <typename Scalar>
Volume<Scalar> crop(const Volume<Scalar>& vol, const BBox& box) {
  detail::check_box(box, vol.dims());
  Geometry g = vol.geometry;
  g.dims = box.extent();
  g.origin = vol.geometry.origin + (box.lo.template cast<double>().matrix().cwiseProduct(
                                       vol.geometry.spacing));
  Volume<Scalar> out(g);
  for (Index z = 0; z < g.dims[2]; ++z) {
    for (Index y = 0; y < g.dims[1]; ++y) {
      const Index src = vol.linear_index(box.lo[0], box.lo[1] + y, box.lo[2] + z);
      out.data.segment(out.linear_index(0, y, z), g.dims[0]) = vol.data.segment(src, g.dims[0]);
    }
  }
  return out;
}

// Places `part` at box.lo inside a zero volume of `full` geometry.
template <typename Scalar>
Volume<Scalar> uncrop(const Volume<Scalar>& part, const BBox& box, const Geometry& full) {
  detail::check_box(box, full.dims);
  if ((part.dims() != box.extent()).any()) {
    throw ParameterError("uncrop: volume dims do not match box extent");
  }
  Volume<Scalar> out(full);
  for (Index z = 0; z < part.dims()[2]; ++z) {
    for (Index y = 0; y < part.dims()[1]; ++y) {
      const Index dst = out.linear_index(box.lo[0], box.lo[1] + y, box.lo[2] + z);
      out.data.segment(dst, part.dims()[0]) =
          part.data.segment(part.linear_index(0, y, z), part.dims()[0]);
    }
  }
  return out;
}

// Restores a cropped mask to the full frame. Spacing comes from the mask;
// origin is shifted back by box.lo.
MaskVolume uncrop_mask(const MaskVolume& mask, const BBox& box, const Dims& full_dims);

}  // namespace ttafuse

#endif  // TTAFUSE_PREPROCESS_HPP
