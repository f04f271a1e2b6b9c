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


#include "ttafuse/preprocess.hpp"

#include <algorithm>

namespace ttafuse {

void ScaleWindow::validate() const {
  if (!(in_min < in_max)) throw ParameterError("scale window requires in_min < in_max");
  if (!(out_min < out_max)) throw ParameterError("scale window requires out_min < out_max");
}

Volume3D scale_intensity(const Volume3D& vol, const ScaleWindow& w) {
  w.validate();
  const double gain = (w.out_max - w.out_min) / (w.in_max - w.in_min);
  Volume3D out(vol.geometry);
  for (Index i = 0; i < vol.size(); ++i) {
    double v = vol.data[i];
    if (w.clamp) v = std::clamp(v, w.in_min, w.in_max);
    out.data[i] = static_cast<float>(w.out_min + (v - w.in_min) * gain);
  }
  if (w.clamp) {
    // Rounding to float must not escape the output range.
    out.data = out.data.max(static_cast<float>(w.out_min)).min(static_cast<float>(w.out_max));
  }
  return out;
}

BBox foreground_bbox(const Volume3D& ct, double threshold, Index margin) {
  const Dims& dims = ct.dims();
  if (ct.size() == 0) throw ParameterError("foreground_bbox: empty volume");
  Dims lo = dims;
  Dims hi = Dims::Constant(-1);
  for (Index z = 0; z < dims[2]; ++z) {
    for (Index y = 0; y < dims[1]; ++y) {
      for (Index x = 0; x < dims[0]; ++x) {
        if (ct(x, y, z) > threshold) {
          const Dims p(x, y, z);
          lo = lo.min(p);
          hi = hi.max(p);
        }
      }
    }
  }
  if ((hi < 0).any()) return full_box(dims);
  margin = std::max<Index>(margin, 0);
  BBox box;
  box.lo = (lo - margin).max(0);
  box.hi = (hi + 1 + margin).min(dims);
  return box;
}

namespace detail {
void check_box(const BBox& box, const Dims& dims) {
  if ((box.lo < 0).any() || (box.hi > dims).any() || (box.lo >= box.hi).any()) {
    throw ParameterError("bounding box out of bounds or empty");
  }
}
}  // namespace detail

MaskVolume uncrop_mask(const MaskVolume& mask, const BBox& box, const Dims& full_dims) {
  Geometry full = mask.geometry;
  full.dims = full_dims;
  full.origin = mask.geometry.origin -
                box.lo.cast<double>().matrix().cwiseProduct(mask.geometry.spacing);
  return uncrop(mask, box, full);
}

}  // namespace ttafuse
