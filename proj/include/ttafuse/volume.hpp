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


#ifndef TTAFUSE_VOLUME_HPP
#define TTAFUSE_VOLUME_HPP

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <string>

#include "ttafuse/error.hpp"

namespace ttafuse {

using Index = Eigen::Index;
using Dims = Eigen::Array<Index, 3, 1>;

// Spatial frame shared by every volume of a case: grid size, voxel size
// (mm) and position of voxel (0,0,0) (mm).
struct Geometry {
  Dims dims = Dims::Ones();
  Eigen::Vector3d spacing = Eigen::Vector3d::Ones();
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();

  Index voxel_count() const { return dims.prod(); }

  // Millilitres per voxel.
  double voxel_volume_ml() const { return spacing.prod() / 1000.0; }

  bool operator==(const Geometry& other) const {
    return (dims == other.dims).all() && spacing == other.spacing &&
           origin == other.origin;
  }
};

// Dense 3D grid, x-fastest (NIfTI on-disk order).
template <typename Scalar>
struct Volume {
  using ScalarType = Scalar;
  using Data = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  Geometry geometry;
  Data data;

  Volume() = default;

  explicit Volume(const Geometry& g, Scalar fill = Scalar(0))
      : geometry(g), data(Data::Constant(g.voxel_count(), fill)) {}

  Volume(const Geometry& g, Data values) : geometry(g), data(std::move(values)) {
    if (data.size() != geometry.voxel_count()) {
      throw ParameterError("volume data length " + std::to_string(data.size()) +
                           " does not match dims product " +
                           std::to_string(geometry.voxel_count()));
    }
  }

  const Dims& dims() const { return geometry.dims; }
  Index size() const { return data.size(); }

  Index linear_index(Index x, Index y, Index z) const {
    return x + geometry.dims[0] * (y + geometry.dims[1] * z);
  }

  Scalar& operator()(Index x, Index y, Index z) { return data[linear_index(x, y, z)]; }
  Scalar operator()(Index x, Index y, Index z) const {
    return data[linear_index(x, y, z)];
  }

  bool operator==(const Volume& other) const {
    return geometry == other.geometry && data.size() == other.data.size() &&
           (data == other.data).all();
  }
};

using Volume3D = Volume<float>;
using MaskVolume = Volume<std::uint8_t>;
using LabelVolume = Volume<std::int32_t>;

inline constexpr double kGeometryTolerance = 1e-4;

// Dims equal exactly, spacing and origin within 1e-4 mm componentwise.
inline bool geometry_match(const Geometry& a, const Geometry& b) {
  return (a.dims == b.dims).all() &&
         ((a.spacing - b.spacing).cwiseAbs().array() <= kGeometryTolerance).all() &&
         ((a.origin - b.origin).cwiseAbs().array() <= kGeometryTolerance).all();
}

template <typename A, typename B>
bool geometry_match(const Volume<A>& a, const Volume<B>& b) {
  return geometry_match(a.geometry, b.geometry);
}

// Checks the Volume3D invariants: positive dims and spacing, matching data
// length, finite values.
template <typename Scalar>
void validate_volume(const Volume<Scalar>& v) {
  if ((v.geometry.dims <= 0).any()) throw ParameterError("volume dims must be positive");
  if ((v.geometry.spacing.array() <= 0.0).any() || !v.geometry.spacing.allFinite()) {
    throw ParameterError("volume spacing must be strictly positive");
  }
  if (v.data.size() != v.geometry.voxel_count()) {
    throw ParameterError("volume data length does not match dims");
  }
  if constexpr (std::is_floating_point_v<Scalar>) {
    if (!v.data.allFinite()) throw ParameterError("volume contains non-finite values");
  }
}

// Mask invariant: every voxel exactly 0 or 1.
inline bool is_binary(const MaskVolume& m) { return (m.data <= 1).all(); }

template <typename To, typename From>
Volume<To> volume_cast(const Volume<From>& v) {
  return Volume<To>(v.geometry, v.data.template cast<To>());
}

}  // namespace ttafuse

#endif  // TTAFUSE_VOLUME_HPP
