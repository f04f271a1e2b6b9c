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


#ifndef TTAFUSE_VOLUME_IO_HPP
#define TTAFUSE_VOLUME_IO_HPP

#include <filesystem>

#include "ttafuse/volume.hpp"

namespace ttafuse {

// Reads a single-file NIfTI-1 volume (.nii or gzip-compressed .nii.gz; the
// container is detected from the leading bytes, not the extension). Values
// pass through scl_slope/scl_inter when the slope is nonzero. Orientation
// fields are ignored; origin comes from qoffset.
Volume3D read_nifti(const std::filesystem::path& path);

// Writes a float32 NIfTI-1 volume. Paths ending in ".gz" are gzip-compressed.
void write_nifti(const Volume3D& vol, const std::filesystem::path& path);

// Masks are stored as float 0/1 and re-binarized at 0.5 on load.
void write_mask(const MaskVolume& mask, const std::filesystem::path& path);
MaskVolume read_mask(const std::filesystem::path& path);

// Test fixture: `<stem>.json` sidecar with {dims, spacing, origin} plus
// `<stem>.raw` holding little-endian float32 voxels. `path` may name the
// stem or either file.
Volume3D read_fixture(const std::filesystem::path& path);
void write_fixture(const Volume3D& vol, const std::filesystem::path& path);

// Resolves `<dir>/<name>.nii` or `<dir>/<name>.nii.gz`, whichever exists.
std::filesystem::path find_nifti(const std::filesystem::path& dir, const std::string& name);

}  // namespace ttafuse

#endif  // TTAFUSE_VOLUME_IO_HPP
