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


#ifndef TTAFUSE_DATASET_HPP
#define TTAFUSE_DATASET_HPP

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ttafuse/preprocess.hpp"
#include "ttafuse/volume.hpp"

namespace ttafuse {

// Case layout: one directory per case holding ct.nii[.gz], pet.nii[.gz] and
// optionally seg.nii[.gz] and bbox.json.
struct CaseFiles {
  std::string case_id;
  Volume3D ct;
  Volume3D pet;
  std::optional<MaskVolume> seg;
};

// Sorted names of subdirectories of `root` that contain a CT or PET volume.
std::vector<std::string> discover_cases(const std::filesystem::path& root);

CaseFiles load_case(const std::filesystem::path& case_dir);
bool has_segmentation(const std::filesystem::path& case_dir);

// Crop record written by the preprocess command.
struct CropRecord {
  BBox box;
  Geometry full;
};

void write_crop_record(const CropRecord& record, const std::filesystem::path& path);
CropRecord read_crop_record(const std::filesystem::path& path);

// Maps case id to mask path for evaluation. Accepts `<id>.nii[.gz]` files
// (excluding `*_prob` soft maps) and `<id>/seg.nii[.gz]` directories.
std::map<std::string, std::filesystem::path> discover_masks(const std::filesystem::path& root);

std::vector<std::string> read_case_list(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace ttafuse

#endif  // TTAFUSE_DATASET_HPP
