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


#include "ttafuse/dataset.hpp"

#include <algorithm>
#include <fstream>

#include "json.hpp"
#include "ttafuse/volume_io.hpp"

namespace ttafuse {
namespace {

namespace fs = std::filesystem;

bool has_volume(const fs::path& dir, const std::string& name) {
  return fs::exists(dir / (name + ".nii")) || fs::exists(dir / (name + ".nii.gz"));
}

// "x.nii.gz" -> "x", "x.nii" -> "x", otherwise empty.
std::string nifti_stem(const fs::path& file) {
  const std::string name = file.filename().string();
  for (const std::string ext : {".nii.gz", ".nii"}) {
    if (name.size() > ext.size() && name.ends_with(ext)) {
      return name.substr(0, name.size() - ext.size());
    }
  }
  return {};
}

nlohmann::ordered_json dims_json(const Dims& d) { return {d[0], d[1], d[2]}; }
nlohmann::ordered_json vec_json(const Eigen::Vector3d& v) { return {v[0], v[1], v[2]}; }

Dims dims_from(const nlohmann::json& j) {
  const auto v = j.get<std::vector<Index>>();
  if (v.size() != 3) throw ParseError("expected three components");
  return {v[0], v[1], v[2]};
}

Eigen::Vector3d vec_from(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 3) throw ParseError("expected three components");
  return {v[0], v[1], v[2]};
}

}  // namespace

std::vector<std::string> discover_cases(const fs::path& root) {
  if (!fs::is_directory(root)) throw NotFoundError("not a directory: " + root.string());
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory() &&
        (has_volume(entry.path(), "ct") || has_volume(entry.path(), "pet"))) {
      ids.push_back(entry.path().filename().string());
    }
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

bool has_segmentation(const fs::path& case_dir) { return has_volume(case_dir, "seg"); }

CaseFiles load_case(const fs::path& case_dir) {
  CaseFiles files;
  files.case_id = case_dir.filename().string();
  files.ct = read_nifti(find_nifti(case_dir, "ct"));
  files.pet = read_nifti(find_nifti(case_dir, "pet"));
  if (!geometry_match(files.ct, files.pet)) {
    throw FormatError("case " + files.case_id + ": CT and PET geometry differ");
  }
  if (has_segmentation(case_dir)) {
    files.seg = read_mask(find_nifti(case_dir, "seg"));
    if (!geometry_match(*files.seg, files.ct)) {
      throw FormatError("case " + files.case_id + ": segmentation geometry differs from CT");
    }
  }
  return files;
}

void write_crop_record(const CropRecord& record, const fs::path& path) {
  nlohmann::ordered_json j;
  j["lo"] = dims_json(record.box.lo);
  j["hi"] = dims_json(record.box.hi);
  j["full_dims"] = dims_json(record.full.dims);
  j["spacing"] = vec_json(record.full.spacing);
  j["origin"] = vec_json(record.full.origin);
  write_text(path, j.dump(2) + "\n");
}

CropRecord read_crop_record(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    nlohmann::json j;
    in >> j;
    CropRecord r;
    r.box.lo = dims_from(j.at("lo"));
    r.box.hi = dims_from(j.at("hi"));
    r.full.dims = dims_from(j.at("full_dims"));
    r.full.spacing = vec_from(j.at("spacing"));
    r.full.origin = vec_from(j.at("origin"));
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("malformed crop record " + path.string() + ": " + e.what());
  }
}

std::map<std::string, fs::path> discover_masks(const fs::path& root) {
  if (!fs::is_directory(root)) throw NotFoundError("not a directory: " + root.string());
  std::map<std::string, fs::path> masks;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) {
      for (const char* ext : {".nii", ".nii.gz"}) {
        const fs::path seg = entry.path() / (std::string("seg") + ext);
        if (fs::exists(seg)) {
          masks[entry.path().filename().string()] = seg;
          break;
        }
      }
    } else if (entry.is_regular_file()) {
      const std::string stem = nifti_stem(entry.path());
      if (!stem.empty() && !stem.ends_with("_prob")) masks[stem] = entry.path();
    }
  }
  return masks;
}

std::vector<std::string> read_case_list(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open case list " + path.string());
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    ids.push_back(line.substr(first, last - first + 1));
  }
  return ids;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace ttafuse
