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


#include "ttafuse/volume_io.hpp"

#include <zlib.h>

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

#include "json.hpp"

namespace ttafuse {
namespace {

namespace fs = std::filesystem;

constexpr int kHeaderSize = 348;
constexpr int kVoxOffset = 352;

enum NiftiType : std::int16_t {
  kUint8 = 2,
  kInt16 = 4,
  kInt32 = 8,
  kFloat32 = 16,
  kFloat64 = 64,
  kUint16 = 512,
};

std::vector<unsigned char> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, const unsigned char* bytes, std::size_t size) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes), static_cast<std::streamsize>(size));
  if (!out) throw IoError("write failed for " + path.string());
}

bool is_gzip(const std::vector<unsigned char>& bytes) {
  return bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b;
}

std::vector<unsigned char> gunzip(const std::vector<unsigned char>& in, const fs::path& path) {
  z_stream zs{};
  if (inflateInit2(&zs, 15 + 32) != Z_OK) throw IoError("zlib init failed");
  std::vector<unsigned char> out;
  std::array<unsigned char, 1 << 16> chunk{};
  zs.next_in = const_cast<Bytef*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  int rc = Z_OK;
  do {
    zs.next_out = chunk.data();
    zs.avail_out = static_cast<uInt>(chunk.size());
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw IoError("corrupt or truncated gzip stream in " + path.string());
    }
    out.insert(out.end(), chunk.data(), chunk.data() + (chunk.size() - zs.avail_out));
  } while (rc != Z_STREAM_END && (zs.avail_in > 0 || zs.avail_out == 0));
  inflateEnd(&zs);
  if (rc != Z_STREAM_END) throw IoError("truncated gzip stream in " + path.string());
  return out;
}

std::vector<unsigned char> gzip(const std::vector<unsigned char>& in) {
  z_stream zs{};
  if (deflateInit2(&zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, 15 + 16, 8, Z_DEFAULT_STRATEGY) !=
      Z_OK) {
    throw IoError("zlib init failed");
  }
  std::vector<unsigned char> out(deflateBound(&zs, static_cast<uLong>(in.size())));
  zs.next_in = const_cast<Bytef*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = deflate(&zs, Z_FINISH);
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) throw IoError("gzip compression failed");
  out.resize(zs.total_out);
  return out;
}

// Header field access with optional byte swapping.
class HeaderView {
 public:
  HeaderView(const unsigned char* bytes, bool swap) : bytes_(bytes), swap_(swap) {}

  template <typename T>
  T get(std::size_t offset) const {
    std::array<unsigned char, sizeof(T)> buf;
    std::memcpy(buf.data(), bytes_ + offset, sizeof(T));
    if (swap_) std::reverse(buf.begin(), buf.end());
    return std::bit_cast<T>(buf);
  }

 private:
  const unsigned char* bytes_;
  bool swap_;
};

template <typename T>
T load_swapped(const unsigned char* p, bool swap) {
  std::array<unsigned char, sizeof(T)> buf;
  std::memcpy(buf.data(), p, sizeof(T));
  if (swap) std::reverse(buf.begin(), buf.end());
  return std::bit_cast<T>(buf);
}

template <typename T>
void convert_payload(const unsigned char* src, Index count, bool swap, float slope, float inter,
                     Volume3D::Data& dst) {
  const bool rescale = slope != 0.0f && std::isfinite(slope);
  for (Index i = 0; i < count; ++i) {
    const T raw = load_swapped<T>(src + i * sizeof(T), swap);
    if (rescale) {
      dst[i] = static_cast<float>(static_cast<double>(slope) * static_cast<double>(raw) +
                                  static_cast<double>(inter));
    } else {
      dst[i] = static_cast<float>(raw);
    }
  }
}

int bytes_per_voxel(std::int16_t datatype) {
  switch (datatype) {
    case kUint8: return 1;
    case kInt16: return 2;
    case kUint16: return 2;
    case kInt32: return 4;
    case kFloat32: return 4;
    case kFloat64: return 8;
    default: return 0;
  }
}

template <typename T>
void put_le(std::vector<unsigned char>& buf, std::size_t offset, T value) {
  auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes.begin(), bytes.end());
  }
  std::memcpy(buf.data() + offset, bytes.data(), sizeof(T));
}

fs::path fixture_stem(const fs::path& path) {
  const auto ext = path.extension();
  if (ext == ".json" || ext == ".raw") return fs::path(path).replace_extension();
  return path;
}

fs::path with_suffix(const fs::path& stem, const char* suffix) {
  return fs::path(stem.string() + suffix);
}

}  // namespace

Volume3D read_nifti(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("no such file: " + path.string());
  std::vector<unsigned char> bytes = read_file(path);
  if (is_gzip(bytes)) bytes = gunzip(bytes, path);
  if (bytes.size() < static_cast<std::size_t>(kHeaderSize)) {
    throw IoError("truncated NIfTI header in " + path.string());
  }
  if (std::memcmp(bytes.data() + 344, "n+1\0", 4) != 0) {
    throw FormatError("bad NIfTI-1 magic in " + path.string() +
                      " (only single-file NIfTI-1 is supported)");
  }

  // Endianness: dim[0] must be in [1,7] in the file's byte order.
  bool swap = false;
  {
    const auto dim0 = load_swapped<std::int16_t>(bytes.data() + 40, false);
    if (dim0 < 1 || dim0 > 7) {
      swap = true;
      const auto swapped = load_swapped<std::int16_t>(bytes.data() + 40, true);
      if (swapped < 1 || swapped > 7) throw FormatError("invalid dim[0] in " + path.string());
    }
  }
  const HeaderView hdr(bytes.data(), swap);
  if (hdr.get<std::int32_t>(0) != kHeaderSize) {
    throw FormatError("sizeof_hdr is not 348 in " + path.string());
  }

  const int ndim = hdr.get<std::int16_t>(40);
  Geometry geom;
  for (int d = 0; d < 3; ++d) {
    const int n = d < ndim ? hdr.get<std::int16_t>(42 + 2 * d) : 1;
    if (n < 1) throw FormatError("non-positive dimension in " + path.string());
    geom.dims[d] = n;
    const float pix = d < ndim ? hdr.get<float>(80 + 4 * d) : 1.0f;
    geom.spacing[d] = std::abs(pix) > 0.0f && std::isfinite(pix) ? std::abs(pix) : 1.0;
    geom.origin[d] = hdr.get<float>(268 + 4 * d);
  }
  for (int d = 3; d < ndim; ++d) {
    if (hdr.get<std::int16_t>(42 + 2 * d) > 1) {
      throw FormatError("4D and higher volumes are not supported: " + path.string());
    }
  }
  if (!geom.origin.allFinite()) geom.origin.setZero();

  const auto datatype = hdr.get<std::int16_t>(70);
  const int bpv = bytes_per_voxel(datatype);
  if (bpv == 0) {
    throw UnsupportedDtypeError("unsupported NIfTI datatype code " + std::to_string(datatype) +
                                " in " + path.string());
  }
  const float vox_offset_f = hdr.get<float>(108);
  if (!(vox_offset_f >= static_cast<float>(kHeaderSize))) {
    throw FormatError("invalid vox_offset in " + path.string());
  }
  const auto vox_offset = static_cast<std::size_t>(vox_offset_f);
  const Index count = geom.voxel_count();
  const std::size_t payload = static_cast<std::size_t>(count) * static_cast<std::size_t>(bpv);
  if (bytes.size() < vox_offset + payload) {
    throw IoError("truncated NIfTI payload in " + path.string() + ": expected " +
                  std::to_string(payload) + " bytes");
  }
  if (bytes.size() > vox_offset + payload) {
    throw FormatError("NIfTI payload larger than declared dims in " + path.string());
  }

  const float slope = hdr.get<float>(112);
  const float inter = hdr.get<float>(116);
  Volume3D vol(geom);
  const unsigned char* src = bytes.data() + vox_offset;
  switch (datatype) {
    case kUint8: convert_payload<std::uint8_t>(src, count, swap, slope, inter, vol.data); break;
    case kInt16: convert_payload<std::int16_t>(src, count, swap, slope, inter, vol.data); break;
    case kUint16: convert_payload<std::uint16_t>(src, count, swap, slope, inter, vol.data); break;
    case kInt32: convert_payload<std::int32_t>(src, count, swap, slope, inter, vol.data); break;
    case kFloat32: convert_payload<float>(src, count, swap, slope, inter, vol.data); break;
    case kFloat64: convert_payload<double>(src, count, swap, slope, inter, vol.data); break;
    default: break;
  }
  if (!vol.data.allFinite()) throw FormatError("non-finite voxel values in " + path.string());
  return vol;
}

void write_nifti(const Volume3D& vol, const fs::path& path) {
  validate_volume(vol);
  const auto& g = vol.geometry;
  if ((g.dims > 32767).any()) throw ParameterError("dimension exceeds NIfTI-1 int16 range");

  const std::size_t payload = static_cast<std::size_t>(vol.size()) * sizeof(float);
  std::vector<unsigned char> buf(kVoxOffset + payload, 0);
  put_le<std::int32_t>(buf, 0, kHeaderSize);
  put_le<std::int16_t>(buf, 40, 3);
  for (int d = 0; d < 3; ++d) {
    put_le<std::int16_t>(buf, 42 + 2 * d, static_cast<std::int16_t>(g.dims[d]));
  }
  for (int d = 3; d < 7; ++d) put_le<std::int16_t>(buf, 42 + 2 * d, 1);
  put_le<std::int16_t>(buf, 70, kFloat32);
  put_le<std::int16_t>(buf, 72, 32);
  put_le<float>(buf, 76, 1.0f);  // qfac
  for (int d = 0; d < 3; ++d) {
    put_le<float>(buf, 80 + 4 * d, static_cast<float>(g.spacing[d]));
  }
  put_le<float>(buf, 108, static_cast<float>(kVoxOffset));
  put_le<float>(buf, 112, 0.0f);
  put_le<float>(buf, 116, 0.0f);
  buf[123] = 2;  // xyzt_units: millimetres
  put_le<std::int16_t>(buf, 252, 1);  // qform_code: scanner
  for (int d = 0; d < 3; ++d) {
    put_le<float>(buf, 268 + 4 * d, static_cast<float>(g.origin[d]));
  }
  std::memcpy(buf.data() + 344, "n+1\0", 4);
  for (Index i = 0; i < vol.size(); ++i) {
    put_le<float>(buf, kVoxOffset + static_cast<std::size_t>(i) * sizeof(float), vol.data[i]);
  }

  if (path.extension() == ".gz") {
    const auto packed = gzip(buf);
    write_file(path, packed.data(), packed.size());
  } else {
    write_file(path, buf.data(), buf.size());
  }
}

void write_mask(const MaskVolume& mask, const fs::path& path) {
  write_nifti(volume_cast<float>(mask), path);
}

MaskVolume read_mask(const fs::path& path) {
  const Volume3D v = read_nifti(path);
  return MaskVolume(v.geometry, (v.data >= 0.5f).cast<std::uint8_t>());
}

Volume3D read_fixture(const fs::path& path) {
  const fs::path stem = fixture_stem(path);
  const fs::path sidecar = with_suffix(stem, ".json");
  const fs::path raw = with_suffix(stem, ".raw");

  nlohmann::json meta;
  {
    std::ifstream in(sidecar);
    if (!in) throw IoError("cannot open fixture sidecar " + sidecar.string());
    try {
      in >> meta;
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("malformed fixture sidecar " + sidecar.string() + ": " + e.what());
    }
  }

  Geometry geom;
  try {
    const auto dims = meta.at("dims").get<std::vector<Index>>();
    const auto spacing = meta.at("spacing").get<std::vector<double>>();
    const auto origin =
        meta.contains("origin") ? meta.at("origin").get<std::vector<double>>()
                                : std::vector<double>{0.0, 0.0, 0.0};
    if (dims.size() != 3 || spacing.size() != 3 || origin.size() != 3) {
      throw ParseError("fixture sidecar fields must have three components");
    }
    for (int d = 0; d < 3; ++d) {
      geom.dims[d] = dims[d];
      geom.spacing[d] = spacing[d];
      geom.origin[d] = origin[d];
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("malformed fixture sidecar " + sidecar.string() + ": " + e.what());
  }
  if ((geom.dims <= 0).any() || (geom.spacing.array() <= 0.0).any()) {
    throw ParseError("fixture sidecar has non-positive dims or spacing");
  }

  const std::vector<unsigned char> bytes = read_file(raw);
  const std::size_t expected = static_cast<std::size_t>(geom.voxel_count()) * sizeof(float);
  if (bytes.size() != expected) {
    throw FormatError("fixture raw length " + std::to_string(bytes.size()) + " != expected " +
                      std::to_string(expected) + " for " + raw.string());
  }
  Volume3D vol(geom);
  const bool swap = std::endian::native == std::endian::big;
  for (Index i = 0; i < vol.size(); ++i) {
    vol.data[i] = load_swapped<float>(bytes.data() + i * sizeof(float), swap);
  }
  if (!vol.data.allFinite()) throw FormatError("non-finite values in fixture " + raw.string());
  return vol;
}

void write_fixture(const Volume3D& vol, const fs::path& path) {
  validate_volume(vol);
  const fs::path stem = fixture_stem(path);
  const auto& g = vol.geometry;
  nlohmann::ordered_json meta;
  meta["dims"] = {g.dims[0], g.dims[1], g.dims[2]};
  meta["spacing"] = {g.spacing[0], g.spacing[1], g.spacing[2]};
  meta["origin"] = {g.origin[0], g.origin[1], g.origin[2]};
  const std::string text = meta.dump(2) + "\n";
  write_file(with_suffix(stem, ".json"), reinterpret_cast<const unsigned char*>(text.data()),
             text.size());

  std::vector<unsigned char> buf(static_cast<std::size_t>(vol.size()) * sizeof(float));
  for (Index i = 0; i < vol.size(); ++i) {
    put_le<float>(buf, static_cast<std::size_t>(i) * sizeof(float), vol.data[i]);
  }
  write_file(with_suffix(stem, ".raw"), buf.data(), buf.size());
}

fs::path find_nifti(const fs::path& dir, const std::string& name) {
  for (const char* ext : {".nii", ".nii.gz"}) {
    fs::path candidate = dir / (name + ext);
    if (fs::exists(candidate)) return candidate;
  }
  throw NotFoundError("no " + name + ".nii[.gz] in " + dir.string());
}

}  // namespace ttafuse
