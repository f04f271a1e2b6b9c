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


#include <zlib.h>

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "ttafuse/phantom.hpp"
#include "ttafuse/volume_io.hpp"

namespace fs = std::filesystem;
using namespace ttafuse;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("ttafuse_io_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

// Hand-rolled NIfTI-1 writer, independent of the library's writer.
struct RawNifti {
  std::int16_t dims[3] = {4, 4, 4};
  float pixdim[3] = {1, 1, 1};
  std::int16_t datatype = 16;
  std::int16_t bitpix = 32;
  float slope = 0.0f;
  float inter = 0.0f;
  bool big_endian = false;
  const char* magic = "n+1";
  std::int32_t sizeof_hdr = 348;
  std::vector<unsigned char> payload;  // already in file byte order

  template <typename T>
  void put(std::vector<unsigned char>& b, std::size_t off, T v) const {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    if (big_endian) std::reverse(bytes.begin(), bytes.end());
    std::memcpy(b.data() + off, bytes.data(), sizeof(T));
  }

  template <typename T>
  void append(T v) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    if (big_endian) std::reverse(bytes.begin(), bytes.end());
    payload.insert(payload.end(), bytes.begin(), bytes.end());
  }

  std::vector<unsigned char> bytes() const {
    std::vector<unsigned char> b(352, 0);
    put<std::int32_t>(b, 0, sizeof_hdr);
    put<std::int16_t>(b, 40, 3);
    for (int d = 0; d < 3; ++d) put<std::int16_t>(b, 42 + 2 * d, dims[d]);
    put<std::int16_t>(b, 70, datatype);
    put<std::int16_t>(b, 72, bitpix);
    for (int d = 0; d < 3; ++d) put<float>(b, 80 + 4 * d, pixdim[d]);
    put<float>(b, 108, 352.0f);
    put<float>(b, 112, slope);
    put<float>(b, 116, inter);
    std::memcpy(b.data() + 344, magic, 4);
    b.insert(b.end(), payload.begin(), payload.end());
    return b;
  }

  void write(const fs::path& p) const {
    const auto b = bytes();
    std::ofstream(p, std::ios::binary).write(reinterpret_cast<const char*>(b.data()), b.size());
  }
};

void gzip_file(const fs::path& src, const fs::path& dst) {
  std::ifstream in(src, std::ios::binary);
  std::vector<char> data{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  gzFile gz = gzopen(dst.c_str(), "wb");
  gzwrite(gz, data.data(), static_cast<unsigned>(data.size()));
  gzclose(gz);
}

}  // namespace

TEST_CASE("read_nifti reads float32 verbatim when scl_slope is 0") {
  TempDir tmp;
  RawNifti raw;
  for (int i = 0; i < 64; ++i) raw.append<float>(0.25f * i - 3.0f);
  raw.write(tmp.path / "a.nii");
  const Volume3D v = read_nifti(tmp.path / "a.nii");
  CHECK((v.dims() == Dims(4, 4, 4)).all());
  REQUIRE(v.size() == 64);
  for (int i = 0; i < 64; ++i) CHECK(v.data[i] == 0.25f * i - 3.0f);
}

TEST_CASE("read_nifti applies scl_slope and scl_inter") {
  TempDir tmp;
  RawNifti raw;
  raw.dims[0] = raw.dims[1] = raw.dims[2] = 1;
  raw.datatype = 4;
  raw.bitpix = 16;
  raw.slope = 2.0f;
  raw.inter = 1.0f;
  raw.append<std::int16_t>(5);
  raw.write(tmp.path / "i16.nii");
  CHECK(read_nifti(tmp.path / "i16.nii").data[0] == 11.0f);
}

TEST_CASE("read_nifti handles every supported datatype and big-endian files") {
  TempDir tmp;
  auto check = [&](auto sample, std::int16_t code, bool big) {
    using T = decltype(sample);
    RawNifti raw;
    raw.dims[0] = 3;
    raw.dims[1] = raw.dims[2] = 1;
    raw.datatype = code;
    raw.bitpix = sizeof(T) * 8;
    raw.big_endian = big;
    raw.pixdim[0] = 0.5f;
    for (int i = 0; i < 3; ++i) raw.append<T>(static_cast<T>(sample + i));
    const fs::path p = tmp.path / ("t" + std::to_string(code) + (big ? "b" : "l") + ".nii");
    raw.write(p);
    const Volume3D v = read_nifti(p);
    CHECK(v.geometry.spacing[0] == doctest::Approx(0.5));
    for (int i = 0; i < 3; ++i) CHECK(v.data[i] == static_cast<float>(static_cast<T>(sample + i)));
  };
  for (bool big : {false, true}) {
    check(std::uint8_t{200}, 2, big);
    check(std::int16_t{-300}, 4, big);
    check(std::uint16_t{60000}, 512, big);
    check(std::int32_t{-70000}, 8, big);
    check(1.5f, 16, big);
    check(-2.25, 64, big);
  }
}

TEST_CASE("read_nifti error paths") {
  TempDir tmp;
  RawNifti raw;
  for (int i = 0; i < 64; ++i) raw.append<float>(1.0f);

  SUBCASE("bad magic") {
    RawNifti bad = raw;
    bad.magic = "ni1";
    bad.write(tmp.path / "m.nii");
    CHECK_THROWS_AS(read_nifti(tmp.path / "m.nii"), FormatError);
  }
  SUBCASE("unsupported datatype") {
    RawNifti bad = raw;
    bad.datatype = 128;  // RGB24
    bad.write(tmp.path / "d.nii");
    CHECK_THROWS_AS(read_nifti(tmp.path / "d.nii"), UnsupportedDtypeError);
  }
  SUBCASE("truncated payload") {
    RawNifti bad = raw;
    bad.payload.resize(bad.payload.size() - 3);
    bad.write(tmp.path / "t.nii");
    CHECK_THROWS_AS(read_nifti(tmp.path / "t.nii"), IoError);
  }
  SUBCASE("payload longer than dims imply") {
    RawNifti bad = raw;
    bad.append<float>(2.0f);
    bad.write(tmp.path / "x.nii");
    CHECK_THROWS_AS(read_nifti(tmp.path / "x.nii"), FormatError);
  }
  SUBCASE("NIfTI-2 sized header") {
    RawNifti bad = raw;
    bad.sizeof_hdr = 540;
    bad.write(tmp.path / "n2.nii");
    CHECK_THROWS_AS(read_nifti(tmp.path / "n2.nii"), FormatError);
  }
  SUBCASE("non-finite values") {
    RawNifti bad;
    bad.dims[0] = bad.dims[1] = bad.dims[2] = 1;
    bad.append<float>(std::numeric_limits<float>::quiet_NaN());
    bad.write(tmp.path / "nan.nii");
    CHECK_THROWS_AS(read_nifti(tmp.path / "nan.nii"), FormatError);
  }
  SUBCASE("missing file") { CHECK_THROWS_AS(read_nifti(tmp.path / "none.nii"), IoError); }
}

TEST_CASE("gzip container is transparent") {
  TempDir tmp;
  std::mt19937_64 rng(3);
  const Volume3D v = oracle::random_volume(rng, oracle::geometry(5, 6, 7, 1.5), -100, 100);
  write_nifti(v, tmp.path / "v.nii");
  gzip_file(tmp.path / "v.nii", tmp.path / "v_copy.nii.gz");
  const Volume3D plain = read_nifti(tmp.path / "v.nii");
  const Volume3D packed = read_nifti(tmp.path / "v_copy.nii.gz");
  CHECK(plain == packed);

  // Detection is by content, not by extension.
  fs::copy_file(tmp.path / "v_copy.nii.gz", tmp.path / "misnamed.nii");
  CHECK(read_nifti(tmp.path / "misnamed.nii") == plain);
}

TEST_CASE("write_nifti round trip") {
  TempDir tmp;
  std::mt19937_64 rng(11);
  Geometry g = oracle::geometry(8, 8, 8);
  g.spacing = Eigen::Vector3d(2.0, 2.0, 3.0);
  g.origin = Eigen::Vector3d(-10.5, 4.25, 100.0);
  const Volume3D v = oracle::random_volume(rng, g, -1e3f, 1e3f);

  for (const char* name : {"r.nii", "r.nii.gz"}) {
    write_nifti(v, tmp.path / name);
    const Volume3D back = read_nifti(tmp.path / name);
    CHECK((back.dims() == g.dims).all());
    CHECK((back.geometry.spacing - g.spacing).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK((back.geometry.origin - g.origin).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK(std::memcmp(back.data.data(), v.data.data(), sizeof(float) * v.size()) == 0);
  }
}

TEST_CASE("mask survives a float round trip and re-binarization") {
  TempDir tmp;
  std::mt19937_64 rng(5);
  const MaskVolume m = oracle::random_mask(rng, oracle::geometry(7, 5, 6), 0.3);
  write_mask(m, tmp.path / "m.nii.gz");
  CHECK(read_mask(tmp.path / "m.nii.gz") == m);
}

TEST_CASE("write_nifti to an unwritable path raises an I/O error") {
  const Volume3D v(oracle::geometry(2, 2, 2));
  CHECK_THROWS_AS(write_nifti(v, "/nonexistent_dir_ttafuse/x.nii"), IoError);
}

TEST_CASE("fixture format") {
  TempDir tmp;
  SUBCASE("zero volume") {
    std::ofstream(tmp.path / "z.json") << R"({"dims":[2,2,2],"spacing":[1,1,1],"origin":[0,0,0]})";
    std::ofstream(tmp.path / "z.raw", std::ios::binary).write(std::string(32, '\0').data(), 32);
    const Volume3D v = read_fixture(tmp.path / "z");
    CHECK(v.size() == 8);
    CHECK((v.data == 0.0f).all());
  }
  SUBCASE("length mismatch") {
    std::ofstream(tmp.path / "s.json") << R"({"dims":[2,2,2],"spacing":[1,1,1],"origin":[0,0,0]})";
    std::ofstream(tmp.path / "s.raw", std::ios::binary).write(std::string(31, '\0').data(), 31);
    CHECK_THROWS_AS(read_fixture(tmp.path / "s.json"), FormatError);
  }
  SUBCASE("malformed sidecar") {
    std::ofstream(tmp.path / "b.json") << R"({"dims":[2,2],"spacing":)";
    std::ofstream(tmp.path / "b.raw", std::ios::binary).write(std::string(32, '\0').data(), 32);
    CHECK_THROWS_AS(read_fixture(tmp.path / "b"), ParseError);
  }
  SUBCASE("phantom round trip") {
    PhantomParams params;
    params.dims = Dims(16, 18, 20);
    params.seed = 9;
    const PhantomCase c = generate_phantom(params, 2);
    write_fixture(c.pet, tmp.path / "pet.raw");
    const Volume3D back = read_fixture(tmp.path / "pet");
    CHECK(back == c.pet);
  }
}

TEST_CASE("geometry_match") {
  const Volume3D a(oracle::geometry(4, 4, 4));
  CHECK(geometry_match(a, a));
  CHECK_FALSE(geometry_match(a, Volume3D(oracle::geometry(4, 4, 5))));
  Volume3D b = a;
  b.geometry.spacing[1] += 1e-6;
  CHECK(geometry_match(a, b));
  b.geometry.origin[2] += 1e-3;
  CHECK_FALSE(geometry_match(a, b));
}

TEST_CASE("property: NIfTI round trip on random volumes") {
  TempDir tmp;
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    const Geometry g = oracle::random_small_geometry(rng, 12);
    const Volume3D v = oracle::random_volume(rng, g, -5e3f, 5e3f);
    const fs::path p = tmp.path / (trial % 2 ? "p.nii.gz" : "p.nii");
    write_nifti(v, p);
    const Volume3D back = read_nifti(p);
    REQUIRE((back.dims() == g.dims).all());
    CHECK((back.geometry.spacing - g.spacing).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK(std::memcmp(back.data.data(), v.data.data(), sizeof(float) * v.size()) == 0);
  }
}
