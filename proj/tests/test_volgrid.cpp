#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "alarm/formats.hpp"
#include "alarm/gzip.hpp"
#include "alarm/nifti.hpp"
#include "alarm/raw_io.hpp"
#include "alarm/resample.hpp"
#include "oracles.hpp"
#include "testutil.hpp"

using namespace alarmkit;
using testutil::NiftiFixture;
using testutil::TempDir;
using testutil::throws_code;

namespace {

// Random volume whose geometry survives the float32 fields of a NIfTI
// header without rounding (spacings/origins that are exact binary
// fractions), so round-trips can demand bit-exact equality.
Volume random_volume(std::uint32_t seed) {
  std::mt19937 rng(seed);
  const double sp_choices[] = {0.5, 0.75, 1.0, 1.25, 2.5};
  std::uniform_int_distribution<int> dim(2, 9), sp(0, 4), org(-8, 8);
  GridGeometry g;
  g.dims = {dim(rng), dim(rng), dim(rng)};
  for (int i = 0; i < 3; ++i) {
    g.spacing[i] = sp_choices[sp(rng)];
    g.origin[i] = static_cast<double>(org(rng)) * 0.25;
  }
  Volume v = make_volume(g);
  std::uniform_real_distribution<float> hu(-200.0f, 200.0f);
  for (float& x : v.voxels) x = hu(rng);
  return v;
}

}  // namespace

TEST_CASE("NIfTI volume round-trip is bit-exact") {
  TempDir td;
  for (std::uint32_t seed = 1; seed <= 10; ++seed) {
    Volume v = random_volume(seed);
    const std::string path = td.file("v" + std::to_string(seed) + ".nii");
    write_nifti(v, path);
    Volume back = read_nifti_volume(path);
    REQUIRE(back.geom.dims == v.geom.dims);
    REQUIRE(back.geom.spacing == v.geom.spacing);
    REQUIRE(back.geom.origin == v.geom.origin);
    REQUIRE(back.voxels == v.voxels);
  }
}

TEST_CASE("NIfTI mask round-trip preserves every label") {
  TempDir td;
  Mask m = oracle::random_blob_mask({{12, 12, 12}}, 3);
  m.geom.spacing = {1.25, 0.75, 2.5};
  m.geom.origin = {-4.5, 3.25, 0.0};
  write_nifti(m, td.file("m.nii"));
  Mask back = read_nifti_mask(td.file("m.nii"));
  REQUIRE(back.geom.dims == m.geom.dims);
  REQUIRE(back.geom.spacing == m.geom.spacing);
  REQUIRE(back.geom.origin == m.geom.origin);
  REQUIRE(back.voxels == m.voxels);
}

TEST_CASE("NIfTI file size is header + padding + payload") {
  Volume v = make_volume({{2, 2, 2}});
  REQUIRE(nifti_file_bytes(v).size() == 352 + 2 * 2 * 2 * 4);
  Mask m = make_mask({{3, 3, 3}});
  REQUIRE(nifti_file_bytes(m).size() == 352 + 27);
}

TEST_CASE("int16 voxels are mapped through scl_slope and scl_inter") {
  TempDir td;
  NiftiFixture f;
  f.dims(2, 1, 1);
  f.datatype(4, 16);  // int16
  f.pixdim(1.0f, 1.0f, 1.0f);
  f.scl(0.5f, 10.0f);
  f.payload_i16({100, -40});
  testutil::spit(td.file("s.nii"), f.bytes());
  Volume v = read_nifti_volume(td.file("s.nii"));
  REQUIRE(v.voxels[0] == 60.0f);   // 100 * 0.5 + 10
  REQUIRE(v.voxels[1] == -10.0f);  // -40 * 0.5 + 10
}

TEST_CASE("scl_slope of zero means values are taken as stored") {
  TempDir td;
  NiftiFixture f;
  f.dims(1, 1, 1);
  f.datatype(4, 16);
  f.pixdim(1.0f, 1.0f, 1.0f);
  f.scl(0.0f, 99.0f);  // slope 0: the scaling pair is to be ignored
  f.payload_i16({100});
  testutil::spit(td.file("s.nii"), f.bytes());
  REQUIRE(read_nifti_volume(td.file("s.nii")).voxels[0] == 100.0f);
}

TEST_CASE("unscaled headers with no orientation codes read as LPS at origin") {
  TempDir td;
  NiftiFixture f;
  f.dims(2, 2, 2);
  f.datatype(16, 32);  // float32
  f.pixdim(2.0f, 1.5f, 1.0f);
  f.payload_f32({0, 1, 2, 3, 4, 5, 6, 7});
  testutil::spit(td.file("p.nii"), f.bytes());
  Volume v = read_nifti_volume(td.file("p.nii"));
  REQUIRE(v.geom.spacing == std::array<double, 3>{2.0, 1.5, 1.0});
  REQUIRE(v.geom.origin == std::array<double, 3>{0.0, 0.0, 0.0});
  REQUIRE(v.at(1, 0, 1) == 5.0f);
}

TEST_CASE("RAS-oriented sform data is flipped into LPS") {
  // Stored axes point Right and Anterior; value(i,j,k) = i + 10j + 100k.
  TempDir td;
  NiftiFixture f;
  f.dims(3, 2, 2);
  f.datatype(16, 32);
  f.pixdim(1.0f, 1.0f, 1.0f);
  const float rx[4] = {1, 0, 0, 10};
  const float ry[4] = {0, 1, 0, 20};
  const float rz[4] = {0, 0, 1, -5};
  f.sform(1, rx, ry, rz);
  std::vector<float> vals;
  for (int k = 0; k < 2; ++k)
    for (int j = 0; j < 2; ++j)
      for (int i = 0; i < 3; ++i)
        vals.push_back(static_cast<float>(i + 10 * j + 100 * k));
  f.payload_f32(vals);
  testutil::spit(td.file("ras.nii"), f.bytes());

  Volume v = read_nifti_volume(td.file("ras.nii"));
  REQUIRE(v.geom.dims == std::array<std::int64_t, 3>{3, 2, 2});
  // x and y axes reverse; the rightmost/rearmost stored voxel becomes the
  // new origin corner.
  REQUIRE(v.geom.origin == std::array<double, 3>{-12.0, -21.0, -5.0});
  for (std::int64_t z = 0; z < 2; ++z)
    for (std::int64_t y = 0; y < 2; ++y)
      for (std::int64_t x = 0; x < 3; ++x)
        REQUIRE(v.at(x, y, z) ==
                static_cast<float>((2 - x) + 10 * (1 - y) + 100 * z));
}

TEST_CASE("identity quaternion qform matches the equivalent sform") {
  TempDir td;
  std::vector<float> vals;
  for (int i = 0; i < 12; ++i) vals.push_back(static_cast<float>(i));

  NiftiFixture q;
  q.dims(3, 2, 2);
  q.datatype(16, 32);
  q.pixdim(1.0f, 1.0f, 1.0f);
  q.qform(1, 0.0f, 0.0f, 0.0f, 10.0f, 20.0f, -5.0f);
  q.payload_f32(vals);
  testutil::spit(td.file("q.nii"), q.bytes());

  NiftiFixture s;
  s.dims(3, 2, 2);
  s.datatype(16, 32);
  s.pixdim(1.0f, 1.0f, 1.0f);
  const float rx[4] = {1, 0, 0, 10};
  const float ry[4] = {0, 1, 0, 20};
  const float rz[4] = {0, 0, 1, -5};
  s.sform(1, rx, ry, rz);
  s.payload_f32(vals);
  testutil::spit(td.file("s.nii"), s.bytes());

  Volume vq = read_nifti_volume(td.file("q.nii"));
  Volume vs = read_nifti_volume(td.file("s.nii"));
  REQUIRE(vq.geom.dims == vs.geom.dims);
  REQUIRE(vq.geom.spacing == vs.geom.spacing);
  REQUIRE(vq.geom.origin == vs.geom.origin);
  REQUIRE(vq.voxels == vs.voxels);
}

TEST_CASE("qfac -1 mirrors the third axis") {
  TempDir td;
  NiftiFixture f;
  f.dims(1, 1, 3);
  f.datatype(16, 32);
  f.pixdim(1.0f, 1.0f, 1.0f);
  f.qform(1, 0.0f, 0.0f, 0.0f, 0.0f, 0.0f, 0.0f, -1.0f);
  f.payload_f32({7.0f, 8.0f, 9.0f});
  testutil::spit(td.file("qf.nii"), f.bytes());
  Volume v = read_nifti_volume(td.file("qf.nii"));
  REQUIRE(v.at(0, 0, 0) == 9.0f);
  REQUIRE(v.at(0, 0, 2) == 7.0f);
  REQUIRE(v.geom.origin[2] == -2.0);  // stored slice 2 sat at RAS z = -2
}

TEST_CASE("axis-permuted sform data is reordered into LPS storage") {
  // Stored i advances LPS z by 2 mm, j advances LPS x by 1 mm, k advances
  // LPS y by 1.5 mm (written in RAS in the header, hence negated x/y rows).
  TempDir td;
  NiftiFixture f;
  f.dims(2, 3, 4);
  f.datatype(16, 32);
  f.pixdim(2.0f, 1.0f, 1.5f);
  const float rx[4] = {0, -1, 0, -1};
  const float ry[4] = {0, 0, -1.5f, -2};
  const float rz[4] = {2, 0, 0, 3};
  f.sform(1, rx, ry, rz);
  std::vector<float> vals;
  for (int k = 0; k < 4; ++k)
    for (int j = 0; j < 3; ++j)
      for (int i = 0; i < 2; ++i)
        vals.push_back(static_cast<float>(i + 10 * j + 100 * k));
  f.payload_f32(vals);
  testutil::spit(td.file("perm.nii"), f.bytes());

  Volume v = read_nifti_volume(td.file("perm.nii"));
  REQUIRE(v.geom.dims == std::array<std::int64_t, 3>{3, 4, 2});
  REQUIRE(v.geom.spacing == std::array<double, 3>{1.0, 1.5, 2.0});
  REQUIRE(v.geom.origin == std::array<double, 3>{1.0, 2.0, 3.0});
  for (std::int64_t z = 0; z < 2; ++z)
    for (std::int64_t y = 0; y < 4; ++y)
      for (std::int64_t x = 0; x < 3; ++x)
        REQUIRE(v.at(x, y, z) == static_cast<float>(z + 10 * x + 100 * y));
}

TEST_CASE("oblique orientations are rejected") {
  TempDir td;
  NiftiFixture f;
  f.dims(2, 2, 2);
  f.datatype(16, 32);
  f.pixdim(1.0f, 1.0f, 1.0f);
  const float c = 0.70710678f;
  const float rx[4] = {c, -c, 0, 0};
  const float ry[4] = {c, c, 0, 0};
  const float rz[4] = {0, 0, 1, 0};
  f.sform(1, rx, ry, rz);
  f.payload_f32(std::vector<float>(8, 0.0f));
  testutil::spit(td.file("ob.nii"), f.bytes());
  REQUIRE(throws_code([&] { read_nifti_volume(td.file("ob.nii")); },
                      ErrorCode::UnsupportedOrientation));
}

TEST_CASE("malformed NIfTI files are rejected with specific errors") {
  TempDir td;
  Volume v = make_volume({{2, 2, 2}}, 50.0f);
  std::vector<std::uint8_t> good = nifti_file_bytes(v);

  auto check = [&](auto mutate, ErrorCode code) {
    std::vector<std::uint8_t> bad = good;
    mutate(bad);
    testutil::spit(td.file("bad.nii"), bad);
    REQUIRE(throws_code([&] { read_nifti_volume(td.file("bad.nii")); }, code));
  };

  // Magic stomped.
  check([](auto& b) { b[344] = 'x'; }, ErrorCode::BadMagic);
  // sizeof_hdr wrong.
  check([](auto& b) { b[0] = 99; }, ErrorCode::BadMagic);
  // Byte-swapped sizeof_hdr (big-endian writer).
  check(
      [](auto& b) {
        b[0] = 0;
        b[1] = 0;
        b[2] = 1;
        b[3] = 0x5C;
      },
      ErrorCode::BadMagic);
  // Unsupported datatype (int32 = 8).
  check([](auto& b) { b[70] = 8; }, ErrorCode::UnsupportedDatatype);
  // dim[0] = 4 volumes are out of scope.
  check([](auto& b) { b[40] = 4; }, ErrorCode::DimMismatch);
  // Truncated payload.
  check([](auto& b) { b.resize(b.size() - 10); }, ErrorCode::DimMismatch);
  // Zero spacing.
  check(
      [](auto& b) {
        const float zero = 0.0f;
        std::memcpy(&b[80], &zero, 4);
      },
      ErrorCode::InvalidSpacing);
  // Non-finite voxel value.
  check(
      [](auto& b) {
        const float nan = std::numeric_limits<float>::quiet_NaN();
        std::memcpy(&b[352], &nan, 4);
      },
      ErrorCode::NonFinite);
  // File shorter than a header.
  check([](auto& b) { b.resize(100); }, ErrorCode::BadMagic);
}

TEST_CASE("two-file ni1 pairs read via the .img sibling") {
  TempDir td;
  NiftiFixture f;
  f.dims(2, 1, 1);
  f.datatype(16, 32);
  f.pixdim(1.0f, 1.0f, 1.0f);
  const char ni1[4] = {'n', 'i', '1', '\0'};
  f.magic(ni1);
  f.put_f32(108, 0.0f);  // header-only file: no embedded payload
  testutil::spit(td.file("pair.hdr"), f.bytes());
  NiftiFixture img;  // reuse only the payload helper
  std::vector<std::uint8_t> data;
  for (float x : {42.0f, 43.0f}) {
    std::uint8_t b[4];
    std::memcpy(b, &x, 4);
    data.insert(data.end(), b, b + 4);
  }
  testutil::spit(td.file("pair.img"), data);

  Volume v = read_nifti_volume(td.file("pair.hdr"));
  REQUIRE(v.voxels == std::vector<float>{42.0f, 43.0f});
}

TEST_CASE("gzip round-trip and transparent .nii.gz reads") {
  TempDir td;
  Volume v = random_volume(99);
  std::vector<std::uint8_t> plain = nifti_file_bytes(v);
  write_file_gz(td.file("v.nii.gz"), plain);
  REQUIRE(read_file_auto(td.file("v.nii.gz")) == plain);

  Volume back = read_volume_auto(td.file("v.nii.gz"));
  REQUIRE(back.voxels == v.voxels);
  REQUIRE(back.geom.origin == v.geom.origin);
}

TEST_CASE("raw format round-trip is bit-exact") {
  TempDir td;
  Volume v = random_volume(7);
  write_raw(v, td.file("vol"));
  Volume back = read_raw_volume(td.file("vol.json"));
  REQUIRE(back.geom.dims == v.geom.dims);
  REQUIRE(back.geom.spacing == v.geom.spacing);
  REQUIRE(back.geom.origin == v.geom.origin);
  REQUIRE(back.voxels == v.voxels);

  Mask m = oracle::random_blob_mask({{6, 7, 8}}, 11);
  write_raw(m, td.file("msk"));
  Mask mb = read_raw_mask(td.file("msk.json"));
  REQUIRE(mb.voxels == m.voxels);

  // The .bin path and the extensionless stem resolve to the same pair.
  Volume via_bin = read_raw_volume(td.file("vol.bin"));
  REQUIRE(via_bin.voxels == v.voxels);
}

TEST_CASE("raw sidecar mismatches are rejected") {
  TempDir td;
  const std::string side = td.file("r.json");
  const std::string data = td.file("r.bin");
  auto sidecar = [&](const std::string& dtype, const std::string& dims) {
    return std::string("{\"format\":\"alarm-raw-v1\",\"dtype\":\"") + dtype +
           "\",\"dims\":" + dims +
           ",\"spacing_mm\":[1,1,1],\"origin_mm\":[0,0,0]," +
           "\"axis_convention\":\"LPS\",\"data\":\"r.bin\"}";
  };

  // 3x3x3 float32 wants 108 bytes; give it 107.
  testutil::spit(side, sidecar("float32", "[3,3,3]"));
  testutil::spit(data, std::vector<std::uint8_t>(107, 0));
  REQUIRE(throws_code([&] { read_raw_volume(side); },
                      ErrorCode::SidecarMismatch));
  testutil::spit(data, std::vector<std::uint8_t>(108, 0));
  REQUIRE_NOTHROW(read_raw_volume(side));

  testutil::spit(side, sidecar("float64", "[3,3,3]"));
  REQUIRE(throws_code([&] { read_raw_volume(side); },
                      ErrorCode::UnsupportedDatatype));

  testutil::spit(side, sidecar("float32", "[3,3.5,3]"));
  REQUIRE(throws_code([&] { read_raw_volume(side); },
                      ErrorCode::SidecarMismatch));

  testutil::spit(side, std::string("{\"format\":\"other\"}"));
  REQUIRE(throws_code([&] { read_raw_volume(side); },
                      ErrorCode::SidecarMismatch));

  testutil::spit(side, std::string("not json"));
  REQUIRE(throws_code([&] { read_raw_volume(side); },
                      ErrorCode::SidecarMismatch));
}

TEST_CASE("resampling an already-isotropic grid is the identity") {
  Volume v = random_volume(42);
  v.geom.spacing = {1.0, 1.0, 1.0};
  Volume out = resample_isotropic(v, 1.0, Interpolation::Trilinear);
  REQUIRE(out.geom.dims == v.geom.dims);
  REQUIRE(out.voxels == v.voxels);  // bit-exact

  Mask m = oracle::random_blob_mask({{16, 16, 16}}, 8);
  Mask mo = resample_isotropic(m, 1.0);
  REQUIRE(mo.voxels == m.voxels);
}

TEST_CASE("resampled grid dims cover the physical extent") {
  GridGeometry g;
  g.dims = {8, 8, 4};
  g.spacing = {0.5, 0.5, 2.5};
  Volume v = make_volume(g, 1.0f);
  Volume out = resample_isotropic(v, 1.0, Interpolation::Trilinear);
  REQUIRE(out.geom.dims == std::array<std::int64_t, 3>{4, 4, 10});
  REQUIRE(out.geom.spacing == std::array<double, 3>{1.0, 1.0, 1.0});
  REQUIRE(out.geom.origin == g.origin);

  // Exact-ratio extents do not gain a phantom slice.
  g.dims = {30, 30, 30};
  g.spacing = {0.1, 0.1, 0.1};
  Volume v2 = make_volume(g, 1.0f);
  Volume out2 = resample_isotropic(v2, 1.0, Interpolation::Trilinear);
  REQUIRE(out2.geom.dims == std::array<std::int64_t, 3>{3, 3, 3});
}

TEST_CASE("trilinear resampling reproduces affine fields exactly") {
  GridGeometry g;
  g.dims = {9, 9, 9};
  g.spacing = {2.0, 2.0, 2.0};
  Volume v = make_volume(g);
  for (std::int64_t z = 0; z < 9; ++z)
    for (std::int64_t y = 0; y < 9; ++y)
      for (std::int64_t x = 0; x < 9; ++x)
        v.at(x, y, z) = static_cast<float>(3.0 + 2.0 * x + 0.5 * y - z);
  Volume out = resample_isotropic(v, 1.0, Interpolation::Trilinear);
  REQUIRE(out.geom.dims == std::array<std::int64_t, 3>{18, 18, 18});
  for (std::int64_t z = 0; z < 17; ++z)  // stay inside the clamp hull
    for (std::int64_t y = 0; y < 17; ++y)
      for (std::int64_t x = 0; x < 17; ++x) {
        const double want = 3.0 + 2.0 * (x * 0.5) + 0.5 * (y * 0.5) - z * 0.5;
        REQUIRE(std::abs(out.at(x, y, z) - want) < 1e-4);
      }
}

TEST_CASE("constant volumes stay constant under resampling") {
  GridGeometry g;
  g.dims = {7, 5, 3};
  g.spacing = {0.7, 1.3, 3.1};
  Volume v = make_volume(g, 55.0f);
  Volume out = resample_isotropic(v, 1.0, Interpolation::Trilinear);
  for (float x : out.voxels) REQUIRE(x == 55.0f);
}

TEST_CASE("mask resampling keeps labels binary and shapes sensible") {
  GridGeometry g;
  g.dims = {20, 20, 8};
  g.spacing = {0.5, 0.5, 2.5};
  Mask m = make_mask(g);
  // Physical box x in [2,5), y in [2,5), z in [0,20) mm.
  for (std::int64_t z = 0; z < 8; ++z)
    for (std::int64_t y = 4; y < 10; ++y)
      for (std::int64_t x = 4; x < 10; ++x) m.set(x, y, z, true);
  Mask out = resample_isotropic(m, 1.0);
  REQUIRE(out.geom.dims == std::array<std::int64_t, 3>{10, 10, 20});
  for (std::uint8_t v : out.voxels) REQUIRE((v == 0 || v == 1));
  // Nearest sampling of an axis-aligned box stays a box of the right size.
  REQUIRE(out.at(3, 3, 5));
  REQUIRE_FALSE(out.at(8, 8, 5));
  REQUIRE(out.foreground_count() == 3 * 3 * 20);
}

TEST_CASE("geometry compatibility tolerances") {
  GridGeometry a;
  a.dims = {4, 4, 4};
  GridGeometry b = a;
  REQUIRE(geometry_compatible(a, b));
  b.origin[0] = 5e-4;  // under the 1e-3 mm gate
  REQUIRE(geometry_compatible(a, b));
  b.origin[0] = 2e-3;
  REQUIRE_FALSE(geometry_compatible(a, b));
  b = a;
  b.spacing[1] = 1.0 + 1e-5;
  REQUIRE_FALSE(geometry_compatible(a, b));
  b = a;
  b.dims[2] = 5;
  REQUIRE_FALSE(geometry_compatible(a, b));
}
