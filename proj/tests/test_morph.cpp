#include <catch2/catch_amalgamated.hpp>

#include "alarm/morph.hpp"
#include "oracles.hpp"
#include "testutil.hpp"

using namespace alarmkit;

namespace {

GridGeometry iso_grid(std::int64_t nx, std::int64_t ny, std::int64_t nz) {
  GridGeometry g;
  g.dims = {nx, ny, nz};
  return g;  // 1 mm spacing, origin 0
}

Mask solid_cube(std::int64_t side, std::int64_t pad = 0) {
  Mask m = make_mask(iso_grid(side + 2 * pad, side + 2 * pad, side + 2 * pad));
  for (std::int64_t z = pad; z < pad + side; ++z)
    for (std::int64_t y = pad; y < pad + side; ++y)
      for (std::int64_t x = pad; x < pad + side; ++x) m.set(x, y, z, true);
  return m;
}

}  // namespace

TEST_CASE("single erosion matches the neighborhood definition") {
  for (std::uint32_t seed : {1u, 2u, 3u, 4u}) {
    Mask m = oracle::random_blob_mask(iso_grid(32, 32, 32), seed);
    Mask got = erode(m);
    Mask want = oracle::erode_naive(m);
    REQUIRE(got.voxels == want.voxels);
  }
}

TEST_CASE("grid border erodes like background") {
  // A mask filling the whole grid still loses its outer shell.
  Mask full = solid_cube(6);
  Mask e = erode(full);
  REQUIRE(e.foreground_count() == 4 * 4 * 4);
  for (std::int64_t i = 0; i < 6; ++i) {
    REQUIRE_FALSE(e.at(i, 0, 0));
    REQUIRE_FALSE(e.at(0, i, 5));
  }
  REQUIRE(e.at(1, 1, 1));
}

TEST_CASE("distance transform equals breadth-first search") {
  for (std::uint32_t seed = 10; seed < 20; ++seed) {
    Mask m = oracle::random_blob_mask(iso_grid(32, 32, 32), seed);
    DistanceMap dm = distance_transform(m);
    std::vector<std::int32_t> want = oracle::distance_bfs(m);
    REQUIRE(dm.d == want);
  }
}

TEST_CASE("distance transform basics") {
  Mask cube = solid_cube(5, 2);  // 5^3 cube centered in a 9^3 grid
  DistanceMap dm = distance_transform(cube);
  REQUIRE(dm.at(4, 4, 4) == 3);   // cube center
  REQUIRE(dm.at(2, 2, 2) == 1);   // cube corner
  REQUIRE(dm.at(0, 0, 0) == 0);   // background
  // Border-touching foreground has distance 1.
  Mask full = solid_cube(4);
  DistanceMap dm2 = distance_transform(full);
  REQUIRE(dm2.at(0, 0, 0) == 1);
  REQUIRE(dm2.at(1, 1, 1) == 2);
}

TEST_CASE("distance is 1-Lipschitz across face neighbors") {
  Mask m = oracle::random_blob_mask(iso_grid(32, 32, 32), 77);
  DistanceMap dm = distance_transform(m);
  const auto& d = m.geom.dims;
  for (std::int64_t z = 0; z < d[2]; ++z)
    for (std::int64_t y = 0; y < d[1]; ++y)
      for (std::int64_t x = 0; x + 1 < d[0]; ++x)
        REQUIRE(std::abs(dm.at(x, y, z) - dm.at(x + 1, y, z)) <= 1);
}

TEST_CASE("distance grows pointwise with the mask") {
  Mask small = oracle::random_blob_mask(iso_grid(32, 32, 32), 5);
  Mask big = small;
  // Add one more ball; small stays a subset of big.
  Mask extra = oracle::random_blob_mask(iso_grid(32, 32, 32), 6);
  for (std::size_t i = 0; i < big.voxels.size(); ++i)
    big.voxels[i] = big.voxels[i] || extra.voxels[i];
  DistanceMap ds = distance_transform(small);
  DistanceMap db = distance_transform(big);
  for (std::size_t i = 0; i < ds.d.size(); ++i) REQUIRE(ds.d[i] <= db.d[i]);
}

TEST_CASE("iterated erosion equals distance thresholding at every depth") {
  for (std::uint32_t seed : {21u, 22u, 23u}) {
    Mask m = oracle::random_blob_mask(iso_grid(32, 32, 32), seed);
    DistanceMap dm = distance_transform(m);
    Mask eroded = m;
    std::int32_t k = 0;
    for (;;) {
      Mask want = threshold_distance(dm, k);
      REQUIRE(eroded.voxels == want.voxels);
      if (eroded.foreground_count() == 0) break;
      eroded = erode(eroded);
      ++k;
    }
  }
}

TEST_CASE("erode_to_volume on a 20 mm cube stops at exactly 1 mL") {
  Mask m = solid_cube(20, 2);
  ErodeToVolumeResult r = erode_to_volume(m, 1000.0);
  REQUIRE(r.iterations == 5);  // 20 - 2*5 = 10 per side
  REQUIRE(r.volume_mm3 == 1000.0);
  REQUIRE_FALSE(r.degeneracy_warning);
  REQUIRE(r.mask.foreground_count() == 1000);
  // Survivors form the inner 10^3 cube.
  REQUIRE(r.mask.at(7, 7, 7));
  REQUIRE_FALSE(r.mask.at(6, 7, 7));
}

TEST_CASE("erode_to_volume reaches a single voxel without warning") {
  // Odd cube: the final non-empty erosion iterate has exactly one voxel,
  // which is at or under a 1 mm^3 target, so no degeneracy is involved.
  Mask m = solid_cube(21);
  ErodeToVolumeResult r = erode_to_volume(m, 1.0);
  REQUIRE(r.iterations == 10);
  REQUIRE(r.mask.foreground_count() == 1);
  REQUIRE(r.volume_mm3 == 1.0);
  REQUIRE_FALSE(r.degeneracy_warning);
  REQUIRE(r.mask.at(10, 10, 10));
}

TEST_CASE("erode_to_volume warns when the target would empty the mask") {
  // Even cube: 2^3 = 8 voxels after 9 erosions, empty after 10. A 1 mm^3
  // target is unreachable, so the last non-empty iterate comes back flagged.
  Mask m = solid_cube(20);
  ErodeToVolumeResult r = erode_to_volume(m, 1.0);
  REQUIRE(r.degeneracy_warning);
  REQUIRE(r.iterations == 9);
  REQUIRE(r.mask.foreground_count() == 8);
  REQUIRE(r.volume_mm3 == 8.0);
}

TEST_CASE("erode_to_volume agrees with naive repeated erosion") {
  for (std::uint32_t seed : {31u, 32u, 33u, 34u}) {
    Mask m = oracle::random_blob_mask(iso_grid(32, 32, 32), seed);
    const double threshold = 500.0;
    if (m.volume_mm3() <= threshold) continue;
    ErodeToVolumeResult r = erode_to_volume(m, threshold);
    Mask want = oracle::erode_naive_k(m, static_cast<int>(r.iterations));
    REQUIRE(r.mask.voxels == want.voxels);
    REQUIRE(r.volume_mm3 == want.volume_mm3());
    if (!r.degeneracy_warning) {
      REQUIRE(r.volume_mm3 <= threshold);
      // One fewer erosion was still over the target.
      if (r.iterations > 0)
        REQUIRE(oracle::erode_naive_k(m, static_cast<int>(r.iterations) - 1)
                    .volume_mm3() > threshold);
    } else {
      REQUIRE(r.volume_mm3 > threshold);
      REQUIRE(oracle::erode_naive(r.mask).foreground_count() == 0);
    }
  }
}

TEST_CASE("erode_to_volume respects voxel size") {
  // 10^3 voxels at 2 mm spacing = 8000 mm^3; threshold 1000 mm^3 = 125 vox.
  GridGeometry g = iso_grid(14, 14, 14);
  g.spacing = {2.0, 2.0, 2.0};
  Mask m = make_mask(g);
  for (std::int64_t z = 2; z < 12; ++z)
    for (std::int64_t y = 2; y < 12; ++y)
      for (std::int64_t x = 2; x < 12; ++x) m.set(x, y, z, true);
  ErodeToVolumeResult r = erode_to_volume(m, 1000.0);
  REQUIRE(r.iterations == 3);  // side 10-2*3 = 4, 64 voxels * 8 = 512 mm^3
  REQUIRE(r.volume_mm3 == 512.0);
}

TEST_CASE("erode_to_volume error cases") {
  Mask empty = make_mask(iso_grid(8, 8, 8));
  REQUIRE(testutil::throws_code([&] { erode_to_volume(empty, 100.0); },
                                ErrorCode::EmptyMask));
  Mask tiny = solid_cube(2, 3);
  REQUIRE(testutil::throws_code([&] { erode_to_volume(tiny, 1000.0); },
                                ErrorCode::TooSmall));
  Mask cube = solid_cube(20, 2);
  REQUIRE(testutil::throws_code([&] { erode_to_volume(cube, 0.0); },
                                ErrorCode::InvalidConfig));
  REQUIRE(testutil::throws_code([&] { erode_to_volume(cube, -5.0); },
                                ErrorCode::InvalidConfig));
}

TEST_CASE("erosion core of an odd cube is its center voxel") {
  Mask m = solid_cube(5, 1);
  Mask core = erosion_core(m);
  REQUIRE(core.foreground_count() == 1);
  REQUIRE(core.at(3, 3, 3));
}

TEST_CASE("erosion core of a thin rod is the whole rod") {
  // Every rod voxel touches background in x and y, so all share distance 1.
  Mask m = make_mask(iso_grid(5, 5, 7));
  for (std::int64_t z = 1; z <= 5; ++z) m.set(2, 2, z, true);
  Mask core = erosion_core(m);
  REQUIRE(core.voxels == m.voxels);
}

TEST_CASE("erosion core equals the last non-empty erosion iterate") {
  for (std::uint32_t seed : {41u, 42u}) {
    Mask m = oracle::random_blob_mask(iso_grid(24, 24, 24), seed);
    Mask last = m;
    for (Mask next = oracle::erode_naive(last); next.foreground_count() > 0;
         next = oracle::erode_naive(last))
      last = next;
    Mask core = erosion_core(m);
    REQUIRE(core.voxels == last.voxels);
  }
}

TEST_CASE("centroid of symmetric masks") {
  Mask cube = solid_cube(5, 2);
  Vec3d c = centroid(cube);
  REQUIRE(c.x == 4.0);
  REQUIRE(c.y == 4.0);
  REQUIRE(c.z == 4.0);

  Mask two = make_mask(iso_grid(10, 3, 3));
  two.set(1, 1, 1, true);
  two.set(8, 1, 1, true);
  Vec3d c2 = centroid(two);
  REQUIRE(c2.x == 4.5);
}

TEST_CASE("largest_component keeps the bigger of two blobs") {
  Mask m = make_mask(iso_grid(20, 8, 8));
  for (std::int64_t z = 1; z < 4; ++z)
    for (std::int64_t y = 1; y < 4; ++y)
      for (std::int64_t x = 1; x < 4; ++x) m.set(x, y, z, true);  // 27 vox
  for (std::int64_t z = 1; z < 3; ++z)
    for (std::int64_t y = 1; y < 3; ++y)
      for (std::int64_t x = 12; x < 14; ++x) m.set(x, y, z, true);  // 8 vox
  Mask keep = largest_component(m);
  REQUIRE(keep.foreground_count() == 27);
  REQUIRE(keep.at(2, 2, 2));
  REQUIRE_FALSE(keep.at(12, 1, 1));
}

TEST_CASE("largest_component matches flood-fill oracle, ties included") {
  for (std::uint32_t seed = 50; seed < 58; ++seed) {
    Mask m = oracle::random_blob_mask(iso_grid(24, 24, 24), seed);
    // Punch the blob into pieces with two clearing planes.
    for (std::int64_t z = 0; z < 24; ++z)
      for (std::int64_t y = 0; y < 24; ++y) {
        m.set(11, y, z, false);
        m.set(17, y, z, false);
      }
    if (m.foreground_count() == 0) continue;
    Mask got = largest_component(m);
    Mask want = oracle::largest_component_naive(m);
    REQUIRE(got.voxels == want.voxels);
  }
  // Exact tie: two equal 2^3 blobs; the one seen first in storage order wins.
  Mask m = make_mask(iso_grid(12, 6, 6));
  for (std::int64_t z = 1; z < 3; ++z)
    for (std::int64_t y = 1; y < 3; ++y)
      for (std::int64_t x = 1; x < 3; ++x) {
        m.set(x, y, z, true);
        m.set(x + 7, y, z, true);
      }
  Mask keep = largest_component(m);
  REQUIRE(keep.foreground_count() == 8);
  REQUIRE(keep.at(1, 1, 1));
  REQUIRE_FALSE(keep.at(8, 1, 1));
}

TEST_CASE("diamond element is the center plus six face neighbors") {
  constexpr StructuringElement e = diamond_element();
  REQUIRE(e.offsets.size() == 7);
  int axis_sum = 0;
  for (const auto& o : e.offsets) {
    const int l1 = std::abs(o[0]) + std::abs(o[1]) + std::abs(o[2]);
    REQUIRE(l1 <= 1);
    axis_sum += l1;
  }
  REQUIRE(axis_sum == 6);
}
