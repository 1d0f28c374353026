#pragma once

// Binary morphology on voxel grids.
//
// The structuring element is the 3-D diamond: a voxel plus its six face
// neighbors. Everything outside the grid counts as background, so erosion
// always peels the grid border and a border foreground voxel has distance 1.
//
// Iterated erosion is never computed by actually iterating: one city-block
// distance transform d gives every iterate at once through the identity
//   erode^k(m) == { v : d(v) > k }.
// The distance transform is the exact two-pass forward/backward sweep
// (three causal neighbors per pass), which is exact for the city-block
// metric. Single-step erode() below is the direct neighbor-check definition
// and serves as the independent cross-check in the tests.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <vector>

#include "alarm/types.hpp"

namespace alarmkit {

// Diamond structuring element: center + 6 face neighbors, symmetric.
struct StructuringElement {
  std::array<std::array<int, 3>, 7> offsets;
};

inline constexpr StructuringElement diamond_element() {
  return {{{{{0, 0, 0}},
            {{-1, 0, 0}},
            {{1, 0, 0}},
            {{0, -1, 0}},
            {{0, 1, 0}},
            {{0, 0, -1}},
            {{0, 0, 1}}}}};
}

// One erosion step: a voxel survives iff it and all six face neighbors are
// foreground (out-of-grid counts as background).
inline Mask erode(const Mask& m) {
  Mask out = m;
  const auto& d = m.geom.dims;
  for (std::int64_t z = 0; z < d[2]; ++z) {
    for (std::int64_t y = 0; y < d[1]; ++y) {
      for (std::int64_t x = 0; x < d[0]; ++x) {
        if (!m.at(x, y, z)) continue;
        bool keep = x > 0 && x + 1 < d[0] && y > 0 && y + 1 < d[1] && z > 0 &&
                    z + 1 < d[2] && m.at(x - 1, y, z) && m.at(x + 1, y, z) &&
                    m.at(x, y - 1, z) && m.at(x, y + 1, z) &&
                    m.at(x, y, z - 1) && m.at(x, y, z + 1);
        if (!keep) out.set(x, y, z, false);
      }
    }
  }
  return out;
}

// Exact city-block distance to the nearest background voxel (grid exterior
// included). Background voxels get 0.
inline DistanceMap distance_transform(const Mask& m) {
  DistanceMap dm;
  dm.geom = m.geom;
  const auto& dims = m.geom.dims;
  const std::int64_t nx = dims[0], ny = dims[1], nz = dims[2];
  const std::int32_t inf =
      static_cast<std::int32_t>(std::min<std::int64_t>(
          nx + ny + nz + 3, std::numeric_limits<std::int32_t>::max() / 2));
  dm.d.resize(m.voxels.size());
  for (std::size_t i = 0; i < m.voxels.size(); ++i)
    dm.d[i] = m.voxels[i] ? inf : 0;

  auto idx = [&](std::int64_t x, std::int64_t y, std::int64_t z) {
    return static_cast<std::size_t>(x + nx * (y + ny * z));
  };

  // Forward sweep: causal neighbors (x-1, y-1, z-1); a missing neighbor is
  // exterior background, i.e. distance 0.
  for (std::int64_t z = 0; z < nz; ++z) {
    for (std::int64_t y = 0; y < ny; ++y) {
      for (std::int64_t x = 0; x < nx; ++x) {
        std::int32_t& v = dm.d[idx(x, y, z)];
        if (v == 0) continue;
        std::int32_t best = x > 0 ? dm.d[idx(x - 1, y, z)] : 0;
        best = std::min(best, y > 0 ? dm.d[idx(x, y - 1, z)] : 0);
        best = std::min(best, z > 0 ? dm.d[idx(x, y, z - 1)] : 0);
        v = std::min(v, best + 1);
      }
    }
  }
  // Backward sweep: causal neighbors (x+1, y+1, z+1).
  for (std::int64_t z = nz - 1; z >= 0; --z) {
    for (std::int64_t y = ny - 1; y >= 0; --y) {
      for (std::int64_t x = nx - 1; x >= 0; --x) {
        std::int32_t& v = dm.d[idx(x, y, z)];
        if (v == 0) continue;
        std::int32_t best = x + 1 < nx ? dm.d[idx(x + 1, y, z)] : 0;
        best = std::min(best, y + 1 < ny ? dm.d[idx(x, y + 1, z)] : 0);
        best = std::min(best, z + 1 < nz ? dm.d[idx(x, y, z + 1)] : 0);
        v = std::min(v, best + 1);
      }
    }
  }
  return dm;
}

inline Mask threshold_distance(const DistanceMap& dm, std::int32_t k) {
  Mask out;
  out.geom = dm.geom;
  out.voxels.resize(dm.d.size());
  for (std::size_t i = 0; i < dm.d.size(); ++i)
    out.voxels[i] = dm.d[i] > k ? 1 : 0;
  return out;
}

struct ErodeToVolumeResult {
  Mask mask;
  std::int64_t iterations = 0;     // erosion steps the result corresponds to
  double volume_mm3 = 0.0;         // volume of the returned region
  bool degeneracy_warning = false; // true when the target undershoots and the
                                   // previous iterate was returned instead
};

// Erode until the remaining volume is <= threshold_mm3. If the first iterate
// at or under the threshold is empty, back off one step and warn instead of
// returning nothing.
inline ErodeToVolumeResult erode_to_volume(const Mask& m,
                                           double threshold_mm3) {
  if (!(threshold_mm3 > 0.0))
    fail(ErrorCode::InvalidConfig, "volume threshold must be positive");
  const double voxel = m.geom.voxel_volume_mm3();
  DistanceMap dm = distance_transform(m);

  std::int32_t max_d = 0;
  for (std::int32_t v : dm.d) max_d = std::max(max_d, v);
  if (max_d == 0) fail(ErrorCode::EmptyMask, "mask has no foreground");

  // survivors[k] = number of voxels with d > k  (= |erode^k(m)|).
  std::vector<std::int64_t> hist(static_cast<std::size_t>(max_d) + 1, 0);
  for (std::int32_t v : dm.d) ++hist[static_cast<std::size_t>(v)];
  std::vector<std::int64_t> survivors(static_cast<std::size_t>(max_d) + 1, 0);
  std::int64_t acc = 0;
  for (std::int32_t k = max_d; k >= 0; --k) {
    acc += hist[static_cast<std::size_t>(k)];
    if (k > 0) survivors[static_cast<std::size_t>(k - 1)] = acc;
  }
  // survivors[k] counts d > k; survivors[max_d] == 0 by construction, and
  // survivors[0] is the initial foreground count.
  if (static_cast<double>(survivors[0]) * voxel <= threshold_mm3)
    fail(ErrorCode::TooSmall,
         "mask volume is already at or under the volume threshold");

  std::int32_t k = 0;
  while (k < max_d &&
         static_cast<double>(survivors[static_cast<std::size_t>(k)]) * voxel >
             threshold_mm3)
    ++k;

  ErodeToVolumeResult r;
  if (survivors[static_cast<std::size_t>(k)] == 0) {
    // The step that reached the target removed everything; report the last
    // non-empty iterate.
    r.degeneracy_warning = true;
    --k;
  }
  r.iterations = k;
  r.mask = threshold_distance(dm, k);
  r.volume_mm3 =
      static_cast<double>(survivors[static_cast<std::size_t>(k)]) * voxel;
  return r;
}

// The set that survives the longest: all voxels at maximum distance from
// background. Equals the final non-empty iterate of repeated erosion.
inline Mask erosion_core(const Mask& m) {
  DistanceMap dm = distance_transform(m);
  std::int32_t max_d = 0;
  for (std::int32_t v : dm.d) max_d = std::max(max_d, v);
  if (max_d == 0) fail(ErrorCode::EmptyMask, "mask has no foreground");
  Mask out;
  out.geom = m.geom;
  out.voxels.resize(dm.d.size());
  for (std::size_t i = 0; i < dm.d.size(); ++i)
    out.voxels[i] = dm.d[i] == max_d ? 1 : 0;
  return out;
}

// Mean foreground index per axis (voxel units of m's grid).
inline Vec3d centroid(const Mask& m) {
  double sx = 0, sy = 0, sz = 0;
  std::int64_t n = 0;
  const auto& d = m.geom.dims;
  for (std::int64_t z = 0; z < d[2]; ++z)
    for (std::int64_t y = 0; y < d[1]; ++y)
      for (std::int64_t x = 0; x < d[0]; ++x)
        if (m.at(x, y, z)) {
          sx += static_cast<double>(x);
          sy += static_cast<double>(y);
          sz += static_cast<double>(z);
          ++n;
        }
  if (n == 0) fail(ErrorCode::EmptyMask, "mask has no foreground");
  const double inv = 1.0 / static_cast<double>(n);
  return {sx * inv, sy * inv, sz * inv};
}

// Keeps the largest 6-connected foreground component. Ties break toward the
// component containing the earliest voxel in storage order, so the result is
// deterministic.
inline Mask largest_component(const Mask& m) {
  const auto& dims = m.geom.dims;
  const std::int64_t nx = dims[0], ny = dims[1], nz = dims[2];
  const std::size_t n = m.voxels.size();
  std::vector<std::int32_t> label(n, 0);
  std::int32_t next_label = 0;
  std::int64_t best_size = 0;
  std::int32_t best_label = 0;

  std::vector<std::int64_t> stack;
  for (std::size_t seed = 0; seed < n; ++seed) {
    if (!m.voxels[seed] || label[seed] != 0) continue;
    ++next_label;
    std::int64_t size = 0;
    stack.clear();
    stack.push_back(static_cast<std::int64_t>(seed));
    label[seed] = next_label;
    while (!stack.empty()) {
      const std::int64_t cur = stack.back();
      stack.pop_back();
      ++size;
      const std::int64_t x = cur % nx;
      const std::int64_t y = (cur / nx) % ny;
      const std::int64_t z = cur / (nx * ny);
      const std::int64_t neigh[6][3] = {{x - 1, y, z}, {x + 1, y, z},
                                        {x, y - 1, z}, {x, y + 1, z},
                                        {x, y, z - 1}, {x, y, z + 1}};
      for (const auto& nb : neigh) {
        if (nb[0] < 0 || nb[0] >= nx || nb[1] < 0 || nb[1] >= ny ||
            nb[2] < 0 || nb[2] >= nz)
          continue;
        const std::size_t ni =
            static_cast<std::size_t>(nb[0] + nx * (nb[1] + ny * nb[2]));
        if (m.voxels[ni] && label[ni] == 0) {
          label[ni] = next_label;
          stack.push_back(static_cast<std::int64_t>(ni));
        }
      }
    }
    // Strictly-greater keeps the first-seeded component on ties.
    if (size > best_size) {
      best_size = size;
      best_label = next_label;
    }
  }
  if (next_label == 0) fail(ErrorCode::EmptyMask, "mask has no foreground");

  Mask out;
  out.geom = m.geom;
  out.voxels.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    out.voxels[i] = label[i] == best_label ? 1 : 0;
  return out;
}

}  // namespace alarmkit
