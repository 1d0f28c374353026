#pragma once

// Slow, independent reference implementations the tests check the library
// against. Everything here is written from the definitions directly --
// per-voxel neighborhood checks and breadth-first search -- and shares no
// code with the implementations under test.

#include <array>
#include <cstdint>
#include <deque>
#include <random>
#include <vector>

#include "alarm/types.hpp"

namespace oracle {

// Diamond-kernel erosion straight from the definition: a voxel survives iff
// it and all six face neighbors are foreground (out-of-grid = background).
inline alarmkit::Mask erode_naive(const alarmkit::Mask& m) {
  static const int off[7][3] = {{0, 0, 0}, {1, 0, 0},  {-1, 0, 0}, {0, 1, 0},
                                {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  alarmkit::Mask out = m;
  const auto& d = m.geom.dims;
  for (std::int64_t z = 0; z < d[2]; ++z)
    for (std::int64_t y = 0; y < d[1]; ++y)
      for (std::int64_t x = 0; x < d[0]; ++x) {
        bool keep = true;
        for (const auto& o : off) {
          const std::int64_t nx = x + o[0], ny = y + o[1], nz = z + o[2];
          if (!m.geom.in_bounds(nx, ny, nz) || !m.at(nx, ny, nz)) {
            keep = false;
            break;
          }
        }
        out.set(x, y, z, keep);
      }
  return out;
}

inline alarmkit::Mask erode_naive_k(alarmkit::Mask m, int k) {
  for (int i = 0; i < k; ++i) m = erode_naive(m);
  return m;
}

// City-block distance to background via plain breadth-first search. The
// frontier starts at every foreground voxel touching background or the grid
// edge (d = 1) and grows one unit-cost layer at a time.
inline std::vector<std::int32_t> distance_bfs(const alarmkit::Mask& m) {
  const auto& d = m.geom.dims;
  std::vector<std::int32_t> dist(m.voxels.size(), 0);
  std::deque<std::array<std::int64_t, 3>> q;
  static const int off[6][3] = {{1, 0, 0},  {-1, 0, 0}, {0, 1, 0},
                                {0, -1, 0}, {0, 0, 1},  {0, 0, -1}};
  for (std::int64_t z = 0; z < d[2]; ++z)
    for (std::int64_t y = 0; y < d[1]; ++y)
      for (std::int64_t x = 0; x < d[0]; ++x) {
        if (!m.at(x, y, z)) continue;
        bool boundary = false;
        for (const auto& o : off) {
          const std::int64_t nx = x + o[0], ny = y + o[1], nz = z + o[2];
          if (!m.geom.in_bounds(nx, ny, nz) || !m.at(nx, ny, nz)) {
            boundary = true;
            break;
          }
        }
        if (boundary) {
          dist[static_cast<std::size_t>(m.geom.index(x, y, z))] = 1;
          q.push_back({x, y, z});
        }
      }
  while (!q.empty()) {
    const auto [x, y, z] = q.front();
    q.pop_front();
    const std::int32_t dv =
        dist[static_cast<std::size_t>(m.geom.index(x, y, z))];
    for (const auto& o : off) {
      const std::int64_t nx = x + o[0], ny = y + o[1], nz = z + o[2];
      if (!m.geom.in_bounds(nx, ny, nz) || !m.at(nx, ny, nz)) continue;
      auto& dn = dist[static_cast<std::size_t>(m.geom.index(nx, ny, nz))];
      if (dn == 0) {
        dn = dv + 1;
        q.push_back({nx, ny, nz});
      }
    }
  }
  return dist;
}

// 6-connected component sizes by flood fill; returns the component mask that
// is strictly largest, breaking ties toward the earliest seed in storage
// order.
inline alarmkit::Mask largest_component_naive(const alarmkit::Mask& m) {
  const auto& d = m.geom.dims;
  std::vector<std::int32_t> label(m.voxels.size(), 0);
  std::int32_t next = 0, best_label = 0;
  std::int64_t best_size = 0;
  static const int off[6][3] = {{1, 0, 0},  {-1, 0, 0}, {0, 1, 0},
                                {0, -1, 0}, {0, 0, 1},  {0, 0, -1}};
  for (std::int64_t z = 0; z < d[2]; ++z)
    for (std::int64_t y = 0; y < d[1]; ++y)
      for (std::int64_t x = 0; x < d[0]; ++x) {
        const std::size_t i = static_cast<std::size_t>(m.geom.index(x, y, z));
        if (!m.voxels[i] || label[i]) continue;
        ++next;
        std::int64_t size = 0;
        std::deque<std::array<std::int64_t, 3>> q{{x, y, z}};
        label[i] = next;
        while (!q.empty()) {
          const auto [cx, cy, cz] = q.front();
          q.pop_front();
          ++size;
          for (const auto& o : off) {
            const std::int64_t nx = cx + o[0], ny = cy + o[1], nz = cz + o[2];
            if (!m.geom.in_bounds(nx, ny, nz) || !m.at(nx, ny, nz)) continue;
            auto& ln =
                label[static_cast<std::size_t>(m.geom.index(nx, ny, nz))];
            if (!ln) {
              ln = next;
              q.push_back({nx, ny, nz});
            }
          }
        }
        if (size > best_size) {
          best_size = size;
          best_label = next;
        }
      }
  alarmkit::Mask out = m;
  for (std::size_t i = 0; i < out.voxels.size(); ++i)
    out.voxels[i] = (label[i] == best_label) ? 1 : 0;
  return out;
}

// Random blob mask: union of a few Euclidean balls, for property tests.
inline alarmkit::Mask random_blob_mask(const alarmkit::GridGeometry& g,
                                    std::uint32_t seed) {
  std::mt19937 rng(seed);
  alarmkit::Mask m = alarmkit::make_mask(g);
  std::uniform_int_distribution<int> n_balls(2, 5);
  std::uniform_real_distribution<double> cpos(4.0, 27.0);
  std::uniform_real_distribution<double> rad(3.0, 9.0);
  const int nb = n_balls(rng);
  for (int b = 0; b < nb; ++b) {
    const double cx = cpos(rng), cy = cpos(rng), cz = cpos(rng), r = rad(rng);
    for (std::int64_t z = 0; z < g.dims[2]; ++z)
      for (std::int64_t y = 0; y < g.dims[1]; ++y)
        for (std::int64_t x = 0; x < g.dims[0]; ++x) {
          const double dx = static_cast<double>(x) - cx;
          const double dy = static_cast<double>(y) - cy;
          const double dz = static_cast<double>(z) - cz;
          if (dx * dx + dy * dy + dz * dz <= r * r) m.set(x, y, z, true);
        }
  }
  return m;
}

}  // namespace oracle
