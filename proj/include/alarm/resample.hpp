#pragma once

// Isotropic resampling onto a target spacing.
//
// The output grid keeps the input origin; output dims are
// ceil(dims * spacing / target) per axis, so the physical extent is covered.
// Sampling uses clamp-to-edge: coordinates are clamped to the voxel-center
// hull before interpolation. Intensities interpolate trilinearly; masks use
// nearest-neighbor so labels stay binary. When the input spacing already
// equals the target on every axis the op is an exact identity (the per-axis
// scale factors are computed as spacing/target, which is exactly 1.0).

#include <cmath>
#include <cstdint>

#include "alarm/types.hpp"

namespace alarmkit {

enum class Interpolation { Trilinear, Nearest };

namespace resample_detail {

inline std::array<std::int64_t, 3> output_dims(const GridGeometry& g,
                                               double target) {
  std::array<std::int64_t, 3> out{};
  for (int i = 0; i < 3; ++i) {
    // The 1e-9 slack keeps exact ratios (e.g. 30 * 0.1 / 0.1) from being
    // pushed to the next integer by representation noise.
    double exact = static_cast<double>(g.dims[i]) * g.spacing[i] / target;
    out[i] = static_cast<std::int64_t>(std::ceil(exact - 1e-9));
    if (out[i] < 1) out[i] = 1;
  }
  return out;
}

inline GridGeometry output_geometry(const GridGeometry& g, double target) {
  GridGeometry out;
  out.dims = output_dims(g, target);
  out.spacing = {target, target, target};
  out.origin = g.origin;
  return out;
}

}  // namespace resample_detail

inline Volume resample_isotropic(const Volume& v, double target_spacing_mm,
                                 Interpolation interp) {
  if (!(target_spacing_mm > 0.0))
    fail(ErrorCode::InvalidSpacing, "target spacing must be positive");
  validate_geometry(v.geom);

  Volume out;
  out.geom = resample_detail::output_geometry(v.geom, target_spacing_mm);
  out.voxels.resize(static_cast<std::size_t>(out.geom.voxel_count()));

  // Continuous source coordinate of output index j along axis i is
  // j * (target / spacing_i); precompute the per-axis scale.
  double scale[3];
  for (int i = 0; i < 3; ++i) scale[i] = target_spacing_mm / v.geom.spacing[i];

  const std::int64_t nx = v.geom.dims[0], ny = v.geom.dims[1],
                     nz = v.geom.dims[2];
  auto clampd = [](double u, double hi) {
    return u < 0.0 ? 0.0 : (u > hi ? hi : u);
  };

  std::size_t o = 0;
  for (std::int64_t z = 0; z < out.geom.dims[2]; ++z) {
    const double uz = clampd(z * scale[2], static_cast<double>(nz - 1));
    for (std::int64_t y = 0; y < out.geom.dims[1]; ++y) {
      const double uy = clampd(y * scale[1], static_cast<double>(ny - 1));
      for (std::int64_t x = 0; x < out.geom.dims[0]; ++x, ++o) {
        const double ux = clampd(x * scale[0], static_cast<double>(nx - 1));
        if (interp == Interpolation::Nearest) {
          const std::int64_t ix = std::llround(ux);
          const std::int64_t iy = std::llround(uy);
          const std::int64_t iz = std::llround(uz);
          out.voxels[o] = v.at(ix, iy, iz);
          continue;
        }
        const std::int64_t x0 = static_cast<std::int64_t>(ux);
        const std::int64_t y0 = static_cast<std::int64_t>(uy);
        const std::int64_t z0 = static_cast<std::int64_t>(uz);
        const std::int64_t x1 = x0 + 1 < nx ? x0 + 1 : x0;
        const std::int64_t y1 = y0 + 1 < ny ? y0 + 1 : y0;
        const std::int64_t z1 = z0 + 1 < nz ? z0 + 1 : z0;
        const double fx = ux - static_cast<double>(x0);
        const double fy = uy - static_cast<double>(y0);
        const double fz = uz - static_cast<double>(z0);
        const double c00 = v.at(x0, y0, z0) * (1.0 - fx) + v.at(x1, y0, z0) * fx;
        const double c10 = v.at(x0, y1, z0) * (1.0 - fx) + v.at(x1, y1, z0) * fx;
        const double c01 = v.at(x0, y0, z1) * (1.0 - fx) + v.at(x1, y0, z1) * fx;
        const double c11 = v.at(x0, y1, z1) * (1.0 - fx) + v.at(x1, y1, z1) * fx;
        const double c0 = c00 * (1.0 - fy) + c10 * fy;
        const double c1 = c01 * (1.0 - fy) + c11 * fy;
        out.voxels[o] = static_cast<float>(c0 * (1.0 - fz) + c1 * fz);
      }
    }
  }
  return out;
}

// Masks resample nearest-neighbor only; trilinear would manufacture
// fractional labels.
inline Mask resample_isotropic(const Mask& m, double target_spacing_mm) {
  Volume tmp;
  tmp.geom = m.geom;
  tmp.voxels.resize(m.voxels.size());
  for (std::size_t i = 0; i < m.voxels.size(); ++i)
    tmp.voxels[i] = m.voxels[i] ? 1.0f : 0.0f;
  Volume res =
      resample_isotropic(tmp, target_spacing_mm, Interpolation::Nearest);
  Mask out;
  out.geom = res.geom;
  out.voxels.resize(res.voxels.size());
  for (std::size_t i = 0; i < res.voxels.size(); ++i)
    out.voxels[i] = res.voxels[i] != 0.0f ? 1 : 0;
  return out;
}

}  // namespace alarmkit
