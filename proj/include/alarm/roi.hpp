#pragma once

// Liver attenuation measurement.
//
// Two regions are read off a liver mask that has been resampled to 1 mm
// isotropic:
//
//  center-ROI   erode the mask with the diamond element until the surviving
//               region is at most volume_threshold_mm3 (default 1000 mm^3
//               = 1 mL); mean HU over that region.
//
//  periphery-ROI  continue eroding to exhaustion; the last surviving voxels
//               (the erosion core) mark the deep interior. From the core
//               centroid, cast three rays on the axial slice through it:
//               posterior (+y), patient-right/lateral (-x) and anterior
//               (-y) in LPS, each ending at the last mask voxel along the
//               ray. Three circles (default radius 7 mm) are then placed on
//               the segments between centroid and boundary: the posterior
//               circle alpha of the way out, the lateral and anterior
//               circles 1-alpha of the way out (alpha defaults to 1/3).
//               Circles are NOT clipped to the mask; the fraction of circle
//               voxels outside the liver is reported as a QA metric.
//               Periphery attenuation is the mean of the three circle means.
//
// A measurement is positive for steatosis when its mean HU falls strictly
// below hu_cutoff (default 40 HU).

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "alarm/agree.hpp"
#include "alarm/morph.hpp"
#include "alarm/resample.hpp"
#include "alarm/types.hpp"

namespace alarmkit {

struct RoiConfig {
  double alpha = 1.0 / 3.0;            // fractional position along each ray
  double circle_radius_mm = 7.0;       // periphery circle radius
  double volume_threshold_mm3 = 1000.0;  // center-ROI stopping volume (1 mL)
  double hu_cutoff = 40.0;             // steatosis cut point
};

inline void validate(const RoiConfig& c) {
  if (!(c.alpha > 0.0) || !(c.alpha < 1.0))
    fail(ErrorCode::InvalidConfig, "alpha must lie strictly between 0 and 1");
  if (!(c.circle_radius_mm > 0.0))
    fail(ErrorCode::InvalidConfig, "circle radius must be positive");
  if (!(c.volume_threshold_mm3 > 0.0))
    fail(ErrorCode::InvalidConfig, "volume threshold must be positive");
  if (!std::isfinite(c.hu_cutoff))
    fail(ErrorCode::InvalidConfig, "HU cutoff must be finite");
}

// Working resolution of the measurement stages.
inline constexpr double kIsoSpacingMm = 1.0;

namespace roi_detail {

inline void require_isotropic_pair(const GridGeometry& a,
                                   const GridGeometry& b) {
  if (!geometry_compatible(a, b))
    fail(ErrorCode::GeometryMismatch,
         "volume and mask must share one grid (dims, spacing, origin)");
  if (std::abs(a.spacing[0] - a.spacing[1]) > 1e-6 ||
      std::abs(a.spacing[0] - a.spacing[2]) > 1e-6)
    fail(ErrorCode::InvalidSpacing,
         "measurement stages need an isotropic grid");
}

inline double mean_over_region(const Volume& v, const Mask& region) {
  double sum = 0.0;
  std::int64_t n = 0;
  for (std::size_t i = 0; i < region.voxels.size(); ++i) {
    if (region.voxels[i]) {
      sum += v.voxels[i];
      ++n;
    }
  }
  if (n == 0) fail(ErrorCode::EmptyMask, "region has no voxels");
  return sum / static_cast<double>(n);
}

}  // namespace roi_detail

struct CenterRoi {
  double mean_hu = 0.0;
  double volume_mm3 = 0.0;
  std::int64_t erosion_iterations = 0;
  bool degeneracy_warning = false;
  Mask region;  // on the measurement grid
};

inline CenterRoi measure_center(const Volume& v, const Mask& m,
                                const RoiConfig& cfg) {
  validate(cfg);
  roi_detail::require_isotropic_pair(v.geom, m.geom);
  ErodeToVolumeResult er = erode_to_volume(m, cfg.volume_threshold_mm3);
  CenterRoi out;
  out.mean_hu = roi_detail::mean_over_region(v, er.mask);
  out.volume_mm3 = er.volume_mm3;
  out.erosion_iterations = er.iterations;
  out.degeneracy_warning = er.degeneracy_warning;
  out.region = std::move(er.mask);
  return out;
}

// Circle placement on the centroid-to-boundary segments. Pure arithmetic,
// exposed so the geometry can be checked against the closed form directly.
inline std::array<Vec3d, 3> periphery_centers(const Vec3d& c,
                                              double y_posterior,
                                              double x_lateral,
                                              double y_anterior,
                                              double alpha) {
  const Vec3d posterior{c.x, c.y - (c.y - y_posterior) * alpha, c.z};
  const Vec3d lateral{c.x - (c.x - x_lateral) * (1.0 - alpha), c.y, c.z};
  const Vec3d anterior{c.x, c.y + (y_anterior - c.y) * (1.0 - alpha), c.z};
  return {posterior, lateral, anterior};
}

struct PeripheryGeometry {
  Vec3d core_centroid;                   // voxel coords on the 1 mm grid
  std::int64_t z_slice = 0;              // axial slice of the measurements
  std::int64_t ray_start_x = 0;          // rounded centroid, ray origin
  std::int64_t ray_start_y = 0;
  std::int64_t boundary_posterior_y = 0; // last mask voxel along +y
  std::int64_t boundary_lateral_x = 0;   // last mask voxel along -x
  std::int64_t boundary_anterior_y = 0;  // last mask voxel along -y
  std::array<Vec3d, 3> circle_centers;   // posterior, lateral, anterior
};

inline PeripheryGeometry locate_periphery_geometry(const Mask& m,
                                                   const RoiConfig& cfg) {
  validate(cfg);
  ErodeToVolumeResult center = erode_to_volume(m, cfg.volume_threshold_mm3);
  Mask core = erosion_core(center.mask);

  PeripheryGeometry g;
  g.core_centroid = centroid(core);
  g.z_slice = std::llround(g.core_centroid.z);
  g.ray_start_x = std::llround(g.core_centroid.x);
  g.ray_start_y = std::llround(g.core_centroid.y);

  const std::int64_t z = g.z_slice;
  const std::int64_t sx = g.ray_start_x, sy = g.ray_start_y;
  if (!m.geom.in_bounds(sx, sy, z) || !m.at(sx, sy, z))
    fail(ErrorCode::RayEscaped,
         "ray origin is not inside the mask on the core slice");

  // Last foreground voxel along each ray, scanning all the way to the grid
  // edge so concave boundaries resolve to the outermost crossing.
  std::int64_t y_post = sy;
  for (std::int64_t y = sy; y < m.geom.dims[1]; ++y)
    if (m.at(sx, y, z)) y_post = y;
  std::int64_t x_lat = sx;
  for (std::int64_t x = sx; x >= 0; --x)
    if (m.at(x, sy, z)) x_lat = x;
  std::int64_t y_ant = sy;
  for (std::int64_t y = sy; y >= 0; --y)
    if (m.at(sx, y, z)) y_ant = y;

  if (y_post == sy)
    fail(ErrorCode::DegenerateRay, "posterior boundary coincides with the ray origin");
  if (x_lat == sx)
    fail(ErrorCode::DegenerateRay, "lateral boundary coincides with the ray origin");
  if (y_ant == sy)
    fail(ErrorCode::DegenerateRay, "anterior boundary coincides with the ray origin");

  g.boundary_posterior_y = y_post;
  g.boundary_lateral_x = x_lat;
  g.boundary_anterior_y = y_ant;
  g.circle_centers = periphery_centers(
      g.core_centroid, static_cast<double>(y_post), static_cast<double>(x_lat),
      static_cast<double>(y_ant), cfg.alpha);
  return g;
}

struct CircleMeasure {
  double mean_hu = 0.0;
  double outside_liver_fraction = 0.0;  // QA: circle voxels not in the mask
  std::int64_t voxel_count = 0;
};

// Mean HU over the digital disc of the given radius centered at (cx, cy)
// on slice z. The disc is not clipped to the mask; voxels outside the mask
// count toward outside_liver_fraction instead.
inline CircleMeasure measure_circle(const Volume& v, const Mask& m, double cx,
                                    double cy, std::int64_t z,
                                    double radius_mm) {
  roi_detail::require_isotropic_pair(v.geom, m.geom);
  if (z < 0 || z >= v.geom.dims[2])
    fail(ErrorCode::SliceOutOfRange, "circle slice outside the grid");
  if (!(radius_mm > 0.0))
    fail(ErrorCode::InvalidConfig, "circle radius must be positive");

  const double r = radius_mm / v.geom.spacing[0];  // radius in voxel units
  const std::int64_t x0 =
      std::max<std::int64_t>(0, static_cast<std::int64_t>(std::ceil(cx - r)));
  const std::int64_t x1 = std::min<std::int64_t>(
      v.geom.dims[0] - 1, static_cast<std::int64_t>(std::floor(cx + r)));
  const std::int64_t y0 =
      std::max<std::int64_t>(0, static_cast<std::int64_t>(std::ceil(cy - r)));
  const std::int64_t y1 = std::min<std::int64_t>(
      v.geom.dims[1] - 1, static_cast<std::int64_t>(std::floor(cy + r)));

  CircleMeasure out;
  double sum = 0.0;
  std::int64_t outside = 0;
  const double r2 = r * r;
  for (std::int64_t y = y0; y <= y1; ++y) {
    for (std::int64_t x = x0; x <= x1; ++x) {
      const double dx = static_cast<double>(x) - cx;
      const double dy = static_cast<double>(y) - cy;
      if (dx * dx + dy * dy > r2) continue;
      sum += v.at(x, y, z);
      outside += m.at(x, y, z) ? 0 : 1;
      ++out.voxel_count;
    }
  }
  if (out.voxel_count == 0)
    fail(ErrorCode::EmptyCircle, "circle contains no voxel centers");
  out.mean_hu = sum / static_cast<double>(out.voxel_count);
  out.outside_liver_fraction =
      static_cast<double>(outside) / static_cast<double>(out.voxel_count);
  return out;
}

struct MeasureProvenance {
  std::string volume_path;
  std::string mask_path;   // empty when the mask was computed, not loaded
  std::string segmenter;   // mask_file / threshold / external
};

struct MeasurementReport {
  RoiConfig config;
  MeasureProvenance provenance;
  CenterRoi center_roi;
  PeripheryGeometry periphery_geometry;
  std::array<CircleMeasure, 3> circles;  // posterior, lateral, anterior
  double mean_of_three_hu = 0.0;
  double whole_liver_mean_hu = 0.0;
  bool nafld_center = false;
  bool nafld_periphery = false;
  // In-plane outline of the center-ROI cross-section on the periphery
  // slice, for overlay rendering: (x, y) pairs in storage order.
  std::vector<std::array<std::int64_t, 2>> center_outline_xy;
};

namespace roi_detail {

// Boundary pixels of region's z-slice: foreground with a 4-neighbor (or
// grid edge) outside the region on the same slice.
inline std::vector<std::array<std::int64_t, 2>> slice_outline(
    const Mask& region, std::int64_t z) {
  std::vector<std::array<std::int64_t, 2>> out;
  if (z < 0 || z >= region.geom.dims[2]) return out;
  const std::int64_t nx = region.geom.dims[0], ny = region.geom.dims[1];
  for (std::int64_t y = 0; y < ny; ++y) {
    for (std::int64_t x = 0; x < nx; ++x) {
      if (!region.at(x, y, z)) continue;
      const bool edge = x == 0 || x + 1 == nx || y == 0 || y + 1 == ny ||
                        !region.at(x - 1, y, z) || !region.at(x + 1, y, z) ||
                        !region.at(x, y - 1, z) || !region.at(x, y + 1, z);
      if (edge) out.push_back({x, y});
    }
  }
  return out;
}

template <typename Fn>
auto stage(const char* name, Fn&& fn) {
  try {
    return fn();
  } catch (Error& e) {
    if (e.stage().empty()) e.set_stage(name);
    throw;
  }
}

}  // namespace roi_detail

// Full measurement on native-resolution inputs: resamples to 1 mm isotropic,
// cleans the mask to its largest component, then reads both ROIs, the
// whole-liver mean and the steatosis flags.
inline MeasurementReport measure(const Volume& v, const Mask& m,
                                 const RoiConfig& cfg,
                                 const MeasureProvenance& prov = {}) {
  using roi_detail::stage;
  validate(cfg);

  stage("input", [&] {
    if (!geometry_compatible(v.geom, m.geom))
      fail(ErrorCode::GeometryMismatch,
           "volume and mask must share one grid (dims, spacing, origin)");
    return 0;
  });

  Volume v1 = stage("resample", [&] {
    return resample_isotropic(v, kIsoSpacingMm, Interpolation::Trilinear);
  });
  Mask m1 = stage("resample", [&] {
    return resample_isotropic(m, kIsoSpacingMm);
  });
  m1 = stage("cleanup", [&] { return largest_component(m1); });

  MeasurementReport r;
  r.config = cfg;
  r.provenance = prov;

  r.center_roi =
      stage("center_roi", [&] { return measure_center(v1, m1, cfg); });

  r.periphery_geometry =
      stage("periphery", [&] { return locate_periphery_geometry(m1, cfg); });
  for (int i = 0; i < 3; ++i) {
    const Vec3d& c = r.periphery_geometry.circle_centers[static_cast<std::size_t>(i)];
    r.circles[static_cast<std::size_t>(i)] = stage("periphery", [&] {
      return measure_circle(v1, m1, c.x, c.y, r.periphery_geometry.z_slice,
                            cfg.circle_radius_mm);
    });
  }
  r.mean_of_three_hu =
      (r.circles[0].mean_hu + r.circles[1].mean_hu + r.circles[2].mean_hu) /
      3.0;

  r.whole_liver_mean_hu = stage("whole_liver", [&] {
    return roi_detail::mean_over_region(v1, m1);
  });

  r.nafld_center = classify_steatosis(r.center_roi.mean_hu, cfg.hu_cutoff);
  r.nafld_periphery = classify_steatosis(r.mean_of_three_hu, cfg.hu_cutoff);
  r.center_outline_xy = roi_detail::slice_outline(
      r.center_roi.region, r.periphery_geometry.z_slice);
  return r;
}

}  // namespace alarmkit
