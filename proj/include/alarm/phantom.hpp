#pragma once

// Synthetic CT phantoms: an ellipsoidal "liver" in a uniform background,
// optionally threaded with cylindrical "vessels" and Gaussian noise.
//
// Region rule per voxel (evaluated at the voxel center, in mm):
//   outside the ellipsoid          -> background_hu, not in the mask
//   inside, within some cylinder   -> that cylinder's HU, in the mask
//   inside, otherwise              -> liver_hu, in the mask
// Vessels are liver vessels: a cylinder only recolors voxels that are
// already inside the ellipsoid, and those voxels stay part of the mask —
// exactly the contamination the center/periphery comparison is about.
//
// Noise is reproducible by construction: std::mt19937_64 (sequence pinned
// by the standard) feeding an explicitly-coded Box-Muller transform, added
// in storage order. sigma == 0 skips the generator entirely, so noise-free
// phantoms are bit-exact across platforms.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "alarm/types.hpp"

namespace alarmkit {

inline constexpr const char* kNoiseAlgorithm =
    "gaussian-box-muller/mt19937_64/v1";

struct VesselSpec {
  Vec3d from_mm;
  Vec3d to_mm;
  double radius_mm = 0.0;
  double hu = 0.0;
};

struct PhantomSpec {
  std::array<std::int64_t, 3> dims{128, 128, 128};
  std::array<double, 3> spacing_mm{1.0, 1.0, 1.0};
  std::array<double, 3> origin_mm{0.0, 0.0, 0.0};
  double background_hu = -100.0;
  Vec3d liver_center_mm;
  Vec3d liver_semi_axes_mm;
  double liver_hu = 55.0;
  std::vector<VesselSpec> vessels;
  double noise_sigma_hu = 0.0;
  std::uint64_t seed = 0;
};

inline void validate(const PhantomSpec& s) {
  for (int i = 0; i < 3; ++i) {
    if (s.dims[i] <= 0)
      fail(ErrorCode::InvalidSpec, "phantom dims must be positive");
    if (!(s.spacing_mm[i] > 0.0))
      fail(ErrorCode::InvalidSpec, "phantom spacing must be positive");
    if (!std::isfinite(s.origin_mm[i]))
      fail(ErrorCode::InvalidSpec, "phantom origin must be finite");
  }
  if (!(s.liver_semi_axes_mm.x > 0.0) || !(s.liver_semi_axes_mm.y > 0.0) ||
      !(s.liver_semi_axes_mm.z > 0.0))
    fail(ErrorCode::InvalidSpec, "liver semi-axes must be positive");
  if (!std::isfinite(s.background_hu) || !std::isfinite(s.liver_hu))
    fail(ErrorCode::InvalidSpec, "phantom HU values must be finite");
  if (!(s.noise_sigma_hu >= 0.0) || !std::isfinite(s.noise_sigma_hu))
    fail(ErrorCode::InvalidSpec, "noise sigma must be >= 0");
  for (const VesselSpec& v : s.vessels) {
    if (!(v.radius_mm > 0.0))
      fail(ErrorCode::InvalidSpec, "vessel radius must be positive");
    if (!std::isfinite(v.hu))
      fail(ErrorCode::InvalidSpec, "vessel HU must be finite");
    for (const Vec3d* p : {&v.from_mm, &v.to_mm}) {
      const double coords[3] = {p->x, p->y, p->z};
      for (int i = 0; i < 3; ++i) {
        const double lo = s.origin_mm[i];
        const double hi =
            s.origin_mm[i] +
            s.spacing_mm[i] * static_cast<double>(s.dims[i] - 1);
        if (!(coords[i] >= lo && coords[i] <= hi))
          fail(ErrorCode::InvalidSpec,
               "vessel endpoints must lie inside the volume");
      }
    }
  }
}

struct PhantomTruth {
  std::int64_t background_voxels = 0;
  std::int64_t liver_voxels = 0;   // in-mask, not vessel
  std::int64_t vessel_voxels = 0;  // in-mask, recolored by a cylinder
  double mask_volume_mm3 = 0.0;
  double analytic_ellipsoid_mm3 = 0.0;  // (4/3) pi abc, for comparison
  std::string noise_algorithm;          // empty when sigma == 0
};

struct Phantom {
  Volume volume;
  Mask mask;
  PhantomTruth truth;
};

namespace phantom_detail {

// Finite cylinder with flat caps: the point must project onto the axis
// segment and sit within radius of it.
inline bool in_cylinder(const Vec3d& p, const VesselSpec& v) {
  const Vec3d axis = v.to_mm - v.from_mm;
  const double len2 = dot(axis, axis);
  if (len2 == 0.0) return norm(p - v.from_mm) <= v.radius_mm;
  const double t = dot(p - v.from_mm, axis) / len2;
  if (t < 0.0 || t > 1.0) return false;
  const Vec3d foot = v.from_mm + axis * t;
  return norm(p - foot) <= v.radius_mm;
}

class GaussianSource {
 public:
  explicit GaussianSource(std::uint64_t seed) : eng_(seed) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // 53-bit uniforms; u1 is reflected into (0, 1] so the log is finite.
    const double u1 = 1.0 - uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  double uniform01() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace phantom_detail

inline Phantom generate(const PhantomSpec& s) {
  validate(s);
  GridGeometry g;
  g.dims = s.dims;
  g.spacing = s.spacing_mm;
  g.origin = s.origin_mm;

  Phantom out;
  out.volume = make_volume(g);
  out.mask = make_mask(g);
  out.truth.analytic_ellipsoid_mm3 =
      (4.0 / 3.0) * 3.14159265358979323846 * s.liver_semi_axes_mm.x *
      s.liver_semi_axes_mm.y * s.liver_semi_axes_mm.z;

  std::size_t o = 0;
  for (std::int64_t z = 0; z < g.dims[2]; ++z) {
    for (std::int64_t y = 0; y < g.dims[1]; ++y) {
      for (std::int64_t x = 0; x < g.dims[0]; ++x, ++o) {
        const Vec3d p{g.origin[0] + g.spacing[0] * static_cast<double>(x),
                      g.origin[1] + g.spacing[1] * static_cast<double>(y),
                      g.origin[2] + g.spacing[2] * static_cast<double>(z)};
        const Vec3d q = p - s.liver_center_mm;
        const double ex = q.x / s.liver_semi_axes_mm.x;
        const double ey = q.y / s.liver_semi_axes_mm.y;
        const double ez = q.z / s.liver_semi_axes_mm.z;
        if (ex * ex + ey * ey + ez * ez > 1.0) {
          out.volume.voxels[o] = static_cast<float>(s.background_hu);
          ++out.truth.background_voxels;
          continue;
        }
        out.mask.voxels[o] = 1;
        double hu = s.liver_hu;
        bool vessel = false;
        for (const VesselSpec& v : s.vessels) {
          if (phantom_detail::in_cylinder(p, v)) {
            hu = v.hu;
            vessel = true;
            break;
          }
        }
        out.volume.voxels[o] = static_cast<float>(hu);
        if (vessel)
          ++out.truth.vessel_voxels;
        else
          ++out.truth.liver_voxels;
      }
    }
  }
  out.truth.mask_volume_mm3 =
      static_cast<double>(out.truth.liver_voxels + out.truth.vessel_voxels) *
      g.voxel_volume_mm3();

  if (s.noise_sigma_hu > 0.0) {
    out.truth.noise_algorithm = kNoiseAlgorithm;
    phantom_detail::GaussianSource gauss(s.seed);
    for (float& v : out.volume.voxels)
      v = static_cast<float>(v + s.noise_sigma_hu * gauss.next());
  }
  return out;
}

}  // namespace alarmkit
