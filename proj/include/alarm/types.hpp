#pragma once

// Core grid types for the liver-attenuation pipeline.
//
// Conventions used throughout:
//  - voxel (x, y, z) is stored at index x + dims[0] * (y + dims[1] * z)
//    (x fastest);
//  - physical position of a voxel center is origin + index * spacing,
//    componentwise, in millimetres;
//  - axes are LPS: +x patient-left, +y posterior, +z superior. Everything
//    on disk is converted to this convention on load.

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace alarmkit {

enum class ErrorCode {
  // file I/O and format
  IoFailure,
  BadMagic,
  UnsupportedDatatype,
  UnsupportedOrientation,
  DimMismatch,
  NonFinite,
  SidecarMismatch,
  InvalidSpacing,
  // segmentation
  EmptySegmentation,
  GeometryMismatch,
  ExternalFailed,
  // morphology / ROI
  EmptyMask,
  TooSmall,
  RayEscaped,
  DegenerateRay,
  EmptyCircle,
  SliceOutOfRange,
  // statistics
  EmptySeries,
  DegenerateSeries,
  UndefinedKappa,
  UndefinedRate,
  IdMismatch,
  // configuration / synthetic data
  InvalidSpec,
  InvalidConfig,
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::UnsupportedDatatype: return "UnsupportedDatatype";
    case ErrorCode::UnsupportedOrientation: return "UnsupportedOrientation";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::SidecarMismatch: return "SidecarMismatch";
    case ErrorCode::InvalidSpacing: return "InvalidSpacing";
    case ErrorCode::EmptySegmentation: return "EmptySegmentation";
    case ErrorCode::GeometryMismatch: return "GeometryMismatch";
    case ErrorCode::ExternalFailed: return "ExternalFailed";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::TooSmall: return "TooSmall";
    case ErrorCode::RayEscaped: return "RayEscaped";
    case ErrorCode::DegenerateRay: return "DegenerateRay";
    case ErrorCode::EmptyCircle: return "EmptyCircle";
    case ErrorCode::SliceOutOfRange: return "SliceOutOfRange";
    case ErrorCode::EmptySeries: return "EmptySeries";
    case ErrorCode::DegenerateSeries: return "DegenerateSeries";
    case ErrorCode::UndefinedKappa: return "UndefinedKappa";
    case ErrorCode::UndefinedRate: return "UndefinedRate";
    case ErrorCode::IdMismatch: return "IdMismatch";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

// Pipeline error. `stage` is filled in where the pipeline knows which phase
// it is running (load / segment / resample / center_roi / ...), so the CLI
// can report "error [stage] Code: message".
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}
  Error(ErrorCode code, std::string stage, std::string message)
      : std::runtime_error(std::move(message)), code_(code),
        stage_(std::move(stage)) {}

  ErrorCode code() const { return code_; }
  const std::string& stage() const { return stage_; }
  void set_stage(const std::string& s) { stage_ = s; }

 private:
  ErrorCode code_;
  std::string stage_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

struct Vec3d {
  double x = 0.0, y = 0.0, z = 0.0;
};

inline Vec3d operator+(const Vec3d& a, const Vec3d& b) {
  return {a.x + b.x, a.y + b.y, a.z + b.z};
}
inline Vec3d operator-(const Vec3d& a, const Vec3d& b) {
  return {a.x - b.x, a.y - b.y, a.z - b.z};
}
inline Vec3d operator*(const Vec3d& a, double s) {
  return {a.x * s, a.y * s, a.z * s};
}
inline double dot(const Vec3d& a, const Vec3d& b) {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}
inline double norm(const Vec3d& a) { return std::sqrt(dot(a, a)); }

// Axis convention marker. Only LPS exists internally; the field is kept so
// the raw-format sidecar can state it explicitly.
enum class AxisConvention { LPS };

struct GridGeometry {
  std::array<std::int64_t, 3> dims{0, 0, 0};
  std::array<double, 3> spacing{1.0, 1.0, 1.0};  // mm
  std::array<double, 3> origin{0.0, 0.0, 0.0};   // mm, LPS
  AxisConvention convention = AxisConvention::LPS;

  std::int64_t voxel_count() const { return dims[0] * dims[1] * dims[2]; }
  double voxel_volume_mm3() const {
    return spacing[0] * spacing[1] * spacing[2];
  }
  bool in_bounds(std::int64_t x, std::int64_t y, std::int64_t z) const {
    return x >= 0 && x < dims[0] && y >= 0 && y < dims[1] && z >= 0 &&
           z < dims[2];
  }
  std::int64_t index(std::int64_t x, std::int64_t y, std::int64_t z) const {
    return x + dims[0] * (y + dims[1] * z);
  }
};

// Paired-grid compatibility: dims must match exactly, spacing to 1e-6 mm,
// origin to 1e-3 mm (grids that disagree on origin are silently shifted
// anatomy; reject rather than measure the wrong tissue).
inline bool geometry_compatible(const GridGeometry& a, const GridGeometry& b) {
  for (int i = 0; i < 3; ++i) {
    if (a.dims[i] != b.dims[i]) return false;
    if (std::abs(a.spacing[i] - b.spacing[i]) > 1e-6) return false;
    if (std::abs(a.origin[i] - b.origin[i]) > 1e-3) return false;
  }
  return true;
}

inline void validate_geometry(const GridGeometry& g) {
  for (int i = 0; i < 3; ++i) {
    if (g.dims[i] <= 0)
      fail(ErrorCode::DimMismatch, "non-positive grid dimension");
    if (!(g.spacing[i] > 0.0) || !std::isfinite(g.spacing[i]))
      fail(ErrorCode::InvalidSpacing, "voxel spacing must be positive");
    if (!std::isfinite(g.origin[i]))
      fail(ErrorCode::NonFinite, "non-finite grid origin");
  }
}

// Scalar field in Hounsfield units, float32 storage, double accumulation.
struct Volume {
  GridGeometry geom;
  std::vector<float> voxels;

  float at(std::int64_t x, std::int64_t y, std::int64_t z) const {
    return voxels[static_cast<std::size_t>(geom.index(x, y, z))];
  }
  float& at(std::int64_t x, std::int64_t y, std::int64_t z) {
    return voxels[static_cast<std::size_t>(geom.index(x, y, z))];
  }
};

// Binary label field sharing Volume's grid conventions; values are 0 or 1.
struct Mask {
  GridGeometry geom;
  std::vector<std::uint8_t> voxels;

  bool at(std::int64_t x, std::int64_t y, std::int64_t z) const {
    return voxels[static_cast<std::size_t>(geom.index(x, y, z))] != 0;
  }
  void set(std::int64_t x, std::int64_t y, std::int64_t z, bool v) {
    voxels[static_cast<std::size_t>(geom.index(x, y, z))] = v ? 1 : 0;
  }
  std::int64_t foreground_count() const {
    std::int64_t n = 0;
    for (std::uint8_t v : voxels) n += (v != 0);
    return n;
  }
  double volume_mm3() const {
    return static_cast<double>(foreground_count()) * geom.voxel_volume_mm3();
  }
};

inline Volume make_volume(const GridGeometry& g, float fill = 0.0f) {
  validate_geometry(g);
  Volume v;
  v.geom = g;
  v.voxels.assign(static_cast<std::size_t>(g.voxel_count()), fill);
  return v;
}

inline Mask make_mask(const GridGeometry& g, bool fill = false) {
  validate_geometry(g);
  Mask m;
  m.geom = g;
  m.voxels.assign(static_cast<std::size_t>(g.voxel_count()), fill ? 1 : 0);
  return m;
}

// City-block distance to background, per voxel. d == 0 on background; the
// grid exterior counts as background, so a foreground voxel on the grid
// border always has d == 1.
struct DistanceMap {
  GridGeometry geom;
  std::vector<std::int32_t> d;

  std::int32_t at(std::int64_t x, std::int64_t y, std::int64_t z) const {
    return d[static_cast<std::size_t>(geom.index(x, y, z))];
  }
};

}  // namespace alarmkit
