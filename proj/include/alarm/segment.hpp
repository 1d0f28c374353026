#pragma once

// Liver-mask acquisition. The attenuation pipeline does not care where the
// mask comes from; this module provides the three interchangeable sources:
//
//   MaskFile   load a mask image from disk
//   Threshold  HU window + optional morphological closing (baseline for
//              phantoms and debugging)
//   External   run a user-supplied segmentation command on a temp copy of
//              the volume and read the mask it writes
//
// Every source ends with a largest-connected-component cleanup so stray
// islands never reach the measurement stage; callers record the source in
// the report provenance.

#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "alarm/formats.hpp"
#include "alarm/morph.hpp"
#include "alarm/types.hpp"

namespace alarmkit {

enum class SegmenterSource { MaskFile, Threshold, External };

inline const char* segmenter_source_name(SegmenterSource s) {
  switch (s) {
    case SegmenterSource::MaskFile: return "mask_file";
    case SegmenterSource::Threshold: return "threshold";
    case SegmenterSource::External: return "external";
  }
  return "?";
}

struct SegmenterConfig {
  SegmenterSource source = SegmenterSource::Threshold;
  std::string mask_path;             // MaskFile
  double hu_low = 0.0;               // Threshold window, inclusive
  double hu_high = 100.0;
  double closing_radius_mm = 0.0;    // Threshold: 0 disables closing
  std::string command_template;      // External: must use {input} and {output}
};

inline void validate(const SegmenterConfig& c) {
  switch (c.source) {
    case SegmenterSource::MaskFile:
      if (c.mask_path.empty())
        fail(ErrorCode::InvalidConfig, "mask_file segmenter needs a mask path");
      break;
    case SegmenterSource::Threshold:
      if (!(c.hu_low < c.hu_high))
        fail(ErrorCode::InvalidConfig,
             "threshold segmenter needs hu_low < hu_high");
      if (c.closing_radius_mm < 0.0)
        fail(ErrorCode::InvalidConfig, "closing radius must be >= 0");
      break;
    case SegmenterSource::External:
      if (c.command_template.find("{input}") == std::string::npos ||
          c.command_template.find("{output}") == std::string::npos)
        fail(ErrorCode::InvalidConfig,
             "external segmenter command must contain {input} and {output}");
      break;
  }
}

namespace segment_detail {

inline std::vector<std::array<int, 3>> ball_offsets(
    const std::array<double, 3>& spacing, double radius_mm) {
  std::vector<std::array<int, 3>> offs;
  const int rx = static_cast<int>(radius_mm / spacing[0]);
  const int ry = static_cast<int>(radius_mm / spacing[1]);
  const int rz = static_cast<int>(radius_mm / spacing[2]);
  const double r2 = radius_mm * radius_mm;
  for (int dz = -rz; dz <= rz; ++dz)
    for (int dy = -ry; dy <= ry; ++dy)
      for (int dx = -rx; dx <= rx; ++dx) {
        const double d2 = dx * spacing[0] * dx * spacing[0] +
                          dy * spacing[1] * dy * spacing[1] +
                          dz * spacing[2] * dz * spacing[2];
        if (d2 <= r2) offs.push_back({dx, dy, dz});
      }
  return offs;
}

inline Mask dilate_ball(const Mask& m,
                        const std::vector<std::array<int, 3>>& offs) {
  Mask out = make_mask(m.geom);
  const auto& d = m.geom.dims;
  for (std::int64_t z = 0; z < d[2]; ++z)
    for (std::int64_t y = 0; y < d[1]; ++y)
      for (std::int64_t x = 0; x < d[0]; ++x) {
        if (!m.at(x, y, z)) continue;
        for (const auto& o : offs) {
          const std::int64_t nx = x + o[0], ny = y + o[1], nz = z + o[2];
          if (m.geom.in_bounds(nx, ny, nz)) out.set(nx, ny, nz, true);
        }
      }
  return out;
}

inline Mask erode_ball(const Mask& m,
                       const std::vector<std::array<int, 3>>& offs) {
  Mask out = make_mask(m.geom);
  const auto& d = m.geom.dims;
  for (std::int64_t z = 0; z < d[2]; ++z)
    for (std::int64_t y = 0; y < d[1]; ++y)
      for (std::int64_t x = 0; x < d[0]; ++x) {
        if (!m.at(x, y, z)) continue;
        bool keep = true;
        for (const auto& o : offs) {
          const std::int64_t nx = x + o[0], ny = y + o[1], nz = z + o[2];
          if (!m.geom.in_bounds(nx, ny, nz) || !m.at(nx, ny, nz)) {
            keep = false;
            break;
          }
        }
        if (keep) out.set(x, y, z, true);
      }
  return out;
}

// Unique scratch directory for one external-segmenter run. ALARM_TMPDIR
// overrides the system temp location. Removed on scope exit.
class ScratchDir {
 public:
  ScratchDir() {
    namespace fs = std::filesystem;
    fs::path base;
    if (const char* env = std::getenv("ALARM_TMPDIR"))
      base = env;
    else
      base = fs::temp_directory_path();
    std::random_device rd;
    path_ = base / ("alarm-seg-" + std::to_string(::getpid()) + "-" +
                    std::to_string(rd()));
    std::error_code ec;
    fs::create_directories(path_, ec);
    if (ec)
      fail(ErrorCode::IoFailure,
           "cannot create scratch directory " + path_.string());
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::string substitute(std::string tmpl, const std::string& key,
                              const std::string& value) {
  for (std::string::size_type pos;
       (pos = tmpl.find(key)) != std::string::npos;)
    tmpl.replace(pos, key.size(), value);
  return tmpl;
}

inline Mask cleanup(Mask m) {
  try {
    return largest_component(m);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::EmptyMask)
      fail(ErrorCode::EmptySegmentation, "segmentation produced no foreground");
    throw;
  }
}

}  // namespace segment_detail

inline Mask segment(const Volume& v, const SegmenterConfig& cfg) {
  validate(cfg);
  switch (cfg.source) {
    case SegmenterSource::MaskFile: {
      Mask m = read_mask_auto(cfg.mask_path);
      if (!geometry_compatible(m.geom, v.geom))
        fail(ErrorCode::GeometryMismatch,
             cfg.mask_path + ": mask grid does not match the volume grid");
      return segment_detail::cleanup(std::move(m));
    }
    case SegmenterSource::Threshold: {
      Mask m = make_mask(v.geom);
      for (std::size_t i = 0; i < v.voxels.size(); ++i)
        m.voxels[i] =
            (v.voxels[i] >= cfg.hu_low && v.voxels[i] <= cfg.hu_high) ? 1 : 0;
      if (cfg.closing_radius_mm > 0.0) {
        auto offs =
            segment_detail::ball_offsets(v.geom.spacing, cfg.closing_radius_mm);
        m = segment_detail::erode_ball(segment_detail::dilate_ball(m, offs),
                                       offs);
      }
      return segment_detail::cleanup(std::move(m));
    }
    case SegmenterSource::External: {
      segment_detail::ScratchDir scratch;
      const std::string input = (scratch.path() / "input.nii").string();
      const std::string output = (scratch.path() / "mask.nii").string();
      write_nifti(v, input);
      std::string cmd =
          segment_detail::substitute(cfg.command_template, "{input}", input);
      cmd = segment_detail::substitute(cmd, "{output}", output);
      const int rc = std::system(cmd.c_str());
      const bool ok = rc != -1 && WIFEXITED(rc) && WEXITSTATUS(rc) == 0;
      if (!ok)
        fail(ErrorCode::ExternalFailed,
             "external segmenter exited with a non-zero status");
      if (!std::filesystem::exists(output))
        fail(ErrorCode::ExternalFailed,
             "external segmenter wrote no mask file");
      Mask m = read_mask_auto(output);
      if (!geometry_compatible(m.geom, v.geom))
        fail(ErrorCode::GeometryMismatch,
             "external segmenter returned a mask on a different grid");
      return segment_detail::cleanup(std::move(m));
    }
  }
  fail(ErrorCode::InvalidConfig, "unknown segmenter source");
}

// Dice overlap between two masks on the same grid. Two empty masks agree
// perfectly by convention.
inline double dice(const Mask& a, const Mask& b) {
  if (!geometry_compatible(a.geom, b.geom))
    fail(ErrorCode::GeometryMismatch, "dice needs masks on the same grid");
  std::int64_t na = 0, nb = 0, nab = 0;
  for (std::size_t i = 0; i < a.voxels.size(); ++i) {
    const bool fa = a.voxels[i] != 0, fb = b.voxels[i] != 0;
    na += fa;
    nb += fb;
    nab += (fa && fb);
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(nab) / static_cast<double>(na + nb);
}

}  // namespace alarmkit
