#pragma once

// Extension-based dispatch over the supported on-disk formats:
//   .nii, .hdr          NIfTI-1 (single file or header/img pair)
//   .nii.gz             gzip-compressed NIfTI-1
//   .json, .bin         raw grid with JSON sidecar

#include <string>

#include "alarm/gzip.hpp"
#include "alarm/nifti.hpp"
#include "alarm/raw_io.hpp"
#include "alarm/types.hpp"

namespace alarmkit {

namespace formats_detail {

inline bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace formats_detail

inline Volume read_volume_auto(const std::string& path) {
  using formats_detail::ends_with;
  if (ends_with(path, ".nii.gz"))
    return read_nifti_volume_bytes(read_file_gz(path), path);
  if (ends_with(path, ".nii") || ends_with(path, ".hdr"))
    return read_nifti_volume(path);
  if (ends_with(path, ".json") || ends_with(path, ".bin"))
    return read_raw_volume(path);
  fail(ErrorCode::IoFailure,
       path + ": unrecognized extension (expected .nii, .nii.gz, .hdr, "
              ".json or .bin)");
}

inline Mask read_mask_auto(const std::string& path) {
  using formats_detail::ends_with;
  if (ends_with(path, ".json") || ends_with(path, ".bin"))
    return read_raw_mask(path);
  return volume_to_mask(read_volume_auto(path));
}

}  // namespace alarmkit
