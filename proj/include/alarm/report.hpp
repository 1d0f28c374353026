#pragma once

// MeasurementReport <-> JSON.
//
// Serialization is the deterministic writer (fixed field order, %.6g
// floats), so identical measurements produce byte-identical files. Parsing
// recovers only what downstream consumers need (overlay rendering, batch
// summaries) rather than round-tripping the full structure.

#include <string>

#include <json.hpp>

#include "alarm/json_writer.hpp"
#include "alarm/roi.hpp"

namespace alarmkit {

inline std::string serialize_report(const MeasurementReport& r) {
  JsonWriter w;
  w.begin_object();
  w.key("format");
  w.value("alarm-report-v1");

  w.key("provenance");
  w.begin_object();
  w.key("volume");
  w.value(r.provenance.volume_path);
  w.key("mask");
  w.value(r.provenance.mask_path);
  w.key("segmenter");
  w.value(r.provenance.segmenter);
  w.key("mask_cleanup");
  w.value("largest_component");
  w.end_object();

  w.key("config");
  w.begin_object();
  w.key("alpha");
  w.value(r.config.alpha);
  w.key("circle_radius_mm");
  w.value(r.config.circle_radius_mm);
  w.key("volume_threshold_mm3");
  w.value(r.config.volume_threshold_mm3);
  w.key("hu_cutoff");
  w.value(r.config.hu_cutoff);
  w.key("iso_spacing_mm");
  w.value(kIsoSpacingMm);
  w.end_object();

  w.key("center_roi");
  w.begin_object();
  w.key("mean_hu");
  w.value(r.center_roi.mean_hu);
  w.key("volume_mm3");
  w.value(r.center_roi.volume_mm3);
  w.key("erosion_iterations");
  w.value(r.center_roi.erosion_iterations);
  w.key("degeneracy_warning");
  w.value(r.center_roi.degeneracy_warning);
  w.key("slice_outline_xy");
  w.begin_array();
  for (const auto& pt : r.center_outline_xy)
    w.value(std::vector<double>{static_cast<double>(pt[0]),
                                static_cast<double>(pt[1])});
  w.end_array();
  w.end_object();

  w.key("periphery");
  w.begin_object();
  w.key("geometry");
  w.begin_object();
  const PeripheryGeometry& g = r.periphery_geometry;
  w.key("core_centroid_xyz");
  w.value(std::vector<double>{g.core_centroid.x, g.core_centroid.y,
                              g.core_centroid.z});
  w.key("z_slice");
  w.value(g.z_slice);
  w.key("ray_start_xy");
  w.value(std::vector<double>{static_cast<double>(g.ray_start_x),
                              static_cast<double>(g.ray_start_y)});
  w.key("boundary_posterior_y");
  w.value(g.boundary_posterior_y);
  w.key("boundary_lateral_x");
  w.value(g.boundary_lateral_x);
  w.key("boundary_anterior_y");
  w.value(g.boundary_anterior_y);
  w.key("circle_centers_xyz");
  w.begin_array();
  for (const Vec3d& c : g.circle_centers)
    w.value(std::vector<double>{c.x, c.y, c.z});
  w.end_array();
  w.end_object();

  w.key("circles");
  w.begin_array();
  static const char* kLabels[3] = {"posterior", "lateral", "anterior"};
  for (int i = 0; i < 3; ++i) {
    const CircleMeasure& c = r.circles[static_cast<std::size_t>(i)];
    w.begin_object();
    w.key("label");
    w.value(kLabels[i]);
    w.key("mean_hu");
    w.value(c.mean_hu);
    w.key("outside_liver_fraction");
    w.value(c.outside_liver_fraction);
    w.key("voxel_count");
    w.value(c.voxel_count);
    w.end_object();
  }
  w.end_array();
  w.key("mean_of_three_hu");
  w.value(r.mean_of_three_hu);
  w.end_object();

  w.key("whole_liver_mean_hu");
  w.value(r.whole_liver_mean_hu);
  w.key("nafld_center");
  w.value(r.nafld_center);
  w.key("nafld_periphery");
  w.value(r.nafld_periphery);
  w.end_object();
  return w.str();
}

// The subset of a report an overlay needs.
struct ReportOverlayData {
  std::int64_t z_slice = 0;
  double circle_radius_mm = 7.0;
  std::array<Vec3d, 3> circle_centers;
  std::vector<std::array<std::int64_t, 2>> center_outline_xy;
};

inline ReportOverlayData parse_report_overlay_data(const std::string& text,
                                                   const std::string& name) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded())
    fail(ErrorCode::IoFailure, name + ": report is not valid JSON");
  try {
    ReportOverlayData d;
    d.z_slice = j.at("periphery").at("geometry").at("z_slice").get<std::int64_t>();
    d.circle_radius_mm = j.at("config").at("circle_radius_mm").get<double>();
    const auto& centers = j.at("periphery").at("geometry").at("circle_centers_xyz");
    if (!centers.is_array() || centers.size() != 3)
      fail(ErrorCode::IoFailure, name + ": circle_centers_xyz must have 3 entries");
    for (std::size_t i = 0; i < 3; ++i)
      d.circle_centers[i] = {centers[i].at(0).get<double>(),
                             centers[i].at(1).get<double>(),
                             centers[i].at(2).get<double>()};
    for (const auto& pt : j.at("center_roi").at("slice_outline_xy"))
      d.center_outline_xy.push_back(
          {pt.at(0).get<std::int64_t>(), pt.at(1).get<std::int64_t>()});
    return d;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::IoFailure,
         name + ": report is missing overlay fields (" + e.what() + ")");
  }
}

}  // namespace alarmkit
