#pragma once

// Raw-grid format: a JSON sidecar describing geometry + a contiguous
// little-endian scalar payload in a sibling .bin file.
//
// {
//   "format": "alarm-raw-v1",
//   "dtype": "float32",            // or "int16", "uint8"
//   "dims": [64, 64, 32],
//   "spacing_mm": [0.78, 0.78, 1.5],
//   "origin_mm": [0.0, 0.0, 0.0],
//   "axis_convention": "LPS",
//   "data": "scan.bin"             // optional, defaults to <stem>.bin
// }
//
// Geometry is stored as JSON doubles, so write-then-read reproduces it
// bit-exactly (unlike NIfTI's float32 header fields).

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "alarm/io_util.hpp"
#include "alarm/types.hpp"

namespace alarmkit {

namespace raw_detail {

inline std::filesystem::path sidecar_path(const std::string& path) {
  std::filesystem::path p(path);
  if (p.extension() == ".json") return p;
  if (p.extension() == ".bin") return p.replace_extension(".json");
  return p += ".json";
}

inline nlohmann::json load_sidecar(const std::filesystem::path& p) {
  std::vector<std::uint8_t> bytes = read_file(p.string());
  nlohmann::json j = nlohmann::json::parse(bytes.begin(), bytes.end(),
                                           nullptr, false);
  if (j.is_discarded())
    fail(ErrorCode::SidecarMismatch, p.string() + ": sidecar is not valid JSON");
  return j;
}

inline GridGeometry geometry_from_sidecar(const nlohmann::json& j,
                                          const std::string& name) {
  auto triple = [&](const char* key, bool integral) {
    if (!j.contains(key) || !j[key].is_array() || j[key].size() != 3)
      fail(ErrorCode::SidecarMismatch,
           name + ": sidecar field '" + key + "' must be a 3-array");
    std::array<double, 3> out{};
    for (int i = 0; i < 3; ++i) {
      const auto& e = j[key][i];
      if (integral ? !e.is_number_integer() : !e.is_number())
        fail(ErrorCode::SidecarMismatch,
             name + ": sidecar field '" + key + "' has a non-numeric entry");
      out[static_cast<std::size_t>(i)] = e.get<double>();
    }
    return out;
  };
  GridGeometry g;
  auto dims = triple("dims", true);
  auto spacing = triple("spacing_mm", false);
  auto origin = triple("origin_mm", false);
  for (int i = 0; i < 3; ++i) {
    g.dims[i] = static_cast<std::int64_t>(dims[static_cast<std::size_t>(i)]);
    g.spacing[i] = spacing[static_cast<std::size_t>(i)];
    g.origin[i] = origin[static_cast<std::size_t>(i)];
  }
  validate_geometry(g);
  if (j.contains("axis_convention") && j["axis_convention"] != "LPS")
    fail(ErrorCode::UnsupportedOrientation,
         name + ": axis_convention must be \"LPS\"");
  return g;
}

}  // namespace raw_detail

inline Volume read_raw_volume(const std::string& path) {
  namespace fs = std::filesystem;
  fs::path side = raw_detail::sidecar_path(path);
  nlohmann::json j = raw_detail::load_sidecar(side);
  if (!j.contains("format") || j["format"] != "alarm-raw-v1")
    fail(ErrorCode::SidecarMismatch,
         side.string() + ": sidecar format must be \"alarm-raw-v1\"");
  GridGeometry g = raw_detail::geometry_from_sidecar(j, side.string());

  std::string dtype = j.value("dtype", "");
  int voxel_bytes;
  if (dtype == "float32") voxel_bytes = 4;
  else if (dtype == "int16") voxel_bytes = 2;
  else if (dtype == "uint8") voxel_bytes = 1;
  else
    fail(ErrorCode::UnsupportedDatatype,
         side.string() + ": dtype \"" + dtype +
             "\" not supported (float32, int16, uint8 only)");

  fs::path data = side.parent_path() /
                  j.value("data", side.stem().string() + ".bin");
  std::vector<std::uint8_t> payload = read_file(data.string());
  const std::uint64_t expected =
      static_cast<std::uint64_t>(g.voxel_count()) * voxel_bytes;
  if (payload.size() != expected)
    fail(ErrorCode::SidecarMismatch,
         data.string() + ": payload is " + std::to_string(payload.size()) +
             " bytes, sidecar dims require " + std::to_string(expected));

  Volume v;
  v.geom = g;
  v.voxels.resize(static_cast<std::size_t>(g.voxel_count()));
  for (std::size_t i = 0; i < v.voxels.size(); ++i) {
    float f;
    if (voxel_bytes == 4) {
      std::memcpy(&f, payload.data() + 4 * i, 4);
    } else if (voxel_bytes == 2) {
      std::int16_t s;
      std::memcpy(&s, payload.data() + 2 * i, 2);
      f = static_cast<float>(s);
    } else {
      f = static_cast<float>(payload[i]);
    }
    if (!std::isfinite(f))
      fail(ErrorCode::NonFinite, data.string() + ": non-finite voxel value");
    v.voxels[i] = f;
  }
  return v;
}

inline Mask read_raw_mask(const std::string& path) {
  Volume v = read_raw_volume(path);
  Mask m;
  m.geom = v.geom;
  m.voxels.resize(v.voxels.size());
  for (std::size_t i = 0; i < v.voxels.size(); ++i)
    m.voxels[i] = v.voxels[i] != 0.0f ? 1 : 0;
  return m;
}

namespace raw_detail {

inline void write_sidecar(const GridGeometry& g, const char* dtype,
                          const std::filesystem::path& side,
                          const std::string& data_name) {
  nlohmann::json j;
  j["format"] = "alarm-raw-v1";
  j["dtype"] = dtype;
  j["dims"] = {g.dims[0], g.dims[1], g.dims[2]};
  j["spacing_mm"] = {g.spacing[0], g.spacing[1], g.spacing[2]};
  j["origin_mm"] = {g.origin[0], g.origin[1], g.origin[2]};
  j["axis_convention"] = "LPS";
  j["data"] = data_name;
  atomic_write_file(side.string(), j.dump(2) + "\n");
}

}  // namespace raw_detail

// Writes <stem>.json + <stem>.bin.
inline void write_raw(const Volume& v, const std::string& stem) {
  for (float f : v.voxels)
    if (!std::isfinite(f))
      fail(ErrorCode::NonFinite, "refusing to write non-finite voxel");
  std::filesystem::path base(stem);
  raw_detail::write_sidecar(v.geom, "float32", base.string() + ".json",
                            base.filename().string() + ".bin");
  atomic_write_file(base.string() + ".bin", v.voxels.data(),
                    v.voxels.size() * 4);
}

inline void write_raw(const Mask& m, const std::string& stem) {
  std::filesystem::path base(stem);
  raw_detail::write_sidecar(m.geom, "uint8", base.string() + ".json",
                            base.filename().string() + ".bin");
  atomic_write_file(base.string() + ".bin", m.voxels.data(), m.voxels.size());
}

}  // namespace alarmkit
