#pragma once

// NIfTI-1 reader/writer for the subset this pipeline needs.
//
// Supported: single-file "n+1" and header/img "ni1" pairs, little-endian,
// datatypes uint8 (2), int16 (4), float32 (16), 3-D grids, scl_slope/inter
// scaling, and axis-aligned orientations (any permutation/flip of the grid
// axes). Oblique rotations and byte-swapped files are rejected rather than
// half-handled. Loaded data is always delivered in the canonical LPS layout
// described in types.hpp; the writer emits LPS-diagonal sform files, so
// write-then-read is an identity.

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "alarm/io_util.hpp"
#include "alarm/types.hpp"

namespace alarmkit {

static_assert(std::endian::native == std::endian::little,
              "NIfTI I/O assumes a little-endian host");

namespace nifti_detail {

inline std::int16_t load_i16(const std::uint8_t* p) {
  std::int16_t v;
  std::memcpy(&v, p, 2);
  return v;
}
inline std::int32_t load_i32(const std::uint8_t* p) {
  std::int32_t v;
  std::memcpy(&v, p, 4);
  return v;
}
inline float load_f32(const std::uint8_t* p) {
  float v;
  std::memcpy(&v, p, 4);
  return v;
}
inline void store_i16(std::uint8_t* p, std::int16_t v) { std::memcpy(p, &v, 2); }
inline void store_i32(std::uint8_t* p, std::int32_t v) { std::memcpy(p, &v, 4); }
inline void store_f32(std::uint8_t* p, float v) { std::memcpy(p, &v, 4); }

constexpr int kHeaderSize = 348;
constexpr std::int16_t kDtUint8 = 2;
constexpr std::int16_t kDtInt16 = 4;
constexpr std::int16_t kDtFloat32 = 16;

struct Header {
  std::array<std::int64_t, 3> dims;
  std::array<double, 3> pixdim;
  double qfac;
  std::int16_t datatype;
  double scl_slope, scl_inter;
  double vox_offset;
  std::int16_t qform_code, sform_code;
  double quatern[3];  // b, c, d
  double qoffset[3];
  double srow[3][4];
  bool magic_pair;  // true for "ni1" header+img pairs
};

inline Header parse_header(const std::uint8_t* h, std::size_t len,
                           const std::string& name) {
  if (len < kHeaderSize)
    fail(ErrorCode::BadMagic, name + ": shorter than a NIfTI-1 header");
  const std::int32_t sizeof_hdr = load_i32(h + 0);
  if (sizeof_hdr != kHeaderSize) {
    if (sizeof_hdr == 0x5C010000)  // 348 byte-swapped
      fail(ErrorCode::BadMagic,
           name + ": byte-swapped NIfTI not supported (little-endian only)");
    fail(ErrorCode::BadMagic, name + ": sizeof_hdr is not 348");
  }
  const char* magic = reinterpret_cast<const char*>(h + 344);
  bool n_plus_1 = std::memcmp(magic, "n+1", 4) == 0;
  bool ni1 = std::memcmp(magic, "ni1", 4) == 0;
  if (!n_plus_1 && !ni1)
    fail(ErrorCode::BadMagic, name + ": magic is neither \"n+1\" nor \"ni1\"");

  Header out{};
  out.magic_pair = ni1;
  const std::int16_t ndim = load_i16(h + 40);
  if (ndim != 3)
    fail(ErrorCode::DimMismatch,
         name + ": dim[0] must be 3, got " + std::to_string(ndim));
  for (int i = 0; i < 3; ++i) {
    out.dims[i] = load_i16(h + 40 + 2 * (i + 1));
    if (out.dims[i] <= 0)
      fail(ErrorCode::DimMismatch, name + ": non-positive dimension");
  }
  out.datatype = load_i16(h + 70);
  if (out.datatype != kDtUint8 && out.datatype != kDtInt16 &&
      out.datatype != kDtFloat32)
    fail(ErrorCode::UnsupportedDatatype,
         name + ": datatype " + std::to_string(out.datatype) +
             " not supported (uint8, int16, float32 only)");
  float qf = load_f32(h + 76);
  out.qfac = (qf == -1.0f) ? -1.0 : 1.0;
  for (int i = 0; i < 3; ++i) {
    out.pixdim[i] = load_f32(h + 76 + 4 * (i + 1));
    if (!(out.pixdim[i] > 0.0f) || !std::isfinite(out.pixdim[i]))
      fail(ErrorCode::InvalidSpacing, name + ": pixdim must be positive");
  }
  out.vox_offset = load_f32(h + 108);
  out.scl_slope = load_f32(h + 112);
  out.scl_inter = load_f32(h + 116);
  out.qform_code = load_i16(h + 252);
  out.sform_code = load_i16(h + 254);
  for (int i = 0; i < 3; ++i) out.quatern[i] = load_f32(h + 256 + 4 * i);
  for (int i = 0; i < 3; ++i) out.qoffset[i] = load_f32(h + 268 + 4 * i);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c)
      out.srow[r][c] = load_f32(h + 280 + 16 * r + 4 * c);
  return out;
}

// Index -> RAS-mm affine of the stored grid: 3x3 matrix M plus offset T.
inline void index_to_ras(const Header& h, double M[3][3], double T[3]) {
  if (h.sform_code > 0) {
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) M[r][c] = h.srow[r][c];
      T[r] = h.srow[r][3];
    }
    return;
  }
  if (h.qform_code > 0) {
    const double b = h.quatern[0], c = h.quatern[1], d = h.quatern[2];
    double a2 = 1.0 - (b * b + c * c + d * d);
    const double a = a2 > 0.0 ? std::sqrt(a2) : 0.0;
    const double R[3][3] = {
        {a * a + b * b - c * c - d * d, 2 * b * c - 2 * a * d,
         2 * b * d + 2 * a * c},
        {2 * b * c + 2 * a * d, a * a + c * c - b * b - d * d,
         2 * c * d - 2 * a * b},
        {2 * b * d - 2 * a * c, 2 * c * d + 2 * a * b,
         a * a + d * d - c * c - b * b}};
    for (int r = 0; r < 3; ++r) {
      M[r][0] = R[r][0] * h.pixdim[0];
      M[r][1] = R[r][1] * h.pixdim[1];
      M[r][2] = R[r][2] * h.pixdim[2] * h.qfac;
      T[r] = h.qoffset[r];
    }
    return;
  }
  // No orientation recorded: treat the stored layout as already canonical
  // LPS with origin 0 (documented strict-subset behavior). diag(-p0,-p1,p2)
  // in the format's RAS frame is the identity in LPS.
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) M[r][c] = 0.0;
  M[0][0] = -h.pixdim[0];
  M[1][1] = -h.pixdim[1];
  M[2][2] = h.pixdim[2];
  T[0] = T[1] = T[2] = 0.0;
}

// Storage axis -> world axis map for an axis-aligned affine.
struct AxisMap {
  int world_axis[3];   // world_axis[s]: LPS axis that storage axis s advances
  int sign[3];         // +1 if increasing storage index increases LPS coord
  double scale[3];     // mm per storage step (always > 0)
  double t_lps[3];     // LPS position of stored voxel (0,0,0)
};

inline AxisMap classify_axes(const double M_ras[3][3], const double T_ras[3],
                             const std::string& name) {
  // RAS -> LPS flips the first two world rows.
  double A[3][3], t[3];
  for (int c = 0; c < 3; ++c) {
    A[0][c] = -M_ras[0][c];
    A[1][c] = -M_ras[1][c];
    A[2][c] = M_ras[2][c];
  }
  t[0] = -T_ras[0];
  t[1] = -T_ras[1];
  t[2] = T_ras[2];

  AxisMap map{};
  bool world_taken[3] = {false, false, false};
  for (int s = 0; s < 3; ++s) {
    int best = 0;
    double mag = -1.0;
    for (int r = 0; r < 3; ++r) {
      if (std::abs(A[r][s]) > mag) {
        mag = std::abs(A[r][s]);
        best = r;
      }
    }
    if (!(mag > 0.0))
      fail(ErrorCode::UnsupportedOrientation, name + ": singular orientation");
    for (int r = 0; r < 3; ++r) {
      if (r != best && std::abs(A[r][s]) > 1e-3 * mag)
        fail(ErrorCode::UnsupportedOrientation,
             name + ": oblique orientation not supported "
                    "(axis-aligned permutations/flips only)");
    }
    if (world_taken[best])
      fail(ErrorCode::UnsupportedOrientation,
           name + ": orientation is not a permutation of the grid axes");
    world_taken[best] = true;
    map.world_axis[s] = best;
    map.sign[s] = A[best][s] > 0 ? 1 : -1;
    map.scale[s] = mag;
  }
  for (int r = 0; r < 3; ++r) map.t_lps[r] = t[r];
  return map;
}

}  // namespace nifti_detail

// Parsed, scaled, canonicalized payload. Masks binarize (non-zero -> 1)
// after scaling.
inline Volume parse_nifti_volume(const std::vector<std::uint8_t>& header_bytes,
                                 const std::vector<std::uint8_t>& data_bytes,
                                 std::size_t data_offset,
                                 const std::string& name) {
  using namespace nifti_detail;
  Header h = parse_header(header_bytes.data(), header_bytes.size(), name);

  const std::int64_t n = h.dims[0] * h.dims[1] * h.dims[2];
  const int voxel_bytes = (h.datatype == kDtUint8) ? 1
                          : (h.datatype == kDtInt16) ? 2
                                                     : 4;
  if (data_offset > data_bytes.size() ||
      data_bytes.size() - data_offset <
          static_cast<std::size_t>(n) * voxel_bytes)
    fail(ErrorCode::DimMismatch,
         name + ": voxel payload smaller than header dimensions require");
  const std::uint8_t* p = data_bytes.data() + data_offset;

  // Decode + scale into the stored order first.
  const bool scaled = h.scl_slope != 0.0;
  std::vector<float> stored(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    double v;
    switch (h.datatype) {
      case kDtUint8: v = p[i]; break;
      case kDtInt16: v = load_i16(p + 2 * i); break;
      default: v = load_f32(p + 4 * i); break;
    }
    if (scaled) v = v * h.scl_slope + h.scl_inter;
    if (!std::isfinite(v))
      fail(ErrorCode::NonFinite, name + ": non-finite voxel value");
    stored[static_cast<std::size_t>(i)] = static_cast<float>(v);
  }

  double M[3][3], T[3];
  index_to_ras(h, M, T);
  AxisMap map = classify_axes(M, T, name);

  Volume out;
  for (int s = 0; s < 3; ++s) {
    out.geom.dims[map.world_axis[s]] = h.dims[s];
    out.geom.spacing[map.world_axis[s]] = map.scale[s];
  }
  // Origin = LPS position of the canonical voxel (0,0,0), which corresponds
  // to stored index 0 on positively-mapped axes and dims-1 on flipped ones.
  for (int s = 0; s < 3; ++s) {
    const int a = map.world_axis[s];
    out.geom.origin[a] =
        map.sign[s] > 0
            ? map.t_lps[a]
            : map.t_lps[a] - map.scale[s] * static_cast<double>(h.dims[s] - 1);
  }
  validate_geometry(out.geom);
  out.voxels.resize(static_cast<std::size_t>(n));

  // storage index of world axis a
  int stor_of_world[3];
  for (int s = 0; s < 3; ++s) stor_of_world[map.world_axis[s]] = s;

  const std::int64_t n0 = h.dims[0], n01 = h.dims[0] * h.dims[1];
  std::int64_t src_idx[3];
  for (std::int64_t z = 0; z < out.geom.dims[2]; ++z) {
    const int sz = stor_of_world[2];
    src_idx[sz] = map.sign[sz] > 0 ? z : h.dims[sz] - 1 - z;
    for (std::int64_t y = 0; y < out.geom.dims[1]; ++y) {
      const int sy = stor_of_world[1];
      src_idx[sy] = map.sign[sy] > 0 ? y : h.dims[sy] - 1 - y;
      for (std::int64_t x = 0; x < out.geom.dims[0]; ++x) {
        const int sx = stor_of_world[0];
        src_idx[sx] = map.sign[sx] > 0 ? x : h.dims[sx] - 1 - x;
        out.voxels[static_cast<std::size_t>(out.geom.index(x, y, z))] =
            stored[static_cast<std::size_t>(src_idx[0] + n0 * src_idx[1] +
                                            n01 * src_idx[2])];
      }
    }
  }
  return out;
}

inline Volume read_nifti_volume_bytes(const std::vector<std::uint8_t>& bytes,
                                      const std::string& name) {
  using namespace nifti_detail;
  Header h = parse_header(bytes.data(), bytes.size(), name);
  if (h.magic_pair)
    fail(ErrorCode::BadMagic,
         name + ": header/img pairs are not valid inside a single stream");
  std::size_t off = static_cast<std::size_t>(h.vox_offset);
  if (off < static_cast<std::size_t>(kHeaderSize))
    fail(ErrorCode::BadMagic, name + ": vox_offset inside the header");
  return parse_nifti_volume(bytes, bytes, off, name);
}

inline Volume read_nifti_volume(const std::string& path) {
  using namespace nifti_detail;
  std::vector<std::uint8_t> bytes = read_file(path);
  Header h = parse_header(bytes.data(), bytes.size(), path);
  if (!h.magic_pair) {
    std::size_t off = static_cast<std::size_t>(h.vox_offset);
    if (off < static_cast<std::size_t>(kHeaderSize))
      fail(ErrorCode::BadMagic, path + ": vox_offset inside the header");
    return parse_nifti_volume(bytes, bytes, off, path);
  }
  std::filesystem::path img(path);
  img.replace_extension(".img");
  return parse_nifti_volume(bytes, read_file(img.string()), 0, path);
}

inline Mask volume_to_mask(const Volume& v) {
  Mask m;
  m.geom = v.geom;
  m.voxels.resize(v.voxels.size());
  for (std::size_t i = 0; i < v.voxels.size(); ++i)
    m.voxels[i] = v.voxels[i] != 0.0f ? 1 : 0;
  return m;
}

inline Mask read_nifti_mask(const std::string& path) {
  return volume_to_mask(read_nifti_volume(path));
}

namespace nifti_detail {

inline std::vector<std::uint8_t> build_file(const GridGeometry& g,
                                            std::int16_t datatype,
                                            const void* payload,
                                            std::size_t payload_size) {
  for (int i = 0; i < 3; ++i) {
    if (g.dims[i] > 0x7FFF)
      fail(ErrorCode::DimMismatch,
           "grid dimension exceeds the int16 range of the format");
  }
  std::vector<std::uint8_t> out(352 + payload_size, 0);
  std::uint8_t* h = out.data();
  store_i32(h + 0, kHeaderSize);
  h[38] = 'r';  // regular
  store_i16(h + 40, 3);
  for (int i = 0; i < 3; ++i)
    store_i16(h + 40 + 2 * (i + 1), static_cast<std::int16_t>(g.dims[i]));
  for (int i = 4; i <= 7; ++i) store_i16(h + 40 + 2 * i, 1);
  store_i16(h + 70, datatype);
  store_i16(h + 72, datatype == kDtUint8 ? 8 : datatype == kDtInt16 ? 16 : 32);
  store_f32(h + 76, 1.0f);  // qfac slot
  for (int i = 0; i < 3; ++i)
    store_f32(h + 76 + 4 * (i + 1), static_cast<float>(g.spacing[i]));
  store_f32(h + 108, 352.0f);  // vox_offset
  store_f32(h + 112, 1.0f);    // scl_slope
  store_f32(h + 116, 0.0f);    // scl_inter
  h[123] = 2;                  // spatial units: mm
  store_i16(h + 252, 0);       // qform unused
  store_i16(h + 254, 1);       // sform: scanner anatomical
  // LPS-diagonal grid expressed in the format's RAS frame.
  const float sr[3][4] = {
      {-static_cast<float>(g.spacing[0]), 0.0f, 0.0f,
       -static_cast<float>(g.origin[0])},
      {0.0f, -static_cast<float>(g.spacing[1]), 0.0f,
       -static_cast<float>(g.origin[1])},
      {0.0f, 0.0f, static_cast<float>(g.spacing[2]),
       static_cast<float>(g.origin[2])}};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) store_f32(h + 280 + 16 * r + 4 * c, sr[r][c]);
  std::memcpy(h + 344, "n+1", 4);
  // bytes 348..351 stay zero: no header extensions.
  if (payload_size > 0) std::memcpy(out.data() + 352, payload, payload_size);
  return out;
}

}  // namespace nifti_detail

inline std::vector<std::uint8_t> nifti_file_bytes(const Volume& v) {
  for (float f : v.voxels)
    if (!std::isfinite(f))
      fail(ErrorCode::NonFinite, "refusing to write non-finite voxel");
  return nifti_detail::build_file(v.geom, nifti_detail::kDtFloat32,
                                  v.voxels.data(), v.voxels.size() * 4);
}

inline std::vector<std::uint8_t> nifti_file_bytes(const Mask& m) {
  return nifti_detail::build_file(m.geom, nifti_detail::kDtUint8,
                                  m.voxels.data(), m.voxels.size());
}

inline void write_nifti(const Volume& v, const std::string& path) {
  atomic_write_file(path, nifti_file_bytes(v));
}

inline void write_nifti(const Mask& m, const std::string& path) {
  atomic_write_file(path, nifti_file_bytes(m));
}

}  // namespace alarmkit
