#pragma once

// Binary PPM (P6) output and the QA overlay renderer: one axial slice in
// windowed grayscale, the three periphery circles in pure red (1-pixel
// midpoint rasterization) and the center-ROI cross-section outline in pure
// green.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "alarm/report.hpp"
#include "alarm/types.hpp"

namespace alarmkit {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
};

inline constexpr Rgb kRed{255, 0, 0};
inline constexpr Rgb kGreen{0, 255, 0};

struct Image {
  std::int64_t width = 0, height = 0;
  std::vector<Rgb> px;

  void set(std::int64_t x, std::int64_t y, Rgb c) {
    if (x >= 0 && x < width && y >= 0 && y < height)
      px[static_cast<std::size_t>(y * width + x)] = c;
  }
};

inline Image make_image(std::int64_t w, std::int64_t h) {
  Image im;
  im.width = w;
  im.height = h;
  im.px.assign(static_cast<std::size_t>(w * h), Rgb{});
  return im;
}

inline std::vector<std::uint8_t> ppm_bytes(const Image& im) {
  std::string header = "P6\n" + std::to_string(im.width) + " " +
                       std::to_string(im.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + im.px.size() * 3);
  for (const Rgb& p : im.px) {
    out.push_back(p.r);
    out.push_back(p.g);
    out.push_back(p.b);
  }
  return out;
}

// Linear window to 0..255, clamped, rounding half away from zero (e.g. HU 50
// in a [-100, 200] window maps to round(255*150/300) = 128).
inline std::uint8_t window_to_gray(double hu, double lo, double hi) {
  if (hu <= lo) return 0;
  if (hu >= hi) return 255;
  return static_cast<std::uint8_t>(std::lround(255.0 * (hu - lo) / (hi - lo)));
}

// Integer midpoint circle; center and radius round to the pixel grid.
inline void draw_circle(Image& im, double cx, double cy, double radius,
                        Rgb color) {
  const std::int64_t icx = std::llround(cx);
  const std::int64_t icy = std::llround(cy);
  std::int64_t r = std::llround(radius);
  if (r <= 0) {
    im.set(icx, icy, color);
    return;
  }
  std::int64_t x = r, y = 0;
  std::int64_t err = 1 - r;
  while (x >= y) {
    im.set(icx + x, icy + y, color);
    im.set(icx + y, icy + x, color);
    im.set(icx - y, icy + x, color);
    im.set(icx - x, icy + y, color);
    im.set(icx - x, icy - y, color);
    im.set(icx - y, icy - x, color);
    im.set(icx + y, icy - x, color);
    im.set(icx + x, icy - y, color);
    ++y;
    if (err < 0) {
      err += 2 * y + 1;
    } else {
      --x;
      err += 2 * (y - x) + 1;
    }
  }
}

// v must already be on the measurement grid (1 mm isotropic) so the
// report's voxel coordinates land on the right pixels.
inline Image render_overlay(const Volume& v, const ReportOverlayData& d,
                            double window_lo, double window_hi) {
  if (d.z_slice < 0 || d.z_slice >= v.geom.dims[2])
    fail(ErrorCode::SliceOutOfRange,
         "report slice index is outside the volume");
  if (!(window_lo < window_hi))
    fail(ErrorCode::InvalidConfig, "overlay window must have low < high");

  Image im = make_image(v.geom.dims[0], v.geom.dims[1]);
  for (std::int64_t y = 0; y < im.height; ++y)
    for (std::int64_t x = 0; x < im.width; ++x) {
      const std::uint8_t g =
          window_to_gray(v.at(x, y, d.z_slice), window_lo, window_hi);
      im.set(x, y, Rgb{g, g, g});
    }
  for (const auto& pt : d.center_outline_xy) im.set(pt[0], pt[1], kGreen);
  for (const Vec3d& c : d.circle_centers)
    draw_circle(im, c.x, c.y, d.circle_radius_mm / v.geom.spacing[0], kRed);
  return im;
}

}  // namespace alarmkit
