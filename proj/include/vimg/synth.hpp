// Synthetic test data: seeded Gaussian noise, the vertical intensity ramp
// mask and piecewise-smooth phantoms.
//
// Noise uses std::mt19937_64 for raw 64-bit words, maps them to doubles with
// the top 53 bits, and draws normals with the Box-Muller transform (both
// outputs used in order). std::normal_distribution is avoided because its
// algorithm differs between standard libraries.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>

#include "vimg/grid.hpp"

namespace vimg {

class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : eng_(seed) {}

  /// Uniform in (0, 1].
  double uniform() { return (static_cast<double>(eng_() >> 11) + 1.0) * 0x1.0p-53; }

  double next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double a = 2.0 * std::numbers::pi * uniform();
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Zero-mean noise with the given variance, before any clamping.
inline ImageGrid gaussian_noise(const GridShape& s, double variance, std::uint64_t seed) {
  if (variance < 0.0) throw std::invalid_argument("noise variance must be >= 0");
  ImageGrid n(s);
  if (variance == 0.0) return n;
  NormalStream rng(seed);
  const double sd = std::sqrt(variance);
  for (double& v : n.values()) v = sd * rng.next();
  return n;
}

/// img + N(0, variance), clamped to [0, 1].
inline ImageGrid add_gaussian_noise(const ImageGrid& img, double variance, std::uint64_t seed) {
  if (variance == 0.0) return img;
  ImageGrid out = img;
  ImageGrid n = gaussian_noise(img.shape(), variance, seed);
  auto o = out.values();
  auto nv = n.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = std::clamp(o[i] + nv[i], 0.0, 1.0);
  return out;
}

/// Multiplies rows by a linear ramp from `floor` (top row) to 1 (bottom row).
inline ImageGrid intensity_ramp_mask(const ImageGrid& img, double floor = 0.2) {
  ImageGrid out = img;
  const std::size_t n = img.height();
  for (std::size_t y = 0; y < n; ++y) {
    const double w = n == 1 ? 1.0 : floor + (1.0 - floor) * static_cast<double>(y) / static_cast<double>(n - 1);
    for (std::size_t x = 0; x < img.width(); ++x) out(x, y) *= w;
  }
  return out;
}

/// Shapes with sharp edges over a smooth horizontal gradient background.
inline ImageGrid geometric_phantom(std::size_t m, std::size_t n) {
  ImageGrid img(m, n);
  const double W = static_cast<double>(m), H = static_cast<double>(n);
  for (std::size_t y = 0; y < n; ++y)
    for (std::size_t x = 0; x < m; ++x) {
      const double fx = (x + 0.5) / W, fy = (y + 0.5) / H;
      double v = 0.15 + 0.5 * fx;
      if (fx > 0.1 && fx < 0.4 && fy > 0.15 && fy < 0.45) v = 0.9;
      const double dx = fx - 0.68, dy = fy - 0.32;
      if (dx * dx + dy * dy < 0.16 * 0.16) v = 0.05;
      if (fy > 0.6 && fy < 0.85 && fx > 0.2 && fx < 0.8 && fy - 0.6 > 0.5 * std::abs(fx - 0.5))
        v = 0.75 - 0.4 * (fy - 0.6);
      img(x, y) = v;
    }
  return img;
}

/// Head-like phantom: nested ellipses with smooth shading inside.
inline ImageGrid mri_phantom(std::size_t m, std::size_t n) {
  struct Ellipse {
    double cx, cy, rx, ry, value, slope;
  };
  static constexpr Ellipse shapes[] = {
      {0.50, 0.50, 0.42, 0.46, 0.85, 0.0},   {0.50, 0.50, 0.38, 0.42, 0.25, 0.35},
      {0.36, 0.45, 0.08, 0.16, 0.70, 0.0},   {0.64, 0.45, 0.08, 0.16, 0.70, 0.0},
      {0.50, 0.72, 0.12, 0.06, 0.55, -0.4},  {0.50, 0.28, 0.05, 0.05, 0.95, 0.0},
  };
  ImageGrid img(m, n);
  for (std::size_t y = 0; y < n; ++y)
    for (std::size_t x = 0; x < m; ++x) {
      const double fx = (x + 0.5) / static_cast<double>(m), fy = (y + 0.5) / static_cast<double>(n);
      double v = 0.0;
      for (const auto& e : shapes) {
        const double dx = (fx - e.cx) / e.rx, dy = (fy - e.cy) / e.ry;
        if (dx * dx + dy * dy <= 1.0) v = e.value + e.slope * (fy - e.cy);
      }
      img(x, y) = std::clamp(v, 0.0, 1.0);
    }
  return img;
}

/// Every row: a linear ramp from `lo` to `hi` over the left part, then a
/// step up of height `edge` held constant to the right border.
struct RampEdgeLayout {
  std::size_t ramp_end;  // first column after the ramp
  double lo, hi, edge;
};

inline RampEdgeLayout ramp_edge_layout(std::size_t m) {
  return {static_cast<std::size_t>(0.65 * static_cast<double>(m)), 0.1, 0.4, 0.5};
}

inline ImageGrid ramp_edge_phantom(std::size_t m, std::size_t n) {
  const RampEdgeLayout L = ramp_edge_layout(m);
  ImageGrid img(m, n);
  for (std::size_t y = 0; y < n; ++y)
    for (std::size_t x = 0; x < m; ++x) {
      if (x < L.ramp_end)
        img(x, y) = L.lo + (L.hi - L.lo) * static_cast<double>(x) / static_cast<double>(L.ramp_end - 1);
      else
        img(x, y) = L.hi + L.edge;
    }
  return img;
}

/// Smooth periodic texture for optical-flow tests.
inline ImageGrid sinusoid_texture(std::size_t m, std::size_t n, double period = 16.0, double shift_x = 0.0) {
  ImageGrid img(m, n);
  const double k = 2.0 * std::numbers::pi / period;
  for (std::size_t y = 0; y < n; ++y)
    for (std::size_t x = 0; x < m; ++x) {
      const double fx = static_cast<double>(x) - shift_x, fy = static_cast<double>(y);
      img(x, y) = 0.5 + 0.2 * std::sin(k * fx) * std::cos(0.8 * k * fy) + 0.15 * std::sin(0.6 * k * (fx + fy));
    }
  return img;
}

/// Elliptical head outline filled with smooth texture, zero outside, under
/// the intensity ramp mask.
inline ImageGrid textured_head_phantom(std::size_t m, std::size_t n) {
  const ImageGrid tex = sinusoid_texture(m, n, 24.0);
  ImageGrid img(m, n);
  for (std::size_t y = 0; y < n; ++y)
    for (std::size_t x = 0; x < m; ++x) {
      const double fx = (x + 0.5) / static_cast<double>(m) - 0.5, fy = (y + 0.5) / static_cast<double>(n) - 0.5;
      if (fx * fx / (0.42 * 0.42) + fy * fy / (0.46 * 0.46) <= 1.0) img(x, y) = tex(x, y);
    }
  return intensity_ramp_mask(img);
}

}  // namespace vimg
