// Image quality: PSNR with peak 1 and Gaussian-window SSIM.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "vimg/grid.hpp"

namespace vimg {

inline void require_same_shape(const ImageGrid& a, const ImageGrid& b) {
  if (a.width() != b.width() || a.height() != b.height()) throw std::invalid_argument("image dimensions differ");
}

inline double mse(const ImageGrid& a, const ImageGrid& b) {
  require_same_shape(a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    s += d * d;
  }
  return s / static_cast<double>(a.size());
}

/// 10 log10(1 / MSE); +inf for identical images.
inline double psnr(const ImageGrid& a, const ImageGrid& b) {
  const double e = mse(a, b);
  if (e == 0.0) return std::numeric_limits<double>::infinity();
  return -10.0 * std::log10(e);
}

struct SsimOptions {
  std::size_t window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

/// Normalized 1D Gaussian taps of odd length `size`.
inline std::vector<double> gaussian_taps(std::size_t size, double sigma) {
  std::vector<double> g(size);
  const double c = static_cast<double>(size / 2);
  double s = 0.0;
  for (std::size_t i = 0; i < size; ++i) {
    const double d = static_cast<double>(i) - c;
    g[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    s += g[i];
  }
  for (double& v : g) v /= s;
  return g;
}

/// Mean SSIM over all windows lying fully inside the image. Images smaller
/// than the window use the largest odd window that fits.
inline double ssim(const ImageGrid& a, const ImageGrid& b, const SsimOptions& o = {}) {
  require_same_shape(a, b);
  std::size_t win = std::min({o.window, a.width(), a.height()});
  if (win % 2 == 0) --win;
  const std::vector<double> g = gaussian_taps(win, o.sigma);
  const double c1 = (o.k1 * o.dynamic_range) * (o.k1 * o.dynamic_range);
  const double c2 = (o.k2 * o.dynamic_range) * (o.k2 * o.dynamic_range);
  const std::size_t nx = a.width() - win + 1, ny = a.height() - win + 1;
  double total = 0.0;
  for (std::size_t y0 = 0; y0 < ny; ++y0)
    for (std::size_t x0 = 0; x0 < nx; ++x0) {
      double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
      for (std::size_t j = 0; j < win; ++j)
        for (std::size_t i = 0; i < win; ++i) {
          const double w = g[i] * g[j];
          const double va = a(x0 + i, y0 + j), vb = b(x0 + i, y0 + j);
          ma += w * va;
          mb += w * vb;
          saa += w * va * va;
          sbb += w * vb * vb;
          sab += w * va * vb;
        }
      const double va = saa - ma * ma, vb = sbb - mb * mb, cov = sab - ma * mb;
      total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
  return total / static_cast<double>(nx * ny);
}

}  // namespace vimg
