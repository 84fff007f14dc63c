// Dense matrix oracles for the finite-difference operators, built entry by
// entry from the stencil definitions (not from the library kernels).
#pragma once

#include <Eigen/Dense>

#include "vimg/grid.hpp"

namespace oracle {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// 1D forward difference on n points.
inline Mat diff_1d(std::size_t n, vimg::Boundary b) {
  Mat d = Mat::Zero(n, n);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    d(i, i) = -1.0;
    d(i, i + 1) = 1.0;
  }
  if (b == vimg::Boundary::Periodic && n > 1) {
    d(n - 1, n - 1) = -1.0;
    d(n - 1, 0) = 1.0;
  }
  return d;
}

// Lx acting on row-major vectors of an m x n grid (x fastest).
inline Mat Lx(const vimg::GridShape& s) {
  Mat d = diff_1d(s.width, s.boundary);
  Mat out = Mat::Zero(s.size(), s.size());
  for (std::size_t y = 0; y < s.height; ++y)
    out.block(y * s.width, y * s.width, s.width, s.width) = d;
  return out;
}

inline Mat Ly(const vimg::GridShape& s) {
  Mat d = diff_1d(s.height, s.boundary);
  Mat out = Mat::Zero(s.size(), s.size());
  for (std::size_t r = 0; r < s.height; ++r)
    for (std::size_t c = 0; c < s.height; ++c)
      if (d(r, c) != 0.0)
        for (std::size_t x = 0; x < s.width; ++x) out(r * s.width + x, c * s.width + x) = d(r, c);
  return out;
}

// Dense -div grad = LxᵀLx + LyᵀLy.
inline Mat neg_laplacian(const vimg::GridShape& s) {
  Mat x = Lx(s), y = Ly(s);
  return x.transpose() * x + y.transpose() * y;
}

inline Vec to_vec(std::span<const double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i];
  return out;
}

inline vimg::ImageGrid to_image(const Vec& v, const vimg::GridShape& s) {
  return vimg::ImageGrid(s, std::vector<double>(v.data(), v.data() + v.size()));
}

}  // namespace oracle
