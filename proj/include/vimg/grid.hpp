// Discrete image calculus on m x n grids: forward/backward differences,
// gradient, divergence and the pixel/image norms used by every solver.
//
// Storage is row-major: pixel (x, y) lives at index y * width + x, with x
// running along the horizontal axis. Multi-channel fields are stored planar,
// one contiguous width*height block per channel.
#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace vimg {

enum class Boundary { Symmetric, Periodic };

inline const char* to_string(Boundary b) {
  return b == Boundary::Symmetric ? "symmetric" : "periodic";
}

struct GridShape {
  std::size_t width = 0;   // m, number of columns (x)
  std::size_t height = 0;  // n, number of rows (y)
  Boundary boundary = Boundary::Symmetric;

  std::size_t size() const { return width * height; }
  std::size_t index(std::size_t x, std::size_t y) const { return y * width + x; }

  friend bool operator==(const GridShape&, const GridShape&) = default;
};

inline void require_valid(const GridShape& s) {
  if (s.width == 0 || s.height == 0)
    throw std::invalid_argument("grid dimensions must be positive");
}

/// Single-channel scalar image.
class ImageGrid {
 public:
  ImageGrid() = default;
  explicit ImageGrid(GridShape shape, double fill = 0.0)
      : shape_(shape), data_(shape.size(), fill) {
    require_valid(shape_);
  }
  ImageGrid(GridShape shape, std::vector<double> data)
      : shape_(shape), data_(std::move(data)) {
    require_valid(shape_);
    if (data_.size() != shape_.size())
      throw std::invalid_argument("image data length must equal width*height");
  }
  ImageGrid(std::size_t width, std::size_t height,
            Boundary b = Boundary::Symmetric, double fill = 0.0)
      : ImageGrid(GridShape{width, height, b}, fill) {}

  const GridShape& shape() const { return shape_; }
  std::size_t width() const { return shape_.width; }
  std::size_t height() const { return shape_.height; }
  std::size_t size() const { return data_.size(); }
  Boundary boundary() const { return shape_.boundary; }

  double& operator()(std::size_t x, std::size_t y) { return data_[shape_.index(x, y)]; }
  double operator()(std::size_t x, std::size_t y) const { return data_[shape_.index(x, y)]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

 private:
  GridShape shape_{};
  std::vector<double> data_;
};

/// k-channel field over a grid (dual variables, flow, auxiliary w).
class VectorField {
 public:
  VectorField() = default;
  VectorField(GridShape shape, std::size_t channels, double fill = 0.0)
      : shape_(shape), channels_(channels), data_(shape.size() * channels, fill) {
    require_valid(shape_);
    if (channels_ == 0) throw std::invalid_argument("field needs at least one channel");
  }
  VectorField(GridShape shape, std::size_t channels, std::vector<double> data)
      : shape_(shape), channels_(channels), data_(std::move(data)) {
    require_valid(shape_);
    if (channels_ == 0) throw std::invalid_argument("field needs at least one channel");
    if (data_.size() != shape_.size() * channels_)
      throw std::invalid_argument("field data length must equal width*height*channels");
  }

  /// Stacks images as channels; all must share one shape.
  static VectorField from_channels(std::span<const ImageGrid> images) {
    if (images.empty()) throw std::invalid_argument("no channels given");
    VectorField out(images[0].shape(), images.size());
    for (std::size_t c = 0; c < images.size(); ++c) {
      if (images[c].shape() != out.shape())
        throw std::invalid_argument("channel shapes differ");
      std::copy(images[c].data().begin(), images[c].data().end(), out.channel(c).begin());
    }
    return out;
  }
  static VectorField from_image(const ImageGrid& img) {
    return VectorField(img.shape(), 1, img.data());
  }

  const GridShape& shape() const { return shape_; }
  std::size_t width() const { return shape_.width; }
  std::size_t height() const { return shape_.height; }
  std::size_t channels() const { return channels_; }
  std::size_t pixels() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  Boundary boundary() const { return shape_.boundary; }

  std::span<double> channel(std::size_t c) {
    assert(c < channels_);
    return std::span<double>(data_).subspan(c * pixels(), pixels());
  }
  std::span<const double> channel(std::size_t c) const {
    assert(c < channels_);
    return std::span<const double>(data_).subspan(c * pixels(), pixels());
  }
  ImageGrid channel_image(std::size_t c) const {
    auto ch = channel(c);
    return ImageGrid(shape_, std::vector<double>(ch.begin(), ch.end()));
  }

  double& operator()(std::size_t c, std::size_t x, std::size_t y) {
    return data_[c * pixels() + shape_.index(x, y)];
  }
  double operator()(std::size_t c, std::size_t x, std::size_t y) const {
    return data_[c * pixels() + shape_.index(x, y)];
  }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

 private:
  GridShape shape_{};
  std::size_t channels_ = 0;
  std::vector<double> data_;
};

// ---------------------------------------------------------------------------
// Vector-space helpers shared by all solvers. Any type exposing values() and
// copy semantics qualifies.

template <class T>
concept GridVector = requires(T a, const T b) {
  { a.values() } -> std::convertible_to<std::span<double>>;
  { b.values() } -> std::convertible_to<std::span<const double>>;
};

template <GridVector T>
double dot(const T& a, const T& b) {
  auto x = a.values();
  auto y = b.values();
  if (x.size() != y.size()) throw std::invalid_argument("dot: size mismatch");
  return std::inner_product(x.begin(), x.end(), y.begin(), 0.0);
}

/// Sum of squared entries (Euclidean image norm squared).
template <GridVector T>
double norm_sq(const T& a) {
  double s = 0.0;
  for (double v : a.values()) s += v * v;
  return s;
}

template <GridVector T>
double norm(const T& a) { return std::sqrt(norm_sq(a)); }

template <GridVector T>
double max_abs(const T& a) {
  double m = 0.0;
  for (double v : a.values()) m = std::max(m, std::abs(v));
  return m;
}

/// y += a * x
template <GridVector T>
void axpy(double a, const T& x, T& y) {
  auto xs = x.values();
  auto ys = y.values();
  if (xs.size() != ys.size()) throw std::invalid_argument("axpy: size mismatch");
  for (std::size_t i = 0; i < ys.size(); ++i) ys[i] += a * xs[i];
}

/// a * x + b * y
template <GridVector T>
T lincomb(double a, const T& x, double b, const T& y) {
  T out = x;
  auto o = out.values();
  auto ys = y.values();
  if (o.size() != ys.size()) throw std::invalid_argument("lincomb: size mismatch");
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = a * o[i] + b * ys[i];
  return out;
}

template <GridVector T>
T scaled(double a, T x) {
  for (double& v : x.values()) v *= a;
  return x;
}

template <GridVector T>
T difference(const T& x, const T& y) { return lincomb(1.0, x, -1.0, y); }

template <GridVector T>
bool all_finite(const T& a) {
  for (double v : a.values())
    if (!std::isfinite(v)) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Stencil kernels on raw planes. Forward differences use the boundary rule at
// the last column/row; backward differences are the matching -L^T.

namespace detail {

inline void forward_diff_x(std::span<const double> in, std::span<double> out,
                           const GridShape& s) {
  const std::size_t m = s.width;
  for (std::size_t y = 0; y < s.height; ++y) {
    const double* row = in.data() + y * m;
    double* o = out.data() + y * m;
    for (std::size_t x = 0; x + 1 < m; ++x) o[x] = row[x + 1] - row[x];
    o[m - 1] = s.boundary == Boundary::Periodic ? row[0] - row[m - 1] : 0.0;
  }
}

inline void forward_diff_y(std::span<const double> in, std::span<double> out,
                           const GridShape& s) {
  const std::size_t m = s.width;
  const std::size_t n = s.height;
  for (std::size_t y = 0; y + 1 < n; ++y)
    for (std::size_t x = 0; x < m; ++x)
      out[y * m + x] = in[(y + 1) * m + x] - in[y * m + x];
  for (std::size_t x = 0; x < m; ++x)
    out[(n - 1) * m + x] = s.boundary == Boundary::Periodic
                               ? in[x] - in[(n - 1) * m + x]
                               : 0.0;
}

// out = -Lx^T p. Symmetric: p(x) - p(x-1) with p(-1) = 0 and p(m-1) treated
// as zero (the forward difference vanishes there).
inline void backward_diff_x(std::span<const double> in, std::span<double> out,
                            const GridShape& s) {
  const std::size_t m = s.width;
  for (std::size_t y = 0; y < s.height; ++y) {
    const double* row = in.data() + y * m;
    double* o = out.data() + y * m;
    if (s.boundary == Boundary::Periodic) {
      o[0] = row[0] - row[m - 1];
      for (std::size_t x = 1; x < m; ++x) o[x] = row[x] - row[x - 1];
    } else if (m == 1) {
      o[0] = 0.0;
    } else {
      o[0] = row[0];
      for (std::size_t x = 1; x + 1 < m; ++x) o[x] = row[x] - row[x - 1];
      o[m - 1] = -row[m - 2];
    }
  }
}

inline void backward_diff_y(std::span<const double> in, std::span<double> out,
                            const GridShape& s) {
  const std::size_t m = s.width;
  const std::size_t n = s.height;
  if (s.boundary == Boundary::Periodic) {
    for (std::size_t x = 0; x < m; ++x) out[x] = in[x] - in[(n - 1) * m + x];
    for (std::size_t y = 1; y < n; ++y)
      for (std::size_t x = 0; x < m; ++x)
        out[y * m + x] = in[y * m + x] - in[(y - 1) * m + x];
    return;
  }
  if (n == 1) {
    for (std::size_t x = 0; x < m; ++x) out[x] = 0.0;
    return;
  }
  for (std::size_t x = 0; x < m; ++x) out[x] = in[x];
  for (std::size_t y = 1; y + 1 < n; ++y)
    for (std::size_t x = 0; x < m; ++x)
      out[y * m + x] = in[y * m + x] - in[(y - 1) * m + x];
  for (std::size_t x = 0; x < m; ++x) out[(n - 1) * m + x] = -in[(n - 2) * m + x];
}

}  // namespace detail

inline ImageGrid forward_diff_x(const ImageGrid& img) {
  ImageGrid out(img.shape());
  detail::forward_diff_x(img.values(), out.values(), img.shape());
  return out;
}
inline ImageGrid forward_diff_y(const ImageGrid& img) {
  ImageGrid out(img.shape());
  detail::forward_diff_y(img.values(), out.values(), img.shape());
  return out;
}
inline ImageGrid backward_diff_x(const ImageGrid& img) {
  ImageGrid out(img.shape());
  detail::backward_diff_x(img.values(), out.values(), img.shape());
  return out;
}
inline ImageGrid backward_diff_y(const ImageGrid& img) {
  ImageGrid out(img.shape());
  detail::backward_diff_y(img.values(), out.values(), img.shape());
  return out;
}

/// Gradient of every channel of a k-channel field; output has 2k channels
/// ordered (dx c0, dy c0, dx c1, dy c1, ...).
inline VectorField gradient(const VectorField& u) {
  VectorField g(u.shape(), 2 * u.channels());
  for (std::size_t c = 0; c < u.channels(); ++c) {
    detail::forward_diff_x(u.channel(c), g.channel(2 * c), u.shape());
    detail::forward_diff_y(u.channel(c), g.channel(2 * c + 1), u.shape());
  }
  return g;
}

inline VectorField gradient(const ImageGrid& img) {
  VectorField g(img.shape(), 2);
  detail::forward_diff_x(img.values(), g.channel(0), img.shape());
  detail::forward_diff_y(img.values(), g.channel(1), img.shape());
  return g;
}

/// div p = -Lx^T p1 - Ly^T p2 applied per channel pair; 2k channels in,
/// k channels out.
inline VectorField divergence_field(const VectorField& p) {
  if (p.channels() % 2 != 0)
    throw std::invalid_argument("divergence needs an even number of channels");
  VectorField out(p.shape(), p.channels() / 2);
  std::vector<double> tmp(p.pixels());
  for (std::size_t c = 0; c < out.channels(); ++c) {
    auto o = out.channel(c);
    detail::backward_diff_x(p.channel(2 * c), o, p.shape());
    detail::backward_diff_y(p.channel(2 * c + 1), tmp, p.shape());
    for (std::size_t i = 0; i < o.size(); ++i) o[i] += tmp[i];
  }
  return out;
}

inline ImageGrid divergence(const VectorField& p) {
  if (p.channels() != 2)
    throw std::invalid_argument("divergence of an image gradient needs exactly 2 channels");
  ImageGrid out(p.shape());
  std::vector<double> tmp(p.pixels());
  detail::backward_diff_x(p.channel(0), out.values(), p.shape());
  detail::backward_diff_y(p.channel(1), tmp, p.shape());
  auto o = out.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += tmp[i];
  return out;
}

/// Per-pixel Euclidean norm across all channels.
inline ImageGrid pixel_norm(const VectorField& p) {
  ImageGrid out(p.shape());
  auto o = out.values();
  for (std::size_t c = 0; c < p.channels(); ++c) {
    auto ch = p.channel(c);
    for (std::size_t i = 0; i < o.size(); ++i) o[i] += ch[i] * ch[i];
  }
  for (double& v : o) v = std::sqrt(v);
  return out;
}

inline double image_norm_sq(const ImageGrid& u) { return norm_sq(u); }
inline double image_norm_sq(const VectorField& p) { return norm_sq(p); }

/// Discrete Laplacian div(grad u); negative semidefinite.
inline ImageGrid laplacian(const ImageGrid& u) { return divergence(gradient(u)); }

}  // namespace vimg
