// Fast diagonal solvers for screened Laplacian systems.
//
// With symmetric boundaries the 1D operator Lᵀ L is diagonalized by the
// DCT-II / DCT-III pair (FFTW REDFT10 / REDFT01); periodic boundaries use the
// DFT. Plans are created once per transform shape and reused through FFTW's
// new-array execute interface.
#pragma once

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "vimg/grid.hpp"

namespace vimg {

enum class Axis { X, Y };

namespace detail {

// FFTW planning is not thread safe; execution of an existing plan is.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  // 2D real-to-real transform over a height x width row-major plane.
  fftw_plan r2r_2d(int height, int width, fftw_r2r_kind kind) {
    Key key{0, height, width, static_cast<int>(kind)};
    std::lock_guard lock(mu_);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    std::vector<double> a(static_cast<std::size_t>(height) * width), b(a.size());
    fftw_plan p = fftw_plan_r2r_2d(height, width, a.data(), b.data(), kind, kind,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
    return remember(key, p);
  }

  // Batched 1D real-to-real transform along one axis of the plane.
  fftw_plan r2r_axis(int height, int width, Axis axis, fftw_r2r_kind kind) {
    Key key{axis == Axis::X ? 1 : 2, height, width, static_cast<int>(kind)};
    std::lock_guard lock(mu_);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    std::vector<double> a(static_cast<std::size_t>(height) * width), b(a.size());
    int n = axis == Axis::X ? width : height;
    int howmany = axis == Axis::X ? height : width;
    int stride = axis == Axis::X ? 1 : width;
    int dist = axis == Axis::X ? width : 1;
    fftw_plan p = fftw_plan_many_r2r(1, &n, howmany, a.data(), nullptr, stride, dist,
                                     b.data(), nullptr, stride, dist, &kind,
                                     FFTW_ESTIMATE | FFTW_UNALIGNED);
    return remember(key, p);
  }

  // 2D complex transform; sign is FFTW_FORWARD or FFTW_BACKWARD.
  fftw_plan dft_2d(int height, int width, int sign) {
    Key key{3, height, width, sign};
    std::lock_guard lock(mu_);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    std::vector<std::complex<double>> a(static_cast<std::size_t>(height) * width), b(a.size());
    fftw_plan p = fftw_plan_dft_2d(height, width, reinterpret_cast<fftw_complex*>(a.data()),
                                   reinterpret_cast<fftw_complex*>(b.data()), sign,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
    return remember(key, p);
  }

  PlanCache(const PlanCache&) = delete;
  PlanCache& operator=(const PlanCache&) = delete;

 private:
  using Key = std::tuple<int, int, int, int>;
  PlanCache() = default;
  ~PlanCache() {
    for (auto& [k, p] : plans_) fftw_destroy_plan(p);
  }
  fftw_plan remember(const Key& key, fftw_plan p) {
    if (!p) throw std::runtime_error("FFTW failed to create a plan");
    plans_.emplace(key, p);
    return p;
  }

  std::mutex mu_;
  std::map<Key, fftw_plan> plans_;
};

inline double neumann_eigenvalue(std::size_t j, std::size_t n) {
  return 2.0 * (std::cos(std::numbers::pi * static_cast<double>(j) / static_cast<double>(n)) - 1.0);
}

inline double periodic_eigenvalue(std::size_t j, std::size_t n) {
  return 2.0 * (std::cos(2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n)) - 1.0);
}

inline double eigenvalue(std::size_t j, std::size_t n, Boundary b) {
  return b == Boundary::Symmetric ? neumann_eigenvalue(j, n) : periodic_eigenvalue(j, n);
}

inline void dft2(std::span<const std::complex<double>> in, std::span<std::complex<double>> out,
                 const GridShape& s, int sign) {
  fftw_plan p = PlanCache::instance().dft_2d(static_cast<int>(s.height), static_cast<int>(s.width), sign);
  fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(in.data())),
                   reinterpret_cast<fftw_complex*>(out.data()));
}

}  // namespace detail

/// Eigenvalues of the symmetric-boundary 1D second-difference matrix.
inline std::vector<double> eigenvalues_1d(std::size_t n) {
  if (n < 2) throw std::invalid_argument("eigenvalues_1d needs n >= 2");
  std::vector<double> out(n);
  for (std::size_t j = 0; j < n; ++j) out[j] = detail::neumann_eigenvalue(j, n);
  return out;
}

/// Largest eigenvalue of -div grad on the grid (the squared operator norm of
/// the gradient). Strictly below 8.
inline double gradient_norm_sq(const GridShape& s) {
  double mx = 0.0, my = 0.0;
  for (std::size_t j = 0; j < s.width; ++j) mx = std::min(mx, detail::eigenvalue(j, s.width, s.boundary));
  for (std::size_t j = 0; j < s.height; ++j) my = std::min(my, detail::eigenvalue(j, s.height, s.boundary));
  return -(mx + my);
}

/// Solves (a I - b div grad) u = f. The eigenvalue plane is built once.
class ScreenedSolver {
 public:
  ScreenedSolver(GridShape shape, double a, double b) : shape_(shape), a_(a), b_(b) {
    require_valid(shape_);
    if (!(a > 0.0)) throw std::invalid_argument("screened solve needs a > 0");
    if (!(b >= 0.0)) throw std::invalid_argument("screened solve needs b >= 0");
    const std::size_t m = shape_.width, n = shape_.height;
    denom_.resize(m * n);
    for (std::size_t r = 0; r < n; ++r) {
      double ly = detail::eigenvalue(r, n, shape_.boundary);
      for (std::size_t q = 0; q < m; ++q)
        denom_[r * m + q] = a_ - b_ * (detail::eigenvalue(q, m, shape_.boundary) + ly);
    }
  }

  const GridShape& shape() const { return shape_; }
  double a() const { return a_; }
  double b() const { return b_; }
  std::span<const double> eigenvalue_plane() const { return denom_; }

  void solve(std::span<const double> f, std::span<double> u) const {
    if (f.size() != shape_.size() || u.size() != shape_.size())
      throw std::invalid_argument("screened solve: size mismatch");
    if (b_ == 0.0) {
      for (std::size_t i = 0; i < f.size(); ++i) u[i] = f[i] / a_;
      return;
    }
    if (shape_.boundary == Boundary::Symmetric)
      solve_dct(f, u);
    else
      solve_dft(f, u);
  }

  ImageGrid solve(const ImageGrid& f) const {
    if (f.shape() != shape_) throw std::invalid_argument("screened solve: shape mismatch");
    ImageGrid u(shape_);
    solve(f.values(), u.values());
    return u;
  }

  /// Applies the forward operator (a I - b div grad).
  ImageGrid apply(const ImageGrid& u) const {
    ImageGrid lap = laplacian(u);
    return lincomb(a_, u, -b_, lap);
  }

 private:
  void solve_dct(std::span<const double> f, std::span<double> u) const {
    const int h = static_cast<int>(shape_.height), w = static_cast<int>(shape_.width);
    auto& cache = detail::PlanCache::instance();
    fftw_plan fwd = cache.r2r_2d(h, w, FFTW_REDFT10);
    fftw_plan inv = cache.r2r_2d(h, w, FFTW_REDFT01);
    std::vector<double> spec(shape_.size());
    fftw_execute_r2r(fwd, const_cast<double*>(f.data()), spec.data());
    const double scale = 1.0 / (4.0 * static_cast<double>(shape_.size()));
    for (std::size_t i = 0; i < spec.size(); ++i) spec[i] *= scale / denom_[i];
    fftw_execute_r2r(inv, spec.data(), u.data());
  }

  void solve_dft(std::span<const double> f, std::span<double> u) const {
    std::vector<std::complex<double>> in(f.begin(), f.end()), spec(f.size());
    detail::dft2(in, spec, shape_, FFTW_FORWARD);
    const double scale = 1.0 / static_cast<double>(shape_.size());
    for (std::size_t i = 0; i < spec.size(); ++i) spec[i] *= scale / denom_[i];
    detail::dft2(spec, in, shape_, FFTW_BACKWARD);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = in[i].real();
  }

  GridShape shape_;
  double a_, b_;
  std::vector<double> denom_;
};

inline ImageGrid solve_screened_laplacian(const ImageGrid& f, double a, double b) {
  return ScreenedSolver(f.shape(), a, b).solve(f);
}

/// Solves (γ I + β Lᵀ L) w = f along a single axis, i.e. γ I − β ∂ᵀ∂ with
/// ∂ the forward difference on that axis.
class AxisSolver {
 public:
  AxisSolver(GridShape shape, Axis axis, double gamma, double beta)
      : shape_(shape), axis_(axis), gamma_(gamma), beta_(beta) {
    require_valid(shape_);
    if (!(gamma > 0.0)) throw std::invalid_argument("axis solve needs gamma > 0");
    if (!(beta >= 0.0)) throw std::invalid_argument("axis solve needs beta >= 0");
    const std::size_t len = axis == Axis::X ? shape_.width : shape_.height;
    denom_.resize(len);
    for (std::size_t j = 0; j < len; ++j)
      denom_[j] = gamma_ - beta_ * detail::eigenvalue(j, len, shape_.boundary);
  }

  const GridShape& shape() const { return shape_; }
  Axis axis() const { return axis_; }
  std::span<const double> eigenvalues() const { return denom_; }

  void solve(std::span<const double> f, std::span<double> w) const {
    if (f.size() != shape_.size() || w.size() != shape_.size())
      throw std::invalid_argument("axis solve: size mismatch");
    if (beta_ == 0.0) {
      for (std::size_t i = 0; i < f.size(); ++i) w[i] = f[i] / gamma_;
      return;
    }
    if (shape_.boundary == Boundary::Symmetric)
      solve_dct(f, w);
    else
      solve_dft(f, w);
  }

  ImageGrid solve(const ImageGrid& f) const {
    if (f.shape() != shape_) throw std::invalid_argument("axis solve: shape mismatch");
    ImageGrid w(shape_);
    solve(f.values(), w.values());
    return w;
  }

  /// Applies γ w + β Lᵀ L w along the axis.
  ImageGrid apply(const ImageGrid& w) const {
    ImageGrid d = axis_ == Axis::X ? forward_diff_x(w) : forward_diff_y(w);
    ImageGrid dd = axis_ == Axis::X ? backward_diff_x(d) : backward_diff_y(d);
    return lincomb(gamma_, w, -beta_, dd);
  }

 private:
  void solve_dct(std::span<const double> f, std::span<double> w) const {
    const int h = static_cast<int>(shape_.height), wd = static_cast<int>(shape_.width);
    auto& cache = detail::PlanCache::instance();
    fftw_plan fwd = cache.r2r_axis(h, wd, axis_, FFTW_REDFT10);
    fftw_plan inv = cache.r2r_axis(h, wd, axis_, FFTW_REDFT01);
    std::vector<double> spec(shape_.size());
    fftw_execute_r2r(fwd, const_cast<double*>(f.data()), spec.data());
    const std::size_t m = shape_.width;
    const double scale = 1.0 / (2.0 * static_cast<double>(denom_.size()));
    for (std::size_t i = 0; i < spec.size(); ++i) {
      std::size_t j = axis_ == Axis::X ? i % m : i / m;
      spec[i] *= scale / denom_[j];
    }
    fftw_execute_r2r(inv, spec.data(), w.data());
  }

  // Periodic axis solves are rare; a 2D DFT with a separable plane suffices.
  void solve_dft(std::span<const double> f, std::span<double> w) const {
    std::vector<std::complex<double>> in(f.begin(), f.end()), spec(f.size());
    detail::dft2(in, spec, shape_, FFTW_FORWARD);
    const std::size_t m = shape_.width;
    const double scale = 1.0 / static_cast<double>(shape_.size());
    for (std::size_t i = 0; i < spec.size(); ++i) {
      std::size_t j = axis_ == Axis::X ? i % m : i / m;
      spec[i] *= scale / denom_[j];
    }
    detail::dft2(spec, in, shape_, FFTW_BACKWARD);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = in[i].real();
  }

  GridShape shape_;
  Axis axis_;
  double gamma_, beta_;
  std::vector<double> denom_;
};

inline ImageGrid solve_axis_screened(const ImageGrid& f, Axis axis, double gamma, double beta) {
  return AxisSolver(f.shape(), axis, gamma, beta).solve(f);
}

/// Complex field over a grid (k-space data).
struct ComplexField {
  GridShape shape;
  std::vector<std::complex<double>> data;

  ComplexField() = default;
  explicit ComplexField(GridShape s) : shape(s), data(s.size()) {}
};

/// Orthonormal 2D DFT of a real image.
inline ComplexField unitary_dft_2d(const ImageGrid& img) {
  ComplexField out(img.shape());
  std::vector<std::complex<double>> in(img.data().begin(), img.data().end());
  detail::dft2(in, out.data, img.shape(), FFTW_FORWARD);
  const double s = 1.0 / std::sqrt(static_cast<double>(img.size()));
  for (auto& c : out.data) c *= s;
  return out;
}

inline ComplexField unitary_dft_2d(const ComplexField& x) {
  ComplexField out(x.shape);
  detail::dft2(x.data, out.data, x.shape, FFTW_FORWARD);
  const double s = 1.0 / std::sqrt(static_cast<double>(x.data.size()));
  for (auto& c : out.data) c *= s;
  return out;
}

inline ComplexField inverse_unitary_dft_2d(const ComplexField& spec) {
  ComplexField out(spec.shape);
  detail::dft2(spec.data, out.data, spec.shape, FFTW_BACKWARD);
  const double s = 1.0 / std::sqrt(static_cast<double>(spec.data.size()));
  for (auto& c : out.data) c *= s;
  return out;
}

inline ImageGrid real_part(const ComplexField& x) {
  ImageGrid out(x.shape);
  for (std::size_t i = 0; i < x.data.size(); ++i) out.data()[i] = x.data[i].real();
  return out;
}

inline double max_imag(const ComplexField& x) {
  double m = 0.0;
  for (auto& c : x.data) m = std::max(m, std::abs(c.imag()));
  return m;
}

}  // namespace vimg
