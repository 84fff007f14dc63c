// Two-loop accelerated solver for ½‖Au − f‖² + R(u), with the MRI model
// A = mask ⊙ F, sampling masks, and optical flow on the linearized
// brightness-constancy term.
//
// The outer loop takes a gradient step on the data term and applies the
// prox of t·R by running TV or TSV dual denoising with (λ, β, γ) scaled by t.
// The inner dual is warm-started from the previous outer iteration.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "vimg/accel.hpp"
#include "vimg/baselines.hpp"
#include "vimg/composite_opt.hpp"
#include "vimg/grid.hpp"
#include "vimg/spectral.hpp"
#include "vimg/synth.hpp"

namespace vimg {

using Regularizer = std::variant<TVParams, TSVParams>;

/// A: images → complex measurements. Real models leave the imaginary part 0.
struct LinearForwardModel {
  GridShape shape;
  std::function<ComplexField(const ImageGrid&)> apply;
  std::function<ImageGrid(const ComplexField&)> adjoint;
  double spectral_norm_sq = 1.0;  // largest eigenvalue of AᵀA
};

inline LinearForwardModel identity_model(const GridShape& s) {
  LinearForwardModel m;
  m.shape = s;
  m.apply = [](const ImageGrid& u) {
    ComplexField out(u.shape());
    for (std::size_t i = 0; i < u.size(); ++i) out.data[i] = u.data()[i];
    return out;
  };
  m.adjoint = [](const ComplexField& x) { return real_part(x); };
  return m;
}

/// Real inner product of complex fields viewed as ℝ²ᴺ.
inline double real_dot(const ComplexField& a, const ComplexField& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i)
    s += a.data[i].real() * b.data[i].real() + a.data[i].imag() * b.data[i].imag();
  return s;
}

// ---------------------------------------------------------------------------
// Sampling masks (unshifted DFT order: index 0 is the DC term)

struct SamplingMask {
  ImageGrid mask;

  double sampling_rate() const {
    double s = 0.0;
    for (double v : mask.values()) s += v;
    return s / static_cast<double>(mask.size());
  }
};

enum class MaskPattern { Columns, LowFrequency, Bernoulli };

inline MaskPattern parse_mask_pattern(const std::string& s) {
  if (s == "columns") return MaskPattern::Columns;
  if (s == "lowfreq") return MaskPattern::LowFrequency;
  if (s == "bernoulli") return MaskPattern::Bernoulli;
  throw std::invalid_argument("unknown mask pattern '" + s + "' (columns|lowfreq|bernoulli)");
}

inline SamplingMask make_mask(const ImageGrid& values) {
  for (double v : values.values())
    if (v != 0.0 && v != 1.0) throw std::invalid_argument("mask entries must be 0 or 1");
  return {values};
}

/// Conjugate-symmetric random mask with about `rate` of the samples, DC kept.
/// Closing the mask under k → −k makes AᵀA = Re Fᴴ D F a projection.
/// Columns: whole k-space columns. LowFrequency: a central band of about a
/// third of the budget plus random samples. Bernoulli: independent pairs.
inline SamplingMask random_mask(const GridShape& s, double rate, MaskPattern pattern, std::uint64_t seed) {
  if (!(rate > 0.0 && rate <= 1.0)) throw std::invalid_argument("sampling rate must lie in (0, 1]");
  ImageGrid m(s);
  const std::size_t W = s.width, H = s.height;
  const auto target = static_cast<std::size_t>(std::ceil(rate * static_cast<double>(s.size())));
  std::size_t count = 0;
  auto set = [&](std::size_t x, std::size_t y) {
    if (m(x, y) == 0.0) ++count, m(x, y) = 1.0;
    const std::size_t xc = (W - x) % W, yc = (H - y) % H;
    if (m(xc, yc) == 0.0) ++count, m(xc, yc) = 1.0;
  };
  NormalStream rng(seed);
  set(0, 0);
  if (pattern == MaskPattern::Columns) {
    auto set_col = [&](std::size_t x) {
      for (std::size_t y = 0; y < H; ++y) set(x, y);
    };
    set_col(0);
    std::vector<std::size_t> order(W);
    for (std::size_t i = 0; i < W; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng.engine());
    for (std::size_t x : order) {
      if (count >= target) break;
      set_col(x);
    }
    return {m};
  }
  if (pattern == MaskPattern::LowFrequency) {
    const double band = std::sqrt(static_cast<double>(target) / 3.0) / 2.0;
    auto dist = [](std::size_t i, std::size_t n) { return static_cast<double>(std::min(i, n - i)); };
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t x = 0; x < W; ++x)
        if (dist(x, W) <= band && dist(y, H) <= band) set(x, y);
  }
  std::vector<std::size_t> order(s.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng.engine());
  for (int pass = 0; pass < 2; ++pass)
    for (std::size_t i : order) {
      if (count >= target) break;
      // Bernoulli keeps each pair with probability ½ on the first pass.
      if (pass == 0 && pattern == MaskPattern::Bernoulli && rng.uniform() > 0.5) continue;
      set(i % W, i / W);
    }
  return {m};
}

// ---------------------------------------------------------------------------
// MRI

/// A = mask ⊙ F (orthonormal DFT), Aᵀm = Re Fᴴ(mask ⊙ m), ‖AᵀA‖ = 1.
inline LinearForwardModel mri_model(const SamplingMask& mask) {
  LinearForwardModel m;
  m.shape = mask.mask.shape();
  auto d = std::make_shared<const std::vector<double>>(mask.mask.data());
  m.apply = [d](const ImageGrid& u) {
    ComplexField k = unitary_dft_2d(u);
    for (std::size_t i = 0; i < k.data.size(); ++i) k.data[i] *= (*d)[i];
    return k;
  };
  m.adjoint = [d](const ComplexField& x) {
    ComplexField k = x;
    for (std::size_t i = 0; i < k.data.size(); ++i) k.data[i] *= (*d)[i];
    return real_part(inverse_unitary_dft_2d(k));
  };
  m.spectral_norm_sq = 1.0;
  return m;
}

/// Image from undersampled data by the adjoint alone.
inline ImageGrid zero_filled(const LinearForwardModel& A, const ComplexField& data) { return A.adjoint(data); }

// ---------------------------------------------------------------------------
// Two-loop solver

struct SmoothDataTerm {
  std::function<double(const VectorField&)> value;
  std::function<VectorField(const VectorField&)> gradient;
  double lipschitz = 1.0;
};

struct TwoLoopOptions {
  std::size_t outer_iters = 100;
  std::size_t inner_iters = 100;
  bool accelerate = true;
  bool record = true;
  // Optional reference image: when set, each record's grad_norm holds the
  // distance ‖u − reference‖ instead of the gradient mapping norm.
  const VectorField* reference = nullptr;
  std::function<bool(std::size_t, std::span<const double>)> monitor;
};

struct TwoLoopResult {
  VectorField u;
  VectorField w;  // TSV auxiliary field from the last prox; empty for TV
  Trace trace;

  ImageGrid image() const { return u.channel_image(0); }
};

namespace detail {

/// Prox of t·R at z, warm-started from and updating `dual`.
inline DenoiseResult regularizer_prox(const VectorField& z, const Regularizer& reg, double t,
                                      std::size_t inner_iters, VectorField& dual) {
  SolverOptions o;
  o.max_iters = inner_iters;
  o.record = false;
  DenoiseResult r;
  if (const auto* tv = std::get_if<TVParams>(&reg)) {
    TVParams s = *tv;
    s.lambda *= t;
    r = tv_denoise(z, s, CompositeSolver::AcceleratedRestart, o, dual.size() ? &dual : nullptr);
  } else {
    TSVParams s = std::get<TSVParams>(reg);
    s.lambda *= t;
    s.beta *= t;
    s.gamma *= t;
    r = tsv_denoise(z, s, CompositeSolver::AcceleratedRestart, o, dual.size() ? &dual : nullptr);
  }
  dual = r.dual;
  return r;
}

inline double regularizer_value(const VectorField& u, const VectorField& w, const Regularizer& reg) {
  if (const auto* tv = std::get_if<TVParams>(&reg)) return tv->lambda * tv_value(u, tv->variant);
  return tsv_regularizer(u, w, std::get<TSVParams>(reg));
}

inline void validate(const Regularizer& reg) {
  std::visit([](const auto& p) { vimg::validate(p); }, reg);
}

}  // namespace detail

/// Outer iterations u⁺ = prox_{tR}(v − t∇D(v)) with t = 1/ℓ and scheme-1
/// momentum (q = 0) on v, or plain proximal gradient without acceleration.
inline TwoLoopResult two_loop_apga(const SmoothDataTerm& data, const VectorField& x0, const Regularizer& reg,
                                   const TwoLoopOptions& opt) {
  if (opt.inner_iters == 0) throw std::invalid_argument("inner iteration budget must be positive");
  detail::validate(reg);
  const double t = 1.0 / data.lipschitz;
  TwoLoopResult out;
  VectorField dual;
  auto step = [&](const VectorField& v) {
    VectorField z = lincomb(1.0, v, -t, data.gradient(v));
    DenoiseResult r = detail::regularizer_prox(z, reg, t, opt.inner_iters, dual);
    out.w = std::move(r.w);
    return std::move(r.u);
  };
  auto log = [&](std::size_t, const VectorField& u, IterationRecord& rec) {
    if (!opt.record) return false;
    VectorField w = out.w;
    if (std::holds_alternative<TSVParams>(reg) && w.size() == 0) w = VectorField(u.shape(), 2 * u.channels());
    rec.objective = data.value(u) + detail::regularizer_value(u, w, reg);
    if (opt.reference) rec.grad_norm = norm(difference(u, *opt.reference));
    return false;
  };
  SolverOptions so;
  so.max_iters = opt.outer_iters;
  so.record = opt.record;
  so.monitor = opt.monitor;
  if (opt.accelerate)
    out.u = accelerated_loop(x0, Scheme1Momentum(0.0), step, NeverRestart{}, log, so, out.trace);
  else
    out.u = accelerated_loop(x0, ConstantMomentum(0.0), step, NeverRestart{}, log, so, out.trace);
  return out;
}

/// ½‖Au − f‖² + R(u), started from Aᵀf.
inline TwoLoopResult advanced_apga(const LinearForwardModel& A, const ComplexField& f, const Regularizer& reg,
                                   const TwoLoopOptions& opt) {
  if (f.shape != A.shape) throw std::invalid_argument("measurement shape does not match the model");
  SmoothDataTerm D;
  D.value = [&A, &f](const VectorField& u) {
    ComplexField r = A.apply(u.channel_image(0));
    for (std::size_t i = 0; i < r.data.size(); ++i) r.data[i] -= f.data[i];
    return 0.5 * real_dot(r, r);
  };
  D.gradient = [&A, &f](const VectorField& u) {
    ComplexField r = A.apply(u.channel_image(0));
    for (std::size_t i = 0; i < r.data.size(); ++i) r.data[i] -= f.data[i];
    return VectorField::from_image(A.adjoint(r));
  };
  D.lipschitz = A.spectral_norm_sq;
  return two_loop_apga(D, VectorField::from_image(A.adjoint(f)), reg, opt);
}

inline TwoLoopResult mri_reconstruct(const ComplexField& kspace, const SamplingMask& mask, const Regularizer& reg,
                                     const TwoLoopOptions& opt) {
  return advanced_apga(mri_model(mask), kspace, reg, opt);
}

// ---------------------------------------------------------------------------
// Optical flow

struct FlowPair {
  ImageGrid Ix, Iy, It;
  ImageGrid source, target;
};

/// Ix, Iy: mean of the forward differences of both frames. It = target − source.
inline FlowPair flow_derivatives(const ImageGrid& source, const ImageGrid& target) {
  if (source.shape() != target.shape()) throw std::invalid_argument("flow frames differ in shape");
  FlowPair p;
  p.source = source;
  p.target = target;
  p.Ix = lincomb(0.5, forward_diff_x(source), 0.5, forward_diff_x(target));
  p.Iy = lincomb(0.5, forward_diff_y(source), 0.5, forward_diff_y(target));
  p.It = difference(target, source);
  return p;
}

/// Largest eigenvalue of [[Ix², IxIy], [IyIx, Iy²]] at each pixel, Ix² + Iy².
inline ImageGrid flow_hessian_bound(const FlowPair& p) {
  ImageGrid out(p.Ix.shape());
  for (std::size_t i = 0; i < out.size(); ++i)
    out.data()[i] = p.Ix.data()[i] * p.Ix.data()[i] + p.Iy.data()[i] * p.Iy.data()[i];
  return out;
}

/// Ix ⊙ u + Iy ⊙ v + It.
inline ImageGrid flow_residual(const FlowPair& p, const VectorField& flow) {
  ImageGrid r = p.It;
  auto u = flow.channel(0), v = flow.channel(1);
  for (std::size_t i = 0; i < r.size(); ++i) r.data()[i] += p.Ix.data()[i] * u[i] + p.Iy.data()[i] * v[i];
  return r;
}

/// ½‖Ix ⊙ u + Iy ⊙ v + It‖².
inline double flow_data_value(const FlowPair& p, const VectorField& flow) {
  return 0.5 * norm_sq(flow_residual(p, flow));
}

inline SmoothDataTerm flow_data_term(const FlowPair& p) {
  SmoothDataTerm D;
  D.value = [&p](const VectorField& x) { return flow_data_value(p, x); };
  D.gradient = [&p](const VectorField& x) {
    const ImageGrid r = flow_residual(p, x);
    VectorField g(x.shape(), 2);
    auto gu = g.channel(0), gv = g.channel(1);
    for (std::size_t i = 0; i < r.size(); ++i) {
      gu[i] = p.Ix.data()[i] * r.data()[i];
      gv[i] = p.Iy.data()[i] * r.data()[i];
    }
    return g;
  };
  D.lipschitz = 2.0;  // step ½
  return D;
}

/// Flow (u, v) from zero with step ½; the prox denoises both channels jointly.
inline TwoLoopResult optical_flow(const FlowPair& p, const Regularizer& reg, const TwoLoopOptions& opt) {
  return two_loop_apga(flow_data_term(p), VectorField(p.It.shape(), 2), reg, opt);
}

/// 8-bit RGB raster.
struct ColorImage {
  std::size_t width = 0, height = 0;
  std::vector<std::uint8_t> rgb;
};

/// Hue = direction, value = |flow| / max|flow|, saturation 1.
inline ColorImage flow_to_hsv(const VectorField& flow) {
  if (flow.channels() != 2) throw std::invalid_argument("flow field needs 2 channels");
  ColorImage img{flow.width(), flow.height(), std::vector<std::uint8_t>(3 * flow.pixels(), 0)};
  const ImageGrid mag = pixel_norm(flow);
  double vmax = 0.0;
  for (double v : mag.values()) vmax = std::max(vmax, v);
  if (vmax == 0.0) return img;
  auto u = flow.channel(0), v = flow.channel(1);
  for (std::size_t i = 0; i < flow.pixels(); ++i) {
    double hue = std::atan2(v[i], u[i]) * 180.0 / std::numbers::pi;
    if (hue < 0.0) hue += 360.0;
    if (hue >= 360.0) hue -= 360.0;
    const double val = mag.data()[i] / vmax;
    const double h6 = hue / 60.0;
    const int sector = static_cast<int>(h6) % 6;
    const double frac = h6 - std::floor(h6);
    const double p = 0.0, q = val * (1.0 - frac), tt = val * frac;
    double r = 0, g = 0, b = 0;
    switch (sector) {
      case 0: r = val, g = tt, b = p; break;
      case 1: r = q, g = val, b = p; break;
      case 2: r = p, g = val, b = tt; break;
      case 3: r = p, g = q, b = val; break;
      case 4: r = tt, g = p, b = val; break;
      default: r = val, g = p, b = q; break;
    }
    img.rgb[3 * i] = static_cast<std::uint8_t>(std::lround(255.0 * r));
    img.rgb[3 * i + 1] = static_cast<std::uint8_t>(std::lround(255.0 * g));
    img.rgb[3 * i + 2] = static_cast<std::uint8_t>(std::lround(255.0 * b));
  }
  return img;
}

/// Hue in degrees of an RGB triple (the inverse of the mapping above).
inline double rgb_hue(std::uint8_t r8, std::uint8_t g8, std::uint8_t b8) {
  const double r = r8, g = g8, b = b8;
  const double mx = std::max({r, g, b}), mn = std::min({r, g, b}), d = mx - mn;
  if (d == 0.0) return 0.0;
  double h;
  if (mx == r)
    h = std::fmod((g - b) / d, 6.0);
  else if (mx == g)
    h = (b - r) / d + 2.0;
  else
    h = (r - g) / d + 4.0;
  h *= 60.0;
  return h < 0.0 ? h + 360.0 : h;
}

// ---------------------------------------------------------------------------
// Reference solver

/// Scaled ADMM on ½‖Au − f‖² + λTV(u) with w = ∇u. The u-step solves
/// (AᵀA − ρ div∇)u = Aᵀf − ρ div(w − q) by conjugate gradients.
inline ImageGrid admm_linear_tv(const LinearForwardModel& A, const ComplexField& f, const TVParams& prm,
                                double rho, std::size_t iters, double cg_tol = 1e-12) {
  validate(prm);
  if (!(rho > 0.0)) throw std::invalid_argument("ADMM needs rho > 0");
  const GridShape s = A.shape;
  const ImageGrid atf = A.adjoint(f);
  auto op = [&](const ImageGrid& x) {
    ImageGrid y = A.adjoint(A.apply(x));
    axpy(-rho, laplacian(x), y);
    return y;
  };
  ImageGrid u = atf;
  VectorField w(s, 2), q(s, 2);
  for (std::size_t k = 0; k < iters; ++k) {
    ImageGrid b = atf;
    axpy(-rho, divergence(difference(w, q)), b);
    ImageGrid r = difference(b, op(u));
    ImageGrid d = r;
    double rr = norm_sq(r);
    const double stop = cg_tol * cg_tol * std::max(norm_sq(b), 1e-300);
    for (std::size_t j = 0; j < 10 * s.size() && rr > stop; ++j) {
      const ImageGrid Ad = op(d);
      const double a = rr / dot(d, Ad);
      axpy(a, d, u);
      axpy(-a, Ad, r);
      const double rr_next = norm_sq(r);
      d = lincomb(1.0, r, rr_next / rr, d);
      rr = rr_next;
    }
    const VectorField g = gradient(u);
    w = lincomb(1.0, g, 1.0, q);
    detail::shrink_inplace(w, prm.lambda / rho, prm.variant);
    axpy(1.0, difference(g, w), q);
  }
  return u;
}

}  // namespace vimg
