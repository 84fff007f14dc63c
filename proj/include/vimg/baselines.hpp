// Comparison solvers for TV and TSV denoising: ADMM with the spectral
// u-solve and Chambolle-Pock primal-dual iterations.
//
// Both report the same certificate as the dual solvers. The ADMM multiplier
// ρq and the Chambolle-Pock dual iterate map to a TV/TSV dual point, which is
// projected onto the unit ball before the gap is evaluated.
#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>

#include "vimg/accel.hpp"
#include "vimg/composite_opt.hpp"
#include "vimg/grid.hpp"
#include "vimg/spectral.hpp"

namespace vimg {

struct AdmmConfig {
  double rho = 4.0;
};

struct PdConfig {
  double tau = 0.0;
  double sigma = 0.0;
  double theta = 1.0;
};

/// τ = σ = 1/(λ√8).
inline PdConfig pd_default_tv(double lambda) {
  const double s = 1.0 / (lambda * std::sqrt(8.0));
  return {s, s, 1.0};
}

/// τ = σ = 1/(3λ), from ‖[λ∇, −λI]‖² < 9λ².
inline PdConfig pd_default_tsv(double lambda) {
  const double s = 1.0 / (3.0 * lambda);
  return {s, s, 1.0};
}

struct BaselineResult : DenoiseResult {
  double primal_residual = 0.0;  // ADMM: ‖∇u − w − z‖ (TSV) or ‖∇u − w‖ (TV)
  double dual_residual = 0.0;    // ADMM: ρ‖div(z⁺ − z)‖
};

namespace detail {

inline void validate(const AdmmConfig& c) {
  if (!(c.rho > 0.0)) throw std::invalid_argument("ADMM needs rho > 0");
}

/// τσ‖K‖² < 1 with ‖K‖² = scale² · (‖∇‖² + extra).
inline void validate_pd(const PdConfig& c, const GridShape& s, double scale, double extra) {
  if (!(c.tau > 0.0) || !(c.sigma > 0.0)) throw std::invalid_argument("primal-dual steps must be positive");
  if (!(c.theta >= 0.0 && c.theta <= 1.0)) throw std::invalid_argument("primal-dual theta must lie in [0, 1]");
  const double L2 = scale * scale * (gradient_norm_sq(s) + extra);
  if (!(c.tau * c.sigma * L2 < 1.0)) throw std::invalid_argument("primal-dual steps violate tau*sigma*L^2 < 1");
}

/// Soft shrinkage, the prox of κ‖·‖ (joint per pixel, or per entry).
inline void shrink_inplace(VectorField& z, double kappa, TVVariant variant) {
  if (variant == TVVariant::Anisotropic) {
    for (double& v : z.values()) v = v > kappa ? v - kappa : (v < -kappa ? v + kappa : 0.0);
    return;
  }
  const ImageGrid n = pixel_norm(z);
  auto nv = n.values();
  for (std::size_t c = 0; c < z.channels(); ++c) {
    auto ch = z.channel(c);
    for (std::size_t i = 0; i < ch.size(); ++i) ch[i] = nv[i] > kappa ? ch[i] * (1.0 - kappa / nv[i]) : 0.0;
  }
}

/// Records one iterate; objective and gap are filled when wanted.
class BaselineLog {
 public:
  BaselineLog(Trace& trace, const SolverOptions& opt, bool has_gap) : trace_(trace), opt_(opt) {
    trace_.has_gap = has_gap;
  }

  bool wants(std::size_t k) const {
    if (opt_.record) return true;
    if (!(opt_.tol > 0.0)) return false;
    return opt_.check_every <= 1 || k % opt_.check_every == 0 || k == opt_.max_iters;
  }

  /// Returns true to stop.
  bool push(std::size_t k, std::span<const double> x, std::optional<double> objective,
            std::optional<double> gap) {
    IterationRecord rec;
    rec.iter = k;
    if (objective) rec.objective = *objective;
    rec.gap = gap;
    rec.elapsed_ms = clock_.ms();
    trace_.records.push_back(rec);
    bool stop = opt_.tol > 0.0 && gap && *gap <= opt_.tol;
    if (opt_.monitor && !opt_.monitor(k, x)) stop = true;
    return stop;
  }

 private:
  Trace& trace_;
  const SolverOptions& opt_;
  Stopwatch clock_;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// ADMM

/// Scaled-form ADMM on ½‖u − f‖² + λ‖w‖ s.t. w = ∇u:
///   u ← (I − ρ div∇)⁻¹ (f − ρ div(w − q)),  w ← shrink(∇u + q, λ/ρ),  q ← q + ∇u − w.
inline BaselineResult admm_tv(const VectorField& f, const TVParams& prm, const AdmmConfig& cfg = {},
                              const SolverOptions& opt = {}) {
  validate(prm);
  detail::validate(cfg);
  const double rho = cfg.rho, lam = prm.lambda;
  const std::size_t k2 = 2 * f.channels();
  const ScreenedSolver solver(f.shape(), 1.0, rho);
  BaselineResult out;
  detail::BaselineLog log(out.trace, opt, true);
  VectorField u = f, w(f.shape(), k2), q(f.shape(), k2);
  auto certify = [&](std::size_t k) {
    if (!log.wants(k)) return log.push(k, u.values(), std::nullopt, std::nullopt);
    VectorField p = project_unit_ball(scaled(rho / lam, q), prm.variant);
    const double primal = tv_primal_value(u, f, prm);
    return log.push(k, u.values(), primal, primal - tv_dual_value(p, f, prm));
  };
  if (!certify(0)) {
    for (std::size_t k = 0; k < opt.max_iters; ++k) {
      VectorField rhs = f;
      axpy(-rho, divergence_field(difference(w, q)), rhs);
      for (std::size_t c = 0; c < f.channels(); ++c) solver.solve(rhs.channel(c), u.channel(c));
      const VectorField g = gradient(u);
      VectorField w_next = lincomb(1.0, g, 1.0, q);
      detail::shrink_inplace(w_next, lam / rho, prm.variant);
      const VectorField r = difference(g, w_next);
      axpy(1.0, r, q);
      out.primal_residual = norm(r);
      out.dual_residual = rho * norm(divergence_field(difference(w_next, w)));
      w = std::move(w_next);
      if (certify(k + 1)) break;
    }
  }
  out.dual = project_unit_ball(scaled(rho / lam, q), prm.variant);
  out.u = std::move(u);
  return out;
}

inline BaselineResult admm_tv(const ImageGrid& f, const TVParams& prm, const AdmmConfig& cfg = {},
                              const SolverOptions& opt = {}) {
  return admm_tv(VectorField::from_image(f), prm, cfg, opt);
}

/// Three-block scaled ADMM on the TSV objective with z = ∇u − w:
///   u ← (I − ρ div∇)⁻¹ (f − ρ div(w + z − q)),
///   w ← (γ + ρ + βLᵀL)⁻¹ ρ(∇u − z + q) per axis,
///   z ← shrink(∇u − w + q, λ/ρ),  q ← q + ∇u − w − z.
inline BaselineResult admm_tsv(const VectorField& f, const TSVParams& prm, const AdmmConfig& cfg = {},
                               const SolverOptions& opt = {}) {
  validate(prm);
  detail::validate(cfg);
  const double rho = cfg.rho, lam = prm.lambda;
  const std::size_t k2 = 2 * f.channels();
  const ScreenedSolver usolve(f.shape(), 1.0, rho);
  const TsvAuxSolver wsolve(f.shape(), prm.gamma + rho, prm.beta);
  const auto P = tsv_dual_problem(f, prm);
  BaselineResult out;
  detail::BaselineLog log(out.trace, opt, true);
  VectorField u = f, w(f.shape(), k2), z(f.shape(), k2), q(f.shape(), k2);
  auto certify = [&](std::size_t k) {
    if (!log.wants(k)) return log.push(k, u.values(), std::nullopt, std::nullopt);
    VectorField dual = project_unit_ball(scaled(rho / lam, q), TVVariant::Isotropic);
    const double primal = tsv_value(u, w, f, prm);
    return log.push(k, u.values(), primal, primal - P.dual_value(dual));
  };
  if (!certify(0)) {
    for (std::size_t k = 0; k < opt.max_iters; ++k) {
      VectorField s = lincomb(1.0, w, 1.0, z);
      axpy(-1.0, q, s);
      VectorField rhs = f;
      axpy(-rho, divergence_field(s), rhs);
      for (std::size_t c = 0; c < f.channels(); ++c) usolve.solve(rhs.channel(c), u.channel(c));
      const VectorField g = gradient(u);
      VectorField a = difference(g, z);
      axpy(1.0, q, a);
      w = wsolve.solve(a, rho);
      VectorField z_next = difference(g, w);
      axpy(1.0, q, z_next);
      detail::shrink_inplace(z_next, lam / rho, TVVariant::Isotropic);
      VectorField r = difference(g, w);
      axpy(-1.0, z_next, r);
      axpy(1.0, r, q);
      out.primal_residual = norm(r);
      out.dual_residual = rho * norm(divergence_field(difference(z_next, z)));
      z = std::move(z_next);
      if (certify(k + 1)) break;
    }
  }
  out.dual = project_unit_ball(scaled(rho / lam, q), TVVariant::Isotropic);
  out.u = std::move(u);
  out.w = std::move(w);
  return out;
}

inline BaselineResult admm_tsv(const ImageGrid& f, const TSVParams& prm, const AdmmConfig& cfg = {},
                               const SolverOptions& opt = {}) {
  return admm_tsv(VectorField::from_image(f), prm, cfg, opt);
}

// ---------------------------------------------------------------------------
// Chambolle-Pock

/// K = λ∇, data term ½‖u − f‖², dual constraint |p| ≤ 1:
///   p ← proj(p + σKū),  u ← (u − τKᵀp + τf)/(1 + τ),  ū ← u + θ(u − u⁻).
inline BaselineResult chambolle_pock(const VectorField& f, const TVParams& prm, const PdConfig& cfg,
                                     const SolverOptions& opt = {}) {
  validate(prm);
  detail::validate_pd(cfg, f.shape(), prm.lambda, 0.0);
  const double lam = prm.lambda, tau = cfg.tau, sigma = cfg.sigma;
  BaselineResult out;
  detail::BaselineLog log(out.trace, opt, true);
  VectorField u = f, ubar = f, p(f.shape(), 2 * f.channels());
  auto certify = [&](std::size_t k) {
    if (!log.wants(k)) return log.push(k, u.values(), std::nullopt, std::nullopt);
    const double primal = tv_primal_value(u, f, prm);
    return log.push(k, u.values(), primal, primal - tv_dual_value(p, f, prm));
  };
  if (!certify(0)) {
    for (std::size_t k = 0; k < opt.max_iters; ++k) {
      axpy(sigma * lam, gradient(ubar), p);
      project_unit_ball_inplace(p, prm.variant);
      VectorField u_next = u;
      axpy(tau * lam, divergence_field(p), u_next);
      axpy(tau, f, u_next);
      u_next = scaled(1.0 / (1.0 + tau), u_next);
      ubar = lincomb(1.0 + cfg.theta, u_next, -cfg.theta, u);
      u = std::move(u_next);
      if (certify(k + 1)) break;
    }
  }
  out.u = std::move(u);
  out.dual = std::move(p);
  return out;
}

inline BaselineResult chambolle_pock(const ImageGrid& f, const TVParams& prm, const PdConfig& cfg,
                                     const SolverOptions& opt = {}) {
  return chambolle_pock(VectorField::from_image(f), prm, cfg, opt);
}

/// Joint primal x = (u, w), K x = λ(∇u − w), f(x) = ½‖u − f‖² + β/2‖Lw‖² + γ/2‖w‖².
/// The w prox is (I + τ(γ + βLᵀL))⁻¹ per axis.
inline BaselineResult chambolle_pock_tsv(const VectorField& f, const TSVParams& prm, const PdConfig& cfg,
                                         const SolverOptions& opt = {}) {
  validate(prm);
  detail::validate_pd(cfg, f.shape(), prm.lambda, 1.0);
  const double lam = prm.lambda, tau = cfg.tau, sigma = cfg.sigma;
  const std::size_t k2 = 2 * f.channels();
  const TsvAuxSolver wprox(f.shape(), 1.0 + tau * prm.gamma, tau * prm.beta);
  const auto P = tsv_dual_problem(f, prm);
  BaselineResult out;
  detail::BaselineLog log(out.trace, opt, true);
  VectorField u = f, ubar = f, w(f.shape(), k2), wbar(f.shape(), k2), q(f.shape(), k2);
  auto certify = [&](std::size_t k) {
    if (!log.wants(k)) return log.push(k, u.values(), std::nullopt, std::nullopt);
    const double primal = tsv_value(u, w, f, prm);
    return log.push(k, u.values(), primal, primal - P.dual_value(q));
  };
  if (!certify(0)) {
    for (std::size_t k = 0; k < opt.max_iters; ++k) {
      VectorField kx = gradient(ubar);
      axpy(-1.0, wbar, kx);
      axpy(sigma * lam, kx, q);
      project_unit_ball_inplace(q, TVVariant::Isotropic);
      VectorField u_next = u;
      axpy(tau * lam, divergence_field(q), u_next);
      axpy(tau, f, u_next);
      u_next = scaled(1.0 / (1.0 + tau), u_next);
      VectorField w_next = wprox.solve(lincomb(1.0, w, tau * lam, q), 1.0);
      ubar = lincomb(1.0 + cfg.theta, u_next, -cfg.theta, u);
      wbar = lincomb(1.0 + cfg.theta, w_next, -cfg.theta, w);
      u = std::move(u_next);
      w = std::move(w_next);
      if (certify(k + 1)) break;
    }
  }
  out.u = std::move(u);
  out.w = std::move(w);
  out.dual = std::move(q);
  return out;
}

inline BaselineResult chambolle_pock_tsv(const ImageGrid& f, const TSVParams& prm, const PdConfig& cfg,
                                         const SolverOptions& opt = {}) {
  return chambolle_pock_tsv(VectorField::from_image(f), prm, cfg, opt);
}

}  // namespace vimg
