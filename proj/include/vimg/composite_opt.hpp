// Composite solvers (proximal gradient, APGA/ADPA with restart) and the TV
// and TSV denoising duals they run on.
//
// Duals are stated as minimization of the negated dual function so a single
// descent code path serves every problem. Images enter as k-channel fields:
// k = 1 for denoising, k = 2 for flow. Dual variables have 2k channels in the
// gradient layout (dx c0, dy c0, dx c1, dy c1, ...).
#pragma once

#include <cmath>
#include <algorithm>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "vimg/accel.hpp"
#include "vimg/grid.hpp"
#include "vimg/spectral.hpp"

namespace vimg {

enum class TVVariant { Isotropic, Anisotropic };

inline const char* to_string(TVVariant v) {
  return v == TVVariant::Isotropic ? "iso" : "aniso";
}

struct TVParams {
  double lambda = 0.2;
  TVVariant variant = TVVariant::Isotropic;
};

struct TSVParams {
  double lambda = 0.1;
  double beta = 100.0;
  double gamma = 1.0;
};

inline void validate(const TVParams& p) {
  if (!(p.lambda > 0.0)) throw std::invalid_argument("TV needs lambda > 0");
}

inline void validate(const TSVParams& p) {
  if (!(p.lambda > 0.0) || !(p.beta > 0.0) || !(p.gamma > 0.0))
    throw std::invalid_argument("TSV needs lambda, beta and gamma > 0");
}

/// g + h with g smooth. Dual problems also provide the primal map and both
/// objective values so the duality gap can be reported.
template <class Point, class Primal = Point>
struct CompositeProblem {
  std::function<double(const Point&)> smooth_value;
  std::function<Point(const Point&)> smooth_gradient;
  double lipschitz = 0.0;
  std::function<Point(const Point&, double)> prox;
  std::function<double(const Point&)> nonsmooth_value;
  std::function<Primal(const Point&)> primal_recover;
  std::function<double(const Primal&)> primal_value;
  std::function<double(const Point&)> dual_value;

  bool has_dual() const { return static_cast<bool>(dual_value); }

  double objective(const Point& x) const {
    return smooth_value(x) + (nonsmooth_value ? nonsmooth_value(x) : 0.0);
  }

  double duality_gap(const Point& x) const {
    if (!has_dual()) throw std::logic_error("problem has no dual");
    return primal_value(primal_recover(x)) - dual_value(x);
  }

  /// ‖x − prox(x − t∇g(x), t)‖ / t.
  double gradient_mapping_norm(const Point& x, double t) const {
    Point y = prox(lincomb(1.0, x, -t, smooth_gradient(x)), t);
    return norm(difference(x, y)) / t;
  }
};

// ---------------------------------------------------------------------------
// TV pieces

/// Σ over pixels of |∇u|, joint across channels when isotropic.
inline double tv_value(const VectorField& u, TVVariant variant = TVVariant::Isotropic) {
  VectorField g = gradient(u);
  double s = 0.0;
  if (variant == TVVariant::Isotropic) {
    const ImageGrid n = pixel_norm(g);
    for (double v : n.values()) s += v;
  } else {
    for (double v : g.values()) s += std::abs(v);
  }
  return s;
}

inline double tv_value(const ImageGrid& u, TVVariant variant = TVVariant::Isotropic) {
  return tv_value(VectorField::from_image(u), variant);
}

/// Isotropic: p ← p / max(1, |p|) per pixel over all channels.
/// Anisotropic: clamp each entry to [−1, 1].
inline void project_unit_ball_inplace(VectorField& p, TVVariant variant) {
  if (variant == TVVariant::Anisotropic) {
    for (double& v : p.values()) v = std::clamp(v, -1.0, 1.0);
    return;
  }
  ImageGrid n = pixel_norm(p);
  auto nv = n.values();
  for (std::size_t c = 0; c < p.channels(); ++c) {
    auto ch = p.channel(c);
    for (std::size_t i = 0; i < ch.size(); ++i)
      if (nv[i] > 1.0) ch[i] /= nv[i];
  }
}

inline VectorField project_unit_ball(VectorField p, TVVariant variant = TVVariant::Isotropic) {
  project_unit_ball_inplace(p, variant);
  return p;
}

inline bool is_feasible(const VectorField& p, TVVariant variant, double slack = 1e-12) {
  if (variant == TVVariant::Anisotropic) return max_abs(p) <= 1.0 + slack;
  const ImageGrid n = pixel_norm(p);
  for (double v : n.values())
    if (v > 1.0 + slack) return false;
  return true;
}

/// ½‖u − f‖² + λ TV(u).
inline double tv_primal_value(const VectorField& u, const VectorField& f, const TVParams& prm) {
  return 0.5 * norm_sq(difference(u, f)) + prm.lambda * tv_value(u, prm.variant);
}

/// −λ²/2 ‖div p‖² − λ⟨f, div p⟩.
inline double tv_dual_value(const VectorField& p, const VectorField& f, const TVParams& prm) {
  VectorField d = divergence_field(p);
  return -0.5 * prm.lambda * prm.lambda * norm_sq(d) - prm.lambda * dot(f, d);
}

/// Primal minus dual for an arbitrary primal point and feasible dual point.
inline double tv_duality_gap(const VectorField& u, const VectorField& p, const VectorField& f,
                             const TVParams& prm) {
  if (!is_feasible(p, prm.variant)) throw std::invalid_argument("dual point is outside the unit ball");
  return tv_primal_value(u, f, prm) - tv_dual_value(p, f, prm);
}

inline double tv_duality_gap(const ImageGrid& u, const VectorField& p, const ImageGrid& f,
                             const TVParams& prm) {
  return tv_duality_gap(VectorField::from_image(u), p, VectorField::from_image(f), prm);
}

/// Dual of ½‖u − f‖² + λTV(u) in minimization form:
/// F(p) = λ²/2 ‖div p‖² + λ⟨f, div p⟩ + δ(|p| ≤ 1), ℓ = 8λ².
/// The descent step p − t∇F is the ascent step p + t(λ²∇div p + λ∇f).
inline CompositeProblem<VectorField> tv_dual_problem(const VectorField& f, const TVParams& prm) {
  validate(prm);
  const double lam = prm.lambda;
  CompositeProblem<VectorField> P;
  P.smooth_value = [f, lam](const VectorField& p) {
    VectorField d = divergence_field(p);
    return 0.5 * lam * lam * norm_sq(d) + lam * dot(f, d);
  };
  P.smooth_gradient = [f, lam](const VectorField& p) {
    VectorField u = f;
    axpy(lam, divergence_field(p), u);
    return scaled(-lam, gradient(u));
  };
  P.lipschitz = 8.0 * lam * lam;
  P.prox = [v = prm.variant](const VectorField& z, double) { return project_unit_ball(z, v); };
  P.nonsmooth_value = [v = prm.variant](const VectorField& p) {
    return is_feasible(p, v, 1e-9) ? 0.0 : std::numeric_limits<double>::infinity();
  };
  P.primal_recover = [f, lam](const VectorField& p) {
    VectorField u = f;
    axpy(lam, divergence_field(p), u);
    return u;
  };
  P.primal_value = [f, prm](const VectorField& u) { return tv_primal_value(u, f, prm); };
  P.dual_value = [f, prm](const VectorField& p) { return tv_dual_value(p, f, prm); };
  return P;
}

inline CompositeProblem<VectorField> tv_dual_problem(const ImageGrid& f, const TVParams& prm) {
  return tv_dual_problem(VectorField::from_image(f), prm);
}

// ---------------------------------------------------------------------------
// TSV pieces

/// Per-axis solvers for M = diag(γ + βLxᵀLx, γ + βLyᵀLy).
class TsvAuxSolver {
 public:
  TsvAuxSolver(const GridShape& s, double gamma, double beta)
      : x_(s, Axis::X, gamma, beta), y_(s, Axis::Y, gamma, beta) {}

  /// w = M⁻¹ (scale · q), channel-pair wise.
  VectorField solve(const VectorField& q, double scale) const {
    VectorField w(q.shape(), q.channels());
    std::vector<double> tmp(q.pixels());
    for (std::size_t c = 0; c < q.channels(); ++c) {
      auto src = q.channel(c);
      for (std::size_t i = 0; i < tmp.size(); ++i) tmp[i] = scale * src[i];
      (c % 2 == 0 ? x_ : y_).solve(tmp, w.channel(c));
    }
    return w;
  }

  /// M w, channel-pair wise.
  VectorField apply(const VectorField& w) const {
    VectorField out(w.shape(), w.channels());
    for (std::size_t c = 0; c < w.channels(); ++c) {
      ImageGrid r = (c % 2 == 0 ? x_ : y_).apply(w.channel_image(c));
      std::copy(r.data().begin(), r.data().end(), out.channel(c).begin());
    }
    return out;
  }

 private:
  AxisSolver x_, y_;
};

/// λ Σ|∇u − w| + β/2 (‖Lx w_x‖² + ‖Ly w_y‖²) + γ/2 ‖w‖², summed over the
/// channel pairs of w; the magnitude is joint across all channels.
inline double tsv_regularizer(const VectorField& u, const VectorField& w, const TSVParams& prm) {
  VectorField z = difference(gradient(u), w);
  double s = 0.0;
  const ImageGrid n = pixel_norm(z);
  for (double v : n.values()) s += v;
  double smooth = 0.0;
  std::vector<double> d(w.pixels());
  for (std::size_t c = 0; c < w.channels(); ++c) {
    if (c % 2 == 0)
      detail::forward_diff_x(w.channel(c), d, w.shape());
    else
      detail::forward_diff_y(w.channel(c), d, w.shape());
    for (double v : d) smooth += v * v;
  }
  return prm.lambda * s + 0.5 * prm.beta * smooth + 0.5 * prm.gamma * norm_sq(w);
}

inline double tsv_regularizer(const ImageGrid& u, const VectorField& w, const TSVParams& prm) {
  return tsv_regularizer(VectorField::from_image(u), w, prm);
}

/// Full objective ½‖u − f‖² + TSV terms.
inline double tsv_value(const VectorField& u, const VectorField& w, const VectorField& f,
                        const TSVParams& prm) {
  return 0.5 * norm_sq(difference(u, f)) + tsv_regularizer(u, w, prm);
}

inline double tsv_value(const ImageGrid& u, const VectorField& w, const ImageGrid& f,
                        const TSVParams& prm) {
  return tsv_value(VectorField::from_image(u), w, VectorField::from_image(f), prm);
}

/// Primal pair (u, w) recovered from a TSV dual point.
struct TsvPrimal {
  VectorField u;
  VectorField w;

  std::span<double> values() { return u.values(); }
  std::span<const double> values() const { return u.values(); }
};

/// ℓ = λ²(8 + 1/(γ + 4β)).
inline double tsv_lipschitz(const TSVParams& prm) {
  return prm.lambda * prm.lambda * (8.0 + 1.0 / (prm.gamma + 4.0 * prm.beta));
}

/// Dual of the TSV denoising objective in minimization form:
/// F(q) = λ²/2‖div q‖² + λ⟨f, div q⟩ + λ²/2⟨q, M⁻¹q⟩ + δ(|q| ≤ 1),
/// with u = f + λ div q, w = λM⁻¹q and ∇F = −λ(∇u − w).
inline CompositeProblem<VectorField, TsvPrimal> tsv_dual_problem(const VectorField& f,
                                                                 const TSVParams& prm) {
  validate(prm);
  const double lam = prm.lambda;
  auto aux = std::make_shared<const TsvAuxSolver>(f.shape(), prm.gamma, prm.beta);
  CompositeProblem<VectorField, TsvPrimal> P;
  P.smooth_value = [f, lam, aux](const VectorField& q) {
    VectorField d = divergence_field(q);
    VectorField w = aux->solve(q, lam);
    return 0.5 * lam * lam * norm_sq(d) + lam * dot(f, d) + 0.5 * lam * dot(q, w);
  };
  P.smooth_gradient = [f, lam, aux](const VectorField& q) {
    VectorField u = f;
    axpy(lam, divergence_field(q), u);
    VectorField g = gradient(u);
    axpy(-1.0, aux->solve(q, lam), g);
    return scaled(-lam, std::move(g));
  };
  P.lipschitz = tsv_lipschitz(prm);
  P.prox = [](const VectorField& z, double) { return project_unit_ball(z, TVVariant::Isotropic); };
  P.nonsmooth_value = [](const VectorField& q) {
    return is_feasible(q, TVVariant::Isotropic, 1e-9) ? 0.0 : std::numeric_limits<double>::infinity();
  };
  P.primal_recover = [f, lam, aux](const VectorField& q) {
    TsvPrimal out{f, aux->solve(q, lam)};
    axpy(lam, divergence_field(q), out.u);
    return out;
  };
  P.primal_value = [f, prm](const TsvPrimal& x) { return tsv_value(x.u, x.w, f, prm); };
  P.dual_value = [f, lam, aux](const VectorField& q) {
    VectorField d = divergence_field(q);
    VectorField w = aux->solve(q, lam);
    return -0.5 * lam * lam * norm_sq(d) - lam * dot(f, d) - 0.5 * lam * dot(q, w);
  };
  return P;
}

inline CompositeProblem<VectorField, TsvPrimal> tsv_dual_problem(const ImageGrid& f,
                                                                 const TSVParams& prm) {
  return tsv_dual_problem(VectorField::from_image(f), prm);
}

// ---------------------------------------------------------------------------
// Solvers

namespace detail {

template <class Point, class Primal>
auto composite_logger(const CompositeProblem<Point, Primal>& P, double t, const SolverOptions& opt,
                      Trace& trace) {
  trace.has_gap = P.has_dual();
  return [&P, t, &opt](std::size_t k, const Point& x, IterationRecord& rec) {
    if (!opt.record && opt.check_every > 1 && k % opt.check_every != 0 && k != opt.max_iters) return false;
    const bool need_gap = P.has_dual() && (opt.record || opt.tol > 0.0);
    if (need_gap) {
      const double primal = P.primal_value(P.primal_recover(x));
      rec.objective = primal;
      rec.gap = primal - P.dual_value(x);
    } else if (opt.record || (opt.tol > 0.0 && opt.f_star)) {
      rec.objective = P.objective(x);
    }
    if (opt.record) rec.grad_norm = P.gradient_mapping_norm(x, t);
    if (opt.tol > 0.0) {
      if (rec.gap) return *rec.gap <= opt.tol;
      if (opt.f_star) return rec.objective - *opt.f_star <= opt.tol;
    }
    return false;
  };
}

template <class Point, class Primal>
auto prox_step(const CompositeProblem<Point, Primal>& P, double t) {
  return [&P, t](const Point& v) { return P.prox(lincomb(1.0, v, -t, P.smooth_gradient(v)), t); };
}

}  // namespace detail

/// x⁺ = prox(x − t∇g(x), t).
template <class Point, class Primal>
SolveResult<Point> proximal_gradient(const CompositeProblem<Point, Primal>& P, const Point& x0,
                                     double t, const SolverOptions& opt = {}) {
  detail::require_step(t, P.lipschitz);
  SolveResult<Point> out;
  auto log = detail::composite_logger(P, t, opt, out.trace);
  out.x = accelerated_loop(x0, ConstantMomentum(0.0), detail::prox_step(P, t), NeverRestart{}, log, opt,
                           out.trace);
  return out;
}

/// Accelerated proximal gradient with scheme-1 momentum. With restart the
/// θ sequence is reset when (v − x⁺)·(x − x⁻) > 0.
template <class Point, class Primal>
SolveResult<Point> adpa(const CompositeProblem<Point, Primal>& P, const Point& x0, double t,
                        bool restart, const SolverOptions& opt = {}, double q = 0.0) {
  detail::require_step(t, P.lipschitz);
  SolveResult<Point> out;
  out.trace.restart_solver = restart;
  auto log = detail::composite_logger(P, t, opt, out.trace);
  if (restart)
    out.x = accelerated_loop(x0, Scheme1Momentum(q), detail::prox_step(P, t), GeneralizedRestart{}, log,
                             opt, out.trace);
  else
    out.x = accelerated_loop(x0, Scheme1Momentum(q), detail::prox_step(P, t), NeverRestart{}, log, opt,
                             out.trace);
  return out;
}

// ---------------------------------------------------------------------------
// Denoising drivers

enum class CompositeSolver { ProximalGradient, Accelerated, AcceleratedRestart };

struct DenoiseResult {
  VectorField u;     // primal, k channels
  VectorField dual;  // p or q, 2k channels
  VectorField w;     // TSV auxiliary field; empty for TV
  Trace trace;

  ImageGrid image() const { return u.channel_image(0); }
};

namespace detail {

template <class Primal>
SolveResult<VectorField> run_composite(const CompositeProblem<VectorField, Primal>& P,
                                       const VectorField& x0, CompositeSolver solver,
                                       const SolverOptions& opt) {
  const double t = 1.0 / P.lipschitz;
  switch (solver) {
    case CompositeSolver::ProximalGradient: return proximal_gradient(P, x0, t, opt);
    case CompositeSolver::Accelerated: return adpa(P, x0, t, false, opt);
    case CompositeSolver::AcceleratedRestart: return adpa(P, x0, t, true, opt);
  }
  throw std::logic_error("unknown composite solver");
}

inline VectorField dual_start(const VectorField& f, const VectorField* warm) {
  if (warm) {
    if (warm->shape() != f.shape() || warm->channels() != 2 * f.channels())
      throw std::invalid_argument("warm start has the wrong shape");
    return *warm;
  }
  return VectorField(f.shape(), 2 * f.channels());
}

}  // namespace detail

/// TV denoising by the dual (pg / apga / adpa-restart), step 1/(8λ²).
inline DenoiseResult tv_denoise(const VectorField& f, const TVParams& prm,
                                CompositeSolver solver = CompositeSolver::AcceleratedRestart,
                                const SolverOptions& opt = {}, const VectorField* warm = nullptr) {
  auto P = tv_dual_problem(f, prm);
  auto r = detail::run_composite(P, detail::dual_start(f, warm), solver, opt);
  DenoiseResult out;
  out.u = P.primal_recover(r.x);
  out.dual = std::move(r.x);
  out.trace = std::move(r.trace);
  return out;
}

inline DenoiseResult tv_denoise(const ImageGrid& f, const TVParams& prm,
                                CompositeSolver solver = CompositeSolver::AcceleratedRestart,
                                const SolverOptions& opt = {}, const VectorField* warm = nullptr) {
  return tv_denoise(VectorField::from_image(f), prm, solver, opt, warm);
}

/// TSV denoising by the dual, step 1/(λ²(8 + 1/(γ + 4β))).
inline DenoiseResult tsv_denoise(const VectorField& f, const TSVParams& prm,
                                 CompositeSolver solver = CompositeSolver::AcceleratedRestart,
                                 const SolverOptions& opt = {}, const VectorField* warm = nullptr) {
  auto P = tsv_dual_problem(f, prm);
  auto r = detail::run_composite(P, detail::dual_start(f, warm), solver, opt);
  DenoiseResult out;
  TsvPrimal x = P.primal_recover(r.x);
  out.u = std::move(x.u);
  out.w = std::move(x.w);
  out.dual = std::move(r.x);
  out.trace = std::move(r.trace);
  return out;
}

inline DenoiseResult tsv_denoise(const ImageGrid& f, const TSVParams& prm,
                                 CompositeSolver solver = CompositeSolver::AcceleratedRestart,
                                 const SolverOptions& opt = {}, const VectorField* warm = nullptr) {
  return tsv_denoise(VectorField::from_image(f), prm, solver, opt, warm);
}

}  // namespace vimg
