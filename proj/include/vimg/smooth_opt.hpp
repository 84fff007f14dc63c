// Smooth first-order solvers: gradient descent, Nesterov's two schemes and
// adaptive restart, plus the Tikhonov denoising problem.
#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>

#include "vimg/accel.hpp"
#include "vimg/grid.hpp"
#include "vimg/spectral.hpp"

namespace vimg {

template <class Point = ImageGrid>
struct SmoothProblem {
  std::function<double(const Point&)> value;
  std::function<Point(const Point&)> gradient;
  double lipschitz = 0.0;
  double strong_convexity = 0.0;  // 0 when unknown

  double condition_number() const { return lipschitz / strong_convexity; }
};

/// ½‖u − f‖² + λ/2 ‖∇u‖², with ℓ = 8λ + 1 and μ = 1.
inline SmoothProblem<ImageGrid> tikhonov_problem(const ImageGrid& f, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("tikhonov needs lambda > 0");
  SmoothProblem<ImageGrid> p;
  p.value = [f, lambda](const ImageGrid& u) {
    return 0.5 * norm_sq(difference(u, f)) + 0.5 * lambda * norm_sq(gradient(u));
  };
  p.gradient = [f, lambda](const ImageGrid& u) {
    ImageGrid g = difference(u, f);
    axpy(-lambda, laplacian(u), g);
    return g;
  };
  p.lipschitz = 8.0 * lambda + 1.0;
  p.strong_convexity = 1.0;
  return p;
}

/// u* = (I − λ div∇)⁻¹ f.
inline ImageGrid tikhonov_analytic(const ImageGrid& f, double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("tikhonov needs lambda >= 0");
  if (lambda == 0.0) return f;
  return solve_screened_laplacian(f, 1.0, lambda);
}

namespace detail {

template <class Point>
auto smooth_logger(const SmoothProblem<Point>& p, const SolverOptions& opt) {
  return [&p, &opt](std::size_t, const Point& u, IterationRecord& rec) {
    if (!opt.record && !(opt.tol > 0.0 && opt.f_star)) return false;
    rec.objective = p.value(u);
    if (opt.record) rec.grad_norm = norm(p.gradient(u));
    return opt.tol > 0.0 && opt.f_star && rec.objective - *opt.f_star <= opt.tol;
  };
}

template <class Point, class Momentum, class Restart>
SolveResult<Point> run_smooth(const SmoothProblem<Point>& p, const Point& u0, double t,
                              Momentum m, Restart&& restart, const SolverOptions& opt) {
  detail::require_step(t, p.lipschitz);
  SolveResult<Point> out;
  auto step = [&](const Point& v) { return lincomb(1.0, v, -t, p.gradient(v)); };
  out.x = accelerated_loop(u0, std::move(m), step, restart, smooth_logger(p, opt), opt, out.trace);
  return out;
}

}  // namespace detail

/// u⁺ = u − t∇f(u).
template <class Point>
SolveResult<Point> gradient_descent(const SmoothProblem<Point>& p, const Point& u0, double t,
                                    const SolverOptions& opt = {}) {
  return detail::run_smooth(p, u0, t, ConstantMomentum(0.0), NeverRestart{}, opt);
}

/// Scheme 1: θ from the q-quadratic, β = θ(1 − θ)/(θ² + θ⁺).
template <class Point>
SolveResult<Point> nesterov_scheme1(const SmoothProblem<Point>& p, const Point& u0, double t,
                                    double q, const SolverOptions& opt = {}) {
  return detail::run_smooth(p, u0, t, Scheme1Momentum(q), NeverRestart{}, opt);
}

/// Scheme 2: constant momentum β* from the known κ.
template <class Point>
SolveResult<Point> nesterov_scheme2(const SmoothProblem<Point>& p, const Point& u0, double t,
                                    const SolverOptions& opt = {}) {
  if (!(p.strong_convexity > 0.0))
    throw std::invalid_argument("scheme 2 needs a known strong convexity constant");
  return detail::run_smooth(p, u0, t, ConstantMomentum(optimal_momentum(p.strong_convexity, p.lipschitz)),
                            NeverRestart{}, opt);
}

/// FISTA momentum with an objective or gradient restart test.
///
/// Gradient mode restarts when ∇f(v⁺)·(u − u⁻) > 0. The gradient at v⁺ is the
/// one the next step needs, so it is cached rather than recomputed.
/// Objective mode restarts when f(u⁺) > f(u).
template <class Point>
SolveResult<Point> nesterov_restart(const SmoothProblem<Point>& p, const Point& u0, double t,
                                    RestartMode mode, const SolverOptions& opt = {}) {
  detail::require_step(t, p.lipschitz);
  SolveResult<Point> out;
  out.trace.restart_solver = mode != RestartMode::None;
  std::optional<Point> cached_grad;
  auto step = [&](const Point& v) {
    Point g = cached_grad ? std::move(*cached_grad) : p.gradient(v);
    cached_grad.reset();
    return lincomb(1.0, v, -t, g);
  };
  std::optional<double> f_cur;
  auto restart = [&](const Point& u_next, const Point& u, const Point& u_prev, const Point&,
                     const Point& v_next) {
    if (mode == RestartMode::Gradient) {
      cached_grad = p.gradient(v_next);
      auto g = cached_grad->values(), a = u.values(), b = u_prev.values();
      double s = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) s += g[i] * (a[i] - b[i]);
      return s > 0.0;
    }
    if (mode == RestartMode::Objective) {
      if (!f_cur) f_cur = p.value(u);
      const double f_next = p.value(u_next);
      const bool fire = f_next > *f_cur;
      f_cur = f_next;
      return fire;
    }
    return false;
  };
  out.x = accelerated_loop(u0, FistaMomentum{}, step, restart, detail::smooth_logger(p, opt), opt, out.trace);
  return out;
}

}  // namespace vimg
