// Momentum rules, iteration traces and the shared accelerated loop used by
// every first-order solver in the library.
#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "vimg/grid.hpp"

namespace vimg {

struct IterationRecord {
  std::size_t iter = 0;
  double objective = 0.0;
  std::optional<double> gap;
  double grad_norm = 0.0;
  bool restarted = false;
  double momentum = 0.0;
  double elapsed_ms = 0.0;
};

/// Per-iteration log. Holds iterations + 1 records (the initial point first).
struct Trace {
  std::vector<IterationRecord> records;
  std::size_t restarts = 0;
  bool has_gap = false;
  bool restart_solver = false;

  std::size_t iterations() const { return records.empty() ? 0 : records.size() - 1; }
  const IterationRecord& back() const { return records.back(); }

  /// First iteration whose value under `metric` is at or below `level`.
  template <class F>
  std::optional<std::size_t> first_below(F metric, double level) const {
    for (const auto& r : records)
      if (metric(r) <= level) return r.iter;
    return std::nullopt;
  }
};

/// Iteration budget and stopping rules shared by all solvers.
struct SolverOptions {
  std::size_t max_iters = 1000;
  // Stop when the solver's certificate (duality gap, or f - f_star for
  // smooth problems when f_star is set) drops to tol. 0 disables.
  double tol = 0.0;
  std::optional<double> f_star;
  // Fill objective / gap / gradient norms on every record. When false only
  // iteration indices, restarts and momentum are logged.
  bool record = true;
  // With record off, certificates are evaluated only every check_every
  // iterations (and at the first and last).
  std::size_t check_every = 1;
  // Called after every iterate with (k, iterate); return false to stop.
  std::function<bool(std::size_t, std::span<const double>)> monitor;
};

template <class Point>
struct SolveResult {
  Point x;
  Trace trace;
};

enum class RestartMode { None, Objective, Gradient };

// ---------------------------------------------------------------------------
// Momentum rules. advance() moves θ one step and returns β for the extrapolation
// v = u_next + β (u_next - u); reset() sets θ back to its initial value.

/// θ ∈ (0,1] solving θ'² = (1 − θ')θ² + qθ'.
class Scheme1Momentum {
 public:
  explicit Scheme1Momentum(double q = 0.0) : q_(q) {
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("q must lie in [0, 1]");
  }
  static double next_theta(double theta, double q) {
    const double t2 = theta * theta;
    return ((q - t2) + std::sqrt((t2 - q) * (t2 - q) + 4.0 * t2)) / 2.0;
  }
  double advance() {
    const double next = next_theta(theta_, q_);
    const double beta = theta_ * (1.0 - theta_) / (theta_ * theta_ + next);
    theta_ = next;
    return beta;
  }
  void reset() { theta_ = 1.0; }
  double theta() const { return theta_; }
  double q() const { return q_; }

 private:
  double q_;
  double theta_ = 1.0;
};

/// θ ≥ 1 with θ' = (1 + √(1 + 4θ²))/2 and β = (θ − 1)/θ'.
class FistaMomentum {
 public:
  double advance() {
    const double next = (1.0 + std::sqrt(1.0 + 4.0 * theta_ * theta_)) / 2.0;
    const double beta = (theta_ - 1.0) / next;
    theta_ = next;
    return beta;
  }
  void reset() { theta_ = 1.0; }
  double theta() const { return theta_; }

 private:
  double theta_ = 1.0;
};

class ConstantMomentum {
 public:
  explicit ConstantMomentum(double beta) : beta_(beta) {
    if (!(beta >= 0.0 && beta < 1.0)) throw std::invalid_argument("momentum must lie in [0, 1)");
  }
  double advance() { return beta_; }
  void reset() {}

 private:
  double beta_;
};

/// β* = (1 − √(μ/ℓ)) / (1 + √(μ/ℓ)).
inline double optimal_momentum(double mu, double ell) {
  const double r = std::sqrt(mu / ell);
  return (1.0 - r) / (1.0 + r);
}

namespace detail {

class Stopwatch {
 public:
  double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline void require_step(double t, double ell) {
  if (!(t > 0.0)) throw std::invalid_argument("step size must be positive");
  if (t * ell > 1.0 + 1e-12)
    throw std::invalid_argument("step size exceeds 1/l; iterates may diverge");
}

}  // namespace detail

/// Iterates u⁺ = step(v), v⁺ = u⁺ + β(u⁺ − u).
///
/// `restart(u_next, u, u_prev, v, v_next)` decides whether to reset θ after
/// the extrapolation. `log(k, u, rec)` fills a record and returns true to
/// stop early.
template <class Point, class Momentum, class Step, class Restart, class Log>
Point accelerated_loop(Point x0, Momentum momentum, Step&& step, Restart&& restart, Log&& log,
                       const SolverOptions& opt, Trace& trace) {
  detail::Stopwatch clock;
  Point u_prev = x0;
  Point u = x0;
  Point v = std::move(x0);
  auto emit = [&](std::size_t k, const Point& x, bool restarted, double beta) {
    IterationRecord rec;
    rec.iter = k;
    rec.restarted = restarted;
    rec.momentum = beta;
    bool stop = log(k, x, rec);
    rec.elapsed_ms = clock.ms();
    trace.records.push_back(rec);
    if (restarted) ++trace.restarts;
    if (opt.monitor && !opt.monitor(k, x.values())) stop = true;
    return stop;
  };
  if (emit(0, u, false, 0.0)) return u;
  for (std::size_t k = 0; k < opt.max_iters; ++k) {
    Point u_next = step(v);
    const double beta = momentum.advance();
    Point v_next = lincomb(1.0 + beta, u_next, -beta, u);
    const bool restarted = restart(u_next, u, u_prev, v, v_next);
    if (restarted) momentum.reset();
    u_prev = std::move(u);
    u = std::move(u_next);
    v = std::move(v_next);
    if (emit(k + 1, u, restarted, beta)) break;
  }
  return u;
}

/// (v − u⁺)·(u − u⁻) > 0, the generalized gradient test for prox steps.
struct GeneralizedRestart {
  template <class Point>
  bool operator()(const Point& u_next, const Point& u, const Point& u_prev, const Point& v,
                  const Point&) const {
    auto a = v.values(), b = u_next.values(), c = u.values(), d = u_prev.values();
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (c[i] - d[i]);
    return s > 0.0;
  }
};

struct NeverRestart {
  template <class Point>
  bool operator()(const Point&, const Point&, const Point&, const Point&, const Point&) const {
    return false;
  }
};

}  // namespace vimg
