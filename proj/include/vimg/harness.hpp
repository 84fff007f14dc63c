// Run configuration, solver dispatch and convergence CSV logs behind the
// command-line tool.
//
// CSV header: iter,objective,gap,grad_norm,restarted,elapsed_ms
//   gap        empty when the problem has no dual
//   restarted  0/1 for restart solvers, empty otherwise
//   elapsed_ms empty unless timing is requested, so logs are reproducible
#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vimg/apps.hpp"
#include "vimg/baselines.hpp"
#include "vimg/composite_opt.hpp"
#include "vimg/io.hpp"
#include "vimg/metrics.hpp"
#include "vimg/oracle.hpp"
#include "vimg/smooth_opt.hpp"
#include "vimg/synth.hpp"

namespace vimg {

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

enum class Task { Denoise, Mri, Flow, Bench, Oracle };
enum class RegKind { Tikhonov, TV, TSV };
enum class SolverKind { GD, Nesterov1, Nesterov2, NesterovRestart, PG, APGA, ADPA, ADPARestart, ADMM, CP };

inline const std::vector<std::pair<std::string, SolverKind>>& solver_names() {
  static const std::vector<std::pair<std::string, SolverKind>> names = {
      {"gd", SolverKind::GD},         {"nesterov1", SolverKind::Nesterov1},
      {"nesterov2", SolverKind::Nesterov2}, {"nesterov-restart", SolverKind::NesterovRestart},
      {"pg", SolverKind::PG},         {"apga", SolverKind::APGA},
      {"adpa", SolverKind::ADPA},     {"adpa-restart", SolverKind::ADPARestart},
      {"admm", SolverKind::ADMM},     {"cp", SolverKind::CP}};
  return names;
}

inline SolverKind parse_solver(const std::string& s) {
  for (const auto& [name, kind] : solver_names())
    if (name == s) return kind;
  throw ConfigError("unknown solver '" + s +
                    "' (gd|nesterov1|nesterov2|nesterov-restart|pg|apga|adpa|adpa-restart|admm|cp)");
}

inline std::string solver_name(SolverKind k) {
  for (const auto& [name, kind] : solver_names())
    if (kind == k) return name;
  return "?";
}

inline RegKind parse_reg(const std::string& s) {
  if (s == "tikhonov") return RegKind::Tikhonov;
  if (s == "tv") return RegKind::TV;
  if (s == "tsv") return RegKind::TSV;
  throw ConfigError("unknown regularizer '" + s + "' (tikhonov|tv|tsv)");
}

inline bool is_restart_solver(SolverKind k) {
  return k == SolverKind::NesterovRestart || k == SolverKind::ADPARestart;
}

struct RunConfig {
  Task task = Task::Denoise;
  RegKind reg = RegKind::TV;
  SolverKind solver = SolverKind::ADPARestart;
  std::vector<SolverKind> bench_solvers;
  double lambda = 0.2;
  std::optional<double> beta;
  double gamma = 1.0;
  double rho = 4.0;
  double q = 0.0;
  std::size_t iters = 1000;
  std::size_t inner_iters = 100;
  double tol = 0.0;
  Boundary boundary = Boundary::Symmetric;
  TVVariant variant = TVVariant::Isotropic;
  std::uint64_t seed = 0;
  std::string in, out, log, mask, ref;
  std::string target;             // flow: second frame
  std::string synthetic;          // geometric|mri|ramp-edge|sinusoid|head
  std::size_t size = 64;          // synthetic image width and height
  double noise = 0.0;             // Gaussian variance added to the input
  double rate = 0.25;             // MRI sampling rate
  std::string pattern = "lowfreq";
  double shift = 1.0;             // flow: synthetic x-translation in pixels
  std::string hsv;                // flow: PPM output
  std::string cache;              // oracle cache directory
  bool timing = false;
};

/// Rejects solver/regularizer/task combinations that have no meaning.
inline void validate(const RunConfig& c) {
  if (!(c.lambda > 0.0) && c.reg != RegKind::Tikhonov) throw ConfigError("--lambda must be > 0");
  if (c.reg == RegKind::TSV) {
    if (!c.beta) throw ConfigError("--reg tsv requires --beta (there is no default)");
    if (!(*c.beta > 0.0) || !(c.gamma > 0.0)) throw ConfigError("--beta and --gamma must be > 0");
  }
  if (c.iters == 0) throw ConfigError("--iters must be positive");
  auto check = [&](SolverKind s) {
    const bool smooth = s == SolverKind::GD || s == SolverKind::Nesterov1 || s == SolverKind::Nesterov2 ||
                        s == SolverKind::NesterovRestart;
    switch (c.task) {
      case Task::Denoise:
      case Task::Bench:
        if (c.reg == RegKind::Tikhonov && !smooth)
          throw ConfigError("solver " + solver_name(s) + " does not apply to tikhonov (use gd|nesterov1|nesterov2|nesterov-restart)");
        if (c.reg != RegKind::Tikhonov && smooth)
          throw ConfigError("solver " + solver_name(s) + " needs a smooth problem; nesterov2 requires --reg tikhonov");
        break;
      case Task::Mri:
      case Task::Flow:
        if (c.reg == RegKind::Tikhonov) throw ConfigError("mri and flow need --reg tv or tsv");
        if (s != SolverKind::APGA && s != SolverKind::PG)
          throw ConfigError("mri and flow run the two-loop solver: use --solver apga or pg");
        if (c.inner_iters == 0) throw ConfigError("--inner-iters must be positive");
        break;
      case Task::Oracle:
        if (c.reg == RegKind::Tikhonov) throw ConfigError("oracle needs --reg tv or tsv");
        break;
    }
  };
  if (c.task == Task::Bench) {
    if (c.bench_solvers.empty()) throw ConfigError("bench needs --solvers");
    if (c.log.empty()) throw ConfigError("bench needs --log (used as the CSV prefix)");
    for (auto s : c.bench_solvers) check(s);
  } else {
    check(c.solver);
  }
  if (c.task == Task::Oracle && c.tol > 0.0 && c.tol > 1e-8) throw ConfigError("oracle --tol must be <= 1e-8");
}

// ---------------------------------------------------------------------------
// CSV

inline std::string csv_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_trace_csv(std::ostream& os, const Trace& t, bool timing) {
  os << "iter,objective,gap,grad_norm,restarted,elapsed_ms\n";
  for (const auto& r : t.records) {
    os << r.iter << ',' << csv_number(r.objective) << ',';
    if (t.has_gap && r.gap) os << csv_number(*r.gap);
    os << ',' << csv_number(r.grad_norm) << ',';
    if (t.restart_solver) os << (r.restarted ? 1 : 0);
    os << ',';
    if (timing) os << csv_number(r.elapsed_ms);
    os << '\n';
  }
}

inline void save_trace_csv(const std::string& path, const Trace& t, bool timing) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_trace_csv(os, t, timing);
}

// ---------------------------------------------------------------------------
// Inputs

inline ImageGrid synthetic_image(const std::string& name, std::size_t size, double shift = 0.0) {
  if (name == "geometric") return intensity_ramp_mask(geometric_phantom(size, size));
  if (name == "mri") return mri_phantom(size, size);
  if (name == "ramp-edge") return ramp_edge_phantom(size, size);
  if (name == "sinusoid") return sinusoid_texture(size, size, 16.0, shift);
  if (name == "head") return textured_head_phantom(size, size);
  throw ConfigError("unknown synthetic image '" + name + "' (geometric|mri|ramp-edge|sinusoid|head)");
}

inline ImageGrid with_boundary(ImageGrid img, Boundary b) {
  return ImageGrid(GridShape{img.width(), img.height(), b}, std::move(img.data()));
}

/// Clean image from --in or --synthetic, before noise.
inline ImageGrid load_clean(const RunConfig& c) {
  if (!c.synthetic.empty()) return with_boundary(synthetic_image(c.synthetic, c.size), c.boundary);
  if (c.in.empty()) throw ConfigError("give --in or --synthetic");
  return load_image(c.in, c.boundary);
}

struct RunOutcome {
  std::vector<std::pair<std::string, Trace>> traces;  // (solver name, trace)
  std::optional<double> psnr, ssim;
  double objective = 0.0;
  std::optional<double> gap;
};

inline void report(std::ostream& os, const RunOutcome& r) {
  os << "objective " << csv_number(r.objective) << '\n';
  if (r.gap) os << "gap " << csv_number(*r.gap) << '\n';
  if (r.psnr) os << "psnr " << csv_number(*r.psnr) << '\n';
  if (r.ssim) os << "ssim " << csv_number(*r.ssim) << '\n';
}

// ---------------------------------------------------------------------------
// Tasks

struct DenoiseRun {
  ImageGrid u;
  Trace trace;
};

inline DenoiseRun denoise_with(const ImageGrid& f, const RunConfig& c, SolverKind s) {
  SolverOptions o;
  o.max_iters = c.iters;
  o.tol = c.tol;
  if (c.reg == RegKind::Tikhonov) {
    auto P = tikhonov_problem(f, c.lambda);
    const double t = 1.0 / P.lipschitz;
    SolveResult<ImageGrid> r;
    if (c.tol > 0.0) o.f_star = P.value(tikhonov_analytic(f, c.lambda));
    switch (s) {
      case SolverKind::GD: r = gradient_descent(P, f, t, o); break;
      case SolverKind::Nesterov1: r = nesterov_scheme1(P, f, t, c.q, o); break;
      case SolverKind::Nesterov2: r = nesterov_scheme2(P, f, t, o); break;
      default: r = nesterov_restart(P, f, t, RestartMode::Gradient, o); break;
    }
    return {std::move(r.x), std::move(r.trace)};
  }
  const TVParams tv{c.lambda, c.variant};
  const TSVParams tsv{c.lambda, c.beta.value_or(0.0), c.gamma};
  auto composite = [](SolverKind k) {
    if (k == SolverKind::PG) return CompositeSolver::ProximalGradient;
    if (k == SolverKind::ADPARestart) return CompositeSolver::AcceleratedRestart;
    return CompositeSolver::Accelerated;
  };
  DenoiseResult d;
  if (s == SolverKind::ADMM)
    d = c.reg == RegKind::TV ? admm_tv(f, tv, {c.rho}, o) : admm_tsv(f, tsv, {c.rho}, o);
  else if (s == SolverKind::CP)
    d = c.reg == RegKind::TV ? chambolle_pock(f, tv, pd_default_tv(c.lambda), o)
                             : chambolle_pock_tsv(f, tsv, pd_default_tsv(c.lambda), o);
  else
    d = c.reg == RegKind::TV ? tv_denoise(f, tv, composite(s), o) : tsv_denoise(f, tsv, composite(s), o);
  return {d.image(), std::move(d.trace)};
}

inline Regularizer regularizer_of(const RunConfig& c) {
  if (c.reg == RegKind::TSV) return TSVParams{c.lambda, *c.beta, c.gamma};
  return TVParams{c.lambda, c.variant};
}

inline void fill_final(RunOutcome& out, const Trace& t) {
  out.objective = t.back().objective;
  if (t.has_gap) out.gap = t.back().gap;
}

inline RunOutcome run_denoise(const RunConfig& c) {
  const ImageGrid clean = load_clean(c);
  const ImageGrid f = add_gaussian_noise(clean, c.noise, c.seed);
  DenoiseRun r = denoise_with(f, c, c.solver);
  RunOutcome out;
  fill_final(out, r.trace);
  std::optional<ImageGrid> ref;
  if (!c.ref.empty()) ref = load_image(c.ref, c.boundary);
  else if (!c.synthetic.empty() || c.noise > 0.0) ref = clean;
  if (ref) out.psnr = psnr(r.u, *ref), out.ssim = ssim(r.u, *ref);
  if (!c.out.empty()) save_imgf64(c.out, r.u);
  if (!c.log.empty()) save_trace_csv(c.log, r.trace, c.timing);
  out.traces.emplace_back(solver_name(c.solver), std::move(r.trace));
  return out;
}

inline RunOutcome run_bench(const RunConfig& c) {
  const ImageGrid f = add_gaussian_noise(load_clean(c), c.noise, c.seed);
  RunOutcome out;
  for (SolverKind s : c.bench_solvers) {
    DenoiseRun r = denoise_with(f, c, s);
    save_trace_csv(c.log + "_" + solver_name(s) + ".csv", r.trace, c.timing);
    fill_final(out, r.trace);
    out.traces.emplace_back(solver_name(s), std::move(r.trace));
  }
  return out;
}

inline TwoLoopOptions two_loop_options(const RunConfig& c) {
  TwoLoopOptions o;
  o.outer_iters = c.iters;
  o.inner_iters = c.inner_iters;
  o.accelerate = c.solver == SolverKind::APGA;
  return o;
}

/// --in is either k-space (2 channels, needs --mask) or an image to sample.
inline RunOutcome run_mri(const RunConfig& c) {
  std::optional<ImageGrid> truth;
  ComplexField kspace;
  SamplingMask mask;
  const bool have_kspace = !c.in.empty() && c.synthetic.empty() && [&] {
    if (c.in.size() >= 4 && c.in.compare(c.in.size() - 4, 4, ".pgm") == 0) return false;
    return load_imgf64(c.in).channels() == 2;
  }();
  if (have_kspace) {
    if (c.mask.empty()) throw ConfigError("k-space input needs --mask");
    kspace = field_to_complex(load_imgf64(c.in, c.boundary));
    mask = load_mask(c.mask);
  } else {
    truth = load_clean(c);
    mask = c.mask.empty() ? random_mask(truth->shape(), c.rate, parse_mask_pattern(c.pattern), c.seed)
                          : load_mask(c.mask);
    kspace = mri_model(mask).apply(*truth);
    if (c.noise > 0.0) {
      NormalStream rng(c.seed + 1);
      const double sd = std::sqrt(c.noise);
      for (std::size_t i = 0; i < kspace.data.size(); ++i)
        if (mask.mask.data()[i] != 0.0) kspace.data[i] += std::complex<double>(sd * rng.next(), sd * rng.next());
    }
  }
  if (mask.mask.width() != kspace.shape.width || mask.mask.height() != kspace.shape.height)
    throw ConfigError("mask and k-space dimensions differ");
  mask.mask = with_boundary(mask.mask, c.boundary);
  kspace.shape.boundary = c.boundary;
  TwoLoopResult r = mri_reconstruct(kspace, mask, regularizer_of(c), two_loop_options(c));
  RunOutcome out;
  fill_final(out, r.trace);
  const ImageGrid u = r.image();
  if (!c.ref.empty()) truth = load_image(c.ref, c.boundary);
  if (truth) out.psnr = psnr(u, *truth), out.ssim = ssim(u, *truth);
  if (!c.out.empty()) save_imgf64(c.out, u);
  if (!c.log.empty()) save_trace_csv(c.log, r.trace, c.timing);
  out.traces.emplace_back(solver_name(c.solver), std::move(r.trace));
  return out;
}

inline RunOutcome run_flow(const RunConfig& c) {
  ImageGrid source, target;
  if (!c.synthetic.empty()) {
    source = with_boundary(synthetic_image(c.synthetic, c.size, 0.0), c.boundary);
    target = with_boundary(synthetic_image(c.synthetic, c.size, c.shift), c.boundary);
  } else {
    if (c.in.empty() || c.target.empty()) throw ConfigError("flow needs --in and --target, or --synthetic");
    source = load_image(c.in, c.boundary);
    target = load_image(c.target, c.boundary);
  }
  source = add_gaussian_noise(source, c.noise, c.seed);
  target = add_gaussian_noise(target, c.noise, c.seed + 1);
  const FlowPair pair = flow_derivatives(source, target);
  TwoLoopResult r = optical_flow(pair, regularizer_of(c), two_loop_options(c));
  RunOutcome out;
  fill_final(out, r.trace);
  if (!c.out.empty()) save_imgf64(c.out, r.u);
  if (!c.hsv.empty()) save_ppm(c.hsv, flow_to_hsv(r.u));
  if (!c.log.empty()) save_trace_csv(c.log, r.trace, c.timing);
  out.traces.emplace_back(solver_name(c.solver), std::move(r.trace));
  return out;
}

inline RunOutcome run_oracle(const RunConfig& c) {
  const ImageGrid f = add_gaussian_noise(load_clean(c), c.noise, c.seed);
  OracleOptions o;
  o.cache_dir = c.cache;
  if (c.tol > 0.0) o.target_gap = c.tol;
  const OracleResult r = oracle_ground_truth(f, regularizer_of(c), o);
  if (!c.out.empty()) save_imgf64(c.out, r.u);
  RunOutcome out;
  out.objective = r.f_star;
  out.gap = r.gap;
  return out;
}

inline RunOutcome run_task(const RunConfig& c) {
  validate(c);
  switch (c.task) {
    case Task::Denoise: return run_denoise(c);
    case Task::Mri: return run_mri(c);
    case Task::Flow: return run_flow(c);
    case Task::Bench: return run_bench(c);
    case Task::Oracle: return run_oracle(c);
  }
  throw std::logic_error("unknown task");
}

}  // namespace vimg
