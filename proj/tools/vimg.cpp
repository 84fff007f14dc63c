// vimg: denoise, mri, flow, bench and oracle runs from the command line.
#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "vimg/harness.hpp"

namespace {

void add_common(CLI::App* app, vimg::RunConfig& c, std::string& reg, std::string& solver, std::string& boundary,
                std::string& variant) {
  app->add_option("--reg", reg, "Regularizer: tikhonov|tv|tsv")->check(CLI::IsMember({"tikhonov", "tv", "tsv"}));
  app->add_option("--solver", solver, "Solver name");
  app->add_option("--lambda", c.lambda, "Regularization weight");
  app->add_option("--beta", c.beta, "TSV smoothness weight (required for tsv)");
  app->add_option("--gamma", c.gamma, "TSV auxiliary weight");
  app->add_option("--rho", c.rho, "ADMM penalty");
  app->add_option("--q", c.q, "Scheme-1 strong convexity ratio mu/l");
  app->add_option("--iters", c.iters, "Iteration budget (outer budget for mri/flow)");
  app->add_option("--inner-iters", c.inner_iters, "Inner denoising budget for mri/flow");
  app->add_option("--tol", c.tol, "Stop at this duality gap (or f - f* for tikhonov); 0 runs the full budget");
  app->add_option("--boundary", boundary, "symmetric|periodic")->check(CLI::IsMember({"symmetric", "periodic"}));
  app->add_option("--variant", variant, "TV variant iso|aniso")->check(CLI::IsMember({"iso", "aniso"}));
  app->add_option("--seed", c.seed, "Noise and mask seed");
  app->add_option("--in", c.in, "Input image (.pgm or imgf64)");
  app->add_option("--out", c.out, "Output imgf64 path");
  app->add_option("--log", c.log, "Convergence CSV path (prefix for bench)");
  app->add_option("--ref", c.ref, "Reference image for PSNR/SSIM");
  app->add_option("--synthetic", c.synthetic, "Built-in image: geometric|mri|ramp-edge|sinusoid|head");
  app->add_option("--size", c.size, "Synthetic image size");
  app->add_option("--noise", c.noise, "Gaussian noise variance added to the input");
  app->add_flag("--timing", c.timing, "Fill the elapsed_ms column");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variational imaging solvers"};
  app.require_subcommand(1);
  vimg::RunConfig c;
  std::string reg = "tv", solver, boundary = "symmetric", variant = "iso", solvers;

  auto* denoise = app.add_subcommand("denoise", "Denoise one image");
  auto* mri = app.add_subcommand("mri", "Reconstruct from undersampled k-space");
  auto* flow = app.add_subcommand("flow", "Estimate optical flow between two frames");
  auto* bench = app.add_subcommand("bench", "Run several solvers on one instance, one CSV each");
  auto* oracle = app.add_subcommand("oracle", "Certified ground truth by long ADPA-restart runs");
  for (auto* sub : {denoise, mri, flow, bench, oracle}) add_common(sub, c, reg, solver, boundary, variant);
  mri->add_option("--mask", c.mask, "Mask file (imgf64, 0/1)");
  mri->add_option("--rate", c.rate, "Sampling rate for generated masks");
  mri->add_option("--pattern", c.pattern, "Generated mask pattern: columns|lowfreq|bernoulli");
  flow->add_option("--target", c.target, "Second frame");
  flow->add_option("--shift", c.shift, "Synthetic x-translation in pixels");
  flow->add_option("--hsv", c.hsv, "HSV visualization (binary PPM)");
  bench->add_option("--solvers", solvers, "Comma-separated solver list")->required();
  oracle->add_option("--cache", c.cache, "Cache directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*denoise) c.task = vimg::Task::Denoise;
    if (*mri) c.task = vimg::Task::Mri;
    if (*flow) c.task = vimg::Task::Flow;
    if (*bench) c.task = vimg::Task::Bench;
    if (*oracle) c.task = vimg::Task::Oracle;
    c.reg = vimg::parse_reg(reg);
    c.boundary = boundary == "periodic" ? vimg::Boundary::Periodic : vimg::Boundary::Symmetric;
    c.variant = variant == "aniso" ? vimg::TVVariant::Anisotropic : vimg::TVVariant::Isotropic;
    if (solver.empty()) {
      if (c.task == vimg::Task::Mri || c.task == vimg::Task::Flow)
        solver = "apga";
      else
        solver = c.reg == vimg::RegKind::Tikhonov ? "nesterov-restart" : "adpa-restart";
    }
    c.solver = vimg::parse_solver(solver);
    if (c.task == vimg::Task::Bench) {
      std::stringstream ss(solvers);
      for (std::string s; std::getline(ss, s, ',');)
        if (!s.empty()) c.bench_solvers.push_back(vimg::parse_solver(s));
    }
    const vimg::RunOutcome r = vimg::run_task(c);
    vimg::report(std::cout, r);
  } catch (const vimg::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
