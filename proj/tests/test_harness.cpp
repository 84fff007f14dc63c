#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "dense.hpp"
#include "vimg/harness.hpp"
#include "vimg/metrics.hpp"
#include "vimg/oracle.hpp"

using namespace vimg;
namespace fs = std::filesystem;

namespace {

ImageGrid random_image(GridShape s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  ImageGrid img(s);
  for (double& v : img.values()) v = d(rng);
  return img;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "vimg_test_harness";
  fs::create_directories(dir);
  return dir / name;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p, std::string* header = nullptr) {
  std::ifstream is(p);
  std::string line;
  std::getline(is, line);
  if (header) *header = line;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(is, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

// ---------------------------------------------------------------------------
// File formats

TEST(Imgf64, RoundTripIsBitExact) {
  VectorField f(GridShape{5, 3}, 2);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> d;
  for (double& v : f.values()) v = d(rng);
  f.values()[0] = std::numeric_limits<double>::denorm_min();
  f.values()[1] = -0.0;
  std::stringstream ss;
  write_imgf64(ss, f);
  const VectorField g = read_imgf64(ss);
  ASSERT_EQ(g.width(), 5u);
  ASSERT_EQ(g.height(), 3u);
  ASSERT_EQ(g.channels(), 2u);
  EXPECT_EQ(std::memcmp(f.values().data(), g.values().data(), f.size() * sizeof(double)), 0);
}

TEST(Imgf64, ByteLayout) {
  VectorField f(GridShape{2, 1}, 2);
  f(0, 0, 0) = 1.0, f(1, 0, 0) = 2.0, f(0, 1, 0) = 3.0, f(1, 1, 0) = 4.0;
  std::stringstream ss;
  write_imgf64(ss, f);
  const std::string bytes = ss.str();
  ASSERT_EQ(bytes.size(), 16u + 4 * 8);
  EXPECT_EQ(bytes.substr(0, 4), "IMF8");
  std::uint32_t hdr[3];
  std::memcpy(hdr, bytes.data() + 4, 12);
  EXPECT_EQ(hdr[0], 2u);
  EXPECT_EQ(hdr[1], 1u);
  EXPECT_EQ(hdr[2], 2u);
  double px[4];
  std::memcpy(px, bytes.data() + 16, 32);
  // Channel-interleaved: pixel 0 (ch0, ch1), then pixel 1.
  EXPECT_EQ(px[0], 1.0);
  EXPECT_EQ(px[1], 2.0);
  EXPECT_EQ(px[2], 3.0);
  EXPECT_EQ(px[3], 4.0);
}

TEST(Imgf64, DistinctErrors) {
  {
    std::stringstream ss("IMG8xxxxxxxxxxxx");
    EXPECT_THROW(read_imgf64(ss), MalformedHeader);
  }
  {
    std::stringstream ss;
    const std::uint32_t hdr[3] = {1u << 20, 1u << 20, 1};
    ss.write("IMF8", 4);
    ss.write(reinterpret_cast<const char*>(hdr), 12);
    EXPECT_THROW(read_imgf64(ss), DimensionOverflow);
  }
  {
    std::stringstream ss;
    write_imgf64(ss, VectorField(GridShape{4, 4}, 1));
    std::string s = ss.str();
    s.resize(s.size() - 8);
    std::stringstream cut(s);
    EXPECT_THROW(read_imgf64(cut), TruncatedPayload);
  }
}

TEST(Pgm, AsciiNormalization) {
  std::stringstream ss("P2 2 2 255\n0 255\n0 255\n");
  const ImageGrid img = read_pgm(ss);
  EXPECT_EQ(img(0, 0), 0.0);
  EXPECT_EQ(img(1, 0), 1.0);
  EXPECT_EQ(img(0, 1), 0.0);
  EXPECT_EQ(img(1, 1), 1.0);
}

TEST(Pgm, CommentsAndWideBinary) {
  std::string s = "P5\n# comment\n2 1\n65535\n";
  s += std::string{'\xff', '\xff', '\x80', '\x00'};
  std::stringstream ss(s);
  const ImageGrid img = read_pgm(ss);
  EXPECT_EQ(img(0, 0), 1.0);
  EXPECT_NEAR(img(1, 0), 32768.0 / 65535.0, 1e-15);
}

TEST(Pgm, Errors) {
  std::stringstream zero("P2 2 2 0\n0 0 0 0\n");
  EXPECT_THROW(read_pgm(zero), MalformedHeader);
  std::stringstream magic("P3 2 2 255\n");
  EXPECT_THROW(read_pgm(magic), MalformedHeader);
  std::stringstream big("P2 4294967295 4294967295 255\n");
  EXPECT_THROW(read_pgm(big), DimensionOverflow);
  std::stringstream short_ascii("P2 2 2 255\n0 1 2\n");
  EXPECT_THROW(read_pgm(short_ascii), TruncatedPayload);
  std::stringstream short_binary("P5 2 2 255\nab");
  EXPECT_THROW(read_pgm(short_binary), TruncatedPayload);
}

TEST(Pgm, BinaryRoundTrip) {
  ImageGrid img(3, 2);
  for (std::size_t i = 0; i < 6; ++i) img.data()[i] = static_cast<double>(i * 51) / 255.0;
  std::stringstream ss;
  write_pgm(ss, img);
  const ImageGrid back = read_pgm(ss);
  EXPECT_LE(max_abs(difference(img, back)), 1e-15);
}

TEST(Ppm, Header) {
  ColorImage c;
  c.width = 2, c.height = 1, c.rgb = {1, 2, 3, 4, 5, 6};
  std::stringstream ss;
  write_ppm(ss, c);
  EXPECT_EQ(ss.str(), std::string("P6\n2 1\n255\n") + std::string({1, 2, 3, 4, 5, 6}));
}

// ---------------------------------------------------------------------------
// Synthesis

TEST(Noise, VarianceBeforeClamping) {
  const ImageGrid n = gaussian_noise({256, 256}, 0.005, 11);
  double mean = 0.0, var = 0.0;
  for (double v : n.values()) mean += v;
  mean /= static_cast<double>(n.size());
  for (double v : n.values()) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n.size() - 1);
  EXPECT_GE(var, 0.00475);
  EXPECT_LE(var, 0.00525);
  EXPECT_NEAR(mean, 0.0, 5e-3 * std::sqrt(0.005));
}

TEST(Noise, DeterministicClampedAndIdentityAtZero) {
  const ImageGrid img = intensity_ramp_mask(geometric_phantom(32, 32));
  const ImageGrid a = add_gaussian_noise(img, 0.005, 3), b = add_gaussian_noise(img, 0.005, 3);
  EXPECT_EQ(a.data(), b.data());
  EXPECT_NE(a.data(), add_gaussian_noise(img, 0.005, 4).data());
  for (double v : a.values()) EXPECT_TRUE(v >= 0.0 && v <= 1.0);
  EXPECT_EQ(add_gaussian_noise(img, 0.0, 3).data(), img.data());
}

TEST(Synth, RampMask) {
  const ImageGrid one(GridShape{5, 6}, std::vector<double>(30, 1.0));
  const ImageGrid r = intensity_ramp_mask(one);
  for (std::size_t x = 0; x < 5; ++x) {
    EXPECT_DOUBLE_EQ(r(x, 5), 1.0);
    EXPECT_DOUBLE_EQ(r(x, 0), 0.2);
  }
  const ImageGrid twice = intensity_ramp_mask(r);
  ImageGrid squared = r;
  for (double& v : squared.values()) v *= v;
  EXPECT_LE(max_abs(difference(twice, squared)), 1e-15);
}

TEST(Synth, PhantomRowHasEdgeAndLinearSegment) {
  // Ramp-edge phantom: a linear stretch followed by a jump.
  const std::size_t m = 64;
  const ImageGrid img = ramp_edge_phantom(m, 32);
  const auto L = ramp_edge_layout(m);
  const std::size_t y = 16;
  double max_jump = 0.0;
  std::size_t at = 0;
  for (std::size_t x = 0; x + 1 < m; ++x)
    if (std::abs(img(x + 1, y) - img(x, y)) > max_jump) max_jump = std::abs(img(x + 1, y) - img(x, y)), at = x + 1;
  EXPECT_GT(max_jump, 0.3);
  EXPECT_EQ(at, L.ramp_end);
  for (std::size_t x = 1; x + 1 < L.ramp_end; ++x)
    EXPECT_NEAR(img(x + 1, y) - 2 * img(x, y) + img(x - 1, y), 0.0, 1e-12);
  EXPECT_GT(img(L.ramp_end - 1, y) - img(0, y), 0.2);

  // Geometric phantom: the background is linear away from the shapes and shapes add jumps.
  const ImageGrid g = geometric_phantom(64, 64);
  double jump = 0.0;
  for (std::size_t yy = 0; yy < 64; ++yy)
    for (std::size_t x = 0; x + 1 < 64; ++x) jump = std::max(jump, std::abs(g(x + 1, yy) - g(x, yy)));
  EXPECT_GT(jump, 0.2);
  EXPECT_NEAR(g(2, 0) - 2 * g(1, 0) + g(0, 0), 0.0, 1e-12);
  EXPECT_GT(std::abs(g(10, 0) - g(0, 0)), 0.01);
}

TEST(Synth, SinusoidShift) {
  const ImageGrid a = sinusoid_texture(32, 32, 16.0, 0.0), b = sinusoid_texture(32, 32, 16.0, 1.0);
  for (std::size_t y = 0; y < 32; ++y)
    for (std::size_t x = 1; x < 32; ++x) EXPECT_NEAR(b(x, y), a(x - 1, y), 1e-12);
}

TEST(Synth, SyntheticNames) {
  for (const char* name : {"geometric", "mri", "ramp-edge", "sinusoid", "head"}) {
    const ImageGrid img = synthetic_image(name, 16);
    EXPECT_EQ(img.width(), 16u);
    for (double v : img.values()) EXPECT_TRUE(v >= 0.0 && v <= 1.0);
  }
  EXPECT_THROW(synthetic_image("lena", 16), ConfigError);
}

// ---------------------------------------------------------------------------
// Metrics

TEST(Metrics, PsnrCases) {
  const ImageGrid a = random_image({8, 8}, 1);
  EXPECT_TRUE(std::isinf(psnr(a, a)));
  EXPECT_GT(psnr(a, a), 0.0);
  const ImageGrid zero(8, 8), one(GridShape{8, 8}, std::vector<double>(64, 1.0));
  EXPECT_DOUBLE_EQ(mse(zero, one), 1.0);
  EXPECT_DOUBLE_EQ(psnr(zero, one), 0.0);
  EXPECT_THROW(psnr(zero, ImageGrid(8, 7)), std::invalid_argument);
  EXPECT_THROW(ssim(zero, ImageGrid(8, 7)), std::invalid_argument);
}

TEST(Metrics, SsimIdentityAndSymmetry) {
  const ImageGrid a = random_image({20, 17}, 2), b = random_image({20, 17}, 3);
  EXPECT_NEAR(ssim(a, a), 1.0, 1e-12);
  EXPECT_NEAR(ssim(a, b), ssim(b, a), 1e-12);
  EXPECT_LT(ssim(a, b), 0.5);
  EXPECT_GE(ssim(a, b), -1.0);
}

TEST(Metrics, ScalarReimplementationOn3x3) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const ImageGrid a = random_image({3, 3}, seed), b = random_image({3, 3}, seed + 100);
    // One 3x3 window with Gaussian weights, sigma 1.5.
    double w[3][3], wsum = 0.0;
    for (int j = 0; j < 3; ++j)
      for (int i = 0; i < 3; ++i) wsum += w[j][i] = std::exp(-((i - 1) * (i - 1) + (j - 1) * (j - 1)) / 4.5);
    double ma = 0, mb = 0;
    for (int j = 0; j < 3; ++j)
      for (int i = 0; i < 3; ++i) {
        ma += w[j][i] / wsum * a(i, j);
        mb += w[j][i] / wsum * b(i, j);
      }
    double va = 0, vb = 0, cov = 0, se = 0;
    for (int j = 0; j < 3; ++j)
      for (int i = 0; i < 3; ++i) {
        const double p = w[j][i] / wsum;
        va += p * (a(i, j) - ma) * (a(i, j) - ma);
        vb += p * (b(i, j) - mb) * (b(i, j) - mb);
        cov += p * (a(i, j) - ma) * (b(i, j) - mb);
        se += (a(i, j) - b(i, j)) * (a(i, j) - b(i, j));
      }
    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    const double expect = (2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    EXPECT_NEAR(ssim(a, b), expect, 1e-10);
    EXPECT_NEAR(psnr(a, b), -10.0 * std::log10(se / 9.0), 1e-10);
  }
}

TEST(Metrics, GaussianTaps) {
  const auto g = gaussian_taps(11, 1.5);
  ASSERT_EQ(g.size(), 11u);
  double s = 0.0;
  for (double v : g) s += v;
  EXPECT_NEAR(s, 1.0, 1e-15);
  EXPECT_NEAR(g[5] / g[6], std::exp(1.0 / 4.5), 1e-12);
  EXPECT_EQ(g[0], g[10]);
}

// ---------------------------------------------------------------------------
// Convergence logs

TEST(Csv, SchemaAndRestartColumn) {
  const ImageGrid f = add_gaussian_noise(intensity_ramp_mask(geometric_phantom(16, 16)), 0.005, 1);
  SolverOptions o;
  o.max_iters = 30;
  auto d = tv_denoise(f, {0.2}, CompositeSolver::AcceleratedRestart, o);
  std::stringstream ss;
  write_trace_csv(ss, d.trace, false);
  std::string header;
  std::getline(ss, header);
  EXPECT_EQ(header, "iter,objective,gap,grad_norm,restarted,elapsed_ms");
  std::string line;
  std::size_t n = 0;
  while (std::getline(ss, line)) {
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 5);
    EXPECT_EQ(line.back(), ',');
    ++n;
  }
  EXPECT_EQ(n, 31u);

  auto P = tikhonov_problem(f, 1.0);
  auto g = gradient_descent(P, f, 1.0 / P.lipschitz, o);
  std::stringstream st;
  write_trace_csv(st, g.trace, true);
  std::getline(st, header);
  std::getline(st, line);
  const auto first = line.find(','), second = line.find(',', first + 1);
  EXPECT_EQ(second, first + 1 + line.substr(first + 1).find(','));
  EXPECT_EQ(line.substr(second, 2), ",,");  // gap empty without a dual
  EXPECT_NE(line.back(), ',');              // timing requested
}

TEST(Csv, NumbersRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300}) EXPECT_EQ(std::stod(csv_number(v)), v);
}

TEST(Csv, BenchWritesOneFilePerSolver) {
  RunConfig c;
  c.task = Task::Bench;
  c.synthetic = "geometric";
  c.size = 16;
  c.noise = 0.005;
  c.iters = 25;
  c.bench_solvers = {SolverKind::PG, SolverKind::ADPA, SolverKind::ADPARestart};
  c.log = scratch("bench").string();
  run_task(c);
  for (auto s : c.bench_solvers) {
    std::string header;
    const auto rows = read_csv(c.log + "_" + solver_name(s) + ".csv", &header);
    EXPECT_EQ(header, "iter,objective,gap,grad_norm,restarted,elapsed_ms");
    ASSERT_EQ(rows.size(), 26u);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      ASSERT_EQ(rows[i].size(), 6u);
      EXPECT_EQ(rows[i][0], std::to_string(i));
      EXPECT_FALSE(rows[i][2].empty());
      EXPECT_EQ(rows[i][4].empty(), s != SolverKind::ADPARestart);
    }
  }
}

TEST(Csv, DenoiseSmokeGapTrend) {
  RunConfig c;
  c.synthetic = "geometric";
  c.size = 32;
  c.noise = 0.005;
  c.iters = 400;
  c.log = scratch("denoise.csv").string();
  c.out = scratch("denoise.imf8").string();
  const RunOutcome r = run_task(c);
  ASSERT_TRUE(r.psnr && r.ssim);
  EXPECT_GT(*r.psnr, 20.0);
  const auto rows = read_csv(c.log);
  ASSERT_EQ(rows.size(), 401u);
  const double g0 = std::stod(rows[0][2]), g100 = std::stod(rows[100][2]), g400 = std::stod(rows[400][2]);
  EXPECT_LT(g100, g0);
  EXPECT_LT(g400, g100);
  EXPECT_EQ(load_imgf64(c.out).width(), 32u);
}

// ---------------------------------------------------------------------------
// Config validation and the CLI

TEST(Config, Validation) {
  RunConfig c;
  EXPECT_NO_THROW(validate(c));
  c.reg = RegKind::TSV;
  EXPECT_THROW(validate(c), ConfigError);  // TSV needs beta
  c.beta = 10.0;
  EXPECT_NO_THROW(validate(c));
  c.solver = SolverKind::Nesterov2;
  EXPECT_THROW(validate(c), ConfigError);
  c.reg = RegKind::Tikhonov;
  EXPECT_NO_THROW(validate(c));
  c.solver = SolverKind::ADMM;
  EXPECT_THROW(validate(c), ConfigError);
  c = RunConfig{};
  c.task = Task::Mri;
  EXPECT_THROW(validate(c), ConfigError);  // two-loop solvers only
  c.solver = SolverKind::APGA;
  EXPECT_NO_THROW(validate(c));
  c.inner_iters = 0;
  EXPECT_THROW(validate(c), ConfigError);
  c = RunConfig{};
  c.lambda = 0.0;
  EXPECT_THROW(validate(c), ConfigError);
  c = RunConfig{};
  c.task = Task::Bench;
  c.bench_solvers = {SolverKind::PG};
  EXPECT_THROW(validate(c), ConfigError);  // needs a log prefix
  c = RunConfig{};
  c.task = Task::Oracle;
  c.tol = 1e-6;
  EXPECT_THROW(validate(c), ConfigError);
}

TEST(Config, Parsing) {
  EXPECT_EQ(parse_solver("adpa-restart"), SolverKind::ADPARestart);
  EXPECT_EQ(parse_solver("nesterov2"), SolverKind::Nesterov2);
  EXPECT_THROW(parse_solver("lbfgs"), ConfigError);
  EXPECT_EQ(parse_reg("tsv"), RegKind::TSV);
  EXPECT_THROW(parse_reg("tgv"), ConfigError);
  for (const auto& [name, kind] : solver_names()) EXPECT_EQ(solver_name(kind), name);
}

TEST(Cli, ExitCodes) {
  const std::string cli = VIMG_CLI_PATH;
  const std::string quiet = " >/dev/null 2>&1";
  auto code = [](int status) { return WIFEXITED(status) ? WEXITSTATUS(status) : -1; };
  EXPECT_EQ(code(std::system((cli + " denoise --synthetic geometric --size 16 --iters 5" + quiet).c_str())), 0);
  EXPECT_EQ(code(std::system((cli + " denoise --synthetic geometric --size 16 --solver lbfgs" + quiet).c_str())), 2);
  EXPECT_EQ(code(std::system((cli + " denoise --synthetic geometric --reg tsv" + quiet).c_str())), 2);
  EXPECT_NE(code(std::system((cli + quiet).c_str())), 0);
  EXPECT_EQ(code(std::system((cli + " denoise --in /nonexistent.pgm" + quiet).c_str())), 1);
}

// ---------------------------------------------------------------------------
// Ground-truth oracle

TEST(Oracle, ConstantImageConvergesImmediately) {
  const ImageGrid c(GridShape{8, 8}, std::vector<double>(64, 0.3));
  const OracleResult r = oracle_ground_truth(c, TVParams{0.2});
  EXPECT_EQ(r.iterations, 0u);
  EXPECT_EQ(r.gap, 0.0);
  EXPECT_LE(max_abs(difference(r.u, c)), 1e-15);
}

TEST(Oracle, MatchesDenseSolve) {
  // Independent dense projected gradient on the dual, built from explicit stencil matrices.
  const GridShape s{4, 4};
  const ImageGrid f = random_image(s, 9);
  const double lam = 0.15;
  oracle::Mat G(32, 16);
  G << oracle::Lx(s), oracle::Ly(s);
  const oracle::Vec fv = oracle::to_vec(f.values());
  oracle::Vec p = oracle::Vec::Zero(32);
  const double t = 1.0 / (8.0 * lam * lam);
  for (int it = 0; it < 400000; ++it) {
    const oracle::Vec u = fv - lam * G.transpose() * p;
    p += t * lam * (G * u);
    for (int i = 0; i < 16; ++i) {
      const double n = std::hypot(p(i), p(16 + i));
      if (n > 1.0) p(i) /= n, p(16 + i) /= n;
    }
  }
  const oracle::Vec u = fv - lam * G.transpose() * p;
  const OracleResult r = oracle_ground_truth(f, TVParams{lam});
  EXPECT_LE(r.gap, 1e-8);
  EXPECT_LE((oracle::to_vec(r.u.values()) - u).lpNorm<Eigen::Infinity>(), 1e-6);
}

TEST(Oracle, CacheRoundTrip) {
  const fs::path dir = scratch("cache");
  fs::remove_all(dir);
  const ImageGrid f = add_gaussian_noise(intensity_ramp_mask(geometric_phantom(12, 12)), 0.005, 2);
  OracleOptions o;
  o.cache_dir = dir.string();
  const OracleResult a = oracle_ground_truth(f, TSVParams{0.2, 10.0, 1.0}, o);
  EXPECT_FALSE(a.from_cache);
  EXPECT_LE(a.gap, 1e-8);
  const OracleResult b = oracle_ground_truth(f, TSVParams{0.2, 10.0, 1.0}, o);
  EXPECT_TRUE(b.from_cache);
  EXPECT_EQ(a.u.data(), b.u.data());
  EXPECT_EQ(a.f_star, b.f_star);
  const OracleResult c = oracle_ground_truth(f, TSVParams{0.2, 20.0, 1.0}, o);
  EXPECT_FALSE(c.from_cache);
  EXPECT_NE(oracle_key(f, TSVParams{0.2, 10.0, 1.0}), oracle_key(f, TSVParams{0.2, 20.0, 1.0}));
}

TEST(Oracle, FailsLoudlyOnTinyBudget) {
  const ImageGrid f = random_image({16, 16}, 4);
  OracleOptions o;
  o.max_iters = 5;
  EXPECT_THROW(oracle_ground_truth(f, TVParams{0.5}, o), OracleFailure);
}
