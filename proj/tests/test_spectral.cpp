#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <random>

#include "dense.hpp"
#include "vimg/spectral.hpp"

using namespace vimg;

namespace {

ImageGrid random_image(GridShape s, std::mt19937_64& rng) {
  std::normal_distribution<double> d;
  ImageGrid img(s);
  for (double& v : img.values()) v = d(rng);
  return img;
}

double rel_err(const ImageGrid& a, const oracle::Vec& b) {
  return (oracle::to_vec(a.values()) - b).norm() / b.norm();
}

std::vector<double> dense_eigenvalues_1d(std::size_t n) {
  oracle::Mat T = oracle::diff_1d(n, Boundary::Symmetric);
  Eigen::SelfAdjointEigenSolver<oracle::Mat> es(-T.transpose() * T);
  std::vector<double> ev(es.eigenvalues().data(), es.eigenvalues().data() + n);
  std::sort(ev.rbegin(), ev.rend());
  return ev;
}

}  // namespace

TEST(Spectral, EigenvaluesTwo) {
  auto ev = eigenvalues_1d(2);
  auto dense = dense_eigenvalues_1d(2);
  ASSERT_EQ(ev.size(), 2u);
  EXPECT_NEAR(ev[0], 0.0, 1e-14);
  EXPECT_NEAR(ev[1], -2.0, 1e-14);
  for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(ev[j], dense[j], 1e-10);
}

TEST(Spectral, EigenvaluesFour) {
  auto ev = eigenvalues_1d(4);
  std::vector<double> expect{0.0, -0.5857864376269049, -2.0, -3.414213562373095};
  auto dense = dense_eigenvalues_1d(4);
  for (std::size_t j = 0; j < 4; ++j) {
    EXPECT_NEAR(ev[j], expect[j], 1e-12);
    EXPECT_NEAR(ev[j], dense[j], 1e-10);
  }
}

TEST(Spectral, EigenvaluesRangeAndOrder) {
  for (std::size_t n = 2; n < 40; ++n) {
    auto ev = eigenvalues_1d(n);
    for (std::size_t j = 0; j < n; ++j) {
      EXPECT_LE(ev[j], 0.0);
      EXPECT_GE(ev[j], -4.0);
      if (j) { EXPECT_LT(ev[j], ev[j - 1]); }
    }
  }
  EXPECT_THROW(eigenvalues_1d(1), std::invalid_argument);
}

TEST(Spectral, ScreenedIdentityWhenBZero) {
  std::mt19937_64 rng(1);
  ImageGrid f = random_image(GridShape{5, 3}, rng);
  ImageGrid u = solve_screened_laplacian(f, 2.0, 0.0);
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_EQ(u.data()[i], f.data()[i] / 2.0);
}

TEST(Spectral, ScreenedRejectsBadCoefficients) {
  ImageGrid f(4, 4);
  EXPECT_THROW(solve_screened_laplacian(f, 0.0, 1.0), std::invalid_argument);
  EXPECT_THROW(solve_screened_laplacian(f, -1.0, 1.0), std::invalid_argument);
  EXPECT_THROW(solve_screened_laplacian(f, 1.0, -1.0), std::invalid_argument);
}

TEST(Spectral, ScreenedMatchesDenseLU) {
  std::mt19937_64 rng(2);
  for (auto b : {Boundary::Symmetric, Boundary::Periodic})
    for (std::size_t m = 1; m <= 8; ++m)
      for (std::size_t n = 1; n <= 8; ++n)
        for (double lam : {0.1, 1.0, 10.0}) {
          GridShape s{m, n, b};
          ImageGrid f = random_image(s, rng);
          oracle::Mat A = oracle::Mat::Identity(s.size(), s.size()) + lam * oracle::neg_laplacian(s);
          oracle::Vec ref = A.partialPivLu().solve(oracle::to_vec(f.values()));
          EXPECT_LE(rel_err(solve_screened_laplacian(f, 1.0, lam), ref), 1e-8)
              << m << "x" << n << " " << to_string(b);
        }
}

TEST(Spectral, ScreenedResidualAndInvolution) {
  std::mt19937_64 rng(3);
  GridShape s{37, 23};
  ScreenedSolver solver(s, 0.7, 3.0);
  ImageGrid f = random_image(s, rng);
  ImageGrid u = solver.solve(f);
  EXPECT_LE(norm(difference(solver.apply(u), f)) / norm(f), 1e-10);
  ImageGrid g = solver.solve(solver.apply(f));
  EXPECT_LE(norm(difference(g, f)) / norm(f), 1e-10);
}

TEST(Spectral, EigenPlanePositive) {
  ScreenedSolver solver(GridShape{6, 9}, 0.1, 5.0);
  for (double v : solver.eigenvalue_plane()) EXPECT_GT(v, 0.0);
}

TEST(Spectral, AxisIdentityWhenBetaZero) {
  std::mt19937_64 rng(4);
  ImageGrid f = random_image(GridShape{4, 3}, rng);
  ImageGrid w = solve_axis_screened(f, Axis::Y, 4.0, 0.0);
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_EQ(w.data()[i], f.data()[i] / 4.0);
  EXPECT_THROW(solve_axis_screened(f, Axis::X, 0.0, 1.0), std::invalid_argument);
}

TEST(Spectral, AxisMatchesDense) {
  std::mt19937_64 rng(5);
  for (auto b : {Boundary::Symmetric, Boundary::Periodic})
    for (std::size_t m = 1; m <= 8; ++m)
      for (std::size_t n = 1; n <= 8; ++n)
        for (Axis axis : {Axis::X, Axis::Y}) {
          GridShape s{m, n, b};
          ImageGrid f = random_image(s, rng);
          oracle::Mat D = axis == Axis::X ? oracle::Lx(s) : oracle::Ly(s);
          oracle::Mat A = 1.0 * oracle::Mat::Identity(s.size(), s.size()) + 2.0 * D.transpose() * D;
          oracle::Vec ref = A.partialPivLu().solve(oracle::to_vec(f.values()));
          EXPECT_LE(rel_err(solve_axis_screened(f, axis, 1.0, 2.0), ref), 1e-8);
        }
}

TEST(Spectral, AxisEigenvalueRange) {
  GridShape s{6, 6};
  const double gamma = 1.0, beta = 2.0;
  for (Axis axis : {Axis::X, Axis::Y}) {
    oracle::Mat D = axis == Axis::X ? oracle::Lx(s) : oracle::Ly(s);
    oracle::Mat A = gamma * oracle::Mat::Identity(36, 36) + beta * D.transpose() * D;
    Eigen::SelfAdjointEigenSolver<oracle::Mat> es(A);
    EXPECT_NEAR(es.eigenvalues().minCoeff(), gamma, 1e-9);
    // The largest eigenvalue approaches 4β + γ from below as the axis grows.
    EXPECT_LE(es.eigenvalues().maxCoeff(), 4 * beta + gamma);
    EXPECT_NEAR(es.eigenvalues().maxCoeff(), gamma - beta * eigenvalues_1d(6).back(), 1e-9);
    AxisSolver solver(s, axis, gamma, beta);
    for (double v : solver.eigenvalues()) {
      EXPECT_GE(v, gamma);
      EXPECT_LT(v, 4 * beta + gamma);
    }
  }
}

TEST(Spectral, GradientNormBelowEight) {
  for (std::size_t m = 1; m <= 8; ++m)
    for (std::size_t n = 1; n <= 8; ++n) {
      GridShape s{m, n};
      Eigen::SelfAdjointEigenSolver<oracle::Mat> es(oracle::neg_laplacian(s));
      EXPECT_NEAR(gradient_norm_sq(s), es.eigenvalues().maxCoeff(), 1e-10);
      EXPECT_LT(gradient_norm_sq(s), 8.0);
    }
}

TEST(Spectral, UnitaryDftDelta) {
  GridShape s{4, 6};
  ImageGrid d(s);
  d(1, 2) = 1.0;
  ComplexField F = unitary_dft_2d(d);
  for (auto c : F.data) EXPECT_NEAR(std::abs(c), 1.0 / std::sqrt(24.0), 1e-14);
}

TEST(Spectral, UnitaryDftRoundTripAndParseval) {
  std::mt19937_64 rng(6);
  for (auto [m, n] : {std::pair<std::size_t, std::size_t>{8, 8}, {5, 7}, {16, 3}}) {
    ImageGrid u = random_image(GridShape{m, n}, rng);
    ComplexField F = unitary_dft_2d(u);
    double e = 0.0;
    for (auto c : F.data) e += std::norm(c);
    EXPECT_NEAR(e, norm_sq(u), 1e-10 * norm_sq(u));
    ComplexField back = inverse_unitary_dft_2d(F);
    EXPECT_LE(max_abs(difference(real_part(back), u)), 1e-12);
    EXPECT_LE(max_imag(back), 1e-12);
  }
}
