#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <numbers>

#include "obliv/complexity.hpp"
#include "obliv/error.hpp"
#include "obliv/rng.hpp"

namespace obliv {
namespace {

// E||g||_2 for g ~ N(0, I_m).
double expected_gaussian_norm(int m) { return std::sqrt(2.0) * std::exp(std::lgamma((m + 1) / 2.0) - std::lgamma(m / 2.0)); }

TEST(Summarize, MeanAndStandardError) {
  const auto r = summarize({1.0, 2.0, 3.0, 4.0}, Interpretation::LowerEstimate);
  EXPECT_DOUBLE_EQ(r.mean, 2.5);
  EXPECT_NEAR(r.std_error, std::sqrt((1.25 * 4 / 3.0) / 4), 1e-15);
  EXPECT_EQ(r.trials, 4);
  const auto j = to_json(r);
  EXPECT_EQ(j["interpretation"], "lower-estimate");
  EXPECT_EQ(j["values"].size(), 4u);
}

TEST(MomentSetComplexity, UnitBallGaussian) {
  const int m = 20;
  SolverParams params;
  params.max_outer_iters = 2000;
  const auto r = gaussian_complexity_mc(compile_unit_ball(m), 1, 20, params, 5);
  EXPECT_EQ(r.interpretation, Interpretation::LowerEstimate);
  EXPECT_NEAR(r.mean, expected_gaussian_norm(m), 3 * r.std_error + 0.01 * expected_gaussian_norm(m));
}

TEST(MomentSetComplexity, UnitBallRademacherEachDraw) {
  const int m = 20;
  SolverParams params;
  params.max_outer_iters = 2000;
  const auto r = rademacher_complexity_mc(compile_unit_ball(m), 1, 5, params, 6);
  for (double v : r.values) {
    EXPECT_LE(v, std::sqrt(m) * (1 + 1e-6));  // feasible points cannot beat the true sup
    EXPECT_GE(v, 0.99 * std::sqrt(m));
  }
}

TEST(PointSetComplexity, ZeroSetAndFinite) {
  const auto zero = point_set_complexity_mc(Eigen::MatrixXd::Zero(5, 1), Direction::Gaussian, 10, 1);
  EXPECT_EQ(zero.mean, 0.0);
  // {+-e_i}: sup is the largest |g_i|.
  const int m = 4;
  Eigen::MatrixXd pm(m, 2 * m);
  pm << Eigen::MatrixXd::Identity(m, m), -Eigen::MatrixXd::Identity(m, m);
  const auto rad = point_set_complexity_mc(pm, Direction::Rademacher, 10, 2);
  for (double v : rad.values) EXPECT_EQ(v, 1.0);
}

TEST(Sudakov, Examples) {
  EXPECT_EQ(sudakov_ln_net_bound(0.0, 1.0), 0.0);
  EXPECT_EQ(sudakov_ln_net_bound(1.0, 2.0), 1.0);
  const double g = std::sqrt(std::numbers::pi / 2);
  const double b = sudakov_ln_net_bound(g, 0.5);
  EXPECT_NEAR(b, 8 * std::numbers::pi, 1e-12);
  EXPECT_GE(b, std::log(36.0));
  EXPECT_THROW(sudakov_ln_net_bound(1.0, 0.0), ValidationError);
}

// Independent enumeration: bitmasks with popcount 2t, full eigen-decomposition.
double brute_submatrix_max(const Eigen::MatrixXd& w, int t) {
  const int n = static_cast<int>(w.rows());
  double best = 0.0;
  for (unsigned mask = (1u << n) - 1; mask > 0; --mask) {
    if (std::popcount(mask) != 2 * t) continue;
    std::vector<int> idx;
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) idx.push_back(i);
    const Eigen::MatrixXd sub = w(idx, idx);
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sub).eigenvalues();
    best = std::max(best, ev.cwiseAbs().maxCoeff());
  }
  return best;
}

TEST(SubmatrixSpectralMax, Examples) {
  for (int t : {1, 2, 3}) EXPECT_NEAR(submatrix_spectral_max(Eigen::MatrixXd::Identity(8, 8), t).value, 1.0, 1e-14);
  Eigen::VectorXd d = Eigen::VectorXd::Ones(7);
  d[0] = 3.0;
  const auto r = submatrix_spectral_max(d.asDiagonal().toDenseMatrix(), 2);
  EXPECT_NEAR(r.value, 3.0, 1e-14);
  EXPECT_EQ(r.subset, (std::vector<int>{0, 1, 2, 3}));
  const Eigen::MatrixXd w = gaussian_symmetric(12, 3);
  const std::vector<int> fixed{1, 4, 7, 10};
  const double single =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(Eigen::MatrixXd(w(fixed, fixed))).eigenvalues().cwiseAbs().maxCoeff();
  EXPECT_GE(submatrix_spectral_max(w, 2).value, single);
}

TEST(SubmatrixSpectralMax, MatchesBruteForce) {
  CounterRng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 4 + static_cast<int>(rng.below(7));
    const int t = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n / 2)));
    const Eigen::MatrixXd w = gaussian_symmetric(n, 100 + trial);
    EXPECT_EQ(submatrix_spectral_max(w, t).value, brute_submatrix_max(w, t)) << n << " " << t;
  }
}

TEST(SubmatrixSpectralMax, Rejects) {
  EXPECT_THROW(submatrix_spectral_max(Eigen::MatrixXd::Identity(5, 5), 3), ValidationError);
  EXPECT_THROW(submatrix_spectral_max(Eigen::MatrixXd::Identity(60, 60), 5), ValidationError);  // C(60,10) too many
}

// sup over k-subsets S of lambda_max(W_S), the exact k-sparse quadratic maximum.
double sparse_sup(const Eigen::MatrixXd& w, int k) {
  const int n = static_cast<int>(w.rows());
  double best = -std::numeric_limits<double>::infinity();
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (std::popcount(mask) != k) continue;
    std::vector<int> idx;
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) idx.push_back(i);
    const Eigen::MatrixXd sub = w(idx, idx);
    best = std::max(best, Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sub).eigenvalues().maxCoeff());
  }
  return best;
}

TEST(SparseCertificate, Examples) {
  EXPECT_NEAR(sparse_quadratic_certificate(Eigen::MatrixXd::Identity(8, 8), 4, 2), 4.0, 1e-14);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::MatrixXd w = gaussian_symmetric(10, 7 + trial);
    const double cert = sparse_quadratic_certificate(w, 2, 2);
    EXPECT_GE(cert, 2 * sparse_sup(w, 2) - 1e-12);
  }
  EXPECT_THROW(sparse_quadratic_certificate(Eigen::MatrixXd::Identity(8, 8), 2, 3), ValidationError);
}

TEST(SparseCertificate, NoViolationOnRandomSparseVectors) {
  const int n = 15, k = 5, t = 2;
  CounterRng rng(9);
  for (int inst = 0; inst < 2; ++inst) {
    const Eigen::MatrixXd w = gaussian_symmetric(n, 50 + inst);
    const double cert = sparse_quadratic_certificate(w, k, t);
    for (int s = 0; s < 1000; ++s) {
      Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
      for (int i = 0; i < k; ++i) x[static_cast<Eigen::Index>(rng.below(n))] = rng.normal();
      if (x.norm() == 0) continue;
      x.normalize();
      EXPECT_LE(x.dot(w * x), cert);
    }
  }
}

TEST(SparseComplexityBound, LinearInK) {
  const auto a = sparse_complexity_bound_mc(12, 4, 2, 10, 1);
  const auto b = sparse_complexity_bound_mc(12, 8, 2, 10, 1);
  EXPECT_EQ(a.interpretation, Interpretation::CertificateUpperBound);
  EXPECT_NEAR(b.mean / a.mean, 2.0, 1e-12);
  EXPECT_NO_THROW(sparse_complexity_bound_mc(8, 4, 4, 2, 1));
  EXPECT_THROW(sparse_complexity_bound_mc(8, 4, 1, 2, 1), ValidationError);
}

TEST(SparseComplexityBound, DominatesRelaxationLowerEstimate) {
  const int n = 6, k = 3, t = 2;
  SolverParams params;
  params.max_outer_iters = 300;
  const auto lower = gaussian_complexity_mc(compile_sparse_pca(n, k, 100.0), 2, 6, params, 3);
  const auto upper = sparse_complexity_bound_mc(n, k, t, 30, 4);
  EXPECT_LE(lower.mean, upper.mean + 3 * std::hypot(lower.std_error, upper.std_error));
}

TEST(GradientSup, ZeroSet) {
  const auto r = gradient_sup_bound_check(Eigen::MatrixXd::Zero(10, 1), Cauchy{1.0}, 1.0, 20, 1);
  EXPECT_EQ(r.mean_sup, 0.0);
  EXPECT_GE(r.bound, 0.0);
  EXPECT_TRUE(r.pass);
}

TEST(GradientSup, SignedBasisAndLinearityInH) {
  const int m = 50;
  Eigen::MatrixXd pm(m, 2 * m);
  pm << Eigen::MatrixXd::Identity(m, m), -Eigen::MatrixXd::Identity(m, m);
  const auto full = gradient_sup_bound_check(pm, Cauchy{1.0}, 1.0, 200, 2);
  EXPECT_TRUE(full.pass);
  EXPECT_LE(full.mean_sup, 1.0);
  EXPECT_NEAR(full.bound, 3 * std::sqrt(2 * std::log(2.0 * m)), 0.25 * full.bound);
  // Nearly every draw has some |N_i| >= 1, so the clamped max scales with h.
  const auto half = gradient_sup_bound_check(pm, Cauchy{1.0}, 0.5, 200, 2);
  EXPECT_NEAR(half.mean_sup / full.mean_sup, 0.5, 0.01);
}

TEST(ExpectationFromTails, Examples) {
  const Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(40001, 0.0, 40.0);
  EXPECT_EQ(expectation_from_tails(1.5, grid, Eigen::VectorXd::Zero(grid.size())), 1.5);
  EXPECT_NEAR(expectation_from_tails(1.5, grid, (-grid.array()).exp().matrix()), 2.5, 1e-6);
  EXPECT_NEAR(expectation_from_tails(0.0, grid, (-grid.array().square() / 2).exp().matrix()),
              std::sqrt(std::numbers::pi / 2), 1e-4);
  EXPECT_THROW(expectation_from_tails(0.0, grid, Eigen::VectorXd::Constant(grid.size(), -1.0)), ValidationError);
}

}  // namespace
}  // namespace obliv
