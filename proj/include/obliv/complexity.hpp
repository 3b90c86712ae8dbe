#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "obliv/moments.hpp"
#include "obliv/noise.hpp"
#include "obliv/solver.hpp"

namespace obliv {

enum class Interpretation { LowerEstimate, CertificateUpperBound };

std::string to_string(Interpretation i);

struct ComplexityReport {
  double mean = 0.0;
  double std_error = 0.0;  // sample stddev / sqrt(trials)
  int trials = 0;          // completed trials
  int failed = 0;
  std::vector<double> values;
  Interpretation interpretation = Interpretation::LowerEstimate;
};

nlohmann::json to_json(const ComplexityReport& r);

/// Mean and standard error of `values` packed into a report.
ComplexityReport summarize(std::vector<double> values, Interpretation interp, int failed = 0);

enum class Direction { Gaussian, Rademacher };

/// E sup over the pseudo-moment set of <E x^(x)p, W> for i.i.d. Gaussian or
/// uniform +-1 W, each sup estimated from below by maximize_linear.
ComplexityReport gaussian_complexity_mc(const ConstraintSystem& sys, int p, int trials, const SolverParams& params,
                                        std::uint64_t seed);
ComplexityReport rademacher_complexity_mc(const ConstraintSystem& sys, int p, int trials, const SolverParams& params,
                                          std::uint64_t seed);

/// Exact sup over a finite set (columns of `points`) per draw.
ComplexityReport point_set_complexity_mc(const Eigen::MatrixXd& points, Direction dir, int trials, std::uint64_t seed);

/// ln |N_eps| <= (2G / eps)^2.
double sudakov_ln_net_bound(double g, double eps);

inline constexpr std::int64_t kSubmatrixCap = 1000000;

struct SubmatrixMax {
  double value = 0.0;
  std::vector<int> subset;  // ascending, size 2t
};

/// Largest spectral norm among all 2t x 2t principal submatrices, by
/// enumeration in lexicographic subset order (first maximiser kept).
SubmatrixMax submatrix_spectral_max(const Eigen::MatrixXd& w, int t);

/// 2 m_t k / t, an upper bound on x^T W x over k-sparse unit x.
double sparse_quadratic_certificate(const Eigen::MatrixXd& w, int k, int t);

/// Symmetric matrix with i.i.d. N(0,1) entries on and above the diagonal.
Eigen::MatrixXd gaussian_symmetric(int n, std::uint64_t seed);

/// Monte-Carlo mean of the certificate over gaussian_symmetric draws.
ComplexityReport sparse_complexity_bound_mc(int n, int k, int t, int trials, std::uint64_t seed);

struct GradientSupCheck {
  double mean_sup = 0.0;
  double mean_se = 0.0;
  double bound = 0.0;  // 3 h G_hat
  double bound_se = 0.0;
  bool pass = false;
};

/// E sup_a <clamp_h(N), a> against 3 h times the Gaussian complexity of the
/// same point set; passes when within three joint standard errors.
GradientSupCheck gradient_sup_bound_check(const Eigen::MatrixXd& points, const NoiseSpec& spec, double h, int trials,
                                          std::uint64_t seed);

/// a + trapezoidal integral of the sampled tail f on the grid tau.
double expectation_from_tails(double a, const Eigen::VectorXd& tau, const Eigen::VectorXd& f);

}  // namespace obliv
