#include "obliv/complexity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "obliv/error.hpp"
#include "obliv/huber.hpp"
#include "obliv/rng.hpp"

namespace obliv {

namespace {

Eigen::VectorXd draw(Direction dir, Eigen::Index m, CounterRng& rng) {
  Eigen::VectorXd out(m);
  for (Eigen::Index i = 0; i < m; ++i) out[i] = dir == Direction::Gaussian ? rng.normal() : rng.sign();
  return out;
}

ComplexityReport moment_set_mc(const ConstraintSystem& sys, int p, int trials, const SolverParams& params,
                               std::uint64_t seed, Direction dir) {
  require(trials >= 1, "trials must be positive");
  require(p >= 1 && p <= sys.basis().max_degree(), "order exceeds the system degree");
  const int n = sys.basis().num_vars();
  std::vector<double> values;
  int failed = 0;
  for (int t = 0; t < trials; ++t) {
    CounterRng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    const Tensor w(p, n, draw(dir, static_cast<Eigen::Index>(checked_power(n, p)), rng));
    try {
      values.push_back(maximize_linear(w, sys, params).value);
    } catch (const RuntimeFailure&) {
      ++failed;
    }
  }
  if (values.empty()) throw RuntimeFailure("every complexity trial failed");
  return summarize(std::move(values), Interpretation::LowerEstimate, failed);
}

// Calls fn(subset) for every size-r subset of {0..n-1} in lexicographic order.
template <class Fn>
void for_each_subset(int n, int r, Fn&& fn) {
  std::vector<int> idx(static_cast<std::size_t>(r));
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    fn(idx);
    int i = r - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - r + i) --i;
    if (i < 0) return;
    ++idx[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < r; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
}

double binomial(int n, int r) {
  double c = 1.0;
  for (int i = 1; i <= r; ++i) c = c * (n - r + i) / i;
  return c;
}

}  // namespace

std::string to_string(Interpretation i) {
  return i == Interpretation::LowerEstimate ? "lower-estimate" : "certificate-upper-bound";
}

nlohmann::json to_json(const ComplexityReport& r) {
  return {{"mean", r.mean},
          {"std_error", r.std_error},
          {"trials", r.trials},
          {"failed", r.failed},
          {"values", r.values},
          {"interpretation", to_string(r.interpretation)}};
}

ComplexityReport summarize(std::vector<double> values, Interpretation interp, int failed) {
  require(!values.empty(), "cannot summarize an empty sample");
  ComplexityReport r;
  r.trials = static_cast<int>(values.size());
  r.failed = failed;
  r.interpretation = interp;
  const Eigen::Map<const Eigen::VectorXd> v(values.data(), static_cast<Eigen::Index>(values.size()));
  r.mean = v.mean();
  if (r.trials > 1) {
    const double var = (v.array() - r.mean).square().sum() / (r.trials - 1);
    r.std_error = std::sqrt(var / r.trials);
  }
  r.values = std::move(values);
  return r;
}

ComplexityReport gaussian_complexity_mc(const ConstraintSystem& sys, int p, int trials, const SolverParams& params,
                                        std::uint64_t seed) {
  return moment_set_mc(sys, p, trials, params, seed, Direction::Gaussian);
}

ComplexityReport rademacher_complexity_mc(const ConstraintSystem& sys, int p, int trials, const SolverParams& params,
                                          std::uint64_t seed) {
  return moment_set_mc(sys, p, trials, params, seed, Direction::Rademacher);
}

ComplexityReport point_set_complexity_mc(const Eigen::MatrixXd& points, Direction dir, int trials, std::uint64_t seed) {
  require(trials >= 1, "trials must be positive");
  require(points.cols() >= 1, "point set must be nonempty");
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(trials));
  for (int t = 0; t < trials; ++t) {
    CounterRng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    values.push_back((draw(dir, points.rows(), rng).transpose() * points).maxCoeff());
  }
  return summarize(std::move(values), Interpretation::LowerEstimate);
}

double sudakov_ln_net_bound(double g, double eps) {
  require(g >= 0, "complexity must be nonnegative");
  require(eps > 0, "net radius must be positive");
  const double r = 2 * g / eps;
  return r * r;
}

SubmatrixMax submatrix_spectral_max(const Eigen::MatrixXd& w, int t) {
  const int n = static_cast<int>(w.rows());
  require(w.rows() == w.cols(), "matrix must be square");
  require(t >= 1 && 2 * t <= n, "need 1 <= t and 2t <= n");
  require(binomial(n, 2 * t) <= static_cast<double>(kSubmatrixCap), "C(n, 2t) exceeds the enumeration cap");
  const int r = 2 * t;
  SubmatrixMax best{-1.0, {}};
  Eigen::MatrixXd sub(r, r);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(r);
  for_each_subset(n, r, [&](const std::vector<int>& idx) {
    for (int a = 0; a < r; ++a)
      for (int b = 0; b < r; ++b) sub(a, b) = w(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
    es.compute(sub, Eigen::EigenvaluesOnly);
    const double norm = std::max(std::abs(es.eigenvalues()[0]), std::abs(es.eigenvalues()[r - 1]));
    if (norm > best.value) {
      best.value = norm;
      best.subset = idx;
    }
  });
  return best;
}

double sparse_quadratic_certificate(const Eigen::MatrixXd& w, int k, int t) {
  require(t >= 1 && t <= k && k <= w.rows(), "need 1 <= t <= k <= n");
  return 2.0 * submatrix_spectral_max(w, t).value * k / t;
}

Eigen::MatrixXd gaussian_symmetric(int n, std::uint64_t seed) {
  CounterRng rng(seed);
  Eigen::MatrixXd w(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) w(i, j) = w(j, i) = rng.normal();
  return w;
}

ComplexityReport sparse_complexity_bound_mc(int n, int k, int t, int trials, std::uint64_t seed) {
  require(n >= k && k >= t && t >= 2, "need n >= k >= t >= 2");
  require(trials >= 1, "trials must be positive");
  std::vector<double> values;
  for (int i = 0; i < trials; ++i)
    values.push_back(sparse_quadratic_certificate(gaussian_symmetric(n, derive_seed(seed, static_cast<std::uint64_t>(i))), k, t));
  return summarize(std::move(values), Interpretation::CertificateUpperBound);
}

GradientSupCheck gradient_sup_bound_check(const Eigen::MatrixXd& points, const NoiseSpec& spec, double h, int trials,
                                          std::uint64_t seed) {
  require(h > 0, "h must be positive");
  require(trials >= 2, "need at least two trials for standard errors");
  require(points.cols() >= 1, "point set must be nonempty");
  std::vector<double> sups;
  for (int t = 0; t < trials; ++t) {
    const Eigen::VectorXd noise = sample_noise(spec, points.rows(), derive_seed(seed, static_cast<std::uint64_t>(t)));
    const Eigen::VectorXd grad = noise.unaryExpr([h](double x) { return huber_grad(x, h); });
    sups.push_back((grad.transpose() * points).maxCoeff());
  }
  const auto s = summarize(std::move(sups), Interpretation::LowerEstimate);
  const auto g = point_set_complexity_mc(points, Direction::Gaussian, trials, derive_seed(seed, 0x9a55));
  GradientSupCheck out;
  out.mean_sup = s.mean;
  out.mean_se = s.std_error;
  out.bound = 3 * h * g.mean;
  out.bound_se = 3 * h * g.std_error;
  out.pass = out.mean_sup <= out.bound + 3 * std::hypot(out.mean_se, out.bound_se);
  return out;
}

double expectation_from_tails(double a, const Eigen::VectorXd& tau, const Eigen::VectorXd& f) {
  require(tau.size() == f.size() && tau.size() >= 2, "tail grid and samples must match and have >= 2 points");
  require((f.array() >= 0).all(), "tail samples must be nonnegative");
  require(tau[0] >= 0, "tail grid must start at or after zero");
  double integral = 0.0;
  for (Eigen::Index i = 1; i < tau.size(); ++i) {
    require(tau[i] > tau[i - 1], "tail grid must be strictly increasing");
    integral += 0.5 * (f[i] + f[i - 1]) * (tau[i] - tau[i - 1]);
  }
  return a + integral;
}

}  // namespace obliv
