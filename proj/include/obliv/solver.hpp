#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "obliv/moments.hpp"
#include "obliv/tensor.hpp"

namespace obliv {

struct SolverParams {
  int max_outer_iters = 1000;
  double step_init = 3.0;  // 1/penalty in units of 1/L, L the loss curvature in the solver metric
  double backtrack_factor = 0.5;  // penalty adjustment factor when adaptive_penalty is set
  bool adaptive_penalty = false;  // residual balancing
  double grad_tol = 1e-6;         // relative primal/dual residual tolerance
  int check_every = 10;           // iterations between feasible-candidate evaluations
  DykstraParams projection{};
  std::uint64_t seed = 0;

  void validate() const;
};

struct SolveReport {
  double objective = 0.0;
  int iterations = 0;
  int feasible_checks = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double restore_weight = 0.0;  // interior mixing weight of the returned point
  double equality_residual = 0.0;
  double inequality_violation = 0.0;
  double min_eigenvalue = 0.0;
  std::vector<double> trajectory;  // objective of each accepted feasible iterate
  bool converged = false;
};

nlohmann::json to_json(const SolveReport& r);

/// Observed entries paired with the monomial each one estimates. A full
/// tensor maps every (i_1..i_p) to E[x_i1...x_ip]; upper-simplex and masked
/// observations keep a subset.
struct Observation {
  int order = 0;
  Eigen::VectorXd values;
  std::vector<int> monomial;
};

Observation full_observation(const Tensor& z, const MonomialBasis& basis);

/// Entries i_1 < ... < i_p (strict) or i_1 <= ... <= i_p in lexicographic order.
Observation simplex_observation(const Eigen::VectorXd& values, int n, int p, bool strict, const MonomialBasis& basis);

/// sum_e huber(z_e - y[monomial_e]).
double observation_huber(const Observation& obs, const Eigen::VectorXd& moments, double h);

/// Gradient of observation_huber w.r.t. the moment vector: scatter-add of
/// -huber_grad(residual) into each entry's monomial slot.
Eigen::VectorXd observation_huber_gradient(const Observation& obs, const Eigen::VectorXd& moments, double h);

/// Adjoint of the entry-extraction map: scatter-add of a residual vector.
Eigen::VectorXd pullback(const Observation& obs, const Eigen::VectorXd& residual, int num_moments);

struct SolveResult {
  PseudoMoments moments;
  SolveReport report;
};

/// Minimizes m -> F_h(Z - extract(m)) over the system's feasible set by
/// operator splitting in the scaled moment-matrix metric: a per-monomial
/// Huber prox, an exact polyhedron projection and a PSD clip, averaged into
/// a consensus iterate. Exactly feasible candidates are formed periodically
/// and only strict improvements are accepted, so the trajectory is
/// non-increasing and the returned point is the best feasible one seen.
SolveResult minimize_huber(const Observation& obs, const ConstraintSystem& sys, double h,
                           const SolverParams& params = {});
SolveResult minimize_huber(const Tensor& z, const ConstraintSystem& sys, double h, const SolverParams& params = {});

struct LinearMaxResult {
  double value = 0.0;
  PseudoMoments moments;
  SolveReport report;
};

/// Maximizes <extract(m), W> with the same splitting. The value is attained
/// by a feasible point, hence a lower estimate of the supremum.
LinearMaxResult maximize_linear(const Tensor& w, const ConstraintSystem& sys, const SolverParams& params = {});

inline constexpr int kHypercubeMaxDim = 24;

struct HypercubeEstimate {
  Eigen::VectorXd v_hat;
  double objective = 0.0;
};

/// argmin over x in {-1/sqrt(n), +1/sqrt(n)}^n of F_h(T - tau x^(x)3) by
/// enumeration. Ties go to the lexicographically smallest sign pattern with
/// + ordered before -.
HypercubeEstimate exact_hypercube_estimate(const Tensor& t, double tau, double h, int n);

}  // namespace obliv
