#include "obliv/solver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "obliv/error.hpp"
#include "obliv/huber.hpp"

namespace obliv {

void SolverParams::validate() const {
  require(max_outer_iters >= 1, "max_outer_iters must be positive");
  require(step_init > 0, "step_init must be positive");
  require(backtrack_factor > 0 && backtrack_factor < 1, "backtrack_factor must be in (0,1)");
  require(grad_tol > 0, "grad_tol must be positive");
  require(check_every >= 1, "check_every must be positive");
  require(projection.max_iters >= 1 && projection.tol > 0, "projection parameters must be positive");
}

nlohmann::json to_json(const SolveReport& r) {
  return {{"objective", r.objective},
          {"iterations", r.iterations},
          {"feasible_checks", r.feasible_checks},
          {"primal_residual", r.primal_residual},
          {"dual_residual", r.dual_residual},
          {"restore_weight", r.restore_weight},
          {"equality_residual", r.equality_residual},
          {"inequality_violation", r.inequality_violation},
          {"min_eigenvalue", r.min_eigenvalue},
          {"trajectory", r.trajectory},
          {"converged", r.converged}};
}

Observation full_observation(const Tensor& z, const MonomialBasis& basis) {
  require(z.dim() == basis.num_vars(), "observation dimension does not match the basis");
  return {z.order(), z.values(), tensor_monomial_map(basis, z.order())};
}

Observation simplex_observation(const Eigen::VectorXd& values, int n, int p, bool strict, const MonomialBasis& basis) {
  require(n == basis.num_vars(), "observation dimension does not match the basis");
  require(p >= 1 && p <= basis.max_degree(), "observation order exceeds the basis degree");
  Observation obs{p, values, {}};
  for_each_sorted_tuple(n, p, strict, [&](std::span<const int> idx) { obs.monomial.push_back(basis.index_of(idx)); });
  require(static_cast<Eigen::Index>(obs.monomial.size()) == values.size(),
          "upper-simplex observation has the wrong number of entries");
  return obs;
}

double observation_huber(const Observation& obs, const Eigen::VectorXd& moments, double h) {
  double total = 0.0;
  for (Eigen::Index e = 0; e < obs.values.size(); ++e)
    total += huber_value(obs.values[e] - moments[obs.monomial[static_cast<std::size_t>(e)]], h);
  return total;
}

Eigen::VectorXd pullback(const Observation& obs, const Eigen::VectorXd& residual, int num_moments) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(num_moments);
  for (Eigen::Index e = 0; e < residual.size(); ++e) g[obs.monomial[static_cast<std::size_t>(e)]] += residual[e];
  return g;
}

Eigen::VectorXd observation_huber_gradient(const Observation& obs, const Eigen::VectorXd& moments, double h) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(moments.size());
  for (Eigen::Index e = 0; e < obs.values.size(); ++e) {
    const int k = obs.monomial[static_cast<std::size_t>(e)];
    g[k] -= huber_grad(obs.values[e] - moments[k], h);
  }
  return g;
}

namespace {

// Observed entries grouped by monomial (CSR layout).
struct Groups {
  std::vector<int> start;
  std::vector<double> value;

  Groups(const Observation& obs, int num_moments) : start(static_cast<std::size_t>(num_moments) + 1, 0) {
    for (int k : obs.monomial) {
      require(k >= 0 && k < num_moments, "observation references a monomial outside the basis");
      ++start[static_cast<std::size_t>(k) + 1];
    }
    for (std::size_t k = 0; k < static_cast<std::size_t>(num_moments); ++k) start[k + 1] += start[k];
    value.resize(obs.monomial.size());
    std::vector<int> fill(start.begin(), start.end() - 1);
    for (std::size_t e = 0; e < obs.monomial.size(); ++e)
      value[static_cast<std::size_t>(fill[static_cast<std::size_t>(obs.monomial[e])]++)] =
          obs.values[static_cast<Eigen::Index>(e)];
  }

  int count(int k) const { return start[static_cast<std::size_t>(k) + 1] - start[static_cast<std::size_t>(k)]; }
};

// argmin_a sum_e huber(z_e - a, h) + (r/2)(a - c)^2. The derivative is
// increasing and piecewise linear, so safeguarded Newton terminates exactly.
double huber_prox(const double* z, int count, double h, double r, double c) {
  if (count == 0) return c;
  const double reach = count * h / r;
  double lo = c - reach;
  double hi = c + reach;
  double a = c;
  for (int it = 0; it < 100; ++it) {
    double phi = r * (a - c);
    double slope = r;
    for (int e = 0; e < count; ++e) {
      const double t = z[e] - a;
      phi -= huber_grad(t, h);
      if (std::abs(t) < h) slope += 1.0;
    }
    if (phi == 0.0) return a;
    if (phi > 0) hi = a;
    else lo = a;
    double next = a - phi / slope;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == a || hi - lo <= 1e-15 * (1.0 + std::abs(a))) return next;
    a = next;
  }
  return a;
}

double lipschitz(const Groups& g, const ConstraintSystem& sys) {
  double l = 0.0;
  for (int k = 0; k < sys.basis().size(); ++k) l = std::max(l, g.count(k) / sys.weights()[k]);
  return l > 0 ? l : 1.0;
}

void finalize_report(SolveReport& rep, const PseudoMoments& m, const ConstraintSystem& sys) {
  const Eigen::VectorXd z = m.stacked();
  rep.equality_residual = sys.equality_residual(z);
  rep.inequality_violation = sys.inequality_violation(z);
  rep.min_eigenvalue = min_eigenvalue(sys.layout().assemble(m.values));
}

PseudoMoments with_aux(PseudoMoments m, const ConstraintSystem& sys) {
  if (m.aux.size() != sys.num_aux()) m.aux = Eigen::VectorXd::Zero(sys.num_aux());
  return m;
}

// Objective hooks for the splitting engine. `prox` writes, for the moment
// part, argmin_a obj(a) + (rho/2) |a - c|^2_W.
struct Objective {
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<void(const Eigen::VectorXd& c, double rho, Eigen::VectorXd& out)> prox;
};

struct EngineResult {
  PseudoMoments best;
  double best_value = 0.0;
  SolveReport report;
};

// Consensus splitting of  min obj(y)  s.t.  y in polyhedron, D M(y) D PSD
// into three blocks (objective, polyhedron, PSD cone) tied to a consensus
// variable. Every `check_every` iterations the polyhedron block is made
// PSD by mixing toward the interior point, giving an exactly feasible
// candidate; improving candidates are accepted and recorded.
EngineResult run_engine(const Objective& obj, const ConstraintSystem& sys, double rho0, const SolverParams& params) {
  const auto& layout = sys.layout();
  const int nb = sys.basis().size();
  const int na = sys.num_aux();
  const Eigen::VectorXd& w = sys.weights();

  EngineResult res;
  SolveReport& rep = res.report;
  {
    PseudoMoments start = with_aux(sys.interior(), sys);
    PseudoMoments wit = with_aux(sys.witness(), sys);
    const double fs = obj.value(start.values);
    const double fw = obj.value(wit.values);
    res.best = fw < fs ? wit : start;
    res.best_value = std::min(fs, fw);
    rep.trajectory.push_back(res.best_value);
  }

  Eigen::VectorXd u = with_aux(sys.interior(), sys).stacked();
  Eigen::VectorXd a = u, b = u;
  Eigen::VectorXd la = Eigen::VectorXd::Zero(u.size());
  Eigen::VectorXd lb = Eigen::VectorXd::Zero(u.size());
  Eigen::MatrixXd x;
  Eigen::MatrixXd lx = Eigen::MatrixXd::Zero(layout.dim, layout.dim);
  double rho = rho0;
  const double scale = 1.0 + std::sqrt(u.cwiseProduct(w).dot(u));

  for (int it = 0; it < params.max_outer_iters; ++it) {
    rep.iterations = it + 1;
    const Eigen::VectorXd a_in = u - la;
    a = a_in;
    obj.prox(a_in.head(nb), rho, a);
    b = sys.project_polyhedron(u - lb);
    x = project_psd(layout.assemble_scaled(u.head(nb)) - lx);

    const Eigen::VectorXd u_prev = u;
    const Eigen::VectorXd xa = layout.average_scaled(x + lx);
    u.head(nb) = ((a + la).head(nb) + (b + lb).head(nb) + xa) / 3.0;
    u.tail(na) = ((a + la).tail(na) + (b + lb).tail(na)) / 2.0;

    la += a - u;
    lb += b - u;
    const Eigen::MatrixXd mu = layout.assemble_scaled(u.head(nb));
    lx += x - mu;

    const Eigen::VectorXd da = a - u, db = b - u, du = u - u_prev;
    const double primal =
        std::sqrt(da.cwiseProduct(w).dot(da) + db.cwiseProduct(w).dot(db) + (x - mu).squaredNorm());
    const double dual = rho * std::sqrt(3.0 * du.cwiseProduct(w).dot(du));
    rep.primal_residual = primal;
    rep.dual_residual = dual;
    const bool done = primal <= params.grad_tol * scale && dual <= params.grad_tol * scale;

    if ((it + 1) % params.check_every == 0 || done || it + 1 == params.max_outer_iters) {
      PseudoMoments cand = PseudoMoments::from_stacked(sys.basis_ptr(), b);
      const double theta = restore_feasibility(cand, sys);
      const double fc = obj.value(cand.values);
      ++rep.feasible_checks;
      if (fc < res.best_value) {
        res.best = std::move(cand);
        res.best_value = fc;
        rep.restore_weight = theta;
        rep.trajectory.push_back(fc);
      }
    }
    if (done) {
      rep.converged = true;
      break;
    }

    // Residual balancing; the scaled duals follow the penalty.
    if (!params.adaptive_penalty) continue;
    if (primal > 10.0 * dual) {
      rho /= params.backtrack_factor;
      la *= params.backtrack_factor;
      lb *= params.backtrack_factor;
      lx *= params.backtrack_factor;
    } else if (dual > 10.0 * primal) {
      rho *= params.backtrack_factor;
      la /= params.backtrack_factor;
      lb /= params.backtrack_factor;
      lx /= params.backtrack_factor;
    }
  }
  rep.objective = res.best_value;
  finalize_report(rep, res.best, sys);
  return res;
}

}  // namespace

SolveResult minimize_huber(const Observation& obs, const ConstraintSystem& sys, double h, const SolverParams& params) {
  require(h > 0, "Huber threshold h must be positive");
  params.validate();
  require(obs.order <= sys.basis().max_degree(), "observation order exceeds the basis degree");
  require(obs.values.size() == static_cast<Eigen::Index>(obs.monomial.size()), "observation is malformed");

  const int nb = sys.basis().size();
  const Groups groups(obs, nb);
  const Eigen::VectorXd wb = sys.weights().head(nb);
  Objective obj;
  obj.value = [&](const Eigen::VectorXd& y) { return observation_huber(obs, y, h); };
  obj.prox = [&](const Eigen::VectorXd& c, double rho, Eigen::VectorXd& out) {
    for (int k = 0; k < nb; ++k) {
      const int cnt = groups.count(k);
      if (cnt > 0)
        out[k] = huber_prox(groups.value.data() + groups.start[static_cast<std::size_t>(k)], cnt, h, rho * wb[k], c[k]);
    }
  };
  auto eng = run_engine(obj, sys, lipschitz(groups, sys) / params.step_init, params);
  return {std::move(eng.best), std::move(eng.report)};
}

SolveResult minimize_huber(const Tensor& z, const ConstraintSystem& sys, double h, const SolverParams& params) {
  return minimize_huber(full_observation(z, sys.basis()), sys, h, params);
}

LinearMaxResult maximize_linear(const Tensor& w, const ConstraintSystem& sys, const SolverParams& params) {
  params.validate();
  const Observation obs = full_observation(w, sys.basis());
  const int nb = sys.basis().size();
  const Eigen::VectorXd c = pullback(obs, obs.values, nb);
  const Eigen::VectorXd shift = c.cwiseQuotient(sys.weights().head(nb));
  Objective obj;
  obj.value = [&](const Eigen::VectorXd& y) { return -c.dot(y); };
  obj.prox = [&](const Eigen::VectorXd& center, double rho, Eigen::VectorXd& out) {
    out.head(nb) = center + shift / rho;
  };
  // No curvature to match, so the penalty makes the first prox shift
  // step_init times the size of the interior point in the solver metric.
  const double c_norm = std::sqrt(c.dot(shift));
  const double radius = sys.layout().assemble_scaled(sys.interior().values).norm();
  const double rho0 = c_norm > 0 ? c_norm / (params.step_init * radius) : 1.0;
  auto eng = run_engine(obj, sys, rho0, params);
  LinearMaxResult res;
  res.value = -eng.best_value;
  res.moments = std::move(eng.best);
  res.report = std::move(eng.report);
  res.report.objective = res.value;
  for (double& t : res.report.trajectory) t = -t;
  return res;
}

HypercubeEstimate exact_hypercube_estimate(const Tensor& t, double tau, double h, int n) {
  require(n >= 1 && n <= kHypercubeMaxDim, "hypercube enumeration is capped at n <= 24");
  require(t.order() == 3 && t.dim() == n, "hypercube estimator needs an n x n x n tensor");
  require(tau > 0 && h > 0, "tau and h must be positive");

  const double c = tau / (std::sqrt(static_cast<double>(n)) * n);  // tau * (1/sqrt n)^3
  std::vector<double> sign(static_cast<std::size_t>(n));
  std::uint64_t best_pattern = 0;
  double best = std::numeric_limits<double>::infinity();
  const std::uint64_t total = std::uint64_t{1} << n;
  const auto& vals = t.values();
  for (std::uint64_t pattern = 0; pattern < total; ++pattern) {
    // Bit (n-1-i) set means coordinate i is negative, so increasing pattern
    // order is lexicographic with + before -.
    for (int i = 0; i < n; ++i) sign[static_cast<std::size_t>(i)] = ((pattern >> (n - 1 - i)) & 1U) ? -1.0 : 1.0;
    double obj = 0.0;
    Eigen::Index lin = 0;
    for (int i = 0; i < n && obj < best; ++i)
      for (int j = 0; j < n; ++j) {
        const double sij = c * sign[static_cast<std::size_t>(i)] * sign[static_cast<std::size_t>(j)];
        for (int k = 0; k < n; ++k, ++lin) obj += huber_value(vals[lin] - sij * sign[static_cast<std::size_t>(k)], h);
      }
    if (obj < best) {
      best = obj;
      best_pattern = pattern;
    }
  }
  HypercubeEstimate out;
  out.v_hat.resize(n);
  for (int i = 0; i < n; ++i)
    out.v_hat[i] = (((best_pattern >> (n - 1 - i)) & 1U) ? -1.0 : 1.0) / std::sqrt(static_cast<double>(n));
  out.objective = best;
  return out;
}

}  // namespace obliv
