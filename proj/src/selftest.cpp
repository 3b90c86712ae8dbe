#include "obliv/selftest.hpp"

#include <cmath>
#include <functional>
#include <sstream>

#include "obliv/harness.hpp"
#include "obliv/huber.hpp"
#include "obliv/moments.hpp"
#include "obliv/recovery.hpp"
#include "obliv/rng.hpp"
#include "obliv/solver.hpp"

namespace obliv {

namespace {

Eigen::VectorXd random_unit(int n, CounterRng& rng) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.normal();
  return v.normalized();
}

std::string fmt(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

SelftestCheck huber_gap() {
  const Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(21, -3.0, 3.0);
  double worst = 0.0;
  for (double h : {0.5, 1.0, 2.0})
    for (double zf : {0.0, 0.3, 0.7, 1.0})
      for (double t : grid)
        for (double d : grid) worst = std::min(worst, huber_second_order_gap(t, d, zf * h, h));
  return {"huber-second-order-gap", worst >= -1e-12, "min gap " + fmt(worst)};
}

SelftestCheck huber_gradient() {
  double worst = 0.0;
  const double eps = 1e-6;
  for (double h : {0.5, 1.0, 2.0})
    for (double t = -3.0; t <= 3.0; t += 0.0625) {
      if (std::abs(std::abs(t) - h) < 1e-3) continue;
      const double fd = (huber_value(t + eps, h) - huber_value(t - eps, h)) / (2 * eps);
      worst = std::max(worst, std::abs(fd - huber_grad(t, h)));
    }
  return {"huber-gradient", worst <= 1e-6, "max deviation " + fmt(worst)};
}

SelftestCheck tensor_diff() {
  CounterRng rng(11);
  bool ok = true;
  double worst_identity = 0.0;
  for (int i = 0; i < 200; ++i) {
    const Eigen::VectorXd v = random_unit(10, rng), x = random_unit(10, rng);
    const auto c = tensor_diff_norm_check(v, x);
    ok = ok && c.lower_ok && c.upper_ok && c.ratio >= 0.5 && c.ratio <= 10.0;
    const double sq = (rank_one(v, 3) - rank_one(x, 3)).values().squaredNorm();
    worst_identity = std::max(worst_identity, std::abs(sq - (2 - 2 * std::pow(v.dot(x), 3))));
  }
  return {"tensor-diff-norm", ok && worst_identity <= 1e-10, "identity error " + fmt(worst_identity)};
}

SelftestCheck projection() {
  const auto sys = compile_tensor_pca(3, 2, 2.0);
  CounterRng rng(12);
  DykstraParams params;
  params.max_iters = 50000;
  double worst_res = 0.0, worst_eig = 0.0;
  for (int s = 0; s < 5; ++s) {
    PseudoMoments m = sys.interior();
    for (Eigen::Index i = 1; i < m.values.size(); ++i) m.values[i] += 0.5 * rng.normal();
    const auto r = dykstra_project(m, sys, params);
    worst_res = std::max({worst_res, r.equality_residual, r.inequality_violation});
    worst_eig = std::min(worst_eig, r.min_eigenvalue);
  }
  return {"dykstra-projection", worst_res <= 1e-6 && worst_eig >= -1e-7,
          "residual " + fmt(worst_res) + ", min eigenvalue " + fmt(worst_eig)};
}

SelftestCheck adjoint() {
  const auto sys = compile_tensor_pca(3, 3, 4.0);
  CounterRng rng(13);
  Eigen::VectorXd zv(27);
  for (Eigen::Index i = 0; i < 27; ++i) zv[i] = rng.normal();
  const Observation obs = full_observation(Tensor(3, 3, zv), sys.basis());
  Eigen::VectorXd y(sys.basis().size()), r(obs.values.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = rng.normal();
  for (Eigen::Index i = 0; i < r.size(); ++i) r[i] = rng.normal();
  double lhs = 0.0;
  for (Eigen::Index e = 0; e < r.size(); ++e) lhs += y[obs.monomial[static_cast<std::size_t>(e)]] * r[e];
  const double rhs = y.dot(pullback(obs, r, static_cast<int>(y.size())));
  const double rel = std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs));
  return {"pullback-adjoint", rel <= 1e-12, "relative gap " + fmt(rel)};
}

SelftestCheck rounding() {
  const auto basis = monomial_basis(5, 6);
  CounterRng rng(14);
  const Eigen::VectorXd v = random_unit(5, rng);
  const auto m = distribution_moments(basis, v, Eigen::VectorXd::Ones(1));
  const double odd = round_odd(m).dot(v);
  const double even = std::abs(round_even(m).dot(v));
  return {"rounding-point-mass", odd >= 1 - 1e-12 && even >= 1 - 1e-12,
          "odd " + fmt(odd) + ", even " + fmt(even)};
}

SelftestCheck clique() {
  const auto pc = planted_clique_gen(10, 0.0, 4, 1);
  const Eigen::VectorXd c = clique_reduce(pc.graph);
  bool ok = pc.graph.edge_count() == 6;
  Eigen::Index e = 0;
  for (int i = 0; i < 10; ++i)
    for (int j = i + 1; j < 10; ++j, ++e) ok = ok && c[e] == (pc.graph.has_edge(i, j) ? 1.0 : -1.0);
  return {"clique-structure", ok, "edges " + std::to_string(pc.graph.edge_count())};
}

SelftestCheck config_round_trip() {
  ExperimentConfig c;
  c.pipeline.lambda = 12.5;
  c.noise = HeavyMixture{0.5, 1.0, 30.0};
  c.corruption = CorruptionSpec{0.01, CorruptionStrategy::TargetedSignFlip, 100.0};
  c.trials = 3;
  c.base_seed = 77;
  c.sweep.lambda = {10.0, 20.0};
  const auto j = to_json(c);
  const auto again = to_json(experiment_config_from_json(j));
  return {"config-round-trip", j == again, ""};
}

}  // namespace

std::vector<SelftestCheck> run_selftest() {
  const std::vector<std::function<SelftestCheck()>> checks{huber_gap,  huber_gradient, tensor_diff,
                                                           projection, adjoint,        rounding,
                                                           clique,     config_round_trip};
  std::vector<SelftestCheck> out;
  for (const auto& fn : checks) {
    try {
      out.push_back(fn());
    } catch (const std::exception& e) {
      out.push_back({"exception", false, e.what()});
    }
  }
  return out;
}

}  // namespace obliv
