#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "obliv/error.hpp"
#include "obliv/moments.hpp"
#include "obliv/rng.hpp"

namespace obliv {
namespace {

Eigen::MatrixXd random_atoms(int n, int k, CounterRng& rng, double scale) {
  Eigen::MatrixXd a(n, k);
  for (int j = 0; j < k; ++j)
    for (int i = 0; i < n; ++i) a(i, j) = scale * rng.normal();
  return a;
}

Eigen::VectorXd random_weights(int k, CounterRng& rng) {
  Eigen::VectorXd w(k);
  for (int j = 0; j < k; ++j) w[j] = 0.1 + rng.uniform();
  return w / w.sum();
}

TEST(MonomialBasis, SizesAndOrder) {
  const MonomialBasis b21(2, 1);
  ASSERT_EQ(b21.size(), 3);
  EXPECT_EQ(b21.degree(0), 0);
  EXPECT_EQ(b21.exponents(1), (std::vector<int>{1, 0}));
  EXPECT_EQ(b21.exponents(2), (std::vector<int>{0, 1}));
  EXPECT_EQ(MonomialBasis(3, 2).size(), 10);
  EXPECT_EQ(MonomialBasis(10, 3).size(), 286);
  EXPECT_THROW(MonomialBasis(40, 4), ValidationError);  // C(44,4) above the default cap
  EXPECT_NO_THROW(MonomialBasis(40, 4, 200000));
}

TEST(MonomialBasis, GradedAndLookupConsistent) {
  const MonomialBasis b(4, 4);
  for (int i = 1; i < b.size(); ++i) EXPECT_LE(b.degree(i - 1), b.degree(i));
  for (int e = 0; e <= 4; ++e) {
    const double expected = std::tgamma(4 + e + 1) / (std::tgamma(e + 1) * std::tgamma(4 + 1));
    EXPECT_NEAR(b.prefix_size(e), expected, 1e-9);
  }
  for (int i = 0; i < b.size(); ++i) EXPECT_EQ(b.index_of(b.monomial(i)), i);
  for (int i = 0; i < b.prefix_size(2); ++i)
    for (int j = 0; j < b.prefix_size(2); ++j) {
      const int k = b.product_index(i, j);
      ASSERT_GE(k, 0);
      auto ei = b.exponents(i), ej = b.exponents(j), ek = b.exponents(k);
      for (int v = 0; v < 4; ++v) EXPECT_EQ(ek[v], ei[v] + ej[v]);
    }
}

TEST(MomentMatrix, PointMassAtZero) {
  auto basis = monomial_basis(3, 4);
  const auto m = distribution_moments(basis, Eigen::MatrixXd::Zero(3, 1), Eigen::VectorXd::Ones(1));
  const Eigen::MatrixXd mm = moment_matrix(m);
  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(mm.rows(), mm.cols());
  expected(0, 0) = 1.0;
  EXPECT_EQ(mm, expected);
}

TEST(MomentMatrix, PointMassIsRankOne) {
  auto basis = monomial_basis(3, 4);
  Eigen::MatrixXd atom = Eigen::MatrixXd::Zero(3, 1);
  atom(0, 0) = 1.0;
  const Eigen::MatrixXd mm = moment_matrix(distribution_moments(basis, atom, Eigen::VectorXd::Ones(1)));
  Eigen::VectorXd u(mm.rows());
  for (int i = 0; i < u.size(); ++i) {
    const auto e = basis->exponents(i);
    u[i] = (e[1] == 0 && e[2] == 0) ? 1.0 : 0.0;
  }
  EXPECT_LE((mm - u * u.transpose()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(MomentMatrix, SymmetricMixtureInPlane) {
  auto basis = monomial_basis(2, 2);
  Eigen::MatrixXd atoms(2, 2);
  atoms << 1, -1, 0, 0;
  const Eigen::MatrixXd mm = moment_matrix(distribution_moments(basis, atoms, Eigen::Vector2d(0.5, 0.5)));
  Eigen::Matrix3d expected;
  expected << 1, 0, 0, 0, 1, 0, 0, 0, 0;
  EXPECT_LE((mm - expected).cwiseAbs().maxCoeff(), 1e-15);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mm);
  EXPECT_NEAR(es.eigenvalues()[0], 0.0, 1e-15);
  EXPECT_NEAR(es.eigenvalues()[1], 1.0, 1e-15);
  EXPECT_NEAR(es.eigenvalues()[2], 1.0, 1e-15);
}

TEST(MomentMatrix, TrueDistributionsArePsd) {
  CounterRng rng(17);
  auto basis = monomial_basis(3, 6);
  for (int trial = 0; trial < 50; ++trial) {
    const int k = 1 + static_cast<int>(rng.below(5));
    const auto m = distribution_moments(basis, random_atoms(3, k, rng, 0.7), random_weights(k, rng));
    EXPECT_GE(min_eigenvalue(moment_matrix(m)), -1e-10);
  }
}

TEST(GaussianMoments, MatchClosedForm) {
  auto basis = monomial_basis(2, 4);
  const auto g = gaussian_moments(basis, 0.5);
  const int x0sq[2] = {0, 0};
  const int x0x1[2] = {0, 1};
  const int x0_4[4] = {0, 0, 0, 0};
  const int x0sq_x1sq[4] = {0, 0, 1, 1};
  EXPECT_DOUBLE_EQ(g.values[basis->index_of(x0sq)], 0.5);
  EXPECT_DOUBLE_EQ(g.values[basis->index_of(x0x1)], 0.0);
  EXPECT_DOUBLE_EQ(g.values[basis->index_of(x0_4)], 3 * 0.25);
  EXPECT_DOUBLE_EQ(g.values[basis->index_of(x0sq_x1sq)], 0.25);
}

TEST(ProjectPsd, Examples) {
  Eigen::Matrix2d psd;
  psd << 2, 1, 1, 2;
  EXPECT_LE((project_psd(psd) - psd).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((project_psd(Eigen::Vector2d(1, -1).asDiagonal().toDenseMatrix()) -
             Eigen::Vector2d(1, 0).asDiagonal().toDenseMatrix())
                .cwiseAbs()
                .maxCoeff(),
            1e-15);
  Eigen::Matrix2d swap;
  swap << 0, 1, 1, 0;
  EXPECT_LE((project_psd(swap) - 0.5 * Eigen::Matrix2d::Ones()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ProjectPsd, NearestPointSpotCheck) {
  CounterRng rng(5);
  const int d = 6;
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::MatrixXd a(d, d), b(d, d);
    for (int i = 0; i < d * d; ++i) {
      a.data()[i] = rng.normal();
      b.data()[i] = rng.normal();
    }
    const Eigen::MatrixXd input = 0.5 * (a + a.transpose());
    const Eigen::MatrixXd q = b * b.transpose();  // random PSD competitor
    const Eigen::MatrixXd out = project_psd(input);
    EXPECT_GE(min_eigenvalue(out), -1e-12);
    EXPECT_LE((out - input).norm(), (q - input).norm() + 1e-9);
  }
}

TEST(CompileTensorPca, DiagonalBounds) {
  const auto s = compile_tensor_pca(2, 2, 4.0);
  ASSERT_EQ(s.inequalities().size(), 3u);
  EXPECT_DOUBLE_EQ(s.inequalities()[1].bound, 0.25);  // 4^(-2/2)
  EXPECT_DOUBLE_EQ(s.inequalities()[2].bound, 0.25);
  EXPECT_EQ(s.basis().max_degree(), 4);

  const auto t = compile_tensor_pca(8, 3, std::pow(8.0, 0.75));
  EXPECT_NEAR(t.inequalities()[1].bound, 1 / std::sqrt(8.0), 1e-14);
  EXPECT_EQ(t.basis().max_degree(), 6);
  EXPECT_EQ(t.layout().dim, 165);
  EXPECT_THROW(compile_tensor_pca(8, 1, 1.0), ValidationError);
  EXPECT_THROW(compile_tensor_pca(8, 3, 0.0), ValidationError);
}

TEST(CompileTensorPca, WitnessIsFeasible) {
  for (double lambda : {1.0, 5.0, 30.0, 200.0}) {
    const auto s = compile_tensor_pca(4, 3, lambda);
    const Eigen::VectorXd z = s.witness().stacked();
    EXPECT_LE(s.equality_residual(z), 1e-12);
    EXPECT_LE(s.inequality_violation(z), 1e-12);
    EXPECT_GE(min_eigenvalue(moment_matrix(s.witness())), -1e-12);
  }
}

TEST(CompileSparsePca, VacuousWhenKEqualsN) {
  const int n = 4;
  const auto s = compile_sparse_pca(n, n, std::sqrt(static_cast<double>(n)));
  for (const auto& c : s.inequalities()) {
    if (c.label.find("b^2/k") != std::string::npos) EXPECT_NEAR(c.bound, 1.0, 1e-15);
    if (c.label.find("sum_{i,j}") != std::string::npos) EXPECT_EQ(c.bound, n);
  }
}

TEST(CompileSparsePca, FlatWitnessSaturatesSurrogate) {
  const int n = 6, k = 3;
  const auto s = compile_sparse_pca(n, k, 100.0);
  const Eigen::VectorXd z = s.witness().stacked();
  EXPECT_LE(s.equality_residual(z), 1e-12);
  EXPECT_LE(s.inequality_violation(z), 1e-12);
  const auto& surrogate = s.inequalities().back();
  EXPECT_NEAR(surrogate.row.dot(z), static_cast<double>(k), 1e-12);
  EXPECT_THROW(compile_sparse_pca(4, 5, 1.0), ValidationError);
}

TEST(CompileSparsePca, LargeDiagonalBound) {
  const auto s = compile_sparse_pca(40, 5, 100.0, 200000);
  EXPECT_NEAR(s.inequalities()[0].bound, 2000.0, 1e-9);
  EXPECT_EQ(s.num_aux(), 40 * 41);
}

TEST(CompileUnitBall, Structure) {
  const auto s = compile_unit_ball(5);
  EXPECT_EQ(s.basis().max_degree(), 2);
  EXPECT_EQ(s.equalities().size(), 1u);
  EXPECT_EQ(s.inequalities().size(), 1u);
}

ConstraintSystem with_extra_equality(int n, int var) {
  auto basis = monomial_basis(n, 2);
  std::vector<LinearConstraint> eq(2);
  eq[0].row.add(0, 1.0);
  eq[0].bound = 1.0;
  const int v[1] = {var};
  eq[1].row.add(basis->index_of(v), 1.0);
  eq[1].bound = 0.0;
  LinearConstraint norm;
  for (int i = 0; i < n; ++i) {
    const int sq[2] = {i, i};
    norm.row.add(basis->index_of(sq), 1.0);
  }
  norm.bound = 1.0;
  Eigen::MatrixXd atoms = Eigen::MatrixXd::Zero(n, 2);
  atoms(1, 0) = 0.5;
  atoms(1, 1) = -0.5;
  auto witness = distribution_moments(basis, atoms, Eigen::Vector2d(0.5, 0.5));
  return ConstraintSystem(basis, 0, std::move(eq), {norm}, std::move(witness), gaussian_moments(basis, 0.1),
                          "ball with E x_var = 0");
}

TEST(DykstraProject, FeasibleInputUnchanged) {
  CounterRng rng(3);
  const auto sys = compile_tensor_pca(3, 2, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int k = 1 + static_cast<int>(rng.below(5));
    Eigen::MatrixXd atoms = random_atoms(3, k, rng, 1.0);
    for (int j = 0; j < k; ++j) atoms.col(j) *= 0.5 / atoms.col(j).norm();  // inside the unit ball
    const auto m = distribution_moments(sys.basis_ptr(), atoms, random_weights(k, rng));
    const auto r = dykstra_project(m, sys);
    EXPECT_TRUE(r.converged);
    EXPECT_LE((r.moments.values - m.values).cwiseAbs().maxCoeff(), 1e-7);
  }
}

TEST(DykstraProject, AddedEqualityHolds) {
  const auto sys = with_extra_equality(3, 0);
  Eigen::MatrixXd atom(3, 1);
  atom << 0.6, 0.3, 0.0;
  const auto m = distribution_moments(sys.basis_ptr(), atom, Eigen::VectorXd::Ones(1));
  const auto r = dykstra_project(m, sys, DykstraParams{5000, 1e-9});
  EXPECT_TRUE(r.converged);
  const int x0[1] = {0};
  EXPECT_NEAR(r.moments.values[sys.basis().index_of(x0)], 0.0, 1e-7);
  EXPECT_GE(r.min_eigenvalue, -1e-7);
}

TEST(DykstraProject, TraceEqualityFromScaledStart) {
  auto basis = monomial_basis(3, 2);
  std::vector<LinearConstraint> eq(2);
  eq[0].row.add(0, 1.0);
  eq[0].bound = 1.0;
  for (int i = 0; i < 3; ++i) {
    const int sq[2] = {i, i};
    eq[1].row.add(basis->index_of(sq), 1.0);
  }
  eq[1].bound = 1.0;
  Eigen::MatrixXd atoms = Eigen::MatrixXd::Identity(3, 3);
  auto witness = distribution_moments(basis, atoms, Eigen::Vector3d::Constant(1.0 / 3));
  const ConstraintSystem sys(basis, 0, eq, {}, witness, gaussian_moments(basis, 1.0 / 3), "trace one");
  PseudoMoments start = witness;
  start.values.tail(start.values.size() - 1) *= 3.0;
  const auto r = dykstra_project(start, sys);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(eq[1].row.dot(r.moments.values), 1.0, 1e-7);
  EXPECT_GE(r.min_eigenvalue, -1e-7);
}

TEST(DykstraProject, RandomInputsLandInFeasibleSet) {
  CounterRng rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const auto sys = compile_tensor_pca(3, 2, 2.0 + trial);
    PseudoMoments m = sys.interior();
    for (int i = 1; i < m.values.size(); ++i) m.values[i] += 0.3 * rng.normal();
    const auto r = dykstra_project(m, sys, DykstraParams{50000, 1e-9});
    EXPECT_TRUE(r.converged) << trial;
    EXPECT_LE(r.equality_residual, 1e-6);
    EXPECT_LE(r.inequality_violation, 1e-6);
    EXPECT_GE(r.min_eigenvalue, -1e-7);
  }
}

TEST(DykstraProject, WarmStartReachesSamePoint) {
  CounterRng rng(12);
  const auto sys = compile_tensor_pca(3, 2, 3.0);
  PseudoMoments m = sys.interior();
  for (int i = 1; i < m.values.size(); ++i) m.values[i] += 0.2 * rng.normal();
  const DykstraParams params{20000, 1e-10};
  DykstraWarmStart warm;
  const auto first = dykstra_project(m, sys, params, &warm);
  PseudoMoments nudged = m;
  nudged.values[5] += 1e-3;
  const auto cold = dykstra_project(nudged, sys, params);
  const auto hot = dykstra_project(nudged, sys, params, &warm);
  ASSERT_TRUE(first.converged && cold.converged && hot.converged);
  EXPECT_LE((cold.moments.values - hot.moments.values).cwiseAbs().maxCoeff(), 1e-7);
  EXPECT_LE(hot.iterations, cold.iterations);
}

TEST(ProjectPolyhedron, NearestFeasiblePoint) {
  CounterRng rng(21);
  const auto sys = compile_sparse_pca(5, 2, 1.5);
  const Eigen::VectorXd w = sys.weights();
  const Eigen::VectorXd a = sys.witness().stacked(), b = sys.interior().stacked();
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd z0 = a;
    for (Eigen::Index i = 0; i < z0.size(); ++i) z0[i] += rng.normal();
    const Eigen::VectorXd z = sys.project_polyhedron(z0);
    EXPECT_LE(sys.equality_residual(z), 1e-10);
    EXPECT_LE(sys.inequality_violation(z), 1e-10);
    const double d = (z - z0).cwiseProduct(w.cwiseSqrt()).norm();
    for (double t : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      const Eigen::VectorXd q = (1 - t) * a + t * b;  // feasible by convexity
      EXPECT_LE(d, (q - z0).cwiseProduct(w.cwiseSqrt()).norm() + 1e-10);
    }
    EXPECT_LE((sys.project_polyhedron(z) - z).cwiseAbs().maxCoeff(), 1e-10);  // idempotent
  }
}

TEST(RestoreFeasibility, MakesPsd) {
  CounterRng rng(4);
  const auto sys = compile_tensor_pca(3, 2, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    PseudoMoments m = sys.witness();
    for (int i = 1; i < m.values.size(); ++i) m.values[i] += 0.5 * rng.normal();
    const double t = restore_feasibility(m, sys);
    EXPECT_GE(t, 0.0);
    EXPECT_LE(t, 1.0);
    EXPECT_GE(min_eigenvalue(sys.layout().assemble_scaled(m.values)), -1e-12);
  }
}

TEST(ExtractSignal, Examples) {
  auto basis = monomial_basis(3, 4);
  const Eigen::Vector3d v(0.6, -0.8, 0.0);
  Eigen::MatrixXd atom = v;
  const auto point = distribution_moments(basis, atom, Eigen::VectorXd::Ones(1));
  EXPECT_LE((extract_signal(point, 3) - rank_one(v, 3)).values().cwiseAbs().maxCoeff(), 1e-15);

  Eigen::MatrixXd pair(3, 2);
  pair.col(0) = v;
  pair.col(1) = -v;
  const auto sym = distribution_moments(basis, pair, Eigen::Vector2d(0.5, 0.5));
  EXPECT_LE(extract_signal(sym, 3).values().cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE((extract_signal(sym, 4) - rank_one(v, 4)).values().cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ExtractSignal, IsSymmetric) {
  CounterRng rng(2);
  auto basis = monomial_basis(4, 3);
  PseudoMoments m{basis, Eigen::VectorXd(basis->size()), {}};
  for (int i = 0; i < m.values.size(); ++i) m.values[i] = rng.normal();
  const Tensor t = extract_signal(m, 3);
  int idx[3];
  for (Eigen::Index lin = 0; lin < t.size(); ++lin) {
    t.multi_index(lin, idx);
    std::array<int, 3> perm{idx[0], idx[1], idx[2]};
    std::sort(perm.begin(), perm.end());
    do {
      EXPECT_EQ(t(perm), t[lin]);
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
}

TEST(SystemJson, Describes) {
  const auto j = to_json(compile_tensor_pca(2, 2, 4.0));
  EXPECT_EQ(j["num_vars"], 2);
  EXPECT_EQ(j["degree"], 4);
  EXPECT_EQ(j["moment_matrix_dim"], 6);
  EXPECT_EQ(j["equalities"].size(), 1u);
  EXPECT_EQ(j["inequalities"].size(), 3u);
  EXPECT_EQ(j["inequalities"][1]["upper"], 0.25);
  EXPECT_EQ(j["inequalities"][1]["terms"][0]["exponents"], (std::vector<int>{2, 0}));
}

TEST(ConstraintSystem, RejectsBadInterior) {
  auto basis = monomial_basis(2, 2);
  std::vector<LinearConstraint> eq(1);
  eq[0].row.add(0, 1.0);
  eq[0].bound = 1.0;
  Eigen::MatrixXd atom = Eigen::MatrixXd::Zero(2, 1);
  auto point = distribution_moments(basis, atom, Eigen::VectorXd::Ones(1));
  EXPECT_ANY_THROW(ConstraintSystem(basis, 0, eq, {}, point, point, "singular interior"));
}

}  // namespace
}  // namespace obliv
