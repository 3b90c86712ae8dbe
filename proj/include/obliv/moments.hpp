#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "obliv/tensor.hpp"

namespace obliv {

inline constexpr std::size_t kDefaultMonomialCap = 50000;

/// All monomials in n variables of total degree <= d, in graded-lex order.
/// A monomial is stored as its sorted multiset of variable indices, so
/// x0^2 x3 is {0, 0, 3}. Monomials of degree <= e form a prefix of length
/// C(n+e, e).
class MonomialBasis {
 public:
  MonomialBasis(int n, int d, std::size_t cap = kDefaultMonomialCap);

  int num_vars() const noexcept { return n_; }
  int max_degree() const noexcept { return d_; }
  int size() const noexcept { return static_cast<int>(monomials_.size()); }

  std::span<const int> monomial(int i) const { return monomials_[static_cast<std::size_t>(i)]; }
  int degree(int i) const { return static_cast<int>(monomials_[static_cast<std::size_t>(i)].size()); }
  std::vector<int> exponents(int i) const;

  /// Number of monomials with degree <= e.
  int prefix_size(int e) const { return prefix_[static_cast<std::size_t>(e)]; }

  /// Index of the monomial with the given sorted variable multiset, or -1.
  int index_of(std::span<const int> sorted_vars) const;
  /// Index of the product of two monomials of this basis, or -1.
  int product_index(int a, int b) const;

 private:
  std::uint64_t key(std::span<const int> sorted_vars) const;

  int n_;
  int d_;
  std::vector<std::vector<int>> monomials_;
  std::vector<int> prefix_;
  std::unordered_map<std::uint64_t, int> lookup_;
};

using BasisPtr = std::shared_ptr<const MonomialBasis>;

BasisPtr monomial_basis(int n, int d, std::size_t cap = kDefaultMonomialCap);

/// Pseudo-expectation values, one per monomial (constant monomial = 1), plus
/// optional auxiliary lift variables used by some constraint systems.
struct PseudoMoments {
  BasisPtr basis;
  Eigen::VectorXd values;
  Eigen::VectorXd aux;

  /// Moment vector followed by auxiliaries.
  Eigen::VectorXd stacked() const;
  static PseudoMoments from_stacked(BasisPtr basis, const Eigen::VectorXd& z);
};

/// Moments of the discrete distribution with atoms in the columns of `atoms`.
PseudoMoments distribution_moments(const BasisPtr& basis, const Eigen::MatrixXd& atoms,
                                   const Eigen::VectorXd& weights);

/// Moments of N(0, sigma2 * I).
PseudoMoments gaussian_moments(const BasisPtr& basis, double sigma2);

/// Index layout of the moment matrix: rows and columns are the monomials of
/// degree <= half_degree and entry (r, c) holds the moment of their product.
struct MomentMatrixLayout {
  int half_degree = 0;
  int dim = 0;
  Eigen::MatrixXi index;         // dim x dim monomial indices
  Eigen::VectorXd multiplicity;  // per monomial: number of (r, c) positions
  Eigen::VectorXd scale;         // per row/column, for the congruence D M D
  Eigen::VectorXd weight;        // per monomial: sum of (s_r s_c)^2 over its positions

  explicit MomentMatrixLayout(const MonomialBasis& basis);
  MomentMatrixLayout() = default;

  Eigen::MatrixXd assemble(const Eigen::VectorXd& values) const;
  /// Orthogonal projection onto moment-structured matrices: positions
  /// sharing a monomial are averaged.
  Eigen::VectorXd average(const Eigen::MatrixXd& m) const;

  void set_scale(const Eigen::VectorXd& s);
  /// D M(values) D.
  Eigen::MatrixXd assemble_scaled(const Eigen::VectorXd& values) const;
  /// Frobenius projection onto {D M(y) D}, returned as y.
  Eigen::VectorXd average_scaled(const Eigen::MatrixXd& m) const;
};

/// M[b, g] = E[x^(b+g)] over monomials of degree <= D/2. Needs even D.
Eigen::MatrixXd moment_matrix(const PseudoMoments& m);

/// Frobenius-nearest PSD matrix (negative eigenvalues clipped to zero).
Eigen::MatrixXd project_psd(const Eigen::MatrixXd& m);

double min_eigenvalue(const Eigen::MatrixXd& m);

/// Sparse linear form over the stacked [moments; aux] variable vector.
struct SparseRow {
  std::vector<int> index;
  std::vector<double> coef;

  void add(int i, double c);
  double dot(const Eigen::VectorXd& z) const;
};

struct LinearConstraint {
  SparseRow row;
  double bound = 0.0;  // rhs for equalities, upper bound for inequalities
  std::string label;
};

/// Affine equalities, upper-bounded inequalities and a PSD moment matrix.
/// Immutable once built; carries a feasible witness and a strictly-PSD
/// interior point.
class ConstraintSystem {
 public:
  ConstraintSystem(BasisPtr basis, int num_aux, std::vector<LinearConstraint> equalities,
                   std::vector<LinearConstraint> inequalities, PseudoMoments witness, PseudoMoments interior,
                   std::string description);

  const MonomialBasis& basis() const { return *basis_; }
  const BasisPtr& basis_ptr() const { return basis_; }
  int psd_half_degree() const { return layout_.half_degree; }
  int num_aux() const { return num_aux_; }
  int num_variables() const { return basis_->size() + num_aux_; }
  const std::vector<LinearConstraint>& equalities() const { return equalities_; }
  const std::vector<LinearConstraint>& inequalities() const { return inequalities_; }
  const PseudoMoments& witness() const { return witness_; }
  const PseudoMoments& interior() const { return interior_; }
  const std::string& description() const { return description_; }
  const MomentMatrixLayout& layout() const { return layout_; }

  /// Metric weights of the stacked variables: for moments, the squared norm
  /// of the monomial's pattern in the scaled moment matrix; 1 for aux.
  const Eigen::VectorXd& weights() const { return weights_; }

  /// Diagonal rescaling that gives the interior moment matrix a unit diagonal,
  /// and the smallest eigenvalue of the rescaled interior matrix.
  const Eigen::VectorXd& interior_scale() const { return interior_scale_; }
  double interior_min_eig() const { return interior_min_eig_; }

  double equality_residual(const Eigen::VectorXd& z) const;
  double inequality_violation(const Eigen::VectorXd& z) const;

  /// Weighted projection of z onto {equalities} exactly, via the cached
  /// factorization of A W^-1 A^T.
  void project_equalities(Eigen::VectorXd& z) const;

  /// Weighted projection onto the polyhedron (equalities and inequalities).
  Eigen::VectorXd project_polyhedron(const Eigen::VectorXd& z0) const;

 private:
  BasisPtr basis_;
  int num_aux_;
  std::vector<LinearConstraint> equalities_;
  std::vector<LinearConstraint> inequalities_;
  PseudoMoments witness_;
  PseudoMoments interior_;
  std::string description_;
  MomentMatrixLayout layout_;
  Eigen::VectorXd weights_;
  bool active_set_projection(const Eigen::VectorXd& z0, Eigen::VectorXd& z) const;
  bool primal_active_set_projection(const Eigen::VectorXd& z0, Eigen::VectorXd& z) const;
  Eigen::VectorXd project_on_rows(const Eigen::VectorXd& z0, const std::vector<Eigen::Index>& rows,
                                  Eigen::VectorXd* multipliers) const;
  const SparseRow& row(Eigen::Index r) const;

  Eigen::LDLT<Eigen::MatrixXd> eq_factor_;
  Eigen::MatrixXd gram_;              // C W^-1 C^T over equalities then inequalities; empty when too large
  std::vector<double> ineq_norm_sq_;  // g^T W^-1 g
  Eigen::VectorXd interior_scale_;
  double interior_min_eig_ = 0.0;
};

struct DykstraParams {
  int max_iters = 500;
  double tol = 1e-7;
};

struct ProjectionResult {
  PseudoMoments moments;
  bool converged = false;
  int iterations = 0;
  double equality_residual = 0.0;
  double inequality_violation = 0.0;
  double min_eigenvalue = 0.0;
};

/// Polyhedron-side Dykstra correction carried between calls. Dykstra is block
/// coordinate ascent on the dual, so any correction produced by an earlier
/// projection onto the same system is a valid starting point; nearby inputs
/// then converge in far fewer iterations.
struct DykstraWarmStart {
  Eigen::MatrixXd q;
  Eigen::VectorXd q_aux;
};

/// Dykstra alternating projections between the PSD cone (in moment-matrix
/// space) and the constraint polyhedron restricted to moment-structured
/// matrices. On non-convergence the last polyhedron iterate is returned
/// with converged = false. `warm`, when given, seeds the correction and
/// receives the final one.
ProjectionResult dykstra_project(const PseudoMoments& m, const ConstraintSystem& sys, const DykstraParams& params = {},
                                 DykstraWarmStart* warm = nullptr);

/// Shrink a polyhedron-feasible point toward the system's interior point
/// until its moment matrix is PSD. Returns the mixing weight used.
double restore_feasibility(PseudoMoments& m, const ConstraintSystem& sys);

/// Ball-type set: n variables, degree 2, E||x||^2 <= 1. Its first moments
/// range over the unit Euclidean ball of R^n.
ConstraintSystem compile_unit_ball(int n);

/// Tensor PCA: degree 2p, E||x||^2 <= 1 and E x_i^2 <= lambda^(-2/p).
ConstraintSystem compile_tensor_pca(int n, int p, double lambda, std::size_t cap = kDefaultMonomialCap);

/// Sparse PCA, degree 4 over x only: E||x||^2 = 1, E x_i^2 <= b^2/k and
/// sum_{i,j} |E x_i x_j| <= k through a sign-split lift.
ConstraintSystem compile_sparse_pca(int n, int k, double b, std::size_t cap = kDefaultMonomialCap);

/// Monomial index of every tensor entry (i_1..i_p), row-major.
std::vector<int> tensor_monomial_map(const MonomialBasis& basis, int p);

/// Entry (i_1..i_p) = E[x_i1 ... x_ip].
Tensor extract_signal(const PseudoMoments& m, int p);

nlohmann::json to_json(const ConstraintSystem& sys);

}  // namespace obliv
