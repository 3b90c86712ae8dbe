#include "obliv/moments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "obliv/error.hpp"

namespace obliv {

namespace {

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// (e-1)!! for even e.
double double_factorial_odd(int e) {
  double r = 1.0;
  for (int k = e - 1; k > 1; k -= 2) r *= k;
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------
// MonomialBasis

MonomialBasis::MonomialBasis(int n, int d, std::size_t cap) : n_(n), d_(d) {
  require(n >= 1, "monomial basis needs n >= 1");
  require(d >= 0, "monomial basis needs d >= 0");
  const double count = binomial(n + d, d);
  if (count > static_cast<double>(cap)) {
    std::ostringstream os;
    os << "monomial basis with n=" << n << ", d=" << d << " has " << count << " monomials, above the cap of " << cap;
    throw ValidationError(os.str());
  }
  unsigned __int128 span = 1;
  for (int i = 0; i < d; ++i) {
    span *= static_cast<unsigned>(n + 1);
    require(span < (static_cast<unsigned __int128>(1) << 63), "monomial key space overflows 64 bits");
  }

  monomials_.reserve(static_cast<std::size_t>(count));
  prefix_.reserve(static_cast<std::size_t>(d + 1));
  monomials_.emplace_back();
  prefix_.push_back(1);
  for (int e = 1; e <= d; ++e) {
    for_each_sorted_tuple(n, e, false,
                          [&](std::span<const int> idx) { monomials_.emplace_back(idx.begin(), idx.end()); });
    prefix_.push_back(static_cast<int>(monomials_.size()));
  }
  lookup_.reserve(monomials_.size() * 2);
  for (std::size_t i = 0; i < monomials_.size(); ++i) lookup_.emplace(key(monomials_[i]), static_cast<int>(i));
}

std::uint64_t MonomialBasis::key(std::span<const int> sorted_vars) const {
  std::uint64_t k = 0;
  for (int v : sorted_vars) k = k * static_cast<std::uint64_t>(n_ + 1) + static_cast<std::uint64_t>(v + 1);
  return k;
}

std::vector<int> MonomialBasis::exponents(int i) const {
  std::vector<int> e(static_cast<std::size_t>(n_), 0);
  for (int v : monomial(i)) ++e[static_cast<std::size_t>(v)];
  return e;
}

int MonomialBasis::index_of(std::span<const int> sorted_vars) const {
  if (static_cast<int>(sorted_vars.size()) > d_) return -1;
  const auto it = lookup_.find(key(sorted_vars));
  return it == lookup_.end() ? -1 : it->second;
}

int MonomialBasis::product_index(int a, int b) const {
  const auto ma = monomial(a);
  const auto mb = monomial(b);
  if (static_cast<int>(ma.size() + mb.size()) > d_) return -1;
  int buf[64];
  require(ma.size() + mb.size() <= 64, "monomial degree too large");
  std::merge(ma.begin(), ma.end(), mb.begin(), mb.end(), buf);
  return index_of(std::span<const int>(buf, ma.size() + mb.size()));
}

BasisPtr monomial_basis(int n, int d, std::size_t cap) { return std::make_shared<const MonomialBasis>(n, d, cap); }

// ---------------------------------------------------------------------------
// PseudoMoments

Eigen::VectorXd PseudoMoments::stacked() const {
  Eigen::VectorXd z(values.size() + aux.size());
  z << values, aux;
  return z;
}

PseudoMoments PseudoMoments::from_stacked(BasisPtr basis, const Eigen::VectorXd& z) {
  const int nb = basis->size();
  PseudoMoments m{std::move(basis), z.head(nb), z.tail(z.size() - nb)};
  return m;
}

PseudoMoments distribution_moments(const BasisPtr& basis, const Eigen::MatrixXd& atoms,
                                   const Eigen::VectorXd& weights) {
  require(atoms.rows() == basis->num_vars(), "atoms must have one row per variable");
  require(atoms.cols() == weights.size(), "one weight per atom");
  PseudoMoments m{basis, Eigen::VectorXd::Zero(basis->size()), {}};
  for (int i = 0; i < basis->size(); ++i) {
    double total = 0.0;
    for (Eigen::Index a = 0; a < atoms.cols(); ++a) {
      double prod = weights[a];
      for (int v : basis->monomial(i)) prod *= atoms(v, a);
      total += prod;
    }
    m.values[i] = total;
  }
  return m;
}

PseudoMoments gaussian_moments(const BasisPtr& basis, double sigma2) {
  require(sigma2 >= 0, "variance must be nonnegative");
  PseudoMoments m{basis, Eigen::VectorXd::Zero(basis->size()), {}};
  const double sigma = std::sqrt(sigma2);
  for (int i = 0; i < basis->size(); ++i) {
    double prod = 1.0;
    for (int e : basis->exponents(i)) {
      if (e % 2 == 1) {
        prod = 0.0;
        break;
      }
      prod *= std::pow(sigma, e) * double_factorial_odd(e);
    }
    m.values[i] = prod;
  }
  return m;
}

// ---------------------------------------------------------------------------
// Moment matrices

MomentMatrixLayout::MomentMatrixLayout(const MonomialBasis& basis) {
  require(basis.max_degree() % 2 == 0, "moment matrix needs an even basis degree");
  half_degree = basis.max_degree() / 2;
  dim = basis.prefix_size(half_degree);
  index.resize(dim, dim);
  multiplicity = Eigen::VectorXd::Zero(basis.size());
  for (int c = 0; c < dim; ++c) {
    for (int r = c; r < dim; ++r) {
      const int k = basis.product_index(r, c);
      index(r, c) = k;
      index(c, r) = k;
      multiplicity[k] += (r == c) ? 1.0 : 2.0;
    }
  }
  scale = Eigen::VectorXd::Ones(dim);
  weight = multiplicity;
}

void MomentMatrixLayout::set_scale(const Eigen::VectorXd& s) {
  require(s.size() == dim && (s.array() > 0).all(), "moment matrix scale must be positive");
  scale = s;
  weight.setZero();
  for (int c = 0; c < dim; ++c)
    for (int r = 0; r < dim; ++r) weight[index(r, c)] += std::pow(s[r] * s[c], 2);
}

Eigen::MatrixXd MomentMatrixLayout::assemble_scaled(const Eigen::VectorXd& values) const {
  return scale.asDiagonal() * assemble(values) * scale.asDiagonal();
}

Eigen::VectorXd MomentMatrixLayout::average_scaled(const Eigen::MatrixXd& m) const {
  Eigen::VectorXd sums = Eigen::VectorXd::Zero(weight.size());
  for (int c = 0; c < dim; ++c) {
    sums[index(c, c)] += scale[c] * scale[c] * m(c, c);
    for (int r = c + 1; r < dim; ++r) sums[index(r, c)] += scale[r] * scale[c] * (m(r, c) + m(c, r));
  }
  return sums.cwiseQuotient(weight);
}

Eigen::MatrixXd MomentMatrixLayout::assemble(const Eigen::VectorXd& values) const {
  Eigen::MatrixXd m(dim, dim);
  for (int c = 0; c < dim; ++c)
    for (int r = 0; r < dim; ++r) m(r, c) = values[index(r, c)];
  return m;
}

Eigen::VectorXd MomentMatrixLayout::average(const Eigen::MatrixXd& m) const {
  Eigen::VectorXd sums = Eigen::VectorXd::Zero(multiplicity.size());
  for (int c = 0; c < dim; ++c) {
    sums[index(c, c)] += m(c, c);
    for (int r = c + 1; r < dim; ++r) sums[index(r, c)] += m(r, c) + m(c, r);
  }
  return sums.cwiseQuotient(multiplicity);
}

Eigen::MatrixXd moment_matrix(const PseudoMoments& m) {
  require(m.basis != nullptr, "moments have no basis");
  require(m.values.size() == m.basis->size(), "moment vector length must match the basis");
  return MomentMatrixLayout(*m.basis).assemble(m.values);
}

Eigen::MatrixXd project_psd(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success) throw RuntimeFailure("eigensolver failed in project_psd");
  const auto& evals = es.eigenvalues();  // ascending
  const auto& evecs = es.eigenvectors();
  Eigen::Index neg = 0;
  while (neg < evals.size() && evals[neg] < 0.0) ++neg;
  if (neg == 0) return m;
  // Subtract the negative part or rebuild from the positive part, whichever is smaller.
  if (neg <= evals.size() - neg) {
    const auto v = evecs.leftCols(neg);
    Eigen::MatrixXd out = m;
    out.noalias() -= v * evals.head(neg).asDiagonal() * v.transpose();
    return 0.5 * (out + out.transpose());
  }
  const Eigen::Index pos = evals.size() - neg;
  const auto v = evecs.rightCols(pos);
  Eigen::MatrixXd out = v * evals.tail(pos).asDiagonal() * v.transpose();
  return 0.5 * (out + out.transpose());
}

double min_eigenvalue(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw RuntimeFailure("eigensolver failed");
  return es.eigenvalues()[0];
}

// ---------------------------------------------------------------------------
// Constraint systems

void SparseRow::add(int i, double c) {
  for (std::size_t k = 0; k < index.size(); ++k) {
    if (index[k] == i) {
      coef[k] += c;
      return;
    }
  }
  index.push_back(i);
  coef.push_back(c);
}

double SparseRow::dot(const Eigen::VectorXd& z) const {
  double s = 0.0;
  for (std::size_t k = 0; k < index.size(); ++k) s += coef[k] * z[index[k]];
  return s;
}

ConstraintSystem::ConstraintSystem(BasisPtr basis, int num_aux, std::vector<LinearConstraint> equalities,
                                   std::vector<LinearConstraint> inequalities, PseudoMoments witness,
                                   PseudoMoments interior, std::string description)
    : basis_(std::move(basis)),
      num_aux_(num_aux),
      equalities_(std::move(equalities)),
      inequalities_(std::move(inequalities)),
      witness_(std::move(witness)),
      interior_(std::move(interior)),
      description_(std::move(description)),
      layout_(*basis_) {
  require(num_aux_ >= 0, "aux count must be nonnegative");
  const int nvars = num_variables();
  for (const auto* list : {&equalities_, &inequalities_})
    for (const auto& c : *list)
      for (int i : c.row.index) require(i >= 0 && i < nvars, "constraint references a variable outside the basis");

  require(interior_.values.size() == basis_->size(), "interior point does not match the basis");
  const Eigen::MatrixXd mi = layout_.assemble(interior_.values);
  require((mi.diagonal().array() > 0).all(), "interior point must have a positive definite moment matrix");
  interior_scale_ = mi.diagonal().cwiseSqrt().cwiseInverse();
  layout_.set_scale(interior_scale_);
  interior_min_eig_ = min_eigenvalue(layout_.assemble_scaled(interior_.values));
  require(interior_min_eig_ > 0.0, "interior point must have a positive definite moment matrix");

  weights_.resize(nvars);
  weights_.head(basis_->size()) = layout_.weight;
  weights_.tail(num_aux_).setOnes();

  const auto m = static_cast<Eigen::Index>(equalities_.size());
  const auto total = m + static_cast<Eigen::Index>(inequalities_.size());
  constexpr Eigen::Index kMaxDenseRows = 3000;
  if (m > 0 || total <= kMaxDenseRows) {
    // Gram matrix C W^-1 C^T accumulated column by column; the full one
    // (inequalities included) feeds the active-set projection.
    const Eigen::Index rows = total <= kMaxDenseRows ? total : m;
    std::vector<std::vector<std::pair<int, double>>> columns(static_cast<std::size_t>(nvars));
    for (Eigen::Index r = 0; r < rows; ++r) {
      const auto& rw = row(r);
      for (std::size_t k = 0; k < rw.index.size(); ++k)
        columns[static_cast<std::size_t>(rw.index[k])].emplace_back(static_cast<int>(r), rw.coef[k]);
    }
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(rows, rows);
    for (int v = 0; v < nvars; ++v) {
      const auto& col = columns[static_cast<std::size_t>(v)];
      for (const auto& [ri, ci] : col)
        for (const auto& [rj, cj] : col) gram(ri, rj) += ci * cj / weights_[v];
    }
    if (m > 0) {
      eq_factor_.compute(gram.topLeftCorner(m, m));
      if (eq_factor_.info() != Eigen::Success) throw RuntimeFailure("equality system factorization failed");
    }
    if (rows == total && !inequalities_.empty()) gram_ = std::move(gram);
  }
  ineq_norm_sq_.reserve(inequalities_.size());
  for (const auto& c : inequalities_) {
    double s = 0.0;
    for (std::size_t k = 0; k < c.row.index.size(); ++k) s += c.row.coef[k] * c.row.coef[k] / weights_[c.row.index[k]];
    require(s > 0.0, "inequality '" + c.label + "' has no coefficients");
    ineq_norm_sq_.push_back(s);
  }

  const Eigen::VectorXd zi = interior_.stacked();
  require(zi.size() == nvars, "interior point has the wrong number of auxiliaries");
  require(equality_residual(zi) <= 1e-9 && inequality_violation(zi) <= 1e-9,
          "interior point violates the linear constraints");
}

double ConstraintSystem::equality_residual(const Eigen::VectorXd& z) const {
  double r = 0.0;
  for (const auto& c : equalities_) r = std::max(r, std::abs(c.row.dot(z) - c.bound));
  return r;
}

double ConstraintSystem::inequality_violation(const Eigen::VectorXd& z) const {
  double r = 0.0;
  for (const auto& c : inequalities_) r = std::max(r, c.row.dot(z) - c.bound);
  return r;
}

void ConstraintSystem::project_equalities(Eigen::VectorXd& z) const {
  const auto m = static_cast<Eigen::Index>(equalities_.size());
  if (m == 0) return;
  Eigen::VectorXd resid(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    const auto& c = equalities_[static_cast<std::size_t>(r)];
    resid[r] = c.row.dot(z) - c.bound;
  }
  const Eigen::VectorXd lambda = eq_factor_.solve(resid);
  for (Eigen::Index r = 0; r < m; ++r) {
    const auto& row = equalities_[static_cast<std::size_t>(r)].row;
    for (std::size_t k = 0; k < row.index.size(); ++k)
      z[row.index[k]] -= lambda[r] * row.coef[k] / weights_[row.index[k]];
  }
}

const SparseRow& ConstraintSystem::row(Eigen::Index r) const {
  const auto m = static_cast<Eigen::Index>(equalities_.size());
  return r < m ? equalities_[static_cast<std::size_t>(r)].row : inequalities_[static_cast<std::size_t>(r - m)].row;
}

// Weighted projection of z0 onto {C_r z = b_r for r in rows}. Empty result
// when the rows are dependent and inconsistent.
Eigen::VectorXd ConstraintSystem::project_on_rows(const Eigen::VectorXd& z0, const std::vector<Eigen::Index>& rows,
                                                  Eigen::VectorXd* multipliers) const {
  const auto me = static_cast<Eigen::Index>(equalities_.size());
  const auto k = static_cast<Eigen::Index>(rows.size());
  Eigen::VectorXd z = z0;
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(k);
  if (k > 0) {
    const Eigen::MatrixXd sub = gram_(rows, rows);
    Eigen::VectorXd rhs(k);
    for (Eigen::Index a = 0; a < k; ++a) {
      const Eigen::Index r = rows[static_cast<std::size_t>(a)];
      const double b = r < me ? equalities_[static_cast<std::size_t>(r)].bound
                              : inequalities_[static_cast<std::size_t>(r - me)].bound;
      rhs[a] = row(r).dot(z0) - b;
    }
    const Eigen::LDLT<Eigen::MatrixXd> f(sub);
    if (f.info() != Eigen::Success) return {};
    lambda = f.solve(rhs);
    if (!lambda.allFinite() || (sub * lambda - rhs).norm() > 1e-9 * (1.0 + rhs.norm())) return {};
    for (Eigen::Index a = 0; a < k; ++a) {
      const auto& rw = row(rows[static_cast<std::size_t>(a)]);
      for (std::size_t t = 0; t < rw.index.size(); ++t) z[rw.index[t]] -= lambda[a] * rw.coef[t] / weights_[rw.index[t]];
    }
  }
  if (multipliers) *multipliers = std::move(lambda);
  return z;
}

// Primal-dual active set: guess the binding inequalities, project onto them
// as equalities, then drop negative multipliers and add violated rows until
// the guess repeats. Fast when it works; returns false on a singular guess
// or if it does not settle.
bool ConstraintSystem::active_set_projection(const Eigen::VectorXd& z0, Eigen::VectorXd& z) const {
  const auto me = static_cast<Eigen::Index>(equalities_.size());
  const auto mi = static_cast<Eigen::Index>(inequalities_.size());
  const double tol = 1e-13 * (1.0 + z0.cwiseAbs().maxCoeff());

  z = z0;
  project_equalities(z);
  std::vector<char> active(static_cast<std::size_t>(mi));
  for (Eigen::Index j = 0; j < mi; ++j) {
    const auto& c = inequalities_[static_cast<std::size_t>(j)];
    active[static_cast<std::size_t>(j)] = c.row.dot(z) > c.bound;
  }

  constexpr int kMaxRounds = 50;
  std::vector<Eigen::Index> rows;
  Eigen::VectorXd lambda;
  for (int round = 0; round < kMaxRounds; ++round) {
    rows.clear();
    for (Eigen::Index r = 0; r < me; ++r) rows.push_back(r);
    for (Eigen::Index j = 0; j < mi; ++j)
      if (active[static_cast<std::size_t>(j)]) rows.push_back(me + j);
    z = project_on_rows(z0, rows, &lambda);
    if (z.size() == 0) return false;
    bool changed = false;
    for (Eigen::Index a = me; a < lambda.size(); ++a)
      if (lambda[a] < 0.0) {
        active[static_cast<std::size_t>(rows[static_cast<std::size_t>(a)] - me)] = 0;
        changed = true;
      }
    for (Eigen::Index j = 0; j < mi; ++j) {
      const auto& c = inequalities_[static_cast<std::size_t>(j)];
      if (!active[static_cast<std::size_t>(j)] && c.row.dot(z) - c.bound > tol) {
        active[static_cast<std::size_t>(j)] = 1;
        changed = true;
      }
    }
    if (!changed) return true;
  }
  return false;
}

// Primal active set from the interior point: every iterate stays feasible,
// blocking rows are added one at a time (they are independent of the working
// rows by construction) and the most negative multiplier is dropped.
bool ConstraintSystem::primal_active_set_projection(const Eigen::VectorXd& z0, Eigen::VectorXd& z) const {
  const auto me = static_cast<Eigen::Index>(equalities_.size());
  const auto mi = static_cast<Eigen::Index>(inequalities_.size());
  const double tol = 1e-12 * (1.0 + z0.cwiseAbs().maxCoeff());
  z = interior_.stacked();
  std::vector<Eigen::Index> rows;
  for (Eigen::Index r = 0; r < me; ++r) rows.push_back(r);
  std::vector<char> in_set(static_cast<std::size_t>(mi), 0);

  const int max_steps = 20 * static_cast<int>(me + mi) + 100;
  Eigen::VectorXd lambda;
  for (int step = 0; step < max_steps; ++step) {
    const Eigen::VectorXd target = project_on_rows(z0, rows, &lambda);
    if (target.size() == 0) return false;
    const Eigen::VectorXd dir = target - z;
    if (dir.cwiseAbs().maxCoeff() <= tol) {
      Eigen::Index worst = -1;
      double most = -tol;
      for (Eigen::Index a = me; a < lambda.size(); ++a)
        if (lambda[a] < most) {
          most = lambda[a];
          worst = a;
        }
      if (worst < 0) {
        z = target;
        return true;
      }
      in_set[static_cast<std::size_t>(rows[static_cast<std::size_t>(worst)] - me)] = 0;
      rows.erase(rows.begin() + worst);
      continue;
    }
    double alpha = 1.0;
    Eigen::Index blocking = -1;
    for (Eigen::Index j = 0; j < mi; ++j) {
      if (in_set[static_cast<std::size_t>(j)]) continue;
      const auto& c = inequalities_[static_cast<std::size_t>(j)];
      const double slope = c.row.dot(dir);
      if (slope <= 0.0) continue;
      const double room = std::max(0.0, c.bound - c.row.dot(z));
      if (room / slope < alpha) {
        alpha = room / slope;
        blocking = j;
      }
    }
    z += alpha * dir;
    if (blocking >= 0) {
      in_set[static_cast<std::size_t>(blocking)] = 1;
      rows.push_back(me + blocking);
    }
  }
  return false;
}

Eigen::VectorXd ConstraintSystem::project_polyhedron(const Eigen::VectorXd& z0) const {
  Eigen::VectorXd z = z0;
  if (gram_.size() > 0 && (active_set_projection(z0, z) || primal_active_set_projection(z0, z))) return z;
  z = z0;
  project_equalities(z);
  if (inequalities_.empty()) return z;

  // Dykstra over the affine set and the individual halfspaces. A halfspace's
  // correction is always a multiple of W^-1 g, so it is kept as a scalar.
  std::vector<double> mu(inequalities_.size(), 0.0);
  constexpr int kMaxSweeps = 20000;
  const double scale = 1.0 + z0.cwiseAbs().maxCoeff();
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double moved = 0.0;
    for (std::size_t j = 0; j < inequalities_.size(); ++j) {
      const auto& c = inequalities_[j];
      const double val = c.row.dot(z) + mu[j] * ineq_norm_sq_[j] - c.bound;
      const double next = std::max(0.0, val / ineq_norm_sq_[j]);
      const double delta = mu[j] - next;
      if (delta != 0.0) {
        for (std::size_t k = 0; k < c.row.index.size(); ++k)
          z[c.row.index[k]] += delta * c.row.coef[k] / weights_[c.row.index[k]];
        moved = std::max(moved, std::abs(delta) * std::sqrt(ineq_norm_sq_[j]));
      }
      mu[j] = next;
    }
    if (!equalities_.empty()) {
      const Eigen::VectorXd before = z;
      project_equalities(z);
      moved = std::max(moved, (z - before).cwiseAbs().maxCoeff());
    }
    if (moved <= 1e-15 * scale && inequality_violation(z) <= 1e-13 * scale) break;
  }
  return z;
}

ProjectionResult dykstra_project(const PseudoMoments& m, const ConstraintSystem& sys, const DykstraParams& params,
                                 DykstraWarmStart* warm) {
  require(m.basis != nullptr && m.basis->size() == sys.basis().size(), "moments do not match the system's basis");
  require(m.aux.size() == sys.num_aux(), "moments carry the wrong number of auxiliaries");
  require(params.max_iters >= 1 && params.tol > 0, "invalid projection parameters");

  const auto& layout = sys.layout();
  const int nb = sys.basis().size();
  const int na = sys.num_aux();

  Eigen::VectorXd zb = m.stacked();
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(layout.dim, layout.dim);
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(layout.dim, layout.dim);
  Eigen::VectorXd q_aux = Eigen::VectorXd::Zero(na);
  if (warm != nullptr && warm->q.rows() == layout.dim && warm->q_aux.size() == na) {
    // Start from x = x0 - q so that x + p + q = x0 still holds.
    q = warm->q;
    q_aux = warm->q_aux;
    p = -q;
    zb.tail(na) -= q_aux;
  }

  ProjectionResult out;
  double dist = std::numeric_limits<double>::infinity();
  int it = 0;
  for (; it < params.max_iters && !(dist <= params.tol); ++it) {
    const Eigen::MatrixXd xin = layout.assemble_scaled(zb.head(nb)) + p;
    const Eigen::MatrixXd xa = project_psd(xin);
    p = xin - xa;

    const Eigen::MatrixXd bin = xa + q;
    Eigen::VectorXd zin(nb + na);
    zin.head(nb) = layout.average_scaled(bin);
    zin.tail(na) = zb.tail(na) + q_aux;
    const Eigen::VectorXd znext = sys.project_polyhedron(zin);
    const Eigen::MatrixXd mb = layout.assemble_scaled(znext.head(nb));
    q = bin - mb;
    q_aux = zin.tail(na) - znext.tail(na);
    dist = (xa - mb).norm();
    zb = znext;
  }
  if (warm != nullptr) {
    warm->q = std::move(q);
    warm->q_aux = std::move(q_aux);
  }
  out.iterations = it;
  out.converged = dist <= params.tol;
  out.moments = PseudoMoments::from_stacked(m.basis, zb);
  out.equality_residual = sys.equality_residual(zb);
  out.inequality_violation = sys.inequality_violation(zb);
  out.min_eigenvalue = min_eigenvalue(layout.assemble(zb.head(nb)));
  return out;
}

double restore_feasibility(PseudoMoments& m, const ConstraintSystem& sys) {
  const auto& layout = sys.layout();
  const double lam = min_eigenvalue(layout.assemble_scaled(m.values));
  if (lam >= 0.0) return 0.0;
  const double lam_int = sys.interior_min_eig();
  // lambda_min is concave, so the mix has lambda_min >= (1-t) lam + t lam_int.
  const double t = std::min(1.0, -lam / (lam_int - lam) * (1.0 + 1e-9) + 1e-15);
  m.values = (1.0 - t) * m.values + t * sys.interior().values;
  m.aux = (1.0 - t) * m.aux + t * sys.interior().aux;
  return t;
}

// ---------------------------------------------------------------------------
// Compilers

namespace {

int square_index(const MonomialBasis& b, int i) {
  const int vars[2] = {i, i};
  return b.index_of(vars);
}

int pair_index(const MonomialBasis& b, int i, int j) {
  const int vars[2] = {std::min(i, j), std::max(i, j)};
  return b.index_of(vars);
}

LinearConstraint constant_is_one() {
  LinearConstraint c;
  c.row.add(0, 1.0);
  c.bound = 1.0;
  c.label = "E[1] = 1";
  return c;
}

}  // namespace

ConstraintSystem compile_unit_ball(int n) {
  auto basis = monomial_basis(n, 2);
  std::vector<LinearConstraint> eq{constant_is_one()};
  LinearConstraint norm;
  for (int i = 0; i < n; ++i) norm.row.add(square_index(*basis, i), 1.0);
  norm.bound = 1.0;
  norm.label = "E||x||^2 <= 1";
  Eigen::MatrixXd atoms = Eigen::MatrixXd::Zero(n, 2);
  atoms(0, 0) = 1.0;
  atoms(0, 1) = -1.0;
  auto witness = distribution_moments(basis, atoms, Eigen::Vector2d(0.5, 0.5));
  auto interior = gaussian_moments(basis, 0.5 / n);
  return ConstraintSystem(basis, 0, std::move(eq), {norm}, std::move(witness), std::move(interior),
                          "unit ball: n=" + std::to_string(n));
}

ConstraintSystem compile_tensor_pca(int n, int p, double lambda, std::size_t cap) {
  require(p >= 2, "tensor PCA needs p >= 2");
  require(lambda > 0, "tensor PCA needs lambda > 0");
  require(n >= 1, "tensor PCA needs n >= 1");
  auto basis = monomial_basis(n, 2 * p, cap);
  const double diag_bound = std::pow(lambda, -2.0 / p);

  std::vector<LinearConstraint> eq{constant_is_one()};
  std::vector<LinearConstraint> ineq;
  LinearConstraint norm;
  for (int i = 0; i < n; ++i) norm.row.add(square_index(*basis, i), 1.0);
  norm.bound = 1.0;
  norm.label = "E||x||^2 <= 1";
  ineq.push_back(norm);
  for (int i = 0; i < n; ++i) {
    LinearConstraint c;
    c.row.add(square_index(*basis, i), 1.0);
    c.bound = diag_bound;
    c.label = "E x" + std::to_string(i) + "^2 <= lambda^(-2/p)";
    ineq.push_back(c);
  }

  // +-u for a flat u scaled to respect the coordinate bound.
  const double c2 = std::min(1.0, n * diag_bound);
  const double entry = std::sqrt(c2 / n);
  Eigen::MatrixXd atoms(n, 2);
  atoms.col(0).setConstant(entry);
  atoms.col(1).setConstant(-entry);
  auto witness = distribution_moments(basis, atoms, Eigen::Vector2d(0.5, 0.5));
  auto interior = gaussian_moments(basis, 0.9 * std::min(1.0 / n, diag_bound));

  std::ostringstream desc;
  desc << "tensor PCA: n=" << n << " p=" << p << " lambda=" << lambda << " degree=" << 2 * p;
  return ConstraintSystem(basis, 0, std::move(eq), std::move(ineq), std::move(witness), std::move(interior),
                          desc.str());
}

ConstraintSystem compile_sparse_pca(int n, int k, double b, std::size_t cap) {
  require(n >= 1, "sparse PCA needs n >= 1");
  require(k >= 1, "sparse PCA needs k >= 1");
  require(k <= n, "sparse PCA needs k <= n");
  require(b > 0, "sparse PCA needs b > 0");
  auto basis = monomial_basis(n, 4, cap);
  const int nb = basis->size();
  const int npairs = n * (n + 1) / 2;
  const int num_aux = 2 * npairs;

  std::vector<LinearConstraint> eq{constant_is_one()};
  std::vector<LinearConstraint> ineq;

  LinearConstraint trace;
  for (int i = 0; i < n; ++i) trace.row.add(square_index(*basis, i), 1.0);
  trace.bound = 1.0;
  trace.label = "E||x||^2 = 1";
  eq.push_back(trace);

  for (int i = 0; i < n; ++i) {
    LinearConstraint c;
    c.row.add(square_index(*basis, i), 1.0);
    c.bound = b * b / k;
    c.label = "E x" + std::to_string(i) + "^2 <= b^2/k";
    ineq.push_back(c);
  }

  // E x_i x_j = a+_ij - a-_ij with a+-_ij >= 0 and sum mult (a+ + a-) <= k.
  LinearConstraint surrogate;
  surrogate.bound = static_cast<double>(k);
  surrogate.label = "sum_{i,j} |E x_i x_j| <= k (sparsity surrogate; t=1 collapse of the support system)";
  int pair = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j, ++pair) {
      const int plus = nb + 2 * pair;
      const int minus = plus + 1;
      LinearConstraint link;
      link.row.add(pair_index(*basis, i, j), 1.0);
      link.row.add(plus, -1.0);
      link.row.add(minus, 1.0);
      link.bound = 0.0;
      link.label = "sign split of E x" + std::to_string(i) + " x" + std::to_string(j);
      eq.push_back(link);
      const double mult = (i == j) ? 1.0 : 2.0;
      surrogate.row.add(plus, mult);
      surrogate.row.add(minus, mult);
      for (int var : {plus, minus}) {
        LinearConstraint nonneg;
        nonneg.row.add(var, -1.0);
        nonneg.bound = 0.0;
        nonneg.label = "aux >= 0";
        ineq.push_back(nonneg);
      }
    }
  }
  ineq.push_back(surrogate);

  auto with_aux = [&](PseudoMoments m) {
    m.aux = Eigen::VectorXd::Zero(num_aux);
    int pr = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j, ++pr) {
        const double v = m.values[pair_index(*basis, i, j)];
        m.aux[2 * pr] = std::max(v, 0.0);
        m.aux[2 * pr + 1] = std::max(-v, 0.0);
      }
    return m;
  };

  Eigen::MatrixXd atoms = Eigen::MatrixXd::Zero(n, 2);
  atoms.col(0).head(k).setConstant(1.0 / std::sqrt(static_cast<double>(k)));
  atoms.col(1) = -atoms.col(0);
  auto witness = with_aux(distribution_moments(basis, atoms, Eigen::Vector2d(0.5, 0.5)));
  // Gaussian with E||x||^2 = 1: sum |E x_i x_j| = 1 <= k and E x_i^2 = 1/n <= b^2/k
  // whenever the witness is feasible.
  auto interior = with_aux(gaussian_moments(basis, 1.0 / n));

  std::ostringstream desc;
  desc << "sparse PCA: n=" << n << " k=" << k << " b=" << b << " degree=4";
  return ConstraintSystem(basis, num_aux, std::move(eq), std::move(ineq), std::move(witness), std::move(interior),
                          desc.str());
}

std::vector<int> tensor_monomial_map(const MonomialBasis& basis, int p) {
  require(p >= 1 && p <= basis.max_degree(), "tensor order must not exceed the basis degree");
  const int n = basis.num_vars();
  const std::size_t total = checked_power(n, p);
  std::vector<int> out(total);
  std::vector<int> idx(static_cast<std::size_t>(p));
  for (std::size_t lin = 0; lin < total; ++lin) {
    std::size_t rest = lin;
    for (int k = p - 1; k >= 0; --k) {
      idx[static_cast<std::size_t>(k)] = static_cast<int>(rest % static_cast<std::size_t>(n));
      rest /= static_cast<std::size_t>(n);
    }
    std::sort(idx.begin(), idx.end());
    out[lin] = basis.index_of(idx);
  }
  return out;
}

Tensor extract_signal(const PseudoMoments& m, int p) {
  require(m.basis != nullptr, "moments have no basis");
  const auto map = tensor_monomial_map(*m.basis, p);
  Tensor t(p, m.basis->num_vars());
  for (std::size_t lin = 0; lin < map.size(); ++lin) t[static_cast<Eigen::Index>(lin)] = m.values[map[lin]];
  return t;
}

nlohmann::json to_json(const ConstraintSystem& sys) {
  using nlohmann::json;
  const auto& basis = sys.basis();
  const int nb = basis.size();
  auto terms = [&](const SparseRow& row) {
    json arr = json::array();
    for (std::size_t k = 0; k < row.index.size(); ++k) {
      json t;
      if (row.index[k] < nb)
        t["exponents"] = basis.exponents(row.index[k]);
      else
        t["aux"] = row.index[k] - nb;
      t["coef"] = row.coef[k];
      arr.push_back(t);
    }
    return arr;
  };
  json eqs = json::array();
  for (const auto& c : sys.equalities()) eqs.push_back({{"label", c.label}, {"terms", terms(c.row)}, {"rhs", c.bound}});
  json ineqs = json::array();
  for (const auto& c : sys.inequalities())
    ineqs.push_back({{"label", c.label}, {"terms", terms(c.row)}, {"upper", c.bound}});
  return json{{"description", sys.description()},
              {"num_vars", basis.num_vars()},
              {"degree", basis.max_degree()},
              {"psd_half_degree", sys.psd_half_degree()},
              {"num_monomials", nb},
              {"moment_matrix_dim", sys.layout().dim},
              {"num_aux", sys.num_aux()},
              {"equalities", eqs},
              {"inequalities", ineqs}};
}

}  // namespace obliv
