#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "obliv/error.hpp"

namespace obliv {

/// Largest dense tensor we agree to materialize (n^p entries).
inline constexpr std::size_t kMaxTensorEntries = 100000;

/// n^p with overflow and cap checking.
inline std::size_t checked_power(int n, int p) {
  require(n >= 1 && p >= 1, "tensor dimension and order must be positive");
  std::size_t total = 1;
  for (int i = 0; i < p; ++i) {
    total *= static_cast<std::size_t>(n);
    require(total <= kMaxTensorEntries, "tensor exceeds the n^p <= 1e5 entry cap");
  }
  return total;
}

/// Dense order-p tensor with dimension n in every mode. Entries are stored
/// row-major by multi-index (i_1, ..., i_p), i.e. i_p varies fastest.
template <typename Scalar>
class BasicTensor {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  BasicTensor() = default;

  BasicTensor(int order, int dim)
      : order_(order), dim_(dim), values_(Vector::Zero(static_cast<Eigen::Index>(checked_power(dim, order)))) {}

  BasicTensor(int order, int dim, Vector values) : order_(order), dim_(dim), values_(std::move(values)) {
    require(static_cast<std::size_t>(values_.size()) == checked_power(dim, order),
            "tensor value count must equal n^p");
  }

  static BasicTensor zeros(int order, int dim) { return BasicTensor(order, dim); }

  int order() const noexcept { return order_; }
  int dim() const noexcept { return dim_; }
  Eigen::Index size() const noexcept { return values_.size(); }

  const Vector& values() const noexcept { return values_; }
  Vector& values() noexcept { return values_; }

  Scalar& operator[](Eigen::Index linear) { return values_[linear]; }
  const Scalar& operator[](Eigen::Index linear) const { return values_[linear]; }

  Eigen::Index linear_index(std::span<const int> idx) const {
    Eigen::Index lin = 0;
    for (int k = 0; k < order_; ++k) lin = lin * dim_ + idx[static_cast<std::size_t>(k)];
    return lin;
  }

  /// Inverse of linear_index.
  void multi_index(Eigen::Index linear, std::span<int> out) const {
    for (int k = order_ - 1; k >= 0; --k) {
      out[static_cast<std::size_t>(k)] = static_cast<int>(linear % dim_);
      linear /= dim_;
    }
  }

  Scalar& operator()(std::span<const int> idx) { return values_[linear_index(idx)]; }
  const Scalar& operator()(std::span<const int> idx) const { return values_[linear_index(idx)]; }

  Scalar frobenius_norm() const { return values_.norm(); }

  bool same_shape(const BasicTensor& other) const noexcept {
    return order_ == other.order_ && dim_ == other.dim_;
  }

  BasicTensor& operator+=(const BasicTensor& rhs) {
    require(same_shape(rhs), "tensor shape mismatch");
    values_ += rhs.values_;
    return *this;
  }
  BasicTensor& operator-=(const BasicTensor& rhs) {
    require(same_shape(rhs), "tensor shape mismatch");
    values_ -= rhs.values_;
    return *this;
  }
  BasicTensor& operator*=(Scalar s) {
    values_ *= s;
    return *this;
  }

  friend BasicTensor operator+(BasicTensor a, const BasicTensor& b) { return a += b; }
  friend BasicTensor operator-(BasicTensor a, const BasicTensor& b) { return a -= b; }
  friend BasicTensor operator*(Scalar s, BasicTensor a) { return a *= s; }
  friend BasicTensor operator*(BasicTensor a, Scalar s) { return a *= s; }

 private:
  int order_ = 0;
  int dim_ = 0;
  Vector values_;
};

using Tensor = BasicTensor<double>;

/// v^{(x)p}: entry (i_1..i_p) = prod_j v_{i_j}.
template <typename Derived>
BasicTensor<typename Derived::Scalar> rank_one(const Eigen::MatrixBase<Derived>& v, int p) {
  using Scalar = typename Derived::Scalar;
  require(p >= 1, "rank_one needs p >= 1");
  const int n = static_cast<int>(v.size());
  BasicTensor<Scalar> out(p, n);
  // Build by repeated Kronecker products: values of v^{(x)(k+1)} = kron(v^{(x)k}, v).
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> acc = v;
  for (int k = 1; k < p; ++k) {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> next(acc.size() * n);
    for (Eigen::Index a = 0; a < acc.size(); ++a) next.segment(a * n, n) = acc[a] * v;
    acc.swap(next);
  }
  out.values() = acc;
  return out;
}

template <typename Scalar>
Scalar inner(const BasicTensor<Scalar>& a, const BasicTensor<Scalar>& b) {
  require(a.same_shape(b), "tensor shape mismatch");
  return a.values().dot(b.values());
}

/// Visit every index tuple i_1 < ... < i_p (strict) or i_1 <= ... <= i_p, in
/// lexicographic order.
template <typename Fn>
void for_each_sorted_tuple(int n, int p, bool strict, Fn&& fn) {
  if (p <= 0) return;
  std::vector<int> idx(static_cast<std::size_t>(p));
  for (int k = 0; k < p; ++k) idx[static_cast<std::size_t>(k)] = strict ? k : 0;
  if (strict && p > n) return;
  while (true) {
    fn(std::span<const int>(idx));
    int k = p - 1;
    // Position k can go up to n-1 (non-strict) or n-p+k (strict).
    while (k >= 0 && idx[static_cast<std::size_t>(k)] == (strict ? n - p + k : n - 1)) --k;
    if (k < 0) break;
    ++idx[static_cast<std::size_t>(k)];
    for (int j = k + 1; j < p; ++j)
      idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + (strict ? 1 : 0);
  }
}

/// Entries on the upper simplex: indices i_1 < ... < i_p when strict, else
/// i_1 <= ... <= i_p, in lexicographic order.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> upper_simplex(const BasicTensor<Scalar>& t, bool strict) {
  require(t.order() >= 2, "upper_simplex needs order >= 2");
  std::vector<Scalar> out;
  for_each_sorted_tuple(t.dim(), t.order(), strict,
                        [&](std::span<const int> idx) { out.push_back(t(idx)); });
  return Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>(out.data(), static_cast<Eigen::Index>(out.size()));
}

}  // namespace obliv
