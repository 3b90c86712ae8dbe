#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "obliv/error.hpp"
#include "obliv/tensor.hpp"

namespace obliv {

/// Huber penalty with threshold h: t^2/2 on |t| <= h, h(|t| - h/2) beyond.
/// The boundary |t| = h takes the quadratic branch.
template <typename Scalar>
Scalar huber_value(Scalar t, Scalar h) {
  const Scalar a = std::abs(t);
  if (a <= h) return Scalar(0.5) * t * t;
  return h * (a - Scalar(0.5) * h);
}

/// Derivative of huber_value: t clamped to [-h, h].
template <typename Scalar>
Scalar huber_grad(Scalar t, Scalar h) {
  return std::clamp(t, -h, h);
}

/// Sum of huber_value over the entries of an arbitrary dense expression.
template <typename Derived>
typename Derived::Scalar huber_sum(const Eigen::DenseBase<Derived>& x, typename Derived::Scalar h) {
  using Scalar = typename Derived::Scalar;
  return x.derived().unaryExpr([h](Scalar t) { return huber_value(t, h); }).sum();
}

template <typename Scalar>
Scalar huber_loss(const BasicTensor<Scalar>& t, Scalar h) {
  require(h > 0, "Huber threshold h must be positive");
  return huber_sum(t.values(), h);
}

struct HuberParams {
  double h = 1.0;

  explicit HuberParams(double threshold) : h(threshold) {
    require(h > 0, "Huber threshold h must be positive");
  }
};

/// f(t+d) - f(t) - f'(t) d - (d^2/2) 1{|t|<=zeta} 1{|d|<=h-zeta}. Nonnegative
/// for every 0 <= zeta <= h up to rounding.
template <typename Scalar>
Scalar huber_second_order_gap(Scalar t, Scalar delta, Scalar zeta, Scalar h) {
  require(h > 0, "Huber threshold h must be positive");
  require(zeta >= 0 && zeta <= h, "second-order gap needs 0 <= zeta <= h");
  const Scalar lhs = huber_value(t + delta, h) - huber_value(t, h) - huber_grad(t, h) * delta;
  const bool active = std::abs(t) <= zeta && std::abs(delta) <= h - zeta;
  const Scalar rhs = active ? Scalar(0.5) * delta * delta : Scalar(0);
  return lhs - rhs;
}

struct TensorDiffNormCheck {
  bool lower_ok = false;  // ||v-x||^2 / 2 <= ||v^3 - x^3||_F^2
  bool upper_ok = false;  // ||v^3 - x^3||_F^2 <= 10 ||v-x||^2
  double ratio = 1.0;     // ||v^3 - x^3||_F^2 / ||v-x||^2, 1 at v == x
};

/// Two-sided comparison between ||v^{(x)3} - x^{(x)3}||_F^2 and ||v - x||^2 for
/// unit vectors.
inline TensorDiffNormCheck tensor_diff_norm_check(const Eigen::VectorXd& v, const Eigen::VectorXd& x) {
  require(v.size() == x.size(), "vectors must have equal length");
  require(std::abs(v.norm() - 1.0) <= 1e-10 && std::abs(x.norm() - 1.0) <= 1e-10,
          "tensor_diff_norm_check needs unit vectors");
  constexpr double slack = 1e-9;
  const double diff_sq = (v - x).squaredNorm();
  const double tensor_sq = (rank_one(v, 3) - rank_one(x, 3)).values().squaredNorm();
  TensorDiffNormCheck out;
  out.lower_ok = 0.5 * diff_sq <= tensor_sq + slack;
  out.upper_ok = tensor_sq <= 10.0 * diff_sq + slack;
  out.ratio = diff_sq == 0.0 ? 1.0 : tensor_sq / diff_sq;
  return out;
}

}  // namespace obliv
