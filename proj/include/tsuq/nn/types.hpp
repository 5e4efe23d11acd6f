#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "tsuq/errors.hpp"

namespace tsuq::nn {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrixd = Matrix<double>;
using Vectord = Vector<double>;

/// Mutable flat views over every parameter block of a model, in a fixed order.
template <typename Scalar>
using ParameterViews = std::vector<std::span<Scalar>>;
template <typename Scalar>
using ConstParameterViews = std::vector<std::span<const Scalar>>;

template <typename Derived>
std::span<typename Derived::Scalar> flat(Eigen::PlainObjectBase<Derived>& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}
template <typename Derived>
std::span<const typename Derived::Scalar> flat(const Eigen::PlainObjectBase<Derived>& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

inline void require_shape(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

template <typename Derived>
void require_finite(const Eigen::DenseBase<Derived>& x, const char* what) {
  if (!x.allFinite()) throw NumericError(std::string("non-finite values in ") + what);
}

/// tanh written through exp, which Eigen vectorizes for double.
template <typename Derived>
auto tanh_via_exp(const Eigen::ArrayBase<Derived>& x) {
  using S = typename Derived::Scalar;
  return S(2) / (S(1) + (S(-2) * x).exp()) - S(1);
}

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  return Scalar(1) / (Scalar(1) + std::exp(-x));
}

}  // namespace tsuq::nn
