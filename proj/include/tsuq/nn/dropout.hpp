#pragma once

#include <string>

#include "tsuq/nn/rng.hpp"
#include "tsuq/nn/types.hpp"

namespace tsuq::nn {

/// Inverted-dropout mask: entries are 0 or 1/keep_probability, so E[entry] = 1.
template <typename Scalar>
struct DropoutMask {
  Vector<Scalar> values;
  double keep_probability = 1.0;

  Eigen::Index width() const { return values.size(); }
};

inline void validate_dropout_probability(double p) {
  if (!(p >= 0.0 && p < 1.0))
    throw ParameterError("dropout probability must lie in [0, 1), got " + std::to_string(p));
}

/// Fills `out` with i.i.d. inverted-dropout entries drawn in column-major order.
template <typename Derived>
void fill_mask(Eigen::DenseBase<Derived>& out, double p, SeededRng& rng) {
  using Scalar = typename Derived::Scalar;
  validate_dropout_probability(p);
  if (p == 0.0) {
    out.setOnes();
    return;
  }
  const Scalar kept = Scalar(1.0 / (1.0 - p));
  for (Eigen::Index j = 0; j < out.cols(); ++j)
    for (Eigen::Index i = 0; i < out.rows(); ++i) out(i, j) = rng.uniform() < p ? Scalar(0) : kept;
}

template <typename Scalar = double>
DropoutMask<Scalar> sample_mask(Eigen::Index width, double p, SeededRng& rng) {
  validate_dropout_probability(p);
  if (width < 0) throw ShapeError("mask width must be nonnegative");
  DropoutMask<Scalar> mask;
  mask.values.resize(width);
  mask.keep_probability = 1.0 - p;
  fill_mask(mask.values, p, rng);
  return mask;
}

/// One mask column per batch sample.
template <typename Scalar = double>
Matrix<Scalar> sample_mask_batch(Eigen::Index width, Eigen::Index batch, double p, SeededRng& rng) {
  Matrix<Scalar> masks(width, batch);
  fill_mask(masks, p, rng);
  return masks;
}

}  // namespace tsuq::nn
