#pragma once

#include <string>

#include "tsuq/nn/types.hpp"

namespace tsuq::nn {

/// Mean squared error over every entry of `predicted` (rows = outputs,
/// columns = samples). Writes d(loss)/d(predicted) into `gradient`.
template <typename Scalar>
Scalar mse_loss(const Matrix<Scalar>& predicted, const Matrix<Scalar>& target, Matrix<Scalar>& gradient) {
  require_shape(predicted.rows() == target.rows() && predicted.cols() == target.cols(),
                "loss: prediction and target shapes differ");
  require_shape(predicted.size() > 0, "loss: empty batch");
  const Matrix<Scalar> diff = predicted - target;
  for (Eigen::Index j = 0; j < diff.cols(); ++j)
    if (!diff.col(j).allFinite())
      throw NumericError("non-finite loss at sample index " + std::to_string(j));
  const Scalar n = Scalar(diff.size());
  gradient = (Scalar(2) / n) * diff;
  return diff.squaredNorm() / n;
}

}  // namespace tsuq::nn
