#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "tsuq/nn/dropout.hpp"
#include "tsuq/nn/rng.hpp"
#include "tsuq/nn/types.hpp"

namespace tsuq::nn {

enum class Activation : std::uint8_t { kIdentity = 0, kTanh = 1 };

/// Fully connected layer: y = activation(W x + b), optionally times a dropout mask.
template <typename Scalar>
struct DenseLayer {
  Matrix<Scalar> weights;  // out x in
  Vector<Scalar> bias;     // out
  Activation activation = Activation::kIdentity;

  DenseLayer() = default;
  DenseLayer(Eigen::Index in, Eigen::Index out, Activation act)
      : weights(Matrix<Scalar>::Zero(out, in)), bias(Vector<Scalar>::Zero(out)), activation(act) {}

  Eigen::Index in_size() const { return weights.cols(); }
  Eigen::Index out_size() const { return weights.rows(); }

  void check_invariants() const {
    require_shape(bias.size() == weights.rows(), "dense bias length differs from output width");
    require_finite(weights, "dense weights");
    require_finite(bias, "dense bias");
  }

  ParameterViews<Scalar> parameters() { return {flat(weights), flat(bias)}; }
  ConstParameterViews<Scalar> parameters() const { return {flat(weights), flat(bias)}; }

  /// Glorot-uniform weights, zero bias.
  void initialize(SeededRng& rng) {
    const double limit = std::sqrt(6.0 / double(in_size() + out_size()));
    for (Eigen::Index i = 0; i < weights.size(); ++i)
      weights.data()[i] = Scalar((2.0 * rng.uniform() - 1.0) * limit);
    bias.setZero();
  }
};

template <typename Derived>
void apply_activation(Eigen::MatrixBase<Derived>& z, Activation act) {
  if (act == Activation::kTanh) z = tanh_via_exp(z.array()).matrix();
}

/// Batched forward: columns of `input` are samples. `masks` (if non-empty) has
/// one mask column per sample.
template <typename Scalar>
Matrix<Scalar> dense_forward_batch(const DenseLayer<Scalar>& layer, const Matrix<Scalar>& input,
                                   const Matrix<Scalar>* masks = nullptr,
                                   Matrix<Scalar>* pre_mask_out = nullptr) {
  require_shape(input.rows() == layer.in_size(),
                "dense input has " + std::to_string(input.rows()) + " rows, layer expects " +
                    std::to_string(layer.in_size()));
  Matrix<Scalar> out = layer.weights * input;
  out.colwise() += layer.bias;
  apply_activation(out, layer.activation);
  if (pre_mask_out) *pre_mask_out = out;
  if (masks && masks->size() > 0) {
    require_shape(masks->rows() == layer.out_size() && masks->cols() == input.cols(),
                  "dense mask shape mismatch");
    out.array() *= masks->array();
  }
  return out;
}

template <typename Scalar>
Vector<Scalar> dense_forward(const DenseLayer<Scalar>& layer, const Vector<Scalar>& input,
                             const std::optional<DropoutMask<Scalar>>& mask = std::nullopt) {
  require_shape(input.size() == layer.in_size(),
                "dense input length " + std::to_string(input.size()) + " != layer input width " +
                    std::to_string(layer.in_size()));
  require_finite(input, "dense input");
  Vector<Scalar> out = layer.weights * input + layer.bias;
  apply_activation(out, layer.activation);
  if (mask) {
    require_shape(mask->width() == layer.out_size(), "dense mask length != layer output width");
    out.array() *= mask->values.array();
  }
  return out;
}

/// Values retained from a batched forward pass for the backward sweep.
template <typename Scalar>
struct DenseCache {
  Matrix<Scalar> input;
  Matrix<Scalar> activated;  // before masking
  Matrix<Scalar> mask;       // empty when unmasked
};

template <typename Scalar>
Matrix<Scalar> dense_forward_cached(const DenseLayer<Scalar>& layer, const Matrix<Scalar>& input,
                                    const Matrix<Scalar>* mask, DenseCache<Scalar>& cache) {
  cache.input = input;
  Matrix<Scalar> out = dense_forward_batch(layer, input, mask, &cache.activated);
  if (mask && mask->size() > 0)
    cache.mask = *mask;
  else
    cache.mask.resize(0, 0);
  return out;
}

/// Accumulates parameter gradients into `grad` and returns d(loss)/d(input).
template <typename Scalar>
Matrix<Scalar> dense_backward(const DenseLayer<Scalar>& layer, const DenseCache<Scalar>& cache,
                              const Matrix<Scalar>& d_output, DenseLayer<Scalar>& grad) {
  Matrix<Scalar> dz = d_output;
  if (cache.mask.size() > 0) dz.array() *= cache.mask.array();
  if (layer.activation == Activation::kTanh)
    dz.array() *= (Scalar(1) - cache.activated.array().square());
  grad.weights.noalias() += dz * cache.input.transpose();
  grad.bias.noalias() += dz.rowwise().sum();
  return layer.weights.transpose() * dz;
}

}  // namespace tsuq::nn
