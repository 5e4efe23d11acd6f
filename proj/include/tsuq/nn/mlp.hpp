#pragma once

#include <vector>

#include "tsuq/nn/dense.hpp"

namespace tsuq::nn {

/// Stack of dense layers. Dropout masks, when given, apply to the output of
/// every layer except the last.
template <typename Scalar>
struct Mlp {
  std::vector<DenseLayer<Scalar>> layers;

  Mlp() = default;
  /// widths = {in, hidden..., out}; hidden layers use `hidden_act`, the last is identity.
  Mlp(const std::vector<Eigen::Index>& widths, Activation hidden_act) {
    require_shape(widths.size() >= 2, "MLP needs at least input and output widths");
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
      const bool last = l + 2 == widths.size();
      layers.emplace_back(widths[l], widths[l + 1], last ? Activation::kIdentity : hidden_act);
    }
  }

  Eigen::Index in_size() const { return layers.front().in_size(); }
  Eigen::Index out_size() const { return layers.back().out_size(); }
  std::size_t hidden_count() const { return layers.size() - 1; }
  std::vector<Eigen::Index> hidden_widths() const {
    std::vector<Eigen::Index> w;
    for (std::size_t l = 0; l + 1 < layers.size(); ++l) w.push_back(layers[l].out_size());
    return w;
  }

  void check_invariants() const {
    require_shape(!layers.empty(), "MLP has no layers");
    for (std::size_t l = 0; l < layers.size(); ++l) {
      layers[l].check_invariants();
      if (l > 0)
        require_shape(layers[l].in_size() == layers[l - 1].out_size(), "MLP layer widths do not chain");
    }
  }

  void initialize(SeededRng& rng) {
    for (auto& layer : layers) layer.initialize(rng);
  }

  ParameterViews<Scalar> parameters() {
    ParameterViews<Scalar> views;
    for (auto& layer : layers)
      for (auto v : layer.parameters()) views.push_back(v);
    return views;
  }
  ConstParameterViews<Scalar> parameters() const {
    ConstParameterViews<Scalar> views;
    for (const auto& layer : layers)
      for (auto v : layer.parameters()) views.push_back(v);
    return views;
  }

  /// Zero-valued model with the same shape, used as a gradient accumulator.
  Mlp zeros_like() const {
    Mlp z = *this;
    for (auto& v : z.parameters()) std::fill(v.begin(), v.end(), Scalar(0));
    return z;
  }
};

template <typename Scalar>
using MlpMasks = std::vector<Matrix<Scalar>>;  // one per hidden layer, or empty

template <typename Scalar>
struct MlpCache {
  std::vector<DenseCache<Scalar>> layers;
};

template <typename Scalar>
MlpMasks<Scalar> sample_mlp_masks(const Mlp<Scalar>& mlp, Eigen::Index batch, double p,
                                  SeededRng& rng) {
  MlpMasks<Scalar> masks;
  for (std::size_t l = 0; l < mlp.hidden_count(); ++l)
    masks.push_back(sample_mask_batch<Scalar>(mlp.layers[l].out_size(), batch, p, rng));
  return masks;
}

template <typename Scalar>
Matrix<Scalar> mlp_forward(const Mlp<Scalar>& mlp, const Matrix<Scalar>& input,
                           const MlpMasks<Scalar>& masks = {}, MlpCache<Scalar>* cache = nullptr) {
  require_shape(masks.empty() || masks.size() == mlp.hidden_count(),
                "MLP mask count differs from hidden layer count");
  if (cache) cache->layers.assign(mlp.layers.size(), {});
  Matrix<Scalar> x = input;
  for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
    const Matrix<Scalar>* mask = l < masks.size() ? &masks[l] : nullptr;
    x = cache ? dense_forward_cached(mlp.layers[l], x, mask, cache->layers[l])
              : dense_forward_batch(mlp.layers[l], x, mask);
  }
  return x;
}

/// Accumulates into `grad`; returns d(loss)/d(input).
template <typename Scalar>
Matrix<Scalar> mlp_backward(const Mlp<Scalar>& mlp, const MlpCache<Scalar>& cache,
                            const Matrix<Scalar>& d_output, Mlp<Scalar>& grad) {
  Matrix<Scalar> d = d_output;
  for (std::size_t l = mlp.layers.size(); l-- > 0;)
    d = dense_backward(mlp.layers[l], cache.layers[l], d, grad.layers[l]);
  return d;
}

}  // namespace tsuq::nn
