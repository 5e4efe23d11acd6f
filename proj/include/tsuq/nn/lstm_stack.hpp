#pragma once

#include <vector>

#include "tsuq/nn/lstm.hpp"

namespace tsuq::nn {

/// Layers of LSTM cells; layer l+1 reads the hidden outputs of layer l.
template <typename Scalar>
struct LstmStack {
  std::vector<LstmLayer<Scalar>> layers;

  LstmStack() = default;
  LstmStack(Eigen::Index input_width, const std::vector<Eigen::Index>& hidden) {
    Eigen::Index in = input_width;
    for (Eigen::Index h : hidden) {
      require_shape(h > 0, "LSTM hidden size must be positive");
      layers.emplace_back(in, h);
      in = h;
    }
  }

  std::vector<Eigen::Index> hidden_sizes() const {
    std::vector<Eigen::Index> h;
    for (const auto& l : layers) h.push_back(l.hidden_size());
    return h;
  }
  Eigen::Index input_size() const { return layers.front().input_size(); }
  Eigen::Index output_size() const { return layers.back().hidden_size(); }

  void check_invariants() const {
    require_shape(!layers.empty(), "LSTM stack has no layers");
    for (std::size_t l = 0; l < layers.size(); ++l) {
      layers[l].check_invariants();
      if (l > 0)
        require_shape(layers[l].input_size() == layers[l - 1].hidden_size(),
                      "LSTM stack layer widths do not chain");
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

  LstmStack zeros_like() const {
    LstmStack z = *this;
    for (auto& v : z.parameters()) std::fill(v.begin(), v.end(), Scalar(0));
    return z;
  }

  std::vector<LstmState<Scalar>> zero_states(Eigen::Index batch) const {
    std::vector<LstmState<Scalar>> s;
    for (const auto& l : layers)
      s.push_back({Matrix<Scalar>::Zero(l.hidden_size(), batch), Matrix<Scalar>::Zero(l.hidden_size(), batch)});
    return s;
  }
};

/// Per-layer variational masks for one pass; empty vector means no dropout.
template <typename Scalar>
using StackMasks = std::vector<LstmMasks<Scalar>>;

/// Samples one recurrent mask per layer and one input mask per layer whose
/// input is a hidden layer. The raw series entering layer 0 is only masked
/// when `mask_raw_input` is set.
template <typename Scalar>
StackMasks<Scalar> sample_stack_masks(const LstmStack<Scalar>& stack, Eigen::Index batch, double p,
                                      SeededRng& rng, bool mask_raw_input = false) {
  StackMasks<Scalar> masks(stack.layers.size());
  if (p == 0.0) return masks;
  for (std::size_t l = 0; l < stack.layers.size(); ++l) {
    if (l > 0 || mask_raw_input)
      masks[l].input = sample_mask_batch<Scalar>(stack.layers[l].input_size(), batch, p, rng);
    masks[l].recurrent = sample_mask_batch<Scalar>(stack.layers[l].hidden_size(), batch, p, rng);
  }
  return masks;
}

template <typename Scalar>
struct StackCache {
  std::vector<LstmSequenceCache<Scalar>> layers;
};

/// Runs every layer over the sequence. `states` holds the initial state per
/// layer on entry and the final state per layer on exit. Returns the top
/// layer's hidden output at each step.
template <typename Scalar>
std::vector<Matrix<Scalar>> stack_forward(const LstmStack<Scalar>& stack,
                                          const std::vector<Matrix<Scalar>>& inputs,
                                          std::vector<LstmState<Scalar>>& states,
                                          const StackMasks<Scalar>& masks = {},
                                          StackCache<Scalar>* cache = nullptr) {
  require_shape(states.size() == stack.layers.size(), "LSTM stack state count mismatch");
  require_shape(masks.empty() || masks.size() == stack.layers.size(), "LSTM stack mask count mismatch");
  static const LstmMasks<Scalar> kNoMasks{};
  if (cache) cache->layers.assign(stack.layers.size(), {});
  std::vector<Matrix<Scalar>> seq = inputs;
  for (std::size_t l = 0; l < stack.layers.size(); ++l) {
    seq = lstm_sequence_forward(stack.layers[l], seq, states[l], masks.empty() ? kNoMasks : masks[l],
                                cache ? &cache->layers[l] : nullptr);
  }
  return seq;
}

template <typename Scalar>
struct StackBackwardResult {
  std::vector<Matrix<Scalar>> d_inputs;
  std::vector<LstmState<Scalar>> d_initial;
};

/// BPTT through the stack. `d_top[t]` is the gradient w.r.t. the top layer's
/// output at step t; `d_final[l]` w.r.t. layer l's final state (may be empty).
template <typename Scalar>
StackBackwardResult<Scalar> stack_backward(const LstmStack<Scalar>& stack, const StackCache<Scalar>& cache,
                                           const std::vector<Matrix<Scalar>>& d_top,
                                           const std::vector<LstmState<Scalar>>& d_final,
                                           LstmStack<Scalar>& grad) {
  StackBackwardResult<Scalar> result;
  result.d_initial.resize(stack.layers.size());
  std::vector<Matrix<Scalar>> d_out = d_top;
  static const LstmState<Scalar> kZero{};
  for (std::size_t l = stack.layers.size(); l-- > 0;) {
    auto r = lstm_sequence_backward(stack.layers[l], cache.layers[l], d_out,
                                    l < d_final.size() ? d_final[l] : kZero, grad.layers[l]);
    result.d_initial[l] = std::move(r.d_initial);
    d_out = std::move(r.d_inputs);
  }
  result.d_inputs = std::move(d_out);
  return result;
}

}  // namespace tsuq::nn
