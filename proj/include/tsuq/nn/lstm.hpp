#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tsuq/nn/dropout.hpp"
#include "tsuq/nn/rng.hpp"
#include "tsuq/nn/types.hpp"

namespace tsuq::nn {

/// LSTM cell parameters. The four gates are stacked row-wise in the order
/// input, forget, candidate, output: rows [0,H) belong to the input gate, etc.
template <typename Scalar>
struct LstmLayer {
  Matrix<Scalar> input_weights;      // 4H x in
  Matrix<Scalar> recurrent_weights;  // 4H x H
  Vector<Scalar> bias;               // 4H

  LstmLayer() = default;
  LstmLayer(Eigen::Index in, Eigen::Index hidden)
      : input_weights(Matrix<Scalar>::Zero(4 * hidden, in)),
        recurrent_weights(Matrix<Scalar>::Zero(4 * hidden, hidden)),
        bias(Vector<Scalar>::Zero(4 * hidden)) {}

  Eigen::Index hidden_size() const { return recurrent_weights.cols(); }
  Eigen::Index input_size() const { return input_weights.cols(); }

  void check_invariants() const {
    const Eigen::Index h = hidden_size();
    require_shape(h > 0, "LSTM hidden size must be positive");
    require_shape(recurrent_weights.rows() == 4 * h && input_weights.rows() == 4 * h &&
                      bias.size() == 4 * h,
                  "LSTM gate blocks are not 4 x hidden_size");
    require_finite(input_weights, "LSTM input weights");
    require_finite(recurrent_weights, "LSTM recurrent weights");
    require_finite(bias, "LSTM bias");
  }

  ParameterViews<Scalar> parameters() {
    return {flat(input_weights), flat(recurrent_weights), flat(bias)};
  }
  ConstParameterViews<Scalar> parameters() const {
    return {flat(input_weights), flat(recurrent_weights), flat(bias)};
  }

  /// Glorot-uniform input weights, uniform(+-1/sqrt(H)) recurrent weights,
  /// forget-gate bias 1.
  void initialize(SeededRng& rng) {
    const Eigen::Index h = hidden_size();
    const double in_limit = std::sqrt(6.0 / double(input_size() + h));
    const double rec_limit = 1.0 / std::sqrt(double(h));
    for (Eigen::Index i = 0; i < input_weights.size(); ++i)
      input_weights.data()[i] = Scalar((2.0 * rng.uniform() - 1.0) * in_limit);
    for (Eigen::Index i = 0; i < recurrent_weights.size(); ++i)
      recurrent_weights.data()[i] = Scalar((2.0 * rng.uniform() - 1.0) * rec_limit);
    bias.setZero();
    bias.segment(h, h).setOnes();
  }
};

template <typename Scalar>
struct LstmState {
  Matrix<Scalar> h;  // H x batch
  Matrix<Scalar> c;  // H x batch
};

/// Variational dropout masks for one layer over one sequence pass. Either
/// matrix may be empty (no dropout on that path).
template <typename Scalar>
struct LstmMasks {
  Matrix<Scalar> input;      // in x batch
  Matrix<Scalar> recurrent;  // H x batch
};

/// Per-timestep values kept for backpropagation through time.
template <typename Scalar>
struct LstmStepCache {
  Matrix<Scalar> x_masked;
  Matrix<Scalar> h_prev_masked;
  Matrix<Scalar> gates;  // activated gates, 4H x batch
  Matrix<Scalar> c_prev;
  Matrix<Scalar> c_tanh;
  const Matrix<Scalar>* input_mask = nullptr;
  const Matrix<Scalar>* recurrent_mask = nullptr;
};

template <typename Scalar>
struct LstmSequenceCache {
  std::vector<LstmStepCache<Scalar>> steps;
};

namespace detail {

template <typename Scalar>
Matrix<Scalar> masked(const Matrix<Scalar>& x, const Matrix<Scalar>* mask, const char* what) {
  if (!mask || mask->size() == 0) return x;
  require_shape(mask->rows() == x.rows() && mask->cols() == x.cols(),
                std::string("LSTM ") + what + " mask shape mismatch");
  return (x.array() * mask->array()).matrix();
}

template <typename Scalar>
void activate_gates(Matrix<Scalar>& z, Eigen::Index h) {
  auto sig = [](auto block) { block = (Scalar(1) / (Scalar(1) + (-block.array()).exp())).matrix(); };
  sig(z.topRows(2 * h));
  z.middleRows(2 * h, h) = tanh_via_exp(z.middleRows(2 * h, h).array()).matrix();
  sig(z.bottomRows(h));
}

}  // namespace detail

/// One batched LSTM step. Masks multiply x_t and h_prev before the gate
/// products; the caller passes the same mask objects at every timestep.
template <typename Scalar>
LstmState<Scalar> lstm_step_batch(const LstmLayer<Scalar>& layer, const Matrix<Scalar>& x,
                                  const LstmState<Scalar>& prev, const Matrix<Scalar>* input_mask,
                                  const Matrix<Scalar>* recurrent_mask,
                                  LstmStepCache<Scalar>* cache = nullptr) {
  const Eigen::Index h = layer.hidden_size();
  require_shape(x.rows() == layer.input_size(),
                "LSTM input width " + std::to_string(x.rows()) + " != " +
                    std::to_string(layer.input_size()));
  require_shape(prev.h.rows() == h && prev.c.rows() == h && prev.h.cols() == x.cols() &&
                    prev.c.cols() == x.cols(),
                "LSTM state shape mismatch");
  Matrix<Scalar> xm = detail::masked(x, input_mask, "input");
  Matrix<Scalar> hm = detail::masked(prev.h, recurrent_mask, "recurrent");
  Matrix<Scalar> z = layer.recurrent_weights * hm;
  if (layer.input_size() == 1)
    z.noalias() += layer.input_weights.col(0) * xm.row(0);
  else
    z.noalias() += layer.input_weights * xm;
  z.colwise() += layer.bias;
  detail::activate_gates(z, h);

  LstmState<Scalar> next;
  next.c = (z.middleRows(h, h).array() * prev.c.array() +
            z.topRows(h).array() * z.middleRows(2 * h, h).array())
               .matrix();
  Matrix<Scalar> c_tanh = tanh_via_exp(next.c.array()).matrix();
  next.h = (z.bottomRows(h).array() * c_tanh.array()).matrix();
  if (cache) {
    cache->x_masked = std::move(xm);
    cache->h_prev_masked = std::move(hm);
    cache->gates = std::move(z);
    cache->c_prev = prev.c;
    cache->c_tanh = std::move(c_tanh);
    cache->input_mask = input_mask;
    cache->recurrent_mask = recurrent_mask;
  }
  return next;
}

/// Single-sample LSTM step returning (h, c).
template <typename Scalar>
std::pair<Vector<Scalar>, Vector<Scalar>> lstm_step(
    const LstmLayer<Scalar>& layer, const Vector<Scalar>& x_t, const Vector<Scalar>& h_prev,
    const Vector<Scalar>& c_prev, const std::optional<DropoutMask<Scalar>>& input_mask = std::nullopt,
    const std::optional<DropoutMask<Scalar>>& recurrent_mask = std::nullopt) {
  LstmState<Scalar> prev{h_prev, c_prev};
  Matrix<Scalar> in_mask, rec_mask;
  if (input_mask) in_mask = input_mask->values;
  if (recurrent_mask) rec_mask = recurrent_mask->values;
  auto next = lstm_step_batch<Scalar>(layer, x_t, prev, input_mask ? &in_mask : nullptr,
                                      recurrent_mask ? &rec_mask : nullptr);
  return {Vector<Scalar>(next.h.col(0)), Vector<Scalar>(next.c.col(0))};
}

/// Runs one layer over a whole sequence. Returns the hidden output at every
/// step; `state` is updated in place to the final state.
template <typename Scalar>
std::vector<Matrix<Scalar>> lstm_sequence_forward(const LstmLayer<Scalar>& layer,
                                                  const std::vector<Matrix<Scalar>>& inputs,
                                                  LstmState<Scalar>& state,
                                                  const LstmMasks<Scalar>& masks,
                                                  LstmSequenceCache<Scalar>* cache = nullptr) {
  std::vector<Matrix<Scalar>> outputs;
  outputs.reserve(inputs.size());
  if (cache) cache->steps.assign(inputs.size(), {});
  const Matrix<Scalar>* in_mask = masks.input.size() > 0 ? &masks.input : nullptr;
  const Matrix<Scalar>* rec_mask = masks.recurrent.size() > 0 ? &masks.recurrent : nullptr;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    state = lstm_step_batch(layer, inputs[t], state, in_mask, rec_mask,
                            cache ? &cache->steps[t] : nullptr);
    outputs.push_back(state.h);
  }
  return outputs;
}

/// Gradients flowing out of a layer's backward sweep.
template <typename Scalar>
struct LstmBackwardResult {
  std::vector<Matrix<Scalar>> d_inputs;  // per step
  LstmState<Scalar> d_initial;           // w.r.t. the initial (h, c)
};

/// Backpropagation through time for one layer. `d_outputs[t]` is the loss
/// gradient w.r.t. h_t coming from above; `d_final` the gradient w.r.t. the
/// final state (either member may be empty, meaning zero).
template <typename Scalar>
LstmBackwardResult<Scalar> lstm_sequence_backward(const LstmLayer<Scalar>& layer,
                                                  const LstmSequenceCache<Scalar>& cache,
                                                  const std::vector<Matrix<Scalar>>& d_outputs,
                                                  const LstmState<Scalar>& d_final,
                                                  LstmLayer<Scalar>& grad) {
  const Eigen::Index h = layer.hidden_size();
  const std::size_t steps = cache.steps.size();
  require_shape(steps > 0, "LSTM backward over an empty sequence");
  const Eigen::Index batch = cache.steps[0].gates.cols();
  Matrix<Scalar> dh_next =
      d_final.h.size() > 0 ? d_final.h : Matrix<Scalar>::Zero(h, batch).eval();
  Matrix<Scalar> dc_next =
      d_final.c.size() > 0 ? d_final.c : Matrix<Scalar>::Zero(h, batch).eval();

  LstmBackwardResult<Scalar> result;
  result.d_inputs.resize(steps);
  Matrix<Scalar> dz(4 * h, batch);
  for (std::size_t k = steps; k-- > 0;) {
    const auto& s = cache.steps[k];
    Matrix<Scalar> dh = dh_next;
    if (k < d_outputs.size() && d_outputs[k].size() > 0) dh += d_outputs[k];
    const auto i = s.gates.topRows(h).array();
    const auto f = s.gates.middleRows(h, h).array();
    const auto g = s.gates.middleRows(2 * h, h).array();
    const auto o = s.gates.bottomRows(h).array();
    const auto ct = s.c_tanh.array();

    Matrix<Scalar> dc = (dc_next.array() + dh.array() * o * (Scalar(1) - ct.square())).matrix();
    dz.topRows(h) = (dc.array() * g * i * (Scalar(1) - i)).matrix();
    dz.middleRows(h, h) = (dc.array() * s.c_prev.array() * f * (Scalar(1) - f)).matrix();
    dz.middleRows(2 * h, h) = (dc.array() * i * (Scalar(1) - g.square())).matrix();
    dz.bottomRows(h) = (dh.array() * ct * o * (Scalar(1) - o)).matrix();

    grad.input_weights.noalias() += dz * s.x_masked.transpose();
    grad.recurrent_weights.noalias() += dz * s.h_prev_masked.transpose();
    grad.bias.noalias() += dz.rowwise().sum();

    Matrix<Scalar> dx = layer.input_weights.transpose() * dz;
    if (s.input_mask) dx.array() *= s.input_mask->array();
    result.d_inputs[k] = std::move(dx);
    dh_next = layer.recurrent_weights.transpose() * dz;
    if (s.recurrent_mask) dh_next.array() *= s.recurrent_mask->array();
    dc_next = (dc.array() * f).matrix();
  }
  result.d_initial.h = std::move(dh_next);
  result.d_initial.c = std::move(dc_next);
  return result;
}

}  // namespace tsuq::nn
