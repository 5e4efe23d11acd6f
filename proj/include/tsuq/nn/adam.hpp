#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "tsuq/nn/types.hpp"

namespace tsuq::nn {

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adaptive-moment optimizer state; accumulators mirror the parameter blocks
/// passed to the first `step`.
template <typename Scalar>
class AdamState {
 public:
  explicit AdamState(AdamOptions options = {}) : options_(options) {}

  const AdamOptions& options() const { return options_; }
  std::uint64_t step_count() const { return step_; }

  void step(const ParameterViews<Scalar>& params, const ConstParameterViews<Scalar>& grads) {
    require_shape(params.size() == grads.size(), "optimizer: parameter/gradient block count differs");
    if (first_moment_.empty()) {
      for (const auto& p : params) {
        first_moment_.emplace_back(p.size(), Scalar(0));
        second_moment_.emplace_back(p.size(), Scalar(0));
      }
    }
    require_shape(first_moment_.size() == params.size(), "optimizer: parameter block count changed");
    for (std::size_t b = 0; b < params.size(); ++b)
      require_shape(params[b].size() == grads[b].size() && params[b].size() == first_moment_[b].size(),
                    "optimizer: block " + std::to_string(b) + " shape mismatch");

    ++step_;
    const double t = double(step_);
    const double correction1 = 1.0 - std::pow(options_.beta1, t);
    const double correction2 = 1.0 - std::pow(options_.beta2, t);
    const Scalar b1 = Scalar(options_.beta1), b2 = Scalar(options_.beta2);
    for (std::size_t b = 0; b < params.size(); ++b) {
      auto& m = first_moment_[b];
      auto& v = second_moment_[b];
      for (std::size_t i = 0; i < params[b].size(); ++i) {
        const Scalar g = grads[b][i];
        m[i] = b1 * m[i] + (Scalar(1) - b1) * g;
        v[i] = b2 * v[i] + (Scalar(1) - b2) * g * g;
        const Scalar m_hat = m[i] / Scalar(correction1);
        const Scalar v_hat = v[i] / Scalar(correction2);
        params[b][i] -= Scalar(options_.learning_rate) * m_hat /
                        (std::sqrt(v_hat) + Scalar(options_.epsilon));
      }
    }
  }

 private:
  AdamOptions options_;
  std::uint64_t step_ = 0;
  std::vector<std::vector<Scalar>> first_moment_;
  std::vector<std::vector<Scalar>> second_moment_;
};

template <typename Scalar>
Scalar global_norm(const ConstParameterViews<Scalar>& grads) {
  Scalar sum = 0;
  for (const auto& block : grads)
    for (Scalar g : block) sum += g * g;
  return std::sqrt(sum);
}

/// Rescales all blocks jointly so their global L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
template <typename Scalar>
Scalar clip_global_norm(const ParameterViews<Scalar>& grads, Scalar max_norm) {
  ConstParameterViews<Scalar> view(grads.begin(), grads.end());
  const Scalar norm = global_norm(view);
  if (norm > max_norm && norm > Scalar(0)) {
    const Scalar scale = max_norm / norm;
    for (const auto& block : grads)
      for (Scalar& g : block) g *= scale;
  }
  return norm;
}

template <typename Scalar>
ConstParameterViews<Scalar> as_const(const ParameterViews<Scalar>& views) {
  return ConstParameterViews<Scalar>(views.begin(), views.end());
}

}  // namespace tsuq::nn
