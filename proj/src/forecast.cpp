#include "tsuq/forecast.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "tsuq/errors.hpp"
#include "tsuq/nn/loss.hpp"

namespace tsuq {

PredictionNetwork::PredictionNetwork(Eigen::Index embedding, Eigen::Index external,
                                     const std::vector<Eigen::Index>& hidden)
    : embedding_width(embedding), external_width(external) {
  std::vector<Eigen::Index> widths{embedding + external};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(1);
  mlp = nn::Mlp<double>(widths, nn::Activation::kTanh);
}

void PredictionNetwork::check_invariants() const {
  mlp.check_invariants();
  nn::require_shape(mlp.in_size() == input_width(), "prediction network input width mismatch");
  nn::require_shape(mlp.out_size() == 1, "prediction network must have one output");
}

Matrixd make_features(const Matrixd& embeddings, const Matrixd& external) {
  nn::require_shape(embeddings.cols() == external.cols() || external.rows() == 0,
                    "embedding and external feature batch sizes differ");
  Matrixd z(embeddings.rows() + external.rows(), embeddings.cols());
  z.topRows(embeddings.rows()) = embeddings;
  if (external.rows() > 0) z.bottomRows(external.rows()) = external;
  return z;
}

Matrixd stack_external(const std::vector<WindowSample>& windows) {
  if (windows.empty()) return {};
  Matrixd m(windows.front().external.size(), static_cast<Eigen::Index>(windows.size()));
  for (std::size_t j = 0; j < windows.size(); ++j) {
    nn::require_shape(windows[j].external.size() == m.rows(), "windows have inconsistent external features");
    m.col(static_cast<Eigen::Index>(j)) = windows[j].external;
  }
  return m;
}

Vectord stack_targets(const std::vector<WindowSample>& windows) {
  Vectord y(static_cast<Eigen::Index>(windows.size()));
  for (std::size_t j = 0; j < windows.size(); ++j) {
    if (windows[j].target.size() < 1) throw DataError("window without a target");
    y[static_cast<Eigen::Index>(j)] = windows[j].target[0];
  }
  return y;
}

double prediction_loss_and_gradient(const PredictionNetwork& net, const Matrixd& features, const Matrixd& targets,
                                    const nn::MlpMasks<double>& masks, nn::Mlp<double>& gradient) {
  nn::MlpCache<double> cache;
  const Matrixd pred = nn::mlp_forward(net.mlp, features, masks, &cache);
  Matrixd d_pred;
  const double loss = nn::mse_loss(pred, targets, d_pred);
  nn::mlp_backward(net.mlp, cache, d_pred, gradient);
  return loss;
}

PredictionTraining train_prediction_network(const Seq2SeqModel& encoder, const std::vector<WindowSample>& dataset,
                                            const std::vector<Eigen::Index>& hidden, const TrainOptions& options) {
  if (dataset.empty()) throw DataError("prediction training dataset is empty");
  if (options.batch_size == 0) throw ParameterError("batch size must be positive");
  nn::validate_dropout_probability(options.dropout);
  const Matrixd external = stack_external(dataset);
  const Matrixd features = make_features(encode_batch(encoder, stack_inputs(dataset)), external);
  const Vectord targets = stack_targets(dataset);

  PredictionTraining out{PredictionNetwork(encoder.embedding_width(), external.rows(), hidden), {}};
  auto& net = out.network;
  nn::SeededRng init_rng(options.seed, 200);
  net.mlp.initialize(init_rng);
  nn::SeededRng order_rng(options.seed, 201);
  nn::SeededRng mask_rng(options.seed, 202);
  nn::AdamState<double> adam(options.adam);

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), order_rng.engine());
    double total = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += options.batch_size) {
      const std::size_t end = std::min(order.size(), begin + options.batch_size);
      const auto n = static_cast<Eigen::Index>(end - begin);
      Matrixd xb(features.rows(), n), yb(1, n);
      for (Eigen::Index j = 0; j < n; ++j) {
        const auto src = static_cast<Eigen::Index>(order[begin + j]);
        xb.col(j) = features.col(src);
        yb(0, j) = targets[src];
      }
      const auto masks = nn::sample_mlp_masks(net.mlp, n, options.dropout, mask_rng);
      auto grad = net.mlp.zeros_like();
      double loss = 0.0;
      try {
        loss = prediction_loss_and_gradient(net, xb, yb, masks, grad);
      } catch (const NumericError& e) {
        throw TrainingError("prediction network diverged in epoch " + std::to_string(epoch + 1) + ": " + e.what());
      }
      auto grads = grad.parameters();
      nn::clip_global_norm<double>(grads, options.clip_norm);
      adam.step(net.mlp.parameters(), nn::as_const(grads));
      total += loss * double(n);
    }
    const double epoch_loss = total / double(order.size());
    if (!std::isfinite(epoch_loss))
      throw TrainingError("prediction network loss became non-finite in epoch " + std::to_string(epoch + 1));
    out.history.epoch_loss.push_back(epoch_loss);
  }
  return out;
}

double predict_point(const Seq2SeqModel& encoder, const PredictionNetwork& net, const Vectord& window,
                     const Vectord& external) {
  nn::require_shape(external.size() == net.external_width,
                    "external feature width " + std::to_string(external.size()) + " != " +
                        std::to_string(net.external_width));
  nn::require_finite(window, "input window");
  const Matrixd z = make_features(encode_batch(encoder, window), external);
  return nn::mlp_forward(net.mlp, z)(0, 0);
}

Vectord predict_batch(const Seq2SeqModel& encoder, const PredictionNetwork& net,
                      const std::vector<WindowSample>& windows) {
  if (windows.empty()) return {};
  const Matrixd z = make_features(encode_batch(encoder, stack_inputs(windows)), stack_external(windows));
  nn::require_shape(z.rows() == net.input_width(), "feature width does not match the prediction network");
  return nn::mlp_forward(net.mlp, z).row(0).transpose();
}

double smape(const Vectord& actual, const Vectord& predicted) {
  nn::require_shape(actual.size() == predicted.size(), "SMAPE: actual and predicted lengths differ");
  nn::require_shape(actual.size() >= 1, "SMAPE of an empty series");
  double sum = 0.0;
  for (Eigen::Index t = 0; t < actual.size(); ++t) {
    const double denom = std::abs(actual[t]) + std::abs(predicted[t]);
    if (denom > 0.0) sum += 2.0 * std::abs(actual[t] - predicted[t]) / denom;
  }
  return 100.0 * sum / double(actual.size());
}

Vectord last_day_baseline(const std::vector<double>& series) {
  if (series.size() < 2) throw DataError("last-day baseline needs at least two observations");
  Vectord out(static_cast<Eigen::Index>(series.size() - 1));
  for (std::size_t t = 0; t + 1 < series.size(); ++t) out[static_cast<Eigen::Index>(t)] = series[t];
  return out;
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricRow>& rows) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "series_id,model,smape\n";
  char buf[64];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.6f", r.smape);
    out << r.series_id << ',' << r.model << ',' << buf << '\n';
  }
}

}  // namespace tsuq
