#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tsuq/nn/mlp.hpp"
#include "tsuq/seq2seq.hpp"

namespace tsuq {

/// MLP from (embedding ++ external features) to the next transformed value.
/// Hidden layers use tanh; the output layer is identity with width 1.
struct PredictionNetwork {
  nn::Mlp<double> mlp;
  Eigen::Index embedding_width = 0;
  Eigen::Index external_width = 0;

  PredictionNetwork() = default;
  PredictionNetwork(Eigen::Index embedding, Eigen::Index external, const std::vector<Eigen::Index>& hidden);

  Eigen::Index input_width() const { return embedding_width + external_width; }
  void check_invariants() const;
  bool empty() const { return mlp.layers.empty(); }
};

/// Concatenates embeddings (E x N) with external features (X x N).
Matrixd make_features(const Matrixd& embeddings, const Matrixd& external);
Matrixd stack_external(const std::vector<WindowSample>& windows);
Vectord stack_targets(const std::vector<WindowSample>& windows);

struct PredictionTraining {
  PredictionNetwork network;
  TrainingHistory history;
};

/// Fits the prediction network on frozen, dropout-free encoder embeddings.
PredictionTraining train_prediction_network(const Seq2SeqModel& encoder, const std::vector<WindowSample>& dataset,
                                            const std::vector<Eigen::Index>& hidden, const TrainOptions& options);

/// MSE loss and gradient of the prediction network for a feature batch.
double prediction_loss_and_gradient(const PredictionNetwork& net, const Matrixd& features, const Matrixd& targets,
                                    const nn::MlpMasks<double>& masks, nn::Mlp<double>& gradient);

/// Deterministic forecast h(g(window) ++ external) on the transformed scale.
double predict_point(const Seq2SeqModel& encoder, const PredictionNetwork& net, const Vectord& window,
                     const Vectord& external);

/// Deterministic forecasts for many windows at once.
Vectord predict_batch(const Seq2SeqModel& encoder, const PredictionNetwork& net,
                      const std::vector<WindowSample>& windows);

/// Symmetric MAPE in percent: 100 * mean(2|y - f| / (|y| + |f|)); 0/0 terms count as 0.
double smape(const Vectord& actual, const Vectord& predicted);

/// Forecast for day t+1 is the observation at day t; returns series.size()-1 values.
Vectord last_day_baseline(const std::vector<double>& series);

struct MetricRow {
  std::string series_id;
  std::string model;
  double smape = 0.0;
};

void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricRow>& rows);

}  // namespace tsuq
