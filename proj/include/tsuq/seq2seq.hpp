#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tsuq/nn/adam.hpp"
#include "tsuq/nn/dense.hpp"
#include "tsuq/nn/lstm_stack.hpp"
#include "tsuq/pipeline.hpp"

namespace tsuq {

enum class EmbeddingSource : std::uint8_t { kLastLayer = 0, kAllLayers = 1 };

std::string to_string(EmbeddingSource source);
EmbeddingSource parse_embedding_source(const std::string& text);

/// Two-stack LSTM encoder-decoder. The decoder starts from the encoder's final
/// per-layer states and reads the last F inputs as guidance while emitting the
/// F values that follow the window.
struct Seq2SeqModel {
  nn::LstmStack<double> encoder;
  nn::LstmStack<double> decoder;
  nn::DenseLayer<double> projection;  // decoder top hidden -> 1, identity
  std::size_t window = 28;
  std::size_t horizon = 7;
  EmbeddingSource embedding_source = EmbeddingSource::kLastLayer;

  Seq2SeqModel() = default;
  Seq2SeqModel(std::size_t window, std::size_t horizon, const std::vector<Eigen::Index>& hidden,
               EmbeddingSource source = EmbeddingSource::kLastLayer);

  Eigen::Index embedding_width() const;
  void check_invariants() const;
  void initialize(nn::SeededRng& rng);
  nn::ParameterViews<double> parameters();
  nn::ConstParameterViews<double> parameters() const;
  Seq2SeqModel zeros_like() const;
};

struct Embedding {
  Vectord values;
  EmbeddingSource source = EmbeddingSource::kLastLayer;
};

struct Seq2SeqMasks {
  nn::StackMasks<double> encoder;
  nn::StackMasks<double> decoder;
};

/// Decoder outputs (F x N) for a batch of windows (T x N).
Matrixd seq2seq_forward(const Seq2SeqModel& model, const Matrixd& windows, const Seq2SeqMasks& masks = {});

struct LossAndGradient {
  double loss = 0.0;
  Seq2SeqModel gradient;
};

/// Reconstruction MSE of the F future values and its exact gradient (BPTT).
LossAndGradient seq2seq_loss_and_gradient(const Seq2SeqModel& model, const Matrixd& windows,
                                          const Matrixd& targets, const Seq2SeqMasks& masks = {});

struct TrainOptions {
  std::size_t epochs = 30;
  std::size_t batch_size = 64;
  double dropout = 0.05;
  nn::AdamOptions adam{};
  double clip_norm = 5.0;
  std::uint64_t seed = 1;
  bool mask_raw_input = false;
};

struct TrainingHistory {
  std::vector<double> epoch_loss;
  double final_loss() const { return epoch_loss.empty() ? 0.0 : epoch_loss.back(); }
};

struct Seq2SeqTraining {
  Seq2SeqModel model;
  TrainingHistory history;
};

/// Fits the encoder-decoder on pretraining windows (T inputs, F targets).
Seq2SeqTraining pretrain(const std::vector<WindowSample>& dataset, std::size_t window, std::size_t horizon,
                         const std::vector<Eigen::Index>& hidden, const TrainOptions& options,
                         EmbeddingSource source = EmbeddingSource::kLastLayer);

/// Continues training an existing model.
TrainingHistory train_seq2seq(Seq2SeqModel& model, const std::vector<WindowSample>& dataset,
                              const TrainOptions& options);

/// Final encoder cell state(s) for a batch of windows (T x N); masks optional.
Matrixd encode_batch(const Seq2SeqModel& model, const Matrixd& windows,
                     const nn::StackMasks<double>& masks = {});

Embedding encode(const Seq2SeqModel& model, const Vectord& window);
Embedding encode_with_dropout(const Seq2SeqModel& model, const Vectord& window, double p,
                              nn::SeededRng& rng);

/// Inputs of a window list as a T x N matrix.
Matrixd stack_inputs(const std::vector<WindowSample>& windows);

struct EmbeddingRow {
  std::string series_id;
  Date window_end;
  int dow = 0;
  Vectord values;
};

std::vector<EmbeddingRow> export_embeddings(const Seq2SeqModel& model,
                                            const std::vector<WindowSample>& dataset);

struct PcaResult {
  Matrixd projection;  // rows x 2
  Vectord eigenvalues;  // descending
  Matrixd components;  // width x 2
  bool degenerate = false;
};

/// Mean-centred projection onto the top two principal components.
PcaResult pca_2d(const Matrixd& rows);

void write_embeddings_csv(const std::filesystem::path& path, const std::vector<EmbeddingRow>& rows,
                          const PcaResult* pca = nullptr);

}  // namespace tsuq
