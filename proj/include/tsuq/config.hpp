#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tsuq/pipeline.hpp"
#include "tsuq/seq2seq.hpp"
#include "tsuq/uncertainty.hpp"

namespace tsuq {

/// Parameters of the synthetic panel written by `synth`.
struct SynthConfig {
  std::size_t series = 8;
  std::size_t length = 1461;
  Date start = make_date(2014, 1, 1);
  double noise_sigma = 0.1;
  double holiday_lift = 0.4;
  double yearly_amplitude = 0.1;
  double trend_per_day = 2e-4;
  std::size_t spikes = 0;
  double spike_sigmas = 6.0;
  std::size_t shift_at = 0;  // 0 = no regime shift
  double shift_level = 0.0;
  double shift_weekly_scale = 1.0;
};

struct RunConfig {
  std::filesystem::path data;
  std::filesystem::path holidays;  // empty = built-in U.S. calendar
  std::filesystem::path model_dir = "model";
  std::filesystem::path labels;    // optional anomaly labels for `detect`
  std::size_t window = 28;
  std::size_t horizon = 7;
  std::vector<Eigen::Index> encoder_hidden{128, 32};
  std::vector<Eigen::Index> prednet_hidden{128, 64, 16};
  EmbeddingSource embedding = EmbeddingSource::kLastLayer;
  DropoutConfig dropout{};
  std::optional<Date> train_end;
  std::optional<Date> validation_end;
  double alpha = 0.05;
  TransformMode transform = TransformMode::kLog;
  std::uint64_t seed = 42;
  std::size_t pretrain_epochs = 30;
  std::size_t train_epochs = 60;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  double clip_norm = 5.0;
  bool holiday_feature = true;
  std::string scope = "test";  // which partition infer/calibrate/detect score: test | validation | all
  SynthConfig synth{};

  /// Applies one `key = value` assignment; unknown keys are rejected.
  void set(const std::string& key, const std::string& value);
  /// Range checks on every field; throws ParameterError.
  void validate() const;
  /// Canonical `key = value` listing, one per line.
  std::string to_text() const;

  std::filesystem::path bundle_path() const { return model_dir / "bundle.bin"; }
  TrainOptions pretrain_options() const;
  TrainOptions train_options() const;
};

/// Reads a flat `key = value` file with `#` comments.
std::vector<std::pair<std::string, std::string>> read_config_file(const std::filesystem::path& path);

RunConfig load_config(const std::optional<std::filesystem::path>& file,
                      const std::vector<std::pair<std::string, std::string>>& overrides);

}  // namespace tsuq
