#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tsuq/forecast.hpp"
#include "tsuq/uncertainty.hpp"

namespace tsuq {

inline constexpr std::uint32_t kBundleFormatVersion = 1;

struct TrainingMetadata {
  std::uint64_t pretrain_epochs = 0;
  double pretrain_final_loss = 0.0;
  std::uint64_t train_epochs = 0;
  double train_final_loss = 0.0;
};

/// Everything a run persists: the encoder-decoder, the prediction network, the
/// inherent-noise estimate and the effective configuration text.
struct ModelBundle {
  std::uint32_t format_version = kBundleFormatVersion;
  std::optional<Seq2SeqModel> seq2seq;
  std::optional<PredictionNetwork> network;
  std::optional<NoiseEstimate> noise;
  std::string config_snapshot;
  TrainingMetadata metadata;

  void check_invariants() const;
};

/// Little-endian, length-prefixed binary encoding (see docs/bundle_format.md).
std::vector<std::uint8_t> serialize_bundle(const ModelBundle& bundle);
ModelBundle deserialize_bundle(const std::vector<std::uint8_t>& bytes);

/// Writes to a temporary sibling and renames it into place.
void save_bundle(const std::filesystem::path& path, const ModelBundle& bundle);
ModelBundle load_bundle(const std::filesystem::path& path);

}  // namespace tsuq
