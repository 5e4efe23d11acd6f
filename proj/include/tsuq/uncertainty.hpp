#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tsuq/forecast.hpp"

namespace tsuq {

struct DropoutConfig {
  double p = 0.05;
  std::size_t iterations = 200;  // B
  std::uint64_t base_seed = 0;
  std::size_t threads = 1;

  void validate() const;
};

/// Which parts of the network are perturbed during the stochastic passes.
enum class McScope : std::uint8_t {
  kPredictionNetworkOnly,  // encoder deterministic
  kEncoderAndPredictionNetwork,
};

struct McResult {
  double mean = 0.0;
  double eta1 = 0.0;
};

/// Outputs of the B stochastic passes. Pass b draws every mask from the
/// stream (base_seed, b), so results do not depend on scheduling.
Vectord mc_samples(const Vectord& window, const Vectord& external, const Seq2SeqModel& encoder,
                   const PredictionNetwork& net, const DropoutConfig& cfg,
                   McScope scope = McScope::kEncoderAndPredictionNetwork);

/// Sample mean and standard deviation (divisor B) of the stochastic passes.
McResult mc_dropout(const Vectord& window, const Vectord& external, const Seq2SeqModel& encoder,
                    const PredictionNetwork& net, const DropoutConfig& cfg,
                    McScope scope = McScope::kEncoderAndPredictionNetwork);

/// Mean and divisor-n standard deviation, computed around the first sample so
/// identical samples give an exact mean and zero spread.
McResult summarize_samples(const Vectord& samples);

struct NoiseEstimate {
  double eta2 = 0.0;
  std::size_t validation_size = 0;
};

/// Root mean squared residual of deterministic forecasts on held-out windows.
NoiseEstimate estimate_inherent_noise(const Seq2SeqModel& encoder, const PredictionNetwork& net,
                                      const std::vector<WindowSample>& validation);
NoiseEstimate estimate_inherent_noise(const Vectord& targets, const Vectord& predictions);

/// Transformed-scale forecast with its uncertainty components.
struct PredictionResult {
  double y_hat = 0.0;
  double eta1 = 0.0;
  double eta2 = 0.0;
  double eta = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double alpha = 0.05;
};

PredictionResult combine_uncertainty(double y_hat, double eta1, double eta2, double alpha);

PredictionResult infer(const Vectord& window, const Vectord& external, const Seq2SeqModel& encoder,
                       const PredictionNetwork& net, const DropoutConfig& cfg, const NoiseEstimate& noise,
                       double alpha, McScope scope = McScope::kEncoderAndPredictionNetwork);

/// Inverse standard normal CDF.
double normal_quantile(double q);

/// Forecast and interval mapped back to the original scale.
struct OriginalScalePrediction {
  double y_hat = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

OriginalScalePrediction to_original_scale(const PredictionResult& r, double offset, TransformMode mode);

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
};

/// Fraction of actuals inside their inclusive interval.
double calibrate_coverage(std::span<const Interval> intervals, std::span<const double> actuals);

struct CoverageRow {
  std::string series_id;
  double prednet = 0.0;
  double enc_pred = 0.0;
  double enc_pred_noise = 0.0;
};

/// Per-series rows followed by an "Average" row.
std::vector<CoverageRow> with_average(std::vector<CoverageRow> rows);
void write_coverage_csv(const std::filesystem::path& path, const std::vector<CoverageRow>& rows);

struct PredictionRow {
  std::string series_id;
  Date date;
  double y_hat = 0.0;  // original scale
  double eta1 = 0.0, eta2 = 0.0, eta = 0.0;
  double lower = 0.0, upper = 0.0;  // original scale
};

void write_predictions_csv(const std::filesystem::path& path, const std::vector<PredictionRow>& rows);

}  // namespace tsuq
