#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tsuq/uncertainty.hpp"

namespace tsuq {

struct AlertDecision {
  std::string series_id;
  Date date{};
  double observed = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  bool is_alert = false;
};

/// Alert iff the observation lies strictly outside [lower, upper].
AlertDecision detect(double observed, const Interval& interval);

struct DetectionCounts {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

struct Evaluation {
  DetectionCounts counts;
  std::optional<double> precision;  // empty when no alerts were raised
  std::optional<double> recall;     // empty when no positive labels exist
};

Evaluation evaluate(const std::vector<AlertDecision>& decisions, const std::vector<bool>& labels);
Evaluation evaluate(const DetectionCounts& counts);

/// Trained components needed to score a stream.
struct ForecastModel {
  Seq2SeqModel encoder;
  PredictionNetwork network;
  NoiseEstimate noise;
};

struct StreamPoint {
  WindowSample window;  // transformed inputs, offset and external features
  double observed = 0.0;  // original scale
};

struct DetectionOptions {
  DropoutConfig dropout{};
  double alpha = 0.05;
  TransformMode mode = TransformMode::kLog;
};

/// infer -> inverse transform -> detect for every point, in input order.
std::vector<AlertDecision> run_detection(const std::vector<StreamPoint>& stream, const ForecastModel& model,
                                         const DetectionOptions& options);

void write_alerts_csv(const std::filesystem::path& path, const std::vector<AlertDecision>& decisions);
void write_evaluation_csv(const std::filesystem::path& path, const Evaluation& evaluation);

}  // namespace tsuq

namespace tsuq {

struct LabeledPoint {
  std::string series_id;
  Date date{};
  bool operator<(const LabeledPoint& o) const {
    return series_id != o.series_id ? series_id < o.series_id : date < o.date;
  }
};

/// CSV with header `series_id,date` listing the true anomalies.
std::vector<LabeledPoint> read_labels_csv(const std::filesystem::path& path);
void write_labels_csv(const std::filesystem::path& path, const std::vector<LabeledPoint>& labels);

}  // namespace tsuq
