#include "tsuq/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <numbers>
#include <thread>

#include "tsuq/errors.hpp"

namespace tsuq {

void DropoutConfig::validate() const {
  nn::validate_dropout_probability(p);
  if (iterations < 1) throw ParameterError("MC dropout needs at least one iteration (B >= 1)");
  if (threads < 1) throw ParameterError("thread count must be positive");
}

namespace {

constexpr Eigen::Index kPassesPerChunk = 256;

/// Masks of passes [first, first + n) for one chunk, one column per pass.
void fill_pass_masks(const Seq2SeqModel& encoder, const PredictionNetwork& net, const DropoutConfig& cfg,
                     McScope scope, std::size_t first, Eigen::Index n, nn::StackMasks<double>& enc_masks,
                     nn::MlpMasks<double>& net_masks) {
  const bool perturb_encoder = scope == McScope::kEncoderAndPredictionNetwork;
  enc_masks.clear();
  if (perturb_encoder) {
    enc_masks.resize(encoder.encoder.layers.size());
    for (std::size_t l = 0; l < encoder.encoder.layers.size(); ++l) {
      const auto& layer = encoder.encoder.layers[l];
      if (l > 0) enc_masks[l].input.resize(layer.input_size(), n);
      enc_masks[l].recurrent.resize(layer.hidden_size(), n);
    }
  }
  net_masks.clear();
  for (std::size_t l = 0; l < net.mlp.hidden_count(); ++l)
    net_masks.emplace_back(net.mlp.layers[l].out_size(), n);

  for (Eigen::Index j = 0; j < n; ++j) {
    const nn::SeededRng pass(cfg.base_seed, first + static_cast<std::size_t>(j));
    if (perturb_encoder) {
      nn::SeededRng rng = pass.substream(0);
      for (auto& m : enc_masks) {
        if (m.input.size() > 0) {
          auto col = m.input.col(j);
          nn::fill_mask(col, cfg.p, rng);
        }
        auto col = m.recurrent.col(j);
        nn::fill_mask(col, cfg.p, rng);
      }
    }
    nn::SeededRng rng = pass.substream(1);
    for (auto& m : net_masks) {
      auto col = m.col(j);
      nn::fill_mask(col, cfg.p, rng);
    }
  }
}

void run_chunk(const Vectord& window, const Vectord& external, const Seq2SeqModel& encoder,
               const PredictionNetwork& net, const DropoutConfig& cfg, McScope scope, std::size_t first,
               Eigen::Index n, Vectord& out) {
  nn::StackMasks<double> enc_masks;
  nn::MlpMasks<double> net_masks;
  fill_pass_masks(encoder, net, cfg, scope, first, n, enc_masks, net_masks);

  Matrixd embeddings;
  if (scope == McScope::kEncoderAndPredictionNetwork) {
    embeddings = encode_batch(encoder, window.replicate(1, n), enc_masks);
  } else {
    const Matrixd e = encode_batch(encoder, window);
    embeddings = e.replicate(1, n);
  }
  const Matrixd z = make_features(embeddings, external.replicate(1, n));
  const Matrixd y = nn::mlp_forward(net.mlp, z, net_masks);
  out.segment(static_cast<Eigen::Index>(first), n) = y.row(0).transpose();
}

}  // namespace

Vectord mc_samples(const Vectord& window, const Vectord& external, const Seq2SeqModel& encoder,
                   const PredictionNetwork& net, const DropoutConfig& cfg, McScope scope) {
  cfg.validate();
  nn::require_shape(external.size() == net.external_width, "external feature width mismatch");
  nn::require_shape(window.size() == static_cast<Eigen::Index>(encoder.window), "window length mismatch");
  const auto total = static_cast<Eigen::Index>(cfg.iterations);
  Vectord out(total);
  if (cfg.p == 0.0) {
    out.setConstant(predict_point(encoder, net, window, external));
    return out;
  }
  const Eigen::Index chunks = (total + kPassesPerChunk - 1) / kPassesPerChunk;
  auto work = [&](Eigen::Index c) {
    const Eigen::Index first = c * kPassesPerChunk;
    run_chunk(window, external, encoder, net, cfg, scope, static_cast<std::size_t>(first),
              std::min(kPassesPerChunk, total - first), out);
  };
  const auto threads = std::min<Eigen::Index>(static_cast<Eigen::Index>(cfg.threads), chunks);
  if (threads <= 1) {
    for (Eigen::Index c = 0; c < chunks; ++c) work(c);
    return out;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
  {
    std::vector<std::jthread> pool;
    for (Eigen::Index t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        try {
          for (Eigen::Index c = t; c < chunks; c += threads) work(c);
        } catch (...) {
          errors[static_cast<std::size_t>(t)] = std::current_exception();
        }
      });
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

McResult summarize_samples(const Vectord& samples) {
  if (samples.size() == 0) throw ParameterError("no samples to summarize");
  const double pivot = samples[0];
  const double shift = (samples.array() - pivot).sum() / double(samples.size());
  McResult r;
  r.mean = pivot + shift;
  r.eta1 = std::sqrt((samples.array() - r.mean).square().sum() / double(samples.size()));
  return r;
}

McResult mc_dropout(const Vectord& window, const Vectord& external, const Seq2SeqModel& encoder,
                    const PredictionNetwork& net, const DropoutConfig& cfg, McScope scope) {
  return summarize_samples(mc_samples(window, external, encoder, net, cfg, scope));
}

NoiseEstimate estimate_inherent_noise(const Vectord& targets, const Vectord& predictions) {
  if (targets.size() == 0) throw ParameterError("inherent-noise estimate needs a nonempty validation set");
  nn::require_shape(targets.size() == predictions.size(), "validation targets and predictions differ in length");
  const double mse = (targets - predictions).squaredNorm() / double(targets.size());
  if (!std::isfinite(mse)) throw NumericError("non-finite validation residuals");
  return {std::sqrt(mse), static_cast<std::size_t>(targets.size())};
}

NoiseEstimate estimate_inherent_noise(const Seq2SeqModel& encoder, const PredictionNetwork& net,
                                      const std::vector<WindowSample>& validation) {
  if (validation.empty()) throw ParameterError("inherent-noise estimate needs a nonempty validation set");
  return estimate_inherent_noise(stack_targets(validation), predict_batch(encoder, net, validation));
}

double normal_quantile(double q) {
  if (!(q > 0.0 && q < 1.0)) throw ParameterError("normal quantile requires 0 < q < 1, got " + std::to_string(q));
  // Acklam's rational approximation followed by one Halley refinement step.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double low = 0.02425, high = 1.0 - low;
  double x;
  if (q < low) {
    const double r = std::sqrt(-2.0 * std::log(q));
    x = (((((c[0] * r + c[1]) * r + c[2]) * r + c[3]) * r + c[4]) * r + c[5]) /
        ((((d[0] * r + d[1]) * r + d[2]) * r + d[3]) * r + 1.0);
  } else if (q <= high) {
    const double r = q - 0.5, s = r * r;
    x = (((((a[0] * s + a[1]) * s + a[2]) * s + a[3]) * s + a[4]) * s + a[5]) * r /
        (((((b[0] * s + b[1]) * s + b[2]) * s + b[3]) * s + b[4]) * s + 1.0);
  } else {
    const double r = std::sqrt(-2.0 * std::log1p(-q));
    x = -(((((c[0] * r + c[1]) * r + c[2]) * r + c[3]) * r + c[4]) * r + c[5]) /
        ((((d[0] * r + d[1]) * r + d[2]) * r + d[3]) * r + 1.0);
  }
  if (q == 0.5) return 0.0;
  // Phi(x) - q, evaluated through erfc to keep tail accuracy.
  const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - q;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(x * x / 2.0);
  return x - u / (1.0 + x * u / 2.0);
}

PredictionResult combine_uncertainty(double y_hat, double eta1, double eta2, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("alpha must lie in (0, 1)");
  if (eta1 < 0.0 || eta2 < 0.0) throw ParameterError("uncertainty components must be nonnegative");
  PredictionResult r;
  r.y_hat = y_hat;
  r.eta1 = eta1;
  r.eta2 = eta2;
  r.eta = std::sqrt(eta1 * eta1 + eta2 * eta2);
  r.alpha = alpha;
  const double z = normal_quantile(1.0 - alpha / 2.0);
  r.lower = y_hat - z * r.eta;
  r.upper = y_hat + z * r.eta;
  return r;
}

PredictionResult infer(const Vectord& window, const Vectord& external, const Seq2SeqModel& encoder,
                       const PredictionNetwork& net, const DropoutConfig& cfg, const NoiseEstimate& noise,
                       double alpha, McScope scope) {
  const McResult mc = mc_dropout(window, external, encoder, net, cfg, scope);
  return combine_uncertainty(mc.mean, mc.eta1, noise.eta2, alpha);
}

OriginalScalePrediction to_original_scale(const PredictionResult& r, double offset, TransformMode mode) {
  return {inverse_transform(r.y_hat, offset, mode), inverse_transform(r.lower, offset, mode),
          inverse_transform(r.upper, offset, mode)};
}

double calibrate_coverage(std::span<const Interval> intervals, std::span<const double> actuals) {
  nn::require_shape(intervals.size() == actuals.size(), "coverage: interval and actual counts differ");
  nn::require_shape(!actuals.empty(), "coverage of an empty set");
  std::size_t inside = 0;
  for (std::size_t i = 0; i < actuals.size(); ++i)
    if (actuals[i] >= intervals[i].lower && actuals[i] <= intervals[i].upper) ++inside;
  return double(inside) / double(actuals.size());
}

std::vector<CoverageRow> with_average(std::vector<CoverageRow> rows) {
  CoverageRow avg{"Average", 0.0, 0.0, 0.0};
  for (const auto& r : rows) {
    avg.prednet += r.prednet;
    avg.enc_pred += r.enc_pred;
    avg.enc_pred_noise += r.enc_pred_noise;
  }
  if (!rows.empty()) {
    const double n = double(rows.size());
    avg.prednet /= n;
    avg.enc_pred /= n;
    avg.enc_pred_noise /= n;
  }
  rows.push_back(avg);
  return rows;
}

void write_coverage_csv(const std::filesystem::path& path, const std::vector<CoverageRow>& rows) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "series_id,prednet,enc_pred,enc_pred_noise\n";
  char buf[96];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f", r.prednet, r.enc_pred, r.enc_pred_noise);
    out << r.series_id << ',' << buf << '\n';
  }
}

void write_predictions_csv(const std::filesystem::path& path, const std::vector<PredictionRow>& rows) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "series_id,date,y_hat,eta1,eta2,eta,lower,upper\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g", r.y_hat, r.eta1, r.eta2, r.eta, r.lower,
                  r.upper);
    out << r.series_id << ',' << format_iso_date(r.date) << ',' << buf << '\n';
  }
}

}  // namespace tsuq
