#include "tsuq/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>

#include "tsuq/bundle.hpp"
#include "tsuq/config.hpp"
#include "tsuq/detect.hpp"
#include "tsuq/errors.hpp"
#include "tsuq/workflow.hpp"

namespace tsuq::cli {

namespace fs = std::filesystem;

namespace {

/// Runs `writer` against a temporary sibling of `path`, then renames it.
void commit(const fs::path& path, const std::function<void(const fs::path&)>& writer) {
  const fs::path tmp = path.string() + ".tmp";
  writer(tmp);
  fs::rename(tmp, path);
}

struct Context {
  RunConfig cfg;
  fs::path out_dir;
  std::ostream& log;
};

HolidayCalendar load_calendar(const RunConfig& cfg) {
  return cfg.holidays.empty() ? HolidayCalendar::us_default() : HolidayCalendar::load(cfg.holidays);
}

std::vector<TimeSeries> load_series(const RunConfig& cfg) {
  if (cfg.data.empty()) throw ParameterError("no data file configured (set `data` or pass --data)");
  if (!fs::exists(cfg.data)) throw DataError("data file not found: " + cfg.data.string());
  auto series = ingest_csv(cfg.data);
  if (series.empty()) throw DataError("data file " + cfg.data.string() + " contains no series");
  return series;
}

std::optional<SplitSpec> split_spec(const RunConfig& cfg) {
  if (!cfg.train_end) return std::nullopt;
  return SplitSpec{*cfg.train_end, *cfg.validation_end};
}

std::vector<SeriesWindows> windows_for(const RunConfig& cfg, std::size_t horizon, WindowPurpose purpose,
                                       const HolidayCalendar& calendar) {
  WindowOptions opt;
  opt.window = cfg.window;
  opt.horizon = horizon;
  opt.purpose = purpose;
  opt.mode = cfg.transform;
  opt.holiday_flag = cfg.holiday_feature;
  return prepare_windows(load_series(cfg), opt, calendar, split_spec(cfg));
}

const std::vector<WindowSample>& scoped(const RunConfig& cfg, const SeriesWindows& sw,
                                        std::vector<WindowSample>& scratch) {
  if (cfg.scope == "test") return sw.windows.test;
  if (cfg.scope == "validation") return sw.windows.validation;
  scratch = sw.windows.train;
  scratch.insert(scratch.end(), sw.windows.validation.begin(), sw.windows.validation.end());
  scratch.insert(scratch.end(), sw.windows.test.begin(), sw.windows.test.end());
  return scratch;
}

ModelBundle load_existing_bundle(const RunConfig& cfg) {
  const fs::path path = cfg.bundle_path();
  if (!fs::exists(path)) throw DataError("model bundle not found: " + path.string() + " (run `pretrain` first)");
  return load_bundle(path);
}

ForecastModel require_full_model(const RunConfig& cfg, const ModelBundle& bundle) {
  if (!bundle.seq2seq) throw ParameterError("bundle has no encoder; run `pretrain` first");
  if (!bundle.network || !bundle.noise) throw ParameterError("bundle has no prediction network; run `train` first");
  if (bundle.seq2seq->window != cfg.window)
    throw ParameterError("config window " + std::to_string(cfg.window) + " differs from the bundle's window " +
                         std::to_string(bundle.seq2seq->window));
  return {*bundle.seq2seq, *bundle.network, *bundle.noise};
}

DropoutConfig dropout_for(const RunConfig& cfg) {
  DropoutConfig d = cfg.dropout;
  d.base_seed = cfg.seed;
  return d;
}

void cmd_pretrain(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto calendar = load_calendar(cfg);
  const auto panel = windows_for(cfg, cfg.horizon, WindowPurpose::kPretraining, calendar);
  const auto train = pooled_train(panel);
  if (train.empty()) throw DataError("no pretraining windows fall inside the training period");
  ctx.log << "pretraining on " << train.size() << " windows\n";
  auto result = pretrain(train, cfg.window, cfg.horizon, cfg.encoder_hidden, cfg.pretrain_options(), cfg.embedding);

  ModelBundle bundle;
  bundle.seq2seq = std::move(result.model);
  bundle.config_snapshot = cfg.to_text();
  bundle.metadata.pretrain_epochs = result.history.epoch_loss.size();
  bundle.metadata.pretrain_final_loss = result.history.final_loss();
  save_bundle(cfg.bundle_path(), bundle);
  commit(ctx.out_dir / "pretrain_history.csv", [&](const fs::path& p) {
    std::ofstream out(p);
    out << "epoch,loss\n";
    char buf[64];
    for (std::size_t e = 0; e < result.history.epoch_loss.size(); ++e) {
      std::snprintf(buf, sizeof buf, "%zu,%.17g\n", e + 1, result.history.epoch_loss[e]);
      out << buf;
    }
  });
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", result.history.final_loss());
  ctx.log << "final reconstruction loss " << buf << "\nbundle written to " << cfg.bundle_path().string() << '\n';
}

void cmd_train(Context& ctx) {
  const auto& cfg = ctx.cfg;
  ModelBundle bundle = load_existing_bundle(cfg);
  if (!bundle.seq2seq) throw ParameterError("bundle has no encoder; run `pretrain` first");
  if (bundle.seq2seq->window != cfg.window)
    throw ParameterError("config window " + std::to_string(cfg.window) + " differs from the bundle's window " +
                         std::to_string(bundle.seq2seq->window));
  if (bundle.seq2seq->embedding_source != cfg.embedding)
    throw ParameterError("config embedding source differs from the bundle's");
  const auto calendar = load_calendar(cfg);
  const auto panel = windows_for(cfg, 1, WindowPurpose::kPrediction, calendar);
  const auto train = pooled_train(panel);
  const auto validation = pooled_validation(panel);
  if (train.empty()) throw DataError("no prediction windows fall inside the training period");
  if (validation.empty()) throw DataError("no prediction windows fall inside the validation period");

  ctx.log << "training prediction network on " << train.size() << " windows\n";
  auto result = train_prediction_network(*bundle.seq2seq, train, cfg.prednet_hidden, cfg.train_options());
  const NoiseEstimate noise = estimate_inherent_noise(*bundle.seq2seq, result.network, validation);
  bundle.network = std::move(result.network);
  bundle.noise = noise;
  bundle.config_snapshot = cfg.to_text();
  bundle.metadata.train_epochs = result.history.epoch_loss.size();
  bundle.metadata.train_final_loss = result.history.final_loss();
  save_bundle(cfg.bundle_path(), bundle);
  char buf[128];
  std::snprintf(buf, sizeof buf, "eta2 = %.17g over %zu validation windows\n", noise.eta2, noise.validation_size);
  ctx.log << buf;
}

void cmd_infer(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto bundle = load_existing_bundle(cfg);
  const auto model = require_full_model(cfg, bundle);
  const auto calendar = load_calendar(cfg);
  const auto panel = windows_for(cfg, 1, WindowPurpose::kPrediction, calendar);
  const DropoutConfig dropout = dropout_for(cfg);

  std::vector<PredictionRow> rows;
  std::vector<MetricRow> metrics;
  double model_sum = 0.0, baseline_sum = 0.0;
  std::size_t scored = 0;
  for (const auto& sw : panel) {
    std::vector<WindowSample> scratch;
    const auto& windows = scoped(cfg, sw, scratch);
    if (windows.empty()) continue;
    Vectord actual(static_cast<Eigen::Index>(windows.size())), forecast(actual.size()), last_day(actual.size());
    for (std::size_t i = 0; i < windows.size(); ++i) {
      const auto& w = windows[i];
      const auto r = infer(w.inputs, w.external, model.encoder, model.network, dropout, model.noise, cfg.alpha);
      const auto o = to_original_scale(r, w.offset, cfg.transform);
      rows.push_back({w.series_id, w.first_target_date(), o.y_hat, r.eta1, r.eta2, r.eta, o.lower, o.upper});
      const auto k = static_cast<Eigen::Index>(i);
      actual[k] = w.raw_target[0];
      forecast[k] = o.y_hat;
      last_day[k] = inverse_transform(w.inputs[w.inputs.size() - 1], w.offset, cfg.transform);
    }
    const double s_model = smape(actual, forecast), s_base = smape(actual, last_day);
    metrics.push_back({sw.series.series_id, "last_day", s_base});
    metrics.push_back({sw.series.series_id, "enc_pred", s_model});
    model_sum += s_model;
    baseline_sum += s_base;
    ++scored;
  }
  if (scored == 0) throw DataError("no windows in scope '" + cfg.scope + "'");
  metrics.push_back({"Average", "last_day", baseline_sum / double(scored)});
  metrics.push_back({"Average", "enc_pred", model_sum / double(scored)});
  commit(ctx.out_dir / "predictions.csv", [&](const fs::path& p) { write_predictions_csv(p, rows); });
  commit(ctx.out_dir / "metrics.csv", [&](const fs::path& p) { write_metrics_csv(p, metrics); });
  ctx.log << rows.size() << " predictions written to " << (ctx.out_dir / "predictions.csv").string() << '\n';
}

void cmd_calibrate(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto bundle = load_existing_bundle(cfg);
  const auto model = require_full_model(cfg, bundle);
  const auto calendar = load_calendar(cfg);
  const auto panel = windows_for(cfg, 1, WindowPurpose::kPrediction, calendar);
  const DropoutConfig dropout = dropout_for(cfg);

  std::vector<CoverageRow> rows;
  for (const auto& sw : panel) {
    std::vector<WindowSample> scratch;
    const auto& windows = scoped(cfg, sw, scratch);
    if (windows.empty()) continue;
    std::vector<Interval> prednet, enc_pred, full;
    std::vector<double> actual;
    for (const auto& w : windows) {
      const auto net_only =
          mc_dropout(w.inputs, w.external, model.encoder, model.network, dropout, McScope::kPredictionNetworkOnly);
      const auto both = mc_dropout(w.inputs, w.external, model.encoder, model.network, dropout);
      auto interval = [&](const McResult& mc, double eta2) {
        const auto o = to_original_scale(combine_uncertainty(mc.mean, mc.eta1, eta2, cfg.alpha), w.offset,
                                         cfg.transform);
        return Interval{o.lower, o.upper};
      };
      prednet.push_back(interval(net_only, 0.0));
      enc_pred.push_back(interval(both, 0.0));
      full.push_back(interval(both, model.noise.eta2));
      actual.push_back(w.raw_target[0]);
    }
    rows.push_back({sw.series.series_id, calibrate_coverage(prednet, actual), calibrate_coverage(enc_pred, actual),
                    calibrate_coverage(full, actual)});
  }
  if (rows.empty()) throw DataError("no windows in scope '" + cfg.scope + "'");
  rows = with_average(std::move(rows));
  commit(ctx.out_dir / "coverage.csv", [&](const fs::path& p) { write_coverage_csv(p, rows); });
  char buf[160];
  std::snprintf(buf, sizeof buf, "average coverage: PredNet %.4f, Enc+Pred %.4f, Enc+Pred+Noise %.4f\n",
                rows.back().prednet, rows.back().enc_pred, rows.back().enc_pred_noise);
  ctx.log << buf;
}

void cmd_detect(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto bundle = load_existing_bundle(cfg);
  const auto model = require_full_model(cfg, bundle);
  const auto calendar = load_calendar(cfg);
  const auto panel = windows_for(cfg, 1, WindowPurpose::kPrediction, calendar);

  std::vector<StreamPoint> stream;
  for (const auto& sw : panel) {
    std::vector<WindowSample> scratch;
    for (const auto& w : scoped(cfg, sw, scratch)) stream.push_back({w, w.raw_target[0]});
  }
  DetectionOptions options;
  options.dropout = dropout_for(cfg);
  options.alpha = cfg.alpha;
  options.mode = cfg.transform;
  const auto decisions = run_detection(stream, model, options);
  commit(ctx.out_dir / "alerts.csv", [&](const fs::path& p) { write_alerts_csv(p, decisions); });
  std::size_t alerts = 0;
  for (const auto& d : decisions) alerts += d.is_alert ? 1 : 0;
  ctx.log << alerts << " alerts over " << decisions.size() << " points\n";

  if (!cfg.labels.empty()) {
    const auto labelled = read_labels_csv(cfg.labels);
    const std::set<LabeledPoint> positives(labelled.begin(), labelled.end());
    std::vector<bool> labels;
    for (const auto& d : decisions) labels.push_back(positives.count({d.series_id, d.date}) > 0);
    const auto evaluation = evaluate(decisions, labels);
    commit(ctx.out_dir / "evaluation.csv", [&](const fs::path& p) { write_evaluation_csv(p, evaluation); });
    ctx.log << "tp " << evaluation.counts.tp << " fp " << evaluation.counts.fp << " fn " << evaluation.counts.fn
            << '\n';
  }
}

void cmd_embed(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto bundle = load_existing_bundle(cfg);
  if (!bundle.seq2seq) throw ParameterError("bundle has no encoder; run `pretrain` first");
  if (bundle.seq2seq->window != cfg.window)
    throw ParameterError("config window differs from the bundle's window");
  const auto calendar = load_calendar(cfg);
  const auto panel = windows_for(cfg, 1, WindowPurpose::kPrediction, calendar);
  const auto train = pooled_train(panel);
  const auto rows = export_embeddings(*bundle.seq2seq, train);
  Matrixd values(static_cast<Eigen::Index>(rows.size()), bundle.seq2seq->embedding_width());
  for (std::size_t i = 0; i < rows.size(); ++i) values.row(static_cast<Eigen::Index>(i)) = rows[i].values.transpose();
  const PcaResult pca = pca_2d(values);
  if (pca.degenerate) ctx.log << "warning: embeddings have zero variance; PCA columns are zero\n";
  commit(ctx.out_dir / "embeddings.csv", [&](const fs::path& p) { write_embeddings_csv(p, rows, &pca); });
  ctx.log << rows.size() << " embeddings written\n";
}

void cmd_synth(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto calendar = load_calendar(cfg);
  const auto panel = synthetic_panel(cfg.synth, calendar, cfg.seed);
  std::vector<TimeSeries> series;
  std::vector<LabeledPoint> spikes;
  for (const auto& s : panel) {
    series.push_back(s.series);
    for (auto t : s.spike_indices) spikes.push_back({s.series.series_id, s.series.date_at(t)});
  }
  commit(ctx.out_dir / "series.csv", [&](const fs::path& p) { write_series_csv(p, series); });
  commit(ctx.out_dir / "spikes.csv", [&](const fs::path& p) { write_labels_csv(p, spikes); });
  if (cfg.holidays.empty())
    commit(ctx.out_dir / "holidays.txt", [&](const fs::path& p) { calendar.save(p); });
  ctx.log << series.size() << " series written to " << (ctx.out_dir / "series.csv").string() << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Time-series forecasting with MC-dropout prediction intervals", "tsuq"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_file, out_dir = "out", data, model_dir;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> sets;
  app.add_option("--config", config_file, "flat key = value configuration file");
  app.add_option("--seed", seed, "base random seed (overrides the config)");
  app.add_option("--out-dir", out_dir, "directory receiving output CSVs")->capture_default_str();
  app.add_option("--data", data, "input CSV series_id,date,value (overrides `data`)");
  app.add_option("--model-dir", model_dir, "directory holding bundle.bin (overrides `model_dir`)");
  app.add_option("--set", sets, "override a config entry: --set key=value (repeatable)");

  using Command = void (*)(Context&);
  const std::vector<std::tuple<std::string, std::string, Command>> commands{
      {"pretrain", "fit the LSTM encoder-decoder", cmd_pretrain},
      {"train", "fit the prediction network and estimate the inherent noise", cmd_train},
      {"infer", "forecasts with prediction intervals", cmd_infer},
      {"calibrate", "empirical coverage of the three uncertainty variants", cmd_calibrate},
      {"detect", "interval-based anomaly alerts", cmd_detect},
      {"embed", "export encoder embeddings with a 2-D PCA projection", cmd_embed},
      {"synth", "generate a synthetic daily panel", cmd_synth},
  };
  for (const auto& [name, help, fn] : commands) app.add_subcommand(name, help);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsage;
  }

  try {
    std::vector<std::pair<std::string, std::string>> overrides;
    if (!data.empty()) overrides.emplace_back("data", data);
    if (!model_dir.empty()) overrides.emplace_back("model_dir", model_dir);
    if (seed) overrides.emplace_back("seed", std::to_string(*seed));
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ParameterError("--set expects key=value, got '" + s + "'");
      overrides.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    std::optional<fs::path> file;
    if (!config_file.empty()) {
      if (!fs::exists(config_file)) throw DataError("config file not found: " + config_file);
      file = config_file;
    }
    Context ctx{load_config(file, overrides), out_dir, out};
    fs::create_directories(ctx.out_dir);
    commit(ctx.out_dir / "effective_config.txt", [&](const fs::path& p) {
      std::ofstream o(p);
      o << ctx.cfg.to_text();
    });
    for (const auto& [name, help, fn] : commands)
      if (app.got_subcommand(name)) fn(ctx);
    return kSuccess;
  } catch (const ParameterError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kNumericError;
  } catch (const TrainingError& e) {
    err << "training error: " << e.what() << '\n';
    return kNumericError;
  } catch (const Error& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  }
}

}  // namespace tsuq::cli
