// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "support/gradcheck.hpp"
#include "support/reference.hpp"
#include "tsuq/bundle.hpp"
#include "tsuq/cli.hpp"
#include "tsuq/config.hpp"
#include "tsuq/detect.hpp"
#include "tsuq/workflow.hpp"

using namespace tsuq;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

// ---------------------------------------------------------------------------
// Shared experiment: default-size networks trained on the 8-series panel.

struct Experiment {
  RunConfig cfg;
  HolidayCalendar calendar = HolidayCalendar::us_default();
  std::vector<SeriesWindows> prediction;  // horizon-1 windows per series
  ForecastModel model;
  double pretrain_seconds = 0.0, train_seconds = 0.0;
};

std::vector<TimeSeries> series_of(const std::vector<SyntheticSeries>& panel) {
  std::vector<TimeSeries> out;
  for (const auto& s : panel) out.push_back(s.series);
  return out;
}

std::vector<SeriesWindows> prediction_windows(const RunConfig& cfg, const std::vector<TimeSeries>& series,
                                              const HolidayCalendar& calendar, bool holiday_flag = true) {
  return prepare_windows(series, {.window = cfg.window, .horizon = 1, .mode = cfg.transform, .holiday_flag = holiday_flag},
                         calendar);
}

ForecastModel fit(const RunConfig& cfg, const std::vector<TimeSeries>& series, const HolidayCalendar& calendar,
                  double* pretrain_seconds = nullptr, double* train_seconds = nullptr) {
  auto t0 = Clock::now();
  const auto pre = prepare_windows(series, {.window = cfg.window, .horizon = cfg.horizon,
                                            .purpose = WindowPurpose::kPretraining, .mode = cfg.transform},
                                   calendar);
  const auto encoder = pretrain(pooled_train(pre), cfg.window, cfg.horizon, cfg.encoder_hidden, cfg.pretrain_options()).model;
  if (pretrain_seconds) *pretrain_seconds = seconds_since(t0);
  t0 = Clock::now();
  const auto windows = prediction_windows(cfg, series, calendar);
  auto net = train_prediction_network(encoder, pooled_train(windows), cfg.prednet_hidden, cfg.train_options()).network;
  const auto noise = estimate_inherent_noise(encoder, net, pooled_validation(windows));
  if (train_seconds) *train_seconds = seconds_since(t0);
  return {encoder, std::move(net), noise};
}

Experiment& experiment() {
  static Experiment e = [] {
    Experiment x;
    const auto series = series_of(synthetic_panel(x.cfg.synth, x.calendar, x.cfg.seed));
    x.model = fit(x.cfg, series, x.calendar, &x.pretrain_seconds, &x.train_seconds);
    x.prediction = prediction_windows(x.cfg, series, x.calendar);
    std::cout << fmt("  (shared model: pretrain %.0f s, prediction network + noise %.0f s, eta2 = %.4f)\n",
                     x.pretrain_seconds, x.train_seconds, x.model.noise.eta2)
              << std::flush;
    return x;
  }();
  return e;
}

DropoutConfig dropout_of(const RunConfig& cfg) {
  DropoutConfig d = cfg.dropout;
  d.base_seed = cfg.seed;
  return d;
}

/// Per-window results of the three uncertainty variants on one series.
struct ScoredSeries {
  std::string id;
  std::vector<PredictionResult> full;  // Enc+Pred+Noise, from infer()
  std::vector<McResult> prednet;       // prediction-network-only MC
  std::vector<double> offsets, actual, last_day;
  std::vector<Date> dates;

  double coverage(int variant, double alpha) const {
    std::vector<Interval> iv;
    for (std::size_t i = 0; i < full.size(); ++i) {
      PredictionResult r;
      if (variant == 0) r = combine_uncertainty(prednet[i].mean, prednet[i].eta1, 0.0, alpha);
      if (variant == 1) r = combine_uncertainty(full[i].y_hat, full[i].eta1, 0.0, alpha);
      if (variant == 2) r = full[i];
      const auto o = to_original_scale(r, offsets[i], TransformMode::kLog);
      iv.push_back({o.lower, o.upper});
    }
    return calibrate_coverage(iv, actual);
  }
};

std::vector<ScoredSeries> score_test(const Experiment& e, const std::vector<SeriesWindows>& panel) {
  std::vector<ScoredSeries> out;
  const DropoutConfig d = dropout_of(e.cfg);
  for (const auto& sw : panel) {
    ScoredSeries s;
    s.id = sw.series.series_id;
    for (const auto& w : sw.windows.test) {
      s.full.push_back(infer(w.inputs, w.external, e.model.encoder, e.model.network, d, e.model.noise, e.cfg.alpha));
      s.prednet.push_back(
          mc_dropout(w.inputs, w.external, e.model.encoder, e.model.network, d, McScope::kPredictionNetworkOnly));
      s.offsets.push_back(w.offset);
      s.actual.push_back(w.raw_target[0]);
      s.last_day.push_back(inverse_transform(w.inputs[w.inputs.size() - 1], w.offset));
      s.dates.push_back(w.first_target_date());
    }
    out.push_back(std::move(s));
  }
  return out;
}

const std::vector<ScoredSeries>& scored_test() {
  static const auto s = score_test(experiment(), experiment().prediction);
  return s;
}

// ---------------------------------------------------------------------------
// Criteria

Outcome coverage_calibration() {
  const auto& e = experiment();
  const auto& scored = scored_test();
  std::size_t inside = 0, total = 0;
  for (const auto& s : scored) {
    const double c = s.coverage(2, e.cfg.alpha);
    inside += static_cast<std::size_t>(std::lround(c * double(s.full.size())));
    total += s.full.size();
  }
  const double coverage = double(inside) / double(total);

  SynthConfig shifted = e.cfg.synth;
  shifted.shift_at = default_test_start(shifted.length) + 20;
  shifted.shift_level = 0.3;
  shifted.shift_weekly_scale = 1.6;
  const auto panel = prediction_windows(e.cfg, series_of(synthetic_panel(shifted, e.calendar, e.cfg.seed)), e.calendar);
  const auto shifted_scored = score_test(e, panel);
  bool ordered = true;
  double avg[3] = {0, 0, 0};
  for (const auto& s : shifted_scored) {
    const double c0 = s.coverage(0, e.cfg.alpha), c1 = s.coverage(1, e.cfg.alpha), c2 = s.coverage(2, e.cfg.alpha);
    ordered = ordered && c0 <= c1 && c1 <= c2;
    avg[0] += c0 / double(shifted_scored.size());
    avg[1] += c1 / double(shifted_scored.size());
    avg[2] += c2 / double(shifted_scored.size());
  }
  const bool in_band = coverage >= 0.92 && coverage <= 0.98;
  return {in_band && ordered && total >= 500,
          fmt("coverage %.4f over %zu test points (band [0.92, 0.98]); regime shift averages "
              "PredNet %.4f <= Enc+Pred %.4f <= Enc+Pred+Noise %.4f, per-series ordering %s",
              coverage, total, avg[0], avg[1], avg[2], ordered ? "holds" : "VIOLATED")};
}

Outcome variance_decomposition() {
  const auto& e = experiment();
  double worst = 0.0;
  std::size_t n = 0;
  for (const auto& s : scored_test())
    for (const auto& r : s.full) {
      const double sum = r.eta1 * r.eta1 + r.eta2 * r.eta2;
      worst = std::max(worst, std::abs(r.eta * r.eta - sum) / std::max(sum, 1e-300));
      ++n;
    }
  DropoutConfig zero = dropout_of(e.cfg);
  zero.p = 0.0;
  bool eta1_zero = true;
  for (const auto& w : e.prediction[0].windows.test) {
    const auto r = infer(w.inputs, w.external, e.model.encoder, e.model.network, zero, e.model.noise, e.cfg.alpha);
    eta1_zero = eta1_zero && r.eta1 == 0.0 && r.eta == r.eta2;
  }
  const double eps = std::numeric_limits<double>::epsilon();
  return {worst <= 4.0 * eps && eta1_zero,
          fmt("max relative |eta^2 - (eta1^2 + eta2^2)| = %.2e over %zu predictions (limit 4 ulp = %.2e); "
              "eta1 == 0 exactly at p = 0: %s",
              worst, n, 4.0 * eps, eta1_zero ? "yes" : "NO")};
}

Outcome mc_convergence() {
  const auto& e = experiment();
  const auto& w = e.prediction[0].windows.test.front();
  const std::vector<std::size_t> sizes{25, 100, 400, 1600};
  constexpr int kRepeats = 50;
  std::vector<double> lx, ly;
  std::string stds;
  for (auto B : sizes) {
    std::vector<double> etas;
    for (int r = 0; r < kRepeats; ++r) {
      DropoutConfig d = dropout_of(e.cfg);
      d.iterations = B;
      d.base_seed = 1'000'003ULL * std::uint64_t(r + 1) + B;
      etas.push_back(mc_dropout(w.inputs, w.external, e.model.encoder, e.model.network, d).eta1);
    }
    double mean = 0.0, var = 0.0;
    for (double v : etas) mean += v / kRepeats;
    for (double v : etas) var += (v - mean) * (v - mean) / (kRepeats - 1);
    lx.push_back(std::log(double(B)));
    ly.push_back(0.5 * std::log(var));
    stds += fmt("%s%zu:%.3e", stds.empty() ? "" : " ", B, std::sqrt(var));
  }
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / 4.0, my = std::accumulate(ly.begin(), ly.end(), 0.0) / 4.0;
  double sxy = 0.0, sxx = 0.0;
  for (int i = 0; i < 4; ++i) sxy += (lx[i] - mx) * (ly[i] - my), sxx += (lx[i] - mx) * (lx[i] - mx);
  const double slope = sxy / sxx;
  return {slope >= -0.6 && slope <= -0.4,
          fmt("log-log slope of std(eta1) vs B = %.3f (band [-0.6, -0.4]); std by B {%s}, %d repeats each", slope,
              stds.c_str(), kRepeats)};
}

Outcome noise_conservativeness() {
  // Five independent data and training seeds; reduced network widths keep
  // the five full training runs inside the time budget.
  std::string values;
  bool ok = true;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    RunConfig cfg;
    cfg.seed = seed;
    cfg.encoder_hidden = {32, 16};
    cfg.prednet_hidden = {64, 32, 16};
    cfg.synth.series = 4;
    const auto cal = HolidayCalendar::us_default();
    const auto model = fit(cfg, series_of(synthetic_panel(cfg.synth, cal, seed)), cal);
    ok = ok && model.noise.eta2 >= 0.10 && model.noise.eta2 <= 0.13;
    values += fmt("%s%.4f", values.empty() ? "" : ", ", model.noise.eta2);
  }
  return {ok, fmt("eta2 over 5 seeds (true sigma 0.1, band [0.10, 0.13]): %s", values.c_str())};
}

Outcome dropout_oracle() {
  std::string detail;
  bool ok = true;
  for (std::uint64_t seed : {3, 11, 29}) {
    nn::SeededRng rng(seed);
    Seq2SeqModel enc(6, 1, {2, 2});
    enc.initialize(rng);
    PredictionNetwork net(2, 8, {2, 2});
    net.mlp.initialize(rng);
    for (auto& l : enc.encoder.layers) l.recurrent_weights *= 3.0, l.input_weights *= 3.0;
    for (auto& l : net.mlp.layers) l.weights *= 2.0;
    Vectord window(6), external = Vectord::Zero(8);
    window << 0.0, 0.4, -0.3, 0.8, 0.2, -0.5;
    external[int(seed % 7)] = 1.0;

    const double ref = testing::reference_forward(enc, net, window, external, testing::all_kept(enc, net));
    ok = ok && std::abs(ref - predict_point(enc, net, window, external)) < 1e-12;
    for (double p : {0.5, 0.3}) {
      const auto exact = testing::enumerate_masks(enc, net, window, external, p);
      const DropoutConfig d{.p = p, .iterations = 100000, .base_seed = seed};
      const auto mc = mc_dropout(window, external, enc, net, d);
      const double B = double(d.iterations);
      const double z_mean = std::abs(mc.mean - exact.mean) / std::sqrt(exact.variance / B);
      const double z_var = std::abs(mc.eta1 * mc.eta1 - exact.variance) /
                           std::sqrt((exact.fourth - exact.variance * exact.variance) / B);
      ok = ok && exact.bits <= 12 && z_mean < 3.0 && z_var < 3.0;
      detail += fmt("%s[seed %llu p=%.1f: %zu bits, mean z=%.2f, var z=%.2f]", detail.empty() ? "" : " ",
                    (unsigned long long)seed, p, exact.bits, z_mean, z_var);
    }
  }
  return {ok, "sampled (B=1e5) vs exhaustive enumeration within 3 SE: " + detail};
}

Outcome gradient_correctness() {
  double worst = 0.0;
  std::size_t coords = 0;
  for (int k = 0; k < 20; ++k) {
    nn::SeededRng rng(9000 + k);
    std::mt19937_64 pick(k);
    auto between = [&](int lo, int hi) { return lo + int(pick() % unsigned(hi - lo + 1)); };
    if (k % 2 == 0) {
      const std::size_t horizon = std::size_t(between(1, 3)), window = horizon + std::size_t(between(2, 5));
      std::vector<Eigen::Index> hidden{between(2, 4)};
      if (k % 4 == 0) hidden.push_back(between(2, 3));
      Seq2SeqModel m(window, horizon, hidden);
      m.initialize(rng);
      const Eigen::Index n = between(2, 4);
      const Matrixd x = Matrixd::Random(Eigen::Index(window), n), y = Matrixd::Random(Eigen::Index(horizon), n);
      Seq2SeqMasks masks{nn::sample_stack_masks(m.encoder, n, 0.3, rng, k % 3 == 0),
                         nn::sample_stack_masks(m.decoder, n, 0.3, rng)};
      auto lg = seq2seq_loss_and_gradient(m, x, y, masks);
      const auto r = testing::gradient_check(m.parameters(), lg.gradient.parameters(), [&] {
        return (seq2seq_forward(m, x, masks) - y).squaredNorm() / double(y.size());
      });
      worst = std::max(worst, r.max_relative_error);
      coords += r.coordinates;
    } else {
      std::vector<Eigen::Index> hidden;
      for (int l = between(1, 3); l > 0; --l) hidden.push_back(between(2, 6));
      PredictionNetwork net(between(1, 4), between(0, 3), hidden);
      net.mlp.initialize(rng);
      const Eigen::Index n = between(2, 5);
      const Matrixd x = Matrixd::Random(net.input_width(), n), y = Matrixd::Random(1, n);
      const auto masks = nn::sample_mlp_masks(net.mlp, n, 0.3, rng);
      auto grad = net.mlp.zeros_like();
      prediction_loss_and_gradient(net, x, y, masks, grad);
      const auto r = testing::gradient_check(net.mlp.parameters(), grad.parameters(), [&] {
        return (nn::mlp_forward(net.mlp, x, masks) - y).squaredNorm() / double(n);
      });
      worst = std::max(worst, r.max_relative_error);
      coords += r.coordinates;
    }
  }
  return {worst < 1e-4, fmt("20 random networks (10 encoder-decoder, 10 MLP), %zu coordinates, max relative error %.2e "
                            "(limit 1e-4)",
                            coords, worst)};
}

Outcome forecast_quality() {
  const auto& e = experiment();
  bool all_better = true;
  std::string per_series;
  double avg_model = 0.0, avg_base = 0.0;
  for (const auto& s : scored_test()) {
    Vectord actual = Vectord::Map(s.actual.data(), Eigen::Index(s.actual.size()));
    Vectord model(actual.size()), base = Vectord::Map(s.last_day.data(), actual.size());
    for (std::size_t i = 0; i < s.full.size(); ++i) model[Eigen::Index(i)] = std::exp(s.full[i].y_hat + s.offsets[i]);
    const double sm = smape(actual, model), sb = smape(actual, base);
    all_better = all_better && sm <= sb;
    avg_model += sm / double(scored_test().size());
    avg_base += sb / double(scored_test().size());
  }

  // Holiday ablation: the same frozen encoder, prediction networks trained
  // with and without the holiday bit.
  const auto series = [&] {
    std::vector<TimeSeries> out;
    for (const auto& sw : e.prediction) out.push_back(sw.series);
    return out;
  }();
  const auto without = prediction_windows(e.cfg, series, e.calendar, false);
  const auto ablated = train_prediction_network(e.model.encoder, pooled_train(without), e.cfg.prednet_hidden,
                                                e.cfg.train_options())
                           .network;
  double mse_with = 0.0, mse_without = 0.0;
  std::size_t holidays = 0;
  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& with_w = e.prediction[s].windows.test;
    const auto& without_w = without[s].windows.test;
    for (std::size_t i = 0; i < with_w.size(); ++i) {
      if (!e.calendar.contains(with_w[i].first_target_date())) continue;
      const double y = with_w[i].target[0];
      const double a = predict_point(e.model.encoder, e.model.network, with_w[i].inputs, with_w[i].external);
      const double b = predict_point(e.model.encoder, ablated, without_w[i].inputs, without_w[i].external);
      mse_with += (a - y) * (a - y);
      mse_without += (b - y) * (b - y);
      ++holidays;
    }
  }
  mse_with /= double(holidays);
  mse_without /= double(holidays);
  return {all_better && mse_with < mse_without && holidays > 0,
          fmt("test SMAPE model <= last-day on every series: %s (average %.3f vs %.3f); holiday-day MSE with flag "
              "%.5f vs without %.5f over %zu holiday points",
              all_better ? "yes" : "NO", avg_model, avg_base, mse_with, mse_without, holidays)};
}

Outcome anomaly_detection() {
  const auto& e = experiment();
  SynthConfig spiky = e.cfg.synth;
  spiky.spikes = 3;
  spiky.spike_sigmas = 6.0;
  const auto panel = synthetic_panel(spiky, e.calendar, e.cfg.seed);
  std::set<LabeledPoint> truth;
  for (const auto& s : panel)
    for (auto t : s.spike_indices) truth.insert({s.series.series_id, s.series.date_at(t)});
  const auto windows = prediction_windows(e.cfg, series_of(panel), e.calendar);
  std::vector<StreamPoint> stream;
  for (const auto& sw : windows)
    for (const auto& w : sw.windows.test) stream.push_back({w, w.raw_target[0]});
  DetectionOptions opt;
  opt.dropout = dropout_of(e.cfg);
  opt.alpha = e.cfg.alpha;
  const auto decisions = run_detection(stream, e.model, opt);
  std::vector<bool> labels;
  for (const auto& d : decisions) labels.push_back(truth.count({d.series_id, d.date}) > 0);
  const auto ev = evaluate(decisions, labels);
  const double recall = ev.recall.value_or(0.0);
  const double false_alarm = double(ev.counts.fp) / double(ev.counts.fp + ev.counts.tn);

  const auto reference = evaluate(DetectionCounts{17, 4, 0, 0});
  const bool reference_ok = reference.precision && std::lround(*reference.precision * 10000.0) == 8095 &&
                            *reference.precision == 17.0 / 21.0 && reference.recall == 1.0;
  return {recall == 1.0 && false_alarm <= 0.08 && reference_ok && ev.counts.tp == truth.size(),
          fmt("%zu injected 6-sigma spikes: recall %.3f, false-alarm rate %.4f (limit 0.08), precision %.3f; "
              "evaluate(TP=17, FP=4, FN=0) precision = %.2f%%",
              truth.size(), recall, false_alarm, ev.precision.value_or(0.0), 100.0 * reference.precision.value_or(0.0))};
}

Outcome inference_latency() {
  const auto& e = experiment();
  const auto& w = e.prediction[0].windows.test.front();
  DropoutConfig d = dropout_of(e.cfg);
  d.iterations = 200;
  d.threads = 1;
  std::vector<double> ms;
  for (int k = 0; k < 3; ++k) infer(w.inputs, w.external, e.model.encoder, e.model.network, d, e.model.noise, 0.05);
  for (int k = 0; k < 50; ++k) {
    d.base_seed = std::uint64_t(k);
    const auto t0 = Clock::now();
    infer(w.inputs, w.external, e.model.encoder, e.model.network, d, e.model.noise, 0.05);
    ms.push_back(1000.0 * seconds_since(t0));
  }
  std::sort(ms.begin(), ms.end());
  const double median = ms[ms.size() / 2];
  return {median <= 100.0,
          fmt("infer with B = 200 on encoder {128, 32} and prediction network {128, 64, 16}: median %.1f ms, "
              "max %.1f ms over 50 calls (limit 100 ms, single thread)",
              median, ms.back())};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism_persistence() {
  const fs::path root = fs::temp_directory_path() / "tsuq_acceptance_cli";
  fs::remove_all(root);
  fs::create_directories(root);
  std::ofstream(root / "run.cfg") << "window = 14\nhorizon = 3\nencoder_hidden = 16,8\nprednet_hidden = 16,8\n"
                                     "pretrain_epochs = 3\ntrain_epochs = 5\nsynth_series = 3\nsynth_length = 600\n";
  auto run = [&](const std::string& tag, const std::string& sub) {
    std::vector<std::string> args{"tsuq",        "--config",  (root / "run.cfg").string(),
                                  "--data",      (root / "data" / "series.csv").string(),
                                  "--model-dir", (root / "model").string(),
                                  "--out-dir",   (root / ("out_" + tag)).string(),
                                  sub};
    if (sub == "synth") args = {"tsuq", "--config", (root / "run.cfg").string(), "--out-dir", (root / "data").string(), "synth"};
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    if (code != 0) std::cerr << err.str();
    return code == 0;
  };
  bool ok = run("", "synth");
  std::string first_bundle;
  for (const std::string tag : {"a", "b"}) {
    ok = ok && run(tag, "pretrain") && run(tag, "train") && run(tag, "infer");
    if (tag == "a") first_bundle = slurp(root / "model" / "bundle.bin");
  }
  const auto pa = slurp(root / "out_a" / "predictions.csv"), pb = slurp(root / "out_b" / "predictions.csv");
  const bool csv_same = ok && !pa.empty() && pa == pb;
  const bool bundle_same = ok && !first_bundle.empty() && first_bundle == slurp(root / "model" / "bundle.bin");

  // Round-trip of the default-size trained model.
  const auto& e = experiment();
  ModelBundle bundle;
  bundle.seq2seq = e.model.encoder;
  bundle.network = e.model.network;
  bundle.noise = e.model.noise;
  bundle.config_snapshot = e.cfg.to_text();
  const auto bytes = serialize_bundle(bundle);
  save_bundle(root / "default.bin", bundle);
  const auto back = load_bundle(root / "default.bin");
  bool bits = serialize_bundle(back) == bytes && back.noise->eta2 == bundle.noise->eta2;
  const auto p1 = std::as_const(*bundle.seq2seq).parameters(), p2 = std::as_const(*back.seq2seq).parameters();
  for (std::size_t i = 0; i < p1.size(); ++i) bits = bits && std::memcmp(p1[i].data(), p2[i].data(), p1[i].size_bytes()) == 0;
  const auto q1 = std::as_const(bundle.network->mlp).parameters(), q2 = std::as_const(back.network->mlp).parameters();
  for (std::size_t i = 0; i < q1.size(); ++i) bits = bits && std::memcmp(q1[i].data(), q2[i].data(), q1[i].size_bytes()) == 0;

  return {csv_same && bundle_same && bits,
          fmt("two CLI runs with the same config and seed: predictions.csv identical %s (%zu bytes), bundles identical "
              "%s; default-size bundle (%zu bytes) save/load bit-exact %s",
              csv_same ? "yes" : "NO", pa.size(), bundle_same ? "yes" : "NO", bytes.size(), bits ? "yes" : "NO")};
}

Outcome pipeline_exactness() {
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> exponent(0.0, 9.0);
  double worst_rt = 0.0;
  for (int trial = 0; trial < 2000; ++trial) {
    Vectord raw(28);
    for (auto& v : raw) v = std::pow(10.0, exponent(gen));
    const auto t = transform(raw);
    for (Eigen::Index i = 0; i < raw.size(); ++i)
      worst_rt = std::max(worst_rt, std::abs(inverse_transform(t.values[i], t.offset) - raw[i]) / raw[i]);
  }

  const HolidayCalendar cal = HolidayCalendar::us_default();
  bool counts_ok = true, split_ok = true;
  std::size_t count_cases = 0, split_cases = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t H = 1 + gen() % 8, T = H + 1 + gen() % 40, L = T + gen() % 300;
    TimeSeries s{"p", make_date(2014, 1, 1) + std::chrono::days(long(gen() % 1000)), {}};
    for (std::size_t i = 0; i < L; ++i) s.values.push_back(1.0 + double(gen() % 1000));
    const auto purpose = trial % 2 ? WindowPurpose::kPretraining : WindowPurpose::kPrediction;
    const std::size_t h = purpose == WindowPurpose::kPretraining ? H : 1;
    const auto ws = make_windows(s, {.window = T, .horizon = h, .purpose = purpose}, cal);
    counts_ok = counts_ok && ws.size() == (L >= T + h ? L - T - h + 1 : 0);
    ++count_cases;
    if (L < 4) continue;
    const std::size_t a = 1 + gen() % (L - 3), b = a + 1 + gen() % (L - 2 - a);
    const SplitSpec spec{s.date_at(a), s.date_at(b)};
    const auto sp = chronological_split(ws, spec, s.start, s.last_date());
    std::size_t straddling = 0;
    for (const auto& w : ws)
      if ((w.first_target_date() < spec.train_end && w.last_target_date() >= spec.train_end) ||
          (w.first_target_date() < spec.validation_end && w.last_target_date() >= spec.validation_end))
        ++straddling;
    split_ok = split_ok && sp.train.size() + sp.validation.size() + sp.test.size() + straddling == ws.size();
    Date max_train = s.start - std::chrono::days(1);
    for (const auto& w : sp.train) split_ok = split_ok && w.last_target_date() < spec.train_end, max_train = std::max(max_train, w.last_target_date());
    for (const auto& w : sp.validation)
      split_ok = split_ok && w.first_target_date() > max_train && w.first_target_date() >= spec.train_end &&
                 w.last_target_date() < spec.validation_end;
    for (const auto& w : sp.test) split_ok = split_ok && w.first_target_date() > max_train && w.first_target_date() >= spec.validation_end;
    ++split_cases;
  }
  return {worst_rt <= 1e-9 && counts_ok && split_ok,
          fmt("round-trip max relative error %.2e over values in [1, 1e9] (limit 1e-9); window-count formula %s over "
              "%zu random (L, T, H); split disjoint/exhaustive/no-leakage %s over %zu random specs",
              worst_rt, counts_ok ? "holds" : "FAILS", count_cases, split_ok ? "holds" : "FAILS", split_cases)};
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> criteria{
      {1, "coverage calibration", coverage_calibration},
      {2, "variance decomposition", variance_decomposition},
      {3, "MC convergence", mc_convergence},
      {4, "inherent-noise conservativeness", noise_conservativeness},
      {5, "dropout oracle equivalence", dropout_oracle},
      {6, "gradient correctness", gradient_correctness},
      {7, "forecast quality ordering", forecast_quality},
      {8, "anomaly detection", anomaly_detection},
      {9, "inference latency", inference_latency},
      {10, "determinism and persistence", determinism_persistence},
      {11, "pipeline exactness", pipeline_exactness},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failures = 0;
  const auto start = Clock::now();
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& ex) {
      o = {false, std::string("exception: ") + ex.what()};
    }
    failures += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << "): " << o.detail
              << fmt(" [%.1f s]", seconds_since(t0)) << '\n'
              << std::flush;
  }
  std::cout << fmt("%d failure(s), total %.1f s\n", failures, seconds_since(start));
  return failures == 0 ? 0 : 1;
}
