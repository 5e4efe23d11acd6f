#include "tsuq/seq2seq.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "tsuq/errors.hpp"
#include "tsuq/nn/loss.hpp"

namespace tsuq {

std::string to_string(EmbeddingSource source) {
  return source == EmbeddingSource::kLastLayer ? "last" : "both";
}

EmbeddingSource parse_embedding_source(const std::string& text) {
  if (text == "last") return EmbeddingSource::kLastLayer;
  if (text == "both") return EmbeddingSource::kAllLayers;
  throw ParameterError("unknown embedding source '" + text + "' (expected last or both)");
}

Seq2SeqModel::Seq2SeqModel(std::size_t window_, std::size_t horizon_,
                           const std::vector<Eigen::Index>& hidden, EmbeddingSource source)
    : encoder(1, hidden),
      decoder(1, hidden),
      projection(hidden.empty() ? 1 : hidden.back(), 1, nn::Activation::kIdentity),
      window(window_),
      horizon(horizon_),
      embedding_source(source) {
  if (hidden.empty()) throw ParameterError("encoder needs at least one LSTM layer");
  if (!(window > horizon && horizon >= 1))
    throw ParameterError("encoder-decoder requires window > horizon >= 1");
}

Eigen::Index Seq2SeqModel::embedding_width() const {
  if (embedding_source == EmbeddingSource::kLastLayer) return encoder.output_size();
  Eigen::Index w = 0;
  for (auto h : encoder.hidden_sizes()) w += h;
  return w;
}

void Seq2SeqModel::check_invariants() const {
  encoder.check_invariants();
  decoder.check_invariants();
  projection.check_invariants();
  nn::require_shape(encoder.hidden_sizes() == decoder.hidden_sizes(),
                    "encoder and decoder layer widths differ");
  nn::require_shape(encoder.input_size() == 1 && decoder.input_size() == 1,
                    "encoder-decoder expects a univariate input");
  nn::require_shape(projection.in_size() == decoder.output_size() && projection.out_size() == 1,
                    "output projection shape mismatch");
  if (!(window > horizon && horizon >= 1))
    throw ParameterError("encoder-decoder requires window > horizon >= 1");
}

void Seq2SeqModel::initialize(nn::SeededRng& rng) {
  encoder.initialize(rng);
  decoder.initialize(rng);
  projection.initialize(rng);
}

nn::ParameterViews<double> Seq2SeqModel::parameters() {
  auto v = encoder.parameters();
  for (auto p : decoder.parameters()) v.push_back(p);
  for (auto p : projection.parameters()) v.push_back(p);
  return v;
}

nn::ConstParameterViews<double> Seq2SeqModel::parameters() const {
  auto v = encoder.parameters();
  for (auto p : decoder.parameters()) v.push_back(p);
  for (auto p : projection.parameters()) v.push_back(p);
  return v;
}

Seq2SeqModel Seq2SeqModel::zeros_like() const {
  Seq2SeqModel z = *this;
  for (auto& v : z.parameters()) std::fill(v.begin(), v.end(), 0.0);
  return z;
}

namespace {

std::vector<Matrixd> rows_as_steps(const Matrixd& windows, Eigen::Index first, Eigen::Index count) {
  std::vector<Matrixd> steps;
  steps.reserve(static_cast<std::size_t>(count));
  for (Eigen::Index t = first; t < first + count; ++t) steps.emplace_back(windows.row(t));
  return steps;
}

void check_windows(const Seq2SeqModel& model, const Matrixd& windows) {
  nn::require_shape(windows.rows() == static_cast<Eigen::Index>(model.window),
                    "window length " + std::to_string(windows.rows()) + " != model window " +
                        std::to_string(model.window));
}

struct ForwardState {
  nn::StackCache<double> enc_cache, dec_cache;
  std::vector<Matrixd> dec_top;
  Matrixd predictions;
};

void run_forward(const Seq2SeqModel& model, const Matrixd& windows, const Seq2SeqMasks& masks,
                 ForwardState* cache, Matrixd& predictions) {
  check_windows(model, windows);
  const Eigen::Index n = windows.cols();
  const auto T = static_cast<Eigen::Index>(model.window);
  const auto F = static_cast<Eigen::Index>(model.horizon);
  auto states = model.encoder.zero_states(n);
  nn::stack_forward(model.encoder, rows_as_steps(windows, 0, T), states, masks.encoder,
                    cache ? &cache->enc_cache : nullptr);
  auto top = nn::stack_forward(model.decoder, rows_as_steps(windows, T - F, F), states, masks.decoder,
                               cache ? &cache->dec_cache : nullptr);
  predictions.resize(F, n);
  for (Eigen::Index i = 0; i < F; ++i)
    predictions.row(i) = nn::dense_forward_batch(model.projection, top[static_cast<std::size_t>(i)]);
  if (cache) cache->dec_top = std::move(top);
}

}  // namespace

Matrixd seq2seq_forward(const Seq2SeqModel& model, const Matrixd& windows, const Seq2SeqMasks& masks) {
  Matrixd out;
  run_forward(model, windows, masks, nullptr, out);
  return out;
}

LossAndGradient seq2seq_loss_and_gradient(const Seq2SeqModel& model, const Matrixd& windows,
                                          const Matrixd& targets, const Seq2SeqMasks& masks) {
  nn::require_shape(windows.cols() > 0, "empty batch");
  ForwardState cache;
  Matrixd predictions;
  run_forward(model, windows, masks, &cache, predictions);

  LossAndGradient out;
  Matrixd d_pred;
  out.loss = nn::mse_loss(predictions, targets, d_pred);
  out.gradient = model.zeros_like();
  auto& grad = out.gradient;

  const auto F = static_cast<std::size_t>(model.horizon);
  std::vector<Matrixd> d_top(F);
  for (std::size_t i = 0; i < F; ++i) {
    const Matrixd d_row = d_pred.row(static_cast<Eigen::Index>(i));
    grad.projection.weights.noalias() += d_row * cache.dec_top[i].transpose();
    grad.projection.bias.noalias() += d_row.rowwise().sum();
    d_top[i] = model.projection.weights.transpose() * d_row;
  }
  auto dec = nn::stack_backward(model.decoder, cache.dec_cache, d_top, {}, grad.decoder);
  nn::stack_backward(model.encoder, cache.enc_cache, {}, dec.d_initial, grad.encoder);
  return out;
}

Matrixd stack_inputs(const std::vector<WindowSample>& windows) {
  if (windows.empty()) return {};
  Matrixd m(windows.front().inputs.size(), static_cast<Eigen::Index>(windows.size()));
  for (std::size_t j = 0; j < windows.size(); ++j) {
    nn::require_shape(windows[j].inputs.size() == m.rows(), "windows have inconsistent lengths");
    m.col(static_cast<Eigen::Index>(j)) = windows[j].inputs;
  }
  return m;
}

TrainingHistory train_seq2seq(Seq2SeqModel& model, const std::vector<WindowSample>& dataset,
                              const TrainOptions& options) {
  if (dataset.empty()) throw DataError("pretraining dataset is empty");
  const auto T = static_cast<Eigen::Index>(model.window);
  const auto F = static_cast<Eigen::Index>(model.horizon);
  for (const auto& w : dataset)
    if (w.inputs.size() != T || w.target.size() < F)
      throw DataError("pretraining sample from '" + w.series_id + "' ending " +
                      format_iso_date(w.end_date) + " is shorter than T + F");
  if (options.batch_size == 0) throw ParameterError("batch size must be positive");
  nn::validate_dropout_probability(options.dropout);

  Matrixd inputs = stack_inputs(dataset);
  Matrixd targets(F, static_cast<Eigen::Index>(dataset.size()));
  for (std::size_t j = 0; j < dataset.size(); ++j)
    targets.col(static_cast<Eigen::Index>(j)) = dataset[j].target.head(F);

  nn::SeededRng order_rng(options.seed, 101);
  nn::SeededRng mask_rng(options.seed, 102);
  nn::AdamState<double> adam(options.adam);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);

  TrainingHistory history;
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), order_rng.engine());
    double total = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += options.batch_size) {
      const std::size_t end = std::min(order.size(), begin + options.batch_size);
      const auto n = static_cast<Eigen::Index>(end - begin);
      Matrixd xb(T, n), yb(F, n);
      for (Eigen::Index j = 0; j < n; ++j) {
        xb.col(j) = inputs.col(static_cast<Eigen::Index>(order[begin + j]));
        yb.col(j) = targets.col(static_cast<Eigen::Index>(order[begin + j]));
      }
      Seq2SeqMasks masks;
      masks.encoder = nn::sample_stack_masks(model.encoder, n, options.dropout, mask_rng, options.mask_raw_input);
      masks.decoder = nn::sample_stack_masks(model.decoder, n, options.dropout, mask_rng, options.mask_raw_input);
      LossAndGradient lg;
      try {
        lg = seq2seq_loss_and_gradient(model, xb, yb, masks);
      } catch (const NumericError& e) {
        throw TrainingError("encoder-decoder diverged in epoch " + std::to_string(epoch + 1) +
                            ", batch starting at " + std::to_string(begin) + ": " + e.what());
      }
      auto grads = lg.gradient.parameters();
      nn::clip_global_norm<double>(grads, options.clip_norm);
      adam.step(model.parameters(), nn::as_const(grads));
      total += lg.loss * double(n);
    }
    const double epoch_loss = total / double(order.size());
    if (!std::isfinite(epoch_loss))
      throw TrainingError("encoder-decoder loss became non-finite in epoch " + std::to_string(epoch + 1));
    history.epoch_loss.push_back(epoch_loss);
  }
  return history;
}

Seq2SeqTraining pretrain(const std::vector<WindowSample>& dataset, std::size_t window, std::size_t horizon,
                         const std::vector<Eigen::Index>& hidden, const TrainOptions& options,
                         EmbeddingSource source) {
  Seq2SeqTraining out{Seq2SeqModel(window, horizon, hidden, source), {}};
  nn::SeededRng init_rng(options.seed, 100);
  out.model.initialize(init_rng);
  out.history = train_seq2seq(out.model, dataset, options);
  return out;
}

Matrixd encode_batch(const Seq2SeqModel& model, const Matrixd& windows, const nn::StackMasks<double>& masks) {
  check_windows(model, windows);
  auto states = model.encoder.zero_states(windows.cols());
  nn::stack_forward(model.encoder, rows_as_steps(windows, 0, windows.rows()), states, masks);
  if (model.embedding_source == EmbeddingSource::kLastLayer) return states.back().c;
  Matrixd out(model.embedding_width(), windows.cols());
  Eigen::Index row = 0;
  for (const auto& s : states) {
    out.middleRows(row, s.c.rows()) = s.c;
    row += s.c.rows();
  }
  return out;
}

Embedding encode(const Seq2SeqModel& model, const Vectord& window) {
  return {encode_batch(model, window).col(0), model.embedding_source};
}

Embedding encode_with_dropout(const Seq2SeqModel& model, const Vectord& window, double p, nn::SeededRng& rng) {
  nn::validate_dropout_probability(p);
  const auto masks = nn::sample_stack_masks(model.encoder, 1, p, rng);
  return {encode_batch(model, window, masks).col(0), model.embedding_source};
}

std::vector<EmbeddingRow> export_embeddings(const Seq2SeqModel& model, const std::vector<WindowSample>& dataset) {
  std::vector<EmbeddingRow> rows;
  if (dataset.empty()) return rows;
  const Matrixd emb = encode_batch(model, stack_inputs(dataset));
  rows.reserve(dataset.size());
  for (std::size_t j = 0; j < dataset.size(); ++j)
    rows.push_back({dataset[j].series_id, dataset[j].end_date, day_of_week(dataset[j].end_date),
                    emb.col(static_cast<Eigen::Index>(j))});
  return rows;
}

PcaResult pca_2d(const Matrixd& rows) {
  if (rows.rows() < 3 || rows.cols() < 2)
    throw ShapeError("PCA needs at least 3 rows and 2 columns");
  const Matrixd centered = rows.rowwise() - rows.colwise().mean();
  const Matrixd cov = centered.transpose() * centered / double(rows.rows() - 1);
  Eigen::SelfAdjointEigenSolver<Matrixd> solver(cov);
  if (solver.info() != Eigen::Success) throw NumericError("PCA eigendecomposition failed");

  PcaResult out;
  const Eigen::Index d = cov.rows();
  out.eigenvalues = solver.eigenvalues().reverse();
  out.components.resize(d, 2);
  for (int k = 0; k < 2; ++k) {
    Vectord v = solver.eigenvectors().col(d - 1 - k);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v[arg] < 0) v = -v;
    out.components.col(k) = v;
  }
  const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
  if (out.eigenvalues[0] <= 1e-14 * scale) {
    out.degenerate = true;
    out.projection = Matrixd::Zero(rows.rows(), 2);
    return out;
  }
  out.projection = centered * out.components;
  return out;
}

void write_embeddings_csv(const std::filesystem::path& path, const std::vector<EmbeddingRow>& rows,
                          const PcaResult* pca) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  const Eigen::Index width = rows.empty() ? 0 : rows.front().values.size();
  out << "series_id,window_end_date,dow";
  for (Eigen::Index k = 0; k < width; ++k) out << ",e_" << k;
  if (pca) out << ",pc1,pc2";
  out << '\n';
  char buf[64];
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    out << r.series_id << ',' << format_iso_date(r.window_end) << ',' << r.dow;
    for (Eigen::Index k = 0; k < width; ++k) {
      std::snprintf(buf, sizeof buf, ",%.17g", r.values[k]);
      out << buf;
    }
    if (pca) {
      std::snprintf(buf, sizeof buf, ",%.17g,%.17g", pca->projection(static_cast<Eigen::Index>(i), 0),
                    pca->projection(static_cast<Eigen::Index>(i), 1));
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace tsuq
