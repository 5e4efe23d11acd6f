#include "tsuq/bundle.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "tsuq/errors.hpp"

namespace tsuq {

namespace {

constexpr char kMagic[8] = {'T', 'S', 'U', 'Q', 'B', 'N', 'D', 'L'};
constexpr std::uint32_t kHasSeq2Seq = 1u << 0;
constexpr std::uint32_t kHasNetwork = 1u << 1;
constexpr std::uint32_t kHasNoise = 1u << 2;

std::uint64_t fnv1a(const std::uint8_t* data, std::size_t n) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Writer {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u64(s.size());
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }
  void raw(const char* p, std::size_t n) { bytes_.insert(bytes_.end(), p, p + n); }
  template <typename Derived>
  void matrix(const Eigen::PlainObjectBase<Derived>& m) {
    u64(static_cast<std::uint64_t>(m.rows()));
    u64(static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.size(); ++i) f64(m.data()[i]);
  }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  Reader(const std::uint8_t* data, std::size_t n) : data_(data), n_(n) {}
  void need(std::size_t k) const {
    if (pos_ + k > n_) throw FormatError("bundle truncated at byte " + std::to_string(pos_));
  }
  std::uint8_t u8() {
    need(1);
    return data_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(data_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(data_[pos_++]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint64_t len = u64();
    need(len);
    std::string s(reinterpret_cast<const char*>(data_ + pos_), len);
    pos_ += len;
    return s;
  }
  Matrixd matrix() {
    const std::uint64_t rows = u64(), cols = u64();
    if (rows > (1u << 24) || cols > (1u << 24)) throw FormatError("implausible matrix dimensions in bundle");
    need(rows * cols * 8);
    Matrixd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = f64();
    return m;
  }
  Vectord vector() {
    Matrixd m = matrix();
    if (m.cols() != 1) throw FormatError("expected a column vector in bundle");
    return m.col(0);
  }
  std::size_t position() const { return pos_; }

 private:
  const std::uint8_t* data_;
  std::size_t n_;
  std::size_t pos_ = 0;
};

void write_lstm_stack(Writer& w, const nn::LstmStack<double>& s) {
  w.u64(s.layers.size());
  for (const auto& l : s.layers) {
    w.matrix(l.input_weights);
    w.matrix(l.recurrent_weights);
    w.matrix(l.bias);
  }
}

nn::LstmStack<double> read_lstm_stack(Reader& r) {
  nn::LstmStack<double> s;
  const std::uint64_t n = r.u64();
  if (n == 0 || n > 64) throw FormatError("implausible LSTM layer count in bundle");
  for (std::uint64_t i = 0; i < n; ++i) {
    nn::LstmLayer<double> l;
    l.input_weights = r.matrix();
    l.recurrent_weights = r.matrix();
    l.bias = r.vector();
    s.layers.push_back(std::move(l));
  }
  return s;
}

void write_dense(Writer& w, const nn::DenseLayer<double>& l) {
  w.u8(static_cast<std::uint8_t>(l.activation));
  w.matrix(l.weights);
  w.matrix(l.bias);
}

nn::DenseLayer<double> read_dense(Reader& r) {
  nn::DenseLayer<double> l;
  const std::uint8_t act = r.u8();
  if (act > 1) throw FormatError("unknown activation code in bundle");
  l.activation = static_cast<nn::Activation>(act);
  l.weights = r.matrix();
  l.bias = r.vector();
  return l;
}

}  // namespace

void ModelBundle::check_invariants() const {
  if (seq2seq) seq2seq->check_invariants();
  if (network) {
    network->check_invariants();
    if (seq2seq)
      nn::require_shape(network->embedding_width == seq2seq->embedding_width(),
                        "prediction network expects a different embedding width than the encoder provides");
  }
  if (noise && noise->eta2 < 0.0) throw FormatError("negative noise estimate in bundle");
}

std::vector<std::uint8_t> serialize_bundle(const ModelBundle& b) {
  Writer w;
  w.raw(kMagic, sizeof kMagic);
  w.u32(b.format_version);
  std::uint32_t flags = 0;
  if (b.seq2seq) flags |= kHasSeq2Seq;
  if (b.network) flags |= kHasNetwork;
  if (b.noise) flags |= kHasNoise;
  w.u32(flags);
  if (b.seq2seq) {
    const auto& m = *b.seq2seq;
    w.u64(m.window);
    w.u64(m.horizon);
    w.u8(static_cast<std::uint8_t>(m.embedding_source));
    write_lstm_stack(w, m.encoder);
    write_lstm_stack(w, m.decoder);
    write_dense(w, m.projection);
  }
  if (b.network) {
    const auto& n = *b.network;
    w.u64(static_cast<std::uint64_t>(n.embedding_width));
    w.u64(static_cast<std::uint64_t>(n.external_width));
    w.u64(n.mlp.layers.size());
    for (const auto& l : n.mlp.layers) write_dense(w, l);
  }
  if (b.noise) {
    w.f64(b.noise->eta2);
    w.u64(b.noise->validation_size);
  }
  w.u64(b.metadata.pretrain_epochs);
  w.f64(b.metadata.pretrain_final_loss);
  w.u64(b.metadata.train_epochs);
  w.f64(b.metadata.train_final_loss);
  w.str(b.config_snapshot);
  const std::uint64_t checksum = fnv1a(w.bytes().data(), w.bytes().size());
  w.u64(checksum);
  return std::move(w.bytes());
}

ModelBundle deserialize_bundle(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < sizeof kMagic + 16 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
    throw FormatError("not a model bundle (bad magic bytes)");
  Reader r(bytes.data(), bytes.size());
  for (std::size_t i = 0; i < sizeof kMagic; ++i) r.u8();
  ModelBundle b;
  b.format_version = r.u32();
  if (b.format_version != kBundleFormatVersion)
    throw FormatError("unsupported bundle format version " + std::to_string(b.format_version) +
                      " (this reader understands version " + std::to_string(kBundleFormatVersion) + ")");
  const std::size_t body = bytes.size() - 8;
  std::uint64_t stored = 0;
  for (int i = 0; i < 8; ++i) stored |= std::uint64_t(bytes[body + i]) << (8 * i);
  if (stored != fnv1a(bytes.data(), body)) throw FormatError("bundle checksum mismatch (file corrupted)");

  const std::uint32_t flags = r.u32();
  if (flags & ~(kHasSeq2Seq | kHasNetwork | kHasNoise)) throw FormatError("unknown bundle section flags");
  if (flags & kHasSeq2Seq) {
    Seq2SeqModel m;
    m.window = r.u64();
    m.horizon = r.u64();
    const std::uint8_t src = r.u8();
    if (src > 1) throw FormatError("unknown embedding source code in bundle");
    m.embedding_source = static_cast<EmbeddingSource>(src);
    m.encoder = read_lstm_stack(r);
    m.decoder = read_lstm_stack(r);
    m.projection = read_dense(r);
    b.seq2seq = std::move(m);
  }
  if (flags & kHasNetwork) {
    PredictionNetwork n;
    n.embedding_width = static_cast<Eigen::Index>(r.u64());
    n.external_width = static_cast<Eigen::Index>(r.u64());
    const std::uint64_t layers = r.u64();
    if (layers == 0 || layers > 64) throw FormatError("implausible dense layer count in bundle");
    for (std::uint64_t i = 0; i < layers; ++i) n.mlp.layers.push_back(read_dense(r));
    b.network = std::move(n);
  }
  if (flags & kHasNoise) {
    NoiseEstimate e;
    e.eta2 = r.f64();
    e.validation_size = r.u64();
    b.noise = e;
  }
  b.metadata.pretrain_epochs = r.u64();
  b.metadata.pretrain_final_loss = r.f64();
  b.metadata.train_epochs = r.u64();
  b.metadata.train_final_loss = r.f64();
  b.config_snapshot = r.str();
  if (r.position() != body) throw FormatError("trailing bytes in bundle");
  try {
    b.check_invariants();
  } catch (const ShapeError& e) {
    throw FormatError(std::string("inconsistent bundle: ") + e.what());
  } catch (const NumericError& e) {
    throw FormatError(std::string("inconsistent bundle: ") + e.what());
  }
  return b;
}

void save_bundle(const std::filesystem::path& path, const ModelBundle& bundle) {
  const auto bytes = serialize_bundle(bundle);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write bundle " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("failed writing bundle " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

ModelBundle load_bundle(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open bundle " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_bundle(bytes);
}

}  // namespace tsuq
