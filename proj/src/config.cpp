#include "tsuq/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "tsuq/errors.hpp"

namespace tsuq {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T out{};
  const std::string t = trim(text);
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty())
    throw ParameterError("config key '" + key + "': cannot parse '" + text + "' as a number");
  return out;
}

bool parse_bool(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ParameterError("config key '" + key + "': expected true/false, got '" + text + "'");
}

std::vector<Eigen::Index> parse_widths(const std::string& key, const std::string& text) {
  std::vector<Eigen::Index> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(parse_number<Eigen::Index>(key, item));
  if (out.empty()) throw ParameterError("config key '" + key + "' needs at least one width");
  return out;
}

std::string join_widths(const std::vector<Eigen::Index>& w) {
  std::string s;
  for (std::size_t i = 0; i < w.size(); ++i) s += (i ? "," : "") + std::to_string(w[i]);
  return s;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Date parse_date_param(const std::string& key, const std::string& text) {
  try {
    return parse_iso_date(text);
  } catch (const DataError& e) {
    throw ParameterError("config key '" + key + "': " + e.what());
  }
}

}  // namespace

void RunConfig::set(const std::string& key_raw, const std::string& value_raw) {
  const std::string key = trim(key_raw), v = trim(value_raw);
  if (key == "data") data = v;
  else if (key == "holidays") holidays = v;
  else if (key == "model_dir") model_dir = v;
  else if (key == "labels") labels = v;
  else if (key == "window") window = parse_number<std::size_t>(key, v);
  else if (key == "horizon") horizon = parse_number<std::size_t>(key, v);
  else if (key == "encoder_hidden") encoder_hidden = parse_widths(key, v);
  else if (key == "prednet_hidden") prednet_hidden = parse_widths(key, v);
  else if (key == "embedding") embedding = parse_embedding_source(v);
  else if (key == "dropout_p") dropout.p = parse_number<double>(key, v);
  else if (key == "mc_iterations") dropout.iterations = parse_number<std::size_t>(key, v);
  else if (key == "mc_threads") dropout.threads = parse_number<std::size_t>(key, v);
  else if (key == "train_end") train_end = v.empty() ? std::nullopt : std::optional(parse_date_param(key, v));
  else if (key == "validation_end")
    validation_end = v.empty() ? std::nullopt : std::optional(parse_date_param(key, v));
  else if (key == "alpha") alpha = parse_number<double>(key, v);
  else if (key == "transform") transform = parse_transform_mode(v);
  else if (key == "seed") seed = parse_number<std::uint64_t>(key, v);
  else if (key == "pretrain_epochs") pretrain_epochs = parse_number<std::size_t>(key, v);
  else if (key == "train_epochs") train_epochs = parse_number<std::size_t>(key, v);
  else if (key == "batch_size") batch_size = parse_number<std::size_t>(key, v);
  else if (key == "learning_rate") learning_rate = parse_number<double>(key, v);
  else if (key == "clip_norm") clip_norm = parse_number<double>(key, v);
  else if (key == "holiday_feature") holiday_feature = parse_bool(key, v);
  else if (key == "scope") scope = v;
  else if (key == "synth_series") synth.series = parse_number<std::size_t>(key, v);
  else if (key == "synth_length") synth.length = parse_number<std::size_t>(key, v);
  else if (key == "synth_start") synth.start = parse_date_param(key, v);
  else if (key == "synth_noise") synth.noise_sigma = parse_number<double>(key, v);
  else if (key == "synth_holiday_lift") synth.holiday_lift = parse_number<double>(key, v);
  else if (key == "synth_yearly") synth.yearly_amplitude = parse_number<double>(key, v);
  else if (key == "synth_trend") synth.trend_per_day = parse_number<double>(key, v);
  else if (key == "synth_spikes") synth.spikes = parse_number<std::size_t>(key, v);
  else if (key == "synth_spike_sigmas") synth.spike_sigmas = parse_number<double>(key, v);
  else if (key == "synth_shift_at") synth.shift_at = parse_number<std::size_t>(key, v);
  else if (key == "synth_shift_level") synth.shift_level = parse_number<double>(key, v);
  else if (key == "synth_shift_weekly_scale") synth.shift_weekly_scale = parse_number<double>(key, v);
  else throw ParameterError("unknown config key '" + key + "'");
}

void RunConfig::validate() const {
  dropout.validate();
  if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("alpha must lie in (0, 1)");
  if (!(window > horizon && horizon >= 1)) throw ParameterError("require window > horizon >= 1");
  for (auto w : encoder_hidden)
    if (w < 1) throw ParameterError("encoder_hidden widths must be positive");
  for (auto w : prednet_hidden)
    if (w < 1) throw ParameterError("prednet_hidden widths must be positive");
  if (batch_size < 1) throw ParameterError("batch_size must be positive");
  if (!(learning_rate > 0.0)) throw ParameterError("learning_rate must be positive");
  if (!(clip_norm > 0.0)) throw ParameterError("clip_norm must be positive");
  if (train_end.has_value() != validation_end.has_value())
    throw ParameterError("train_end and validation_end must be given together");
  if (train_end && !(*train_end < *validation_end))
    throw ParameterError("train_end must precede validation_end");
  if (scope != "test" && scope != "validation" && scope != "all")
    throw ParameterError("scope must be test, validation or all");
  if (synth.series < 1 || synth.length < window + horizon + 3)
    throw ParameterError("synth_series must be >= 1 and synth_length long enough for a window");
  if (synth.noise_sigma < 0.0) throw ParameterError("synth_noise must be nonnegative");
  if (!holidays.empty() && !std::filesystem::exists(holidays))
    throw DataError("holiday calendar not found: " + holidays.string());
}

std::string RunConfig::to_text() const {
  std::ostringstream o;
  auto kv = [&](const char* k, const std::string& v) { o << k << " = " << v << '\n'; };
  kv("data", data.string());
  kv("holidays", holidays.string());
  kv("model_dir", model_dir.string());
  kv("labels", labels.string());
  kv("window", std::to_string(window));
  kv("horizon", std::to_string(horizon));
  kv("encoder_hidden", join_widths(encoder_hidden));
  kv("prednet_hidden", join_widths(prednet_hidden));
  kv("embedding", to_string(embedding));
  kv("dropout_p", fmt_double(dropout.p));
  kv("mc_iterations", std::to_string(dropout.iterations));
  kv("mc_threads", std::to_string(dropout.threads));
  kv("train_end", train_end ? format_iso_date(*train_end) : "");
  kv("validation_end", validation_end ? format_iso_date(*validation_end) : "");
  kv("alpha", fmt_double(alpha));
  kv("transform", to_string(transform));
  kv("seed", std::to_string(seed));
  kv("pretrain_epochs", std::to_string(pretrain_epochs));
  kv("train_epochs", std::to_string(train_epochs));
  kv("batch_size", std::to_string(batch_size));
  kv("learning_rate", fmt_double(learning_rate));
  kv("clip_norm", fmt_double(clip_norm));
  kv("holiday_feature", holiday_feature ? "true" : "false");
  kv("scope", scope);
  kv("synth_series", std::to_string(synth.series));
  kv("synth_length", std::to_string(synth.length));
  kv("synth_start", format_iso_date(synth.start));
  kv("synth_noise", fmt_double(synth.noise_sigma));
  kv("synth_holiday_lift", fmt_double(synth.holiday_lift));
  kv("synth_yearly", fmt_double(synth.yearly_amplitude));
  kv("synth_trend", fmt_double(synth.trend_per_day));
  kv("synth_spikes", std::to_string(synth.spikes));
  kv("synth_spike_sigmas", fmt_double(synth.spike_sigmas));
  kv("synth_shift_at", std::to_string(synth.shift_at));
  kv("synth_shift_level", fmt_double(synth.shift_level));
  kv("synth_shift_weekly_scale", fmt_double(synth.shift_weekly_scale));
  return o.str();
}

TrainOptions RunConfig::pretrain_options() const {
  TrainOptions t;
  t.epochs = pretrain_epochs;
  t.batch_size = batch_size;
  t.dropout = dropout.p;
  t.adam.learning_rate = learning_rate;
  t.clip_norm = clip_norm;
  t.seed = seed;
  return t;
}

TrainOptions RunConfig::train_options() const {
  TrainOptions t = pretrain_options();
  t.epochs = train_epochs;
  return t;
}

std::vector<std::pair<std::string, std::string>> read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file " + path.string());
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value' in " + path.string(), line_no);
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

RunConfig load_config(const std::optional<std::filesystem::path>& file,
                      const std::vector<std::pair<std::string, std::string>>& overrides) {
  RunConfig cfg;
  if (file)
    for (const auto& [k, v] : read_config_file(*file)) cfg.set(k, v);
  for (const auto& [k, v] : overrides) cfg.set(k, v);
  cfg.validate();
  return cfg;
}

}  // namespace tsuq
