#include "tsuq/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <unordered_map>

#include "tsuq/errors.hpp"
#include "tsuq/nn/rng.hpp"

namespace tsuq {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_double(const std::string& text, double& out) {
  if (text.empty()) return false;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

}  // namespace

// ---------------------------------------------------------------------------
// Dates

Date make_date(int year, unsigned month, unsigned day) {
  const std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                                        std::chrono::day{day}};
  if (!ymd.ok())
    throw DataError("invalid date " + std::to_string(year) + "-" + std::to_string(month) + "-" +
                    std::to_string(day));
  return Date(ymd);
}

Date parse_iso_date(const std::string& text) {
  const std::string t = trim(text);
  int y = 0;
  unsigned m = 0, d = 0;
  if (t.size() != 10 || t[4] != '-' || t[7] != '-')
    throw DataError("malformed ISO date '" + t + "'");
  auto num = [&](std::size_t pos, std::size_t len, auto& out) {
    auto [p, ec] = std::from_chars(t.data() + pos, t.data() + pos + len, out);
    if (ec != std::errc() || p != t.data() + pos + len) throw DataError("malformed ISO date '" + t + "'");
  };
  num(0, 4, y);
  num(5, 2, m);
  num(8, 2, d);
  return make_date(y, m, d);
}

std::string format_iso_date(Date d) {
  const std::chrono::year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", int(ymd.year()), unsigned(ymd.month()),
                unsigned(ymd.day()));
  return buf;
}

int day_of_week(Date d) {
  // iso_encoding: Monday = 1 ... Sunday = 7
  return int(std::chrono::weekday{d}.iso_encoding()) - 1;
}

// ---------------------------------------------------------------------------
// Transform

std::string to_string(TransformMode mode) { return mode == TransformMode::kLog ? "log" : "log1p"; }

TransformMode parse_transform_mode(const std::string& text) {
  if (text == "log") return TransformMode::kLog;
  if (text == "log1p") return TransformMode::kLog1p;
  throw ParameterError("unknown transform mode '" + text + "' (expected log or log1p)");
}

Transformed transform(const Vectord& raw, TransformMode mode) {
  if (raw.size() == 0) throw DataError("cannot transform an empty window");
  Vectord logged(raw.size());
  for (Eigen::Index i = 0; i < raw.size(); ++i) {
    const double v = raw[i];
    if (!std::isfinite(v)) throw DataError("non-finite value in window");
    if (mode == TransformMode::kLog) {
      if (v <= 0.0)
        throw DataError("nonpositive value " + std::to_string(v) +
                        " under log transform; use the log1p mode for data with zeros");
      logged[i] = std::log(v);
    } else {
      if (v < 0.0) throw DataError("negative value " + std::to_string(v) + " under log1p transform");
      logged[i] = std::log1p(v);
    }
  }
  Transformed out;
  out.offset = logged[0];
  out.values = logged.array() - out.offset;
  return out;
}

double inverse_transform(double value, double offset, TransformMode mode) {
  if (!std::isfinite(value) || !std::isfinite(offset))
    throw NumericError("non-finite input to inverse transform");
  const double x = value + offset;
  const double out = mode == TransformMode::kLog ? std::exp(x) : std::expm1(x);
  if (!std::isfinite(out)) throw NumericError("inverse transform overflow at " + std::to_string(x));
  return out;
}

// ---------------------------------------------------------------------------
// Calendar

HolidayCalendar HolidayCalendar::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open holiday calendar " + path.string());
  HolidayCalendar cal;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto space = line.find_first_of(" \t,");
    const std::string date_text = line.substr(0, space);
    std::string label = space == std::string::npos ? "" : trim(line.substr(space + 1));
    try {
      cal.add(parse_iso_date(date_text), std::move(label));
    } catch (const DataError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return cal;
}

HolidayCalendar HolidayCalendar::us_default(int first_year, int last_year) {
  using namespace std::chrono;
  HolidayCalendar cal;
  for (int y = first_year; y <= last_year; ++y) {
    const year yr{y};
    cal.add(make_date(y, 1, 1), "New Year's Day");
    cal.add(Date(yr / May / Monday[last]), "Memorial Day");
    cal.add(make_date(y, 7, 4), "Independence Day");
    cal.add(Date(yr / November / Thursday[4]), "Thanksgiving");
    cal.add(make_date(y, 12, 25), "Christmas Day");
    cal.add(make_date(y, 12, 31), "New Year's Eve");
  }
  return cal;
}

void HolidayCalendar::add(Date d, std::string label) { dates_[d] = std::move(label); }

std::optional<std::string> HolidayCalendar::label(Date d) const {
  const auto it = dates_.find(d);
  if (it == dates_.end()) return std::nullopt;
  return it->second;
}

void HolidayCalendar::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write holiday calendar " + path.string());
  for (const auto& [d, label] : dates_) {
    out << format_iso_date(d);
    if (!label.empty()) out << ' ' << label;
    out << '\n';
  }
}

Vectord calendar_features(Date d, const HolidayCalendar& calendar, bool holiday_flag) {
  Vectord f = Vectord::Zero(kCalendarFeatureWidth);
  f[day_of_week(d)] = 1.0;
  if (holiday_flag && calendar.contains(d)) f[7] = 1.0;
  return f;
}

// ---------------------------------------------------------------------------
// Windows

std::vector<WindowSample> make_windows(const TimeSeries& series, const WindowOptions& options,
                                       const HolidayCalendar& calendar) {
  const std::size_t T = options.window, H = options.horizon;
  if (T < 1 || H < 1) throw ParameterError("window and horizon must be positive");
  if (options.purpose == WindowPurpose::kPretraining && H >= T)
    throw ParameterError("pretraining horizon must be shorter than the window");
  if (series.size() < T)
    throw DataError("series '" + series.series_id + "' has " + std::to_string(series.size()) +
                    " points, fewer than the window length " + std::to_string(T));
  std::vector<WindowSample> out;
  if (series.size() < T + H) return out;
  const std::size_t count = series.size() - T - H + 1;
  out.reserve(count);
  Vectord raw(static_cast<Eigen::Index>(T + H));
  for (std::size_t s = 0; s < count; ++s) {
    for (std::size_t k = 0; k < T + H; ++k) raw[k] = series.values[s + k];
    const Transformed tr = transform(raw, options.mode);
    WindowSample w;
    w.series_id = series.series_id;
    w.inputs = tr.values.head(T);
    w.target = tr.values.tail(H);
    w.raw_target = raw.tail(H);
    w.offset = tr.offset;
    w.end_date = series.date_at(s + T - 1);
    w.external = calendar_features(w.first_target_date(), calendar, options.holiday_flag);
    out.push_back(std::move(w));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Splits

SplitSpec default_split(Date first, Date last) {
  const auto span = (last - first).count();
  if (span < 3) throw DataError("series too short for a three-way split");
  SplitSpec spec;
  spec.train_end = first + std::chrono::days(static_cast<long>(std::floor(span * 36.0 / 48.0)));
  spec.validation_end = first + std::chrono::days(static_cast<long>(std::floor(span * 40.0 / 48.0)));
  return spec;
}

SplitWindows chronological_split(const std::vector<WindowSample>& windows, const SplitSpec& spec,
                                 Date series_first, Date series_last) {
  if (!(spec.train_end < spec.validation_end))
    throw ParameterError("split requires train_end < validation_end");
  if (!(spec.validation_end < series_last) || spec.train_end < series_first)
    throw ParameterError("split dates " + format_iso_date(spec.train_end) + " / " +
                         format_iso_date(spec.validation_end) + " outside the series range " +
                         format_iso_date(series_first) + " .. " + format_iso_date(series_last));
  SplitWindows out;
  auto partition = [&](Date d) { return d < spec.train_end ? 0 : d < spec.validation_end ? 1 : 2; };
  for (const auto& w : windows) {
    const int part = partition(w.first_target_date());
    if (part != partition(w.last_target_date())) continue;
    (part == 0 ? out.train : part == 1 ? out.validation : out.test).push_back(w);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ingest

std::vector<TimeSeries> ingest_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open data file " + path.string());
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError("missing header 'series_id,date,value' in " + path.string(), 1);
  ++line_no;
  const auto header = split_commas(trim(line));
  if (header != std::vector<std::string>{"series_id", "date", "value"})
    throw ParseError("expected header 'series_id,date,value' in " + path.string(), line_no);

  std::vector<TimeSeries> series;
  std::unordered_map<std::string, std::size_t> index;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_commas(trim(line));
    if (fields.size() != 3 || fields[0].empty())
      throw ParseError("expected 3 fields 'series_id,date,value'", line_no);
    Date date;
    try {
      date = parse_iso_date(fields[1]);
    } catch (const DataError& e) {
      throw ParseError(e.what(), line_no);
    }
    double value = 0.0;
    if (!parse_double(fields[2], value) || !std::isfinite(value))
      throw ParseError("malformed value '" + fields[2] + "'", line_no);
    if (value < 0.0) throw ParseError("negative value " + fields[2], line_no);

    auto [it, inserted] = index.try_emplace(fields[0], series.size());
    if (inserted) {
      series.push_back({fields[0], date, {value}});
      continue;
    }
    TimeSeries& s = series[it->second];
    const Date expected = s.last_date() + std::chrono::days(1);
    if (date <= s.last_date())
      throw DataError("series '" + s.series_id + "': date " + format_iso_date(date) +
                      " is duplicated or out of order (line " + std::to_string(line_no) + ")");
    if (date != expected)
      throw DataError("series '" + s.series_id + "': gap before " + format_iso_date(date) +
                      ", missing " + format_iso_date(expected));
    s.values.push_back(value);
  }
  return series;
}

void write_series_csv(const std::filesystem::path& path, const std::vector<TimeSeries>& series) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "series_id,date,value\n";
  char buf[64];
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", s.values[i]);
      out << s.series_id << ',' << format_iso_date(s.date_at(i)) << ',' << buf << '\n';
    }
}

// ---------------------------------------------------------------------------
// Synthetic

SyntheticSeries generate_synthetic(const SyntheticSpec& spec, const HolidayCalendar& calendar) {
  if (spec.noise_sigma < 0.0) throw ParameterError("noise sigma must be nonnegative");
  if (spec.weekly.size() != 7) throw ParameterError("weekly pattern needs 7 entries");
  nn::SeededRng noise_rng(spec.seed, 0);
  nn::SeededRng spike_rng(spec.seed, 1);

  SyntheticSeries out;
  out.series.series_id = spec.series_id;
  out.series.start = spec.start;
  out.series.values.resize(spec.length);
  out.log_signal.resize(spec.length);
  std::vector<double> logs(spec.length);
  for (std::size_t t = 0; t < spec.length; ++t) {
    const Date d = spec.start + std::chrono::days(static_cast<long>(t));
    const bool shifted = spec.shift_at && t >= *spec.shift_at;
    const double weekly_scale = spec.weekly_scale * (shifted ? spec.shift_weekly_scale : 1.0);
    double signal = spec.level + spec.trend_per_day * double(t) +
                    weekly_scale * spec.weekly[static_cast<std::size_t>(day_of_week(d))] +
                    spec.yearly_amplitude * std::sin(2.0 * std::numbers::pi * double(t) / 365.25);
    if (calendar.contains(d)) signal += spec.holiday_lift;
    if (shifted) signal += spec.shift_level;
    out.log_signal[t] = signal;
    logs[t] = signal + (spec.noise_sigma > 0.0 ? noise_rng.normal(0.0, spec.noise_sigma) : 0.0);
  }

  if (spec.spike_count > 0) {
    const std::size_t to = spec.spike_to == 0 ? spec.length : std::min(spec.spike_to, spec.length);
    if (spec.spike_from >= to || to - spec.spike_from < spec.spike_count)
      throw ParameterError("spike range too small for the requested spike count");
    std::set<std::size_t> chosen;
    while (chosen.size() < spec.spike_count) {
      const auto span = to - spec.spike_from;
      chosen.insert(spec.spike_from + static_cast<std::size_t>(spike_rng.uniform() * double(span)));
    }
    out.spike_indices.assign(chosen.begin(), chosen.end());
    for (std::size_t t : out.spike_indices) logs[t] += spec.spike_sigmas * spec.noise_sigma;
  }
  for (std::size_t t = 0; t < spec.length; ++t) out.series.values[t] = std::exp(logs[t]);
  return out;
}

}  // namespace tsuq
