#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tsuq/nn/types.hpp"

namespace tsuq {

using nn::Matrixd;
using nn::Vectord;

// ---------------------------------------------------------------------------
// Dates

using Date = std::chrono::sys_days;

Date parse_iso_date(const std::string& text);
std::string format_iso_date(Date d);
Date make_date(int year, unsigned month, unsigned day);
/// Monday = 0, ..., Sunday = 6.
int day_of_week(Date d);

// ---------------------------------------------------------------------------
// Series and windows

/// Daily univariate series without gaps; the date of points[i] is start + i days.
struct TimeSeries {
  std::string series_id;
  Date start{};
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  Date date_at(std::size_t i) const { return start + std::chrono::days(static_cast<long>(i)); }
  Date last_date() const { return date_at(values.size() - 1); }
};

enum class TransformMode : std::uint8_t { kLog = 0, kLog1p = 1 };

std::string to_string(TransformMode mode);
TransformMode parse_transform_mode(const std::string& text);

struct Transformed {
  Vectord values;  // first entry is 0
  double offset;   // log of the first raw value
};

/// Log-transform then subtract the first entry.
Transformed transform(const Vectord& raw, TransformMode mode = TransformMode::kLog);
double inverse_transform(double value, double offset, TransformMode mode = TransformMode::kLog);

enum class WindowPurpose : std::uint8_t { kPrediction, kPretraining };

/// One transformed input window with its target(s) and calendar features for
/// the first target day.
struct WindowSample {
  std::string series_id;
  Vectord inputs;    // length T, inputs[0] == 0
  Vectord target;    // length horizon (1 for prediction windows)
  Vectord raw_target;
  double offset = 0.0;
  Vectord external;  // calendar features of the first target date
  Date end_date{};   // date of the last input day
  Date first_target_date() const { return end_date + std::chrono::days(1); }
  Date last_target_date() const { return end_date + std::chrono::days(target.size()); }
};

class HolidayCalendar {
 public:
  HolidayCalendar() = default;

  /// One ISO date per line, optional label after whitespace; '#' starts a comment.
  static HolidayCalendar load(const std::filesystem::path& path);
  /// Six U.S. holidays (New Year's Day, Memorial Day, Independence Day,
  /// Thanksgiving, Christmas, New Year's Eve) for the given year range.
  static HolidayCalendar us_default(int first_year = 2010, int last_year = 2035);

  void add(Date d, std::string label = {});
  bool contains(Date d) const { return dates_.count(d) > 0; }
  std::optional<std::string> label(Date d) const;
  std::size_t size() const { return dates_.size(); }
  void save(const std::filesystem::path& path) const;

 private:
  std::map<Date, std::string> dates_;
};

inline constexpr Eigen::Index kCalendarFeatureWidth = 8;

/// Day-of-week one-hot (Monday first) followed by the holiday indicator.
Vectord calendar_features(Date d, const HolidayCalendar& calendar, bool holiday_flag = true);

struct WindowOptions {
  std::size_t window = 28;
  std::size_t horizon = 1;
  WindowPurpose purpose = WindowPurpose::kPrediction;
  TransformMode mode = TransformMode::kLog;
  bool holiday_flag = true;
};

/// Step-1 sliding windows; yields L - T - H + 1 samples (zero when the series
/// has no complete target).
std::vector<WindowSample> make_windows(const TimeSeries& series, const WindowOptions& options,
                                       const HolidayCalendar& calendar);

// ---------------------------------------------------------------------------
// Splits

/// Half-open partitions: train targets fall before train_end, validation
/// targets in [train_end, validation_end), test targets on or after
/// validation_end. A target on a boundary day belongs to the later partition.
struct SplitSpec {
  Date train_end{};
  Date validation_end{};
};

/// 36 : 4 : 8 month proportions over [first, last].
SplitSpec default_split(Date first, Date last);

struct SplitWindows {
  std::vector<WindowSample> train, validation, test;
};

/// Assigns each window to the partition containing all of its target dates.
/// Multi-step windows whose targets straddle a boundary are dropped.
SplitWindows chronological_split(const std::vector<WindowSample>& windows, const SplitSpec& spec,
                                 Date series_first, Date series_last);

// ---------------------------------------------------------------------------
// Ingest

std::vector<TimeSeries> ingest_csv(const std::filesystem::path& path);
void write_series_csv(const std::filesystem::path& path, const std::vector<TimeSeries>& series);

// ---------------------------------------------------------------------------
// Synthetic data

struct SyntheticSpec {
  std::string series_id = "synthetic";
  Date start = make_date(2014, 1, 1);
  std::size_t length = 4 * 365;
  double level = 8.0;               // log scale
  double trend_per_day = 2e-4;      // log scale
  std::vector<double> weekly = {0.0, 0.05, 0.08, 0.1, 0.25, 0.35, -0.1};
  double weekly_scale = 1.0;
  double yearly_amplitude = 0.1;
  double holiday_lift = 0.0;        // log-scale effect added on holidays
  double noise_sigma = 0.1;
  std::size_t spike_count = 0;
  double spike_sigmas = 6.0;        // spike magnitude in units of noise_sigma
  std::size_t spike_from = 0;       // spikes land in [spike_from, spike_to)
  std::size_t spike_to = 0;         // 0 means series end
  std::optional<std::size_t> shift_at;  // regime shift start index
  double shift_level = 0.0;
  double shift_weekly_scale = 1.0;
  std::uint64_t seed = 1;
};

struct SyntheticSeries {
  TimeSeries series;
  std::vector<double> log_signal;      // noise-free log value per day (spikes excluded)
  std::vector<std::size_t> spike_indices;
};

/// exp(trend + weekly + yearly + holiday + noise), deterministic for the seed.
SyntheticSeries generate_synthetic(const SyntheticSpec& spec, const HolidayCalendar& calendar);

}  // namespace tsuq
