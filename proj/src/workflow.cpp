#include "tsuq/workflow.hpp"

#include <chrono>

#include "tsuq/errors.hpp"

namespace tsuq {

std::vector<SeriesWindows> prepare_windows(const std::vector<TimeSeries>& series, const WindowOptions& options,
                                           const HolidayCalendar& calendar, const std::optional<SplitSpec>& spec) {
  std::vector<SeriesWindows> out;
  out.reserve(series.size());
  for (const auto& s : series) {
    if (s.size() == 0) throw DataError("series '" + s.series_id + "' is empty");
    SeriesWindows sw;
    sw.series = s;
    sw.split = spec ? *spec : default_split(s.start, s.last_date());
    sw.windows = chronological_split(make_windows(s, options, calendar), sw.split, s.start, s.last_date());
    out.push_back(std::move(sw));
  }
  return out;
}

namespace {
template <typename Member>
std::vector<WindowSample> pool(const std::vector<SeriesWindows>& s, Member member) {
  std::vector<WindowSample> out;
  for (const auto& sw : s) {
    const auto& part = sw.windows.*member;
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}
}  // namespace

std::vector<WindowSample> pooled_train(const std::vector<SeriesWindows>& s) { return pool(s, &SplitWindows::train); }
std::vector<WindowSample> pooled_validation(const std::vector<SeriesWindows>& s) {
  return pool(s, &SplitWindows::validation);
}
std::vector<WindowSample> pooled_test(const std::vector<SeriesWindows>& s) { return pool(s, &SplitWindows::test); }

std::size_t default_test_start(std::size_t length) {
  const Date first = make_date(2000, 1, 1);
  const Date last = first + std::chrono::days(static_cast<long>(length - 1));
  const SplitSpec spec = default_split(first, last);
  return static_cast<std::size_t>((spec.validation_end - first).count());
}

std::vector<SyntheticSeries> synthetic_panel(const SynthConfig& cfg, const HolidayCalendar& calendar,
                                             std::uint64_t seed) {
  std::vector<SyntheticSeries> out;
  const std::size_t test_start = default_test_start(cfg.length);
  for (std::size_t i = 0; i < cfg.series; ++i) {
    SyntheticSpec spec;
    spec.series_id = "series_" + std::to_string(i);
    spec.start = cfg.start;
    spec.length = cfg.length;
    spec.level = 7.5 + 0.35 * double(i);
    spec.trend_per_day = cfg.trend_per_day * (1.0 + 0.25 * double(i % 3));
    spec.weekly_scale = 0.8 + 0.1 * double(i % 5);
    spec.yearly_amplitude = cfg.yearly_amplitude;
    spec.holiday_lift = cfg.holiday_lift;
    spec.noise_sigma = cfg.noise_sigma;
    spec.spike_count = cfg.spikes;
    spec.spike_sigmas = cfg.spike_sigmas;
    spec.spike_from = test_start;
    if (cfg.shift_at > 0) {
      spec.shift_at = cfg.shift_at;
      spec.shift_level = cfg.shift_level;
      spec.shift_weekly_scale = cfg.shift_weekly_scale;
    }
    spec.seed = seed * 1000 + i;
    out.push_back(generate_synthetic(spec, calendar));
  }
  return out;
}

}  // namespace tsuq
