#pragma once

#include <optional>
#include <vector>

#include "tsuq/config.hpp"
#include "tsuq/pipeline.hpp"

namespace tsuq {

/// A series together with its windows split into train / validation / test.
struct SeriesWindows {
  TimeSeries series;
  SplitSpec split;
  SplitWindows windows;
};

/// Windows every series and splits each one chronologically. Without an
/// explicit spec each series uses the default 36:4:8 month proportions.
std::vector<SeriesWindows> prepare_windows(const std::vector<TimeSeries>& series, const WindowOptions& options,
                                           const HolidayCalendar& calendar,
                                           const std::optional<SplitSpec>& spec = std::nullopt);

std::vector<WindowSample> pooled_train(const std::vector<SeriesWindows>& s);
std::vector<WindowSample> pooled_validation(const std::vector<SeriesWindows>& s);
std::vector<WindowSample> pooled_test(const std::vector<SeriesWindows>& s);

/// A panel of related synthetic series (levels and weekly strength vary with
/// the series index; every series uses its own seed).
std::vector<SyntheticSeries> synthetic_panel(const SynthConfig& cfg, const HolidayCalendar& calendar,
                                             std::uint64_t seed);

/// Index of the first day after the default validation period.
std::size_t default_test_start(std::size_t length);

}  // namespace tsuq
