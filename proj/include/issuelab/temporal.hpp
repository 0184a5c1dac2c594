#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "issuelab/model.hpp"
#include "issuelab/time.hpp"

namespace issuelab {

inline constexpr Seconds kDefaultAlpha = 6 * kHour;

struct Gap {
  Seconds start = 0;     // opening time of the earlier issue
  Seconds duration = 0;  // >= 0; zero for issues opened in the same second
};

struct GapSeries {
  std::string repo;
  std::vector<Gap> gaps;
};

enum class GapLabel { Dense, Regular, Dispersed };

std::string_view to_string(GapLabel label);

/// Percentages of each label; they add up to 100.
struct Distribution {
  double dense = 0;
  double regular = 0;
  double dispersed = 0;

  bool operator==(const Distribution&) const = default;
};

struct Classification {
  std::vector<GapLabel> labels;  // one per gap
  Distribution distribution;
  Seconds median = 0;
  Seconds alpha = kDefaultAlpha;
};

/// Successive differences of the repository's issue opening times.
GapSeries issue_gaps(const Repository& repo);

/// Same, for a bare list of opening times (sorted here, ties kept).
GapSeries gaps_from_times(std::vector<Seconds> times, std::string repo = {});

/// Issue Distances Median: the median of the positive durations, averaging
/// the two central values for an even count. Throws InsufficientData when no
/// positive duration exists.
Seconds idm(const GapSeries& series);
Seconds median_of_positive(std::span<const Seconds> durations);

/// Band rule against a fixed median. Zero durations are burst activity and
/// always count as Dense.
GapLabel label_gap(Seconds duration, Seconds median, Seconds alpha);

/// Labels each gap against the series' own IDM.
Classification classify_gaps(const GapSeries& series, Seconds alpha = kDefaultAlpha);

/// Percentages of each label; an empty input yields all zeros.
Distribution distribution_of(std::span<const GapLabel> labels);

struct TimelinePoint {
  Seconds window_start = 0;
  double regular_pct = 0;
  std::size_t gaps = 0;
};

/// Regular share of the gaps ending in each window, each judged against the
/// median of every gap that ended before the window closed. Windows are laid
/// from the first opening time; windows without gaps emit nothing.
std::vector<TimelinePoint> regular_fraction_timeline(const Repository& repo, Seconds window,
                                                     Seconds alpha = kDefaultAlpha);
std::vector<TimelinePoint> regular_fraction_timeline(std::vector<Seconds> times, Seconds window,
                                                     Seconds alpha = kDefaultAlpha);

/// Maintains the median of a growing multiset of positive values.
class RunningMedian {
 public:
  void add(Seconds value);
  bool empty() const { return low_.empty(); }
  std::size_t size() const { return low_.size() + high_.size(); }
  /// Throws InsufficientData when empty.
  Seconds median() const;

 private:
  // low_ is a max-heap, high_ a min-heap; |low_| == |high_| or |high_| + 1.
  std::vector<Seconds> low_;
  std::vector<Seconds> high_;
};

}  // namespace issuelab
