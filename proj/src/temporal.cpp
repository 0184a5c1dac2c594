#include "issuelab/temporal.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "issuelab/errors.hpp"

namespace issuelab {

std::string_view to_string(GapLabel label) {
  switch (label) {
    case GapLabel::Dense:
      return "Dense";
    case GapLabel::Regular:
      return "Regular";
    case GapLabel::Dispersed:
      return "Dispersed";
  }
  return "Dense";
}

GapSeries gaps_from_times(std::vector<Seconds> times, std::string repo) {
  std::sort(times.begin(), times.end());
  GapSeries series{std::move(repo), {}};
  if (times.size() < 2) return series;
  series.gaps.reserve(times.size() - 1);
  for (std::size_t i = 1; i < times.size(); ++i) {
    series.gaps.push_back({times[i - 1], times[i] - times[i - 1]});
  }
  return series;
}

GapSeries issue_gaps(const Repository& repo) {
  std::vector<Seconds> times;
  times.reserve(repo.issues.size());
  for (const auto& issue : repo.issues) times.push_back(static_cast<Seconds>(issue.created_at));
  return gaps_from_times(std::move(times), repo.id);
}

Seconds median_of_positive(std::span<const Seconds> durations) {
  std::vector<Seconds> positive;
  positive.reserve(durations.size());
  for (Seconds d : durations) {
    if (d > 0) positive.push_back(d);
  }
  if (positive.empty()) throw InsufficientData("no positive-duration gap to take a median of");
  const std::size_t mid = positive.size() / 2;
  std::nth_element(positive.begin(), positive.begin() + mid, positive.end());
  const Seconds upper = positive[mid];
  if (positive.size() % 2 == 1) return upper;
  const Seconds lower = *std::max_element(positive.begin(), positive.begin() + mid);
  return (lower + upper) / 2;
}

Seconds idm(const GapSeries& series) {
  std::vector<Seconds> durations;
  durations.reserve(series.gaps.size());
  for (const auto& g : series.gaps) durations.push_back(g.duration);
  return median_of_positive(durations);
}

GapLabel label_gap(Seconds duration, Seconds median, Seconds alpha) {
  if (duration <= 0) return GapLabel::Dense;
  if (duration < median - alpha) return GapLabel::Dense;
  if (duration > median + alpha) return GapLabel::Dispersed;
  return GapLabel::Regular;
}

Distribution distribution_of(std::span<const GapLabel> labels) {
  if (labels.empty()) return {};
  std::size_t dense = 0, regular = 0, dispersed = 0;
  for (GapLabel l : labels) {
    switch (l) {
      case GapLabel::Dense:
        ++dense;
        break;
      case GapLabel::Regular:
        ++regular;
        break;
      case GapLabel::Dispersed:
        ++dispersed;
        break;
    }
  }
  const double n = static_cast<double>(labels.size());
  return {100.0 * static_cast<double>(dense) / n, 100.0 * static_cast<double>(regular) / n,
          100.0 * static_cast<double>(dispersed) / n};
}

Classification classify_gaps(const GapSeries& series, Seconds alpha) {
  Classification out;
  out.alpha = alpha;
  out.median = idm(series);
  out.labels.reserve(series.gaps.size());
  for (const auto& g : series.gaps) out.labels.push_back(label_gap(g.duration, out.median, alpha));
  out.distribution = distribution_of(out.labels);
  return out;
}

void RunningMedian::add(Seconds value) {
  if (low_.empty() || value <= low_.front()) {
    low_.push_back(value);
    std::push_heap(low_.begin(), low_.end());
  } else {
    high_.push_back(value);
    std::push_heap(high_.begin(), high_.end(), std::greater<>{});
  }
  if (low_.size() > high_.size() + 1) {
    std::pop_heap(low_.begin(), low_.end());
    high_.push_back(low_.back());
    low_.pop_back();
    std::push_heap(high_.begin(), high_.end(), std::greater<>{});
  } else if (high_.size() > low_.size()) {
    std::pop_heap(high_.begin(), high_.end(), std::greater<>{});
    low_.push_back(high_.back());
    high_.pop_back();
    std::push_heap(low_.begin(), low_.end());
  }
}

Seconds RunningMedian::median() const {
  if (low_.empty()) throw InsufficientData("no positive-duration gap to take a median of");
  if (low_.size() > high_.size()) return low_.front();
  return (low_.front() + high_.front()) / 2;
}

std::vector<TimelinePoint> regular_fraction_timeline(std::vector<Seconds> times, Seconds window,
                                                     Seconds alpha) {
  std::vector<TimelinePoint> out;
  if (times.size() < 2 || !(window > 0)) return out;
  const GapSeries series = gaps_from_times(std::move(times));
  const Seconds origin = series.gaps.front().start;

  RunningMedian median;
  std::size_t i = 0;
  const auto& gaps = series.gaps;
  while (i < gaps.size()) {
    const Seconds end_of_first = gaps[i].start + gaps[i].duration;
    const auto k = static_cast<std::int64_t>(std::floor((end_of_first - origin) / window));
    const Seconds window_start = origin + static_cast<Seconds>(k) * window;
    const Seconds window_end = window_start + window;

    std::size_t j = i;
    while (j < gaps.size() && gaps[j].start + gaps[j].duration < window_end) {
      if (gaps[j].duration > 0) median.add(gaps[j].duration);
      ++j;
    }
    std::size_t regular = 0;
    if (!median.empty()) {
      const Seconds m = median.median();
      for (std::size_t g = i; g < j; ++g) {
        if (label_gap(gaps[g].duration, m, alpha) == GapLabel::Regular) ++regular;
      }
    }
    out.push_back({window_start, 100.0 * static_cast<double>(regular) / static_cast<double>(j - i),
                   j - i});
    i = j;
  }
  return out;
}

std::vector<TimelinePoint> regular_fraction_timeline(const Repository& repo, Seconds window,
                                                     Seconds alpha) {
  std::vector<Seconds> times;
  times.reserve(repo.issues.size());
  for (const auto& issue : repo.issues) times.push_back(static_cast<Seconds>(issue.created_at));
  return regular_fraction_timeline(std::move(times), window, alpha);
}

}  // namespace issuelab
