#include "issuelab/nin_sim.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

#include <fmt/format.h>

#include "issuelab/errors.hpp"
#include "issuelab/parallel.hpp"

namespace issuelab {

namespace {

constexpr std::uint64_t kGenerativeStream = 0x9E3779B97F4A7C15ULL;

struct TimelineEntry {
  Seconds time;
  bool injected;
};

// Real issues after the assessment period, either replayed or resampled.
std::vector<Seconds> post_iap_arrivals(const std::vector<Seconds>& real, Seconds iap_end,
                                       Seconds horizon_end, const std::vector<Seconds>& iap_gaps,
                                       Seconds last_iap_time, const SimConfig& config) {
  std::vector<Seconds> out;
  if (!config.generative) {
    for (Seconds t : real) {
      if (t > iap_end && t <= horizon_end) out.push_back(t);
    }
    return out;
  }
  std::mt19937_64 gen(config.seed ^ kGenerativeStream);
  Seconds t = last_iap_time;
  while (true) {
    const auto pick = static_cast<std::size_t>(unit_draw(gen()) * static_cast<double>(iap_gaps.size()));
    t += iap_gaps[std::min(pick, iap_gaps.size() - 1)];
    if (t > horizon_end) break;
    if (t > iap_end) out.push_back(t);
  }
  return out;
}

}  // namespace

double unit_draw(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

void check(const SimConfig& config) {
  if (!(config.acceptance_probability >= 0 && config.acceptance_probability <= 1)) {
    throw Error(fmt::format("acceptance probability {} outside [0,1]", config.acceptance_probability));
  }
  if (!(config.iap >= 0) || !(config.horizon > config.iap)) {
    throw Error("horizon must extend past the initial assessment period");
  }
  if (!(config.alpha >= 0)) throw Error("alpha must be >= 0");
  if (!(config.jitter >= 0)) throw Error("jitter must be >= 0");
}

std::string_view to_string(SimEventKind kind) {
  switch (kind) {
    case SimEventKind::RealIssue:
      return "RealIssue";
    case SimEventKind::NotificationFired:
      return "NotificationFired";
    case SimEventKind::NotificationAccepted:
      return "NotificationAccepted";
    case SimEventKind::NotificationIgnored:
      return "NotificationIgnored";
    case SimEventKind::InjectedIssue:
      return "InjectedIssue";
  }
  return "RealIssue";
}

SimResult simulate(const Repository& repo, const SimConfig& config) {
  check(config);
  SimResult result;
  result.repo = repo.id;

  const auto created = static_cast<Seconds>(repo.created_at);
  const Seconds iap_end = created + config.iap;
  const Seconds horizon_end = created + config.horizon;

  std::vector<Seconds> real;
  for (const auto& issue : repo.issues) {
    const auto t = static_cast<Seconds>(issue.created_at);
    if (t >= created && t <= horizon_end) real.push_back(t);
  }
  std::sort(real.begin(), real.end());

  std::vector<Seconds> iap_times;
  for (Seconds t : real) {
    if (t <= iap_end) iap_times.push_back(t);
  }
  if (iap_times.size() < config.min_iap_issues) {
    result.excluded = true;
    result.exclusion_reason = fmt::format("{} issue(s) in the assessment period, need {}",
                                          iap_times.size(), config.min_iap_issues);
    return result;
  }

  RunningMedian median;
  std::vector<Seconds> iap_gaps;
  for (std::size_t i = 1; i < iap_times.size(); ++i) {
    const Seconds d = iap_times[i] - iap_times[i - 1];
    if (d > 0) {
      median.add(d);
      iap_gaps.push_back(d);
    }
  }
  if (median.empty()) {
    result.excluded = true;
    result.exclusion_reason = "assessment-period issues share a single timestamp";
    return result;
  }

  std::vector<TimelineEntry> timeline;
  for (Seconds t : iap_times) timeline.push_back({t, false});

  const std::vector<Seconds> arrivals =
      post_iap_arrivals(real, iap_end, horizon_end, iap_gaps, iap_times.back(), config);

  std::mt19937_64 gen(config.seed);
  Seconds current_idm = median.median();
  result.initial_idm = current_idm;
  Seconds t_last = iap_times.back();

  auto record_issue = [&](Seconds t, bool injected) {
    const Seconds d = t - t_last;
    if (d > 0) median.add(d);
    current_idm = median.median();
    t_last = t;
    timeline.push_back({t, injected});
    result.events.push_back(
        {t, injected ? SimEventKind::InjectedIssue : SimEventKind::RealIssue, current_idm});
  };
  auto jitter = [&]() -> Seconds {
    return config.jitter > 0 ? unit_draw(gen()) * config.jitter : 0.0;
  };

  // The notifier wakes on the IDM grid anchored at the last issue; the first
  // slot it can act on is the one at or after the end of the assessment.
  Seconds steps = std::max(1.0, std::ceil((iap_end - t_last) / current_idm));
  Seconds deadline = t_last + steps * current_idm + jitter();

  std::size_t next_real = 0;
  while (true) {
    if (next_real < arrivals.size() && arrivals[next_real] <= deadline) {
      record_issue(arrivals[next_real++], false);
      deadline = t_last + current_idm + jitter();
      continue;
    }
    if (deadline > horizon_end) break;

    result.events.push_back({deadline, SimEventKind::NotificationFired, current_idm});
    if (unit_draw(gen()) < config.acceptance_probability) {
      result.events.push_back({deadline, SimEventKind::NotificationAccepted, current_idm});
      ++result.injected;
      record_issue(deadline, true);
      deadline = t_last + current_idm + jitter();
    } else {
      result.events.push_back({deadline, SimEventKind::NotificationIgnored, current_idm});
      deadline += current_idm + jitter();
    }
  }
  result.final_idm = current_idm;

  result.real_times = real;
  result.all_times.reserve(timeline.size());
  for (const auto& e : timeline) result.all_times.push_back(e.time);

  result.before = classify_gaps(gaps_from_times(real), config.alpha).distribution;

  // timeline is already in time order; keep it that way so the injected
  // flags line up with the gaps.
  std::vector<Seconds> durations;
  for (std::size_t i = 1; i < timeline.size(); ++i) {
    durations.push_back(timeline[i].time - timeline[i - 1].time);
  }
  const Seconds after_median = median_of_positive(durations);
  std::vector<GapLabel> all_labels, injected_labels;
  for (std::size_t i = 0; i < durations.size(); ++i) {
    const GapLabel l = label_gap(durations[i], after_median, config.alpha);
    all_labels.push_back(l);
    if (timeline[i + 1].injected) injected_labels.push_back(l);
  }
  result.after = distribution_of(all_labels);
  result.injected_only = distribution_of(injected_labels);
  return result;
}

void write_event_log(const SimResult& result, std::ostream& out) {
  for (const auto& e : result.events) {
    out << fmt::format("{}\t{}\t{}\n", e.time, to_string(e.kind), e.idm_at_event);
  }
}

CorpusSimulation simulate_corpus(const Corpus& corpus, const std::vector<SimConfig>& configs,
                                 const CorpusSimOptions& options) {
  CorpusSimulation out;
  for (const auto& c : configs) check(c);
  if (corpus.repos.empty()) {
    out.warnings.push_back("empty corpus: nothing to simulate");
    return out;
  }

  const std::size_t n = corpus.repos.size();
  out.results.assign(configs.size(), std::vector<SimResult>(n));
  parallel_for(
      configs.size() * n,
      [&](std::size_t k) {
        const std::size_t ci = k / n, ri = k % n;
        out.results[ci][ri] = simulate(corpus.repos[ri], configs[ci]);
      },
      options.workers);

  for (Category category : kAllCategories) {
    bool present = false;
    for (const auto& repo : corpus.repos) present = present || repo.category == category;
    if (!present) continue;

    for (std::size_t ci = 0; ci < configs.size(); ++ci) {
      Table3Row row;
      row.category = category;
      row.acceptance_probability = configs[ci].acceptance_probability;
      for (std::size_t ri = 0; ri < n; ++ri) {
        if (corpus.repos[ri].category != category) continue;
        const SimResult& r = out.results[ci][ri];
        if (r.excluded) {
          ++row.excluded;
          continue;
        }
        ++row.repos;
        row.before.dense += r.before.dense;
        row.before.regular += r.before.regular;
        row.before.dispersed += r.before.dispersed;
        row.after.dense += r.after.dense;
        row.after.regular += r.after.regular;
        row.after.dispersed += r.after.dispersed;
        row.injected_regular += r.injected_only.regular;
      }
      if (row.repos == 0) {
        out.warnings.push_back(fmt::format("category {} has no eligible repositories at AP {}",
                                           to_string(category), row.acceptance_probability));
        continue;
      }
      const double m = static_cast<double>(row.repos);
      for (Distribution* d : {&row.before, &row.after}) {
        d->dense /= m;
        d->regular /= m;
        d->dispersed /= m;
      }
      row.injected_regular /= m;
      out.rows.push_back(row);
    }
  }

  // Fig.-6-style regular share over time, per repository.
  for (std::size_t ri = 0; ri < n; ++ri) {
    const Repository& repo = corpus.repos[ri];
    bool before_done = false;
    for (std::size_t ci = 0; ci < configs.size(); ++ci) {
      const SimResult& r = out.results[ci][ri];
      if (r.excluded) continue;
      if (!before_done) {
        for (const auto& p : regular_fraction_timeline(r.real_times, options.timeline_window,
                                                       configs[ci].alpha)) {
          out.timelines.push_back({repo.id, repo.category, std::nullopt, "before", p});
        }
        before_done = true;
      }
      for (const auto& p : regular_fraction_timeline(r.all_times, options.timeline_window,
                                                     configs[ci].alpha)) {
        out.timelines.push_back(
            {repo.id, repo.category, configs[ci].acceptance_probability, "after", p});
      }
    }
  }
  return out;
}

}  // namespace issuelab
