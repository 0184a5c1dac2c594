#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "issuelab/model.hpp"
#include "issuelab/temporal.hpp"

namespace issuelab {

/// Parameters of one New Issue Notifier run.
struct SimConfig {
  Seconds iap = 6 * kMonth;      // initial assessment period
  Seconds horizon = 3 * kYear;   // measured from repository creation
  double acceptance_probability = 0.3;
  Seconds alpha = kDefaultAlpha;
  std::uint64_t seed = 0;
  std::size_t min_iap_issues = 3;
  /// Replace post-assessment real issues with gaps resampled from the
  /// assessment-period gaps. Synthetic studies only.
  bool generative = false;
  /// Uniform delay in [0, jitter) added to each notification. 0 = fixed waits.
  Seconds jitter = 0;
};

/// Throws issuelab::Error when the probability is outside [0,1], the horizon
/// does not extend past the IAP, or alpha/jitter are negative.
void check(const SimConfig& config);

enum class SimEventKind {
  RealIssue,
  NotificationFired,
  NotificationAccepted,
  NotificationIgnored,
  InjectedIssue,
};

std::string_view to_string(SimEventKind kind);

struct SimEvent {
  Seconds time = 0;
  SimEventKind kind = SimEventKind::RealIssue;
  /// The waiting time in force right after the event.
  Seconds idm_at_event = 0;

  bool operator==(const SimEvent&) const = default;
};

struct SimResult {
  std::string repo;
  bool excluded = false;
  std::string exclusion_reason;

  /// Events between the end of the assessment period and the horizon.
  std::vector<SimEvent> events;
  Distribution before;  // real issues only
  Distribution after;   // real and injected issues
  /// Share of gaps ending in an injected issue, labeled against the
  /// `after` median. All zeros when nothing was injected.
  Distribution injected_only;
  std::size_t injected = 0;
  Seconds initial_idm = 0;
  Seconds final_idm = 0;

  /// Opening times inside [created_at, created_at + horizon].
  std::vector<Seconds> real_times;
  std::vector<Seconds> all_times;
};

/// Replays the repository's issues and fires a notification whenever the
/// current IDM elapses without a new issue. Accepted notifications inject an
/// issue; every issue (real or injected) re-arms the clock with a freshly
/// computed IDM. Deterministic in (repo, config).
SimResult simulate(const Repository& repo, const SimConfig& config);

/// One "time<TAB>kind<TAB>idm" line per event.
void write_event_log(const SimResult& result, std::ostream& out);

struct Table3Row {
  Category category = Category::Random;
  double acceptance_probability = 0;
  Distribution before;
  Distribution after;
  double injected_regular = 0;  // mean regular% among injected-only gaps
  std::size_t repos = 0;
  std::size_t excluded = 0;
};

struct TimelineRow {
  std::string repo;
  Category category = Category::Random;
  std::optional<double> acceptance_probability;  // empty for the "before" phase
  std::string phase;                             // "before" or "after"
  TimelinePoint point;
};

struct CorpusSimulation {
  std::vector<Table3Row> rows;  // ordered by category, then config order
  std::vector<TimelineRow> timelines;
  std::vector<std::string> warnings;
  /// Per-config, per-repo results in corpus order.
  std::vector<std::vector<SimResult>> results;
};

struct CorpusSimOptions {
  Seconds timeline_window = 30 * kDay;
  unsigned workers = 0;
};

/// Runs every config over every repository and averages the `after`
/// distributions per category (unweighted across repositories).
CorpusSimulation simulate_corpus(const Corpus& corpus, const std::vector<SimConfig>& configs,
                                 const CorpusSimOptions& options = {});

/// Uniform [0,1) draw from a 64-bit Mersenne Twister; portable across
/// standard libraries, unlike std::uniform_real_distribution.
double unit_draw(std::uint64_t bits);

}  // namespace issuelab
