#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "issuelab/model.hpp"
#include "issuelab/sentiment.hpp"
#include "issuelab/stats.hpp"

namespace issuelab {

// ---------------------------------------------------------------------------
// Repository summary

/// Mean over the repositories where the quantity is defined.
struct Mean {
  double value = std::numeric_limits<double>::quiet_NaN();
  std::size_t n = 0;
  bool defined() const { return n > 0; }
};

/// Per-repository quantities behind the summary. Unset when undefined for
/// this repository (e.g. hours to close with no closed issue).
struct RepoMetrics {
  std::string repo;
  double issues = 0;
  std::optional<double> closed_pct;
  std::optional<double> comments_per_closed_issue;
  std::optional<double> comments_per_open_issue;
  std::optional<double> mean_sentiment;  // unset when the repo has no comments
  std::optional<double> reviewers_per_issue;
  double contributors = 0;
  double owner_followers = 0;
  std::optional<double> opener_followers;
  std::optional<double> closer_followers;
  std::optional<double> lines_added_per_issue;
  std::optional<double> lines_removed_per_issue;
  std::optional<double> days_to_first_issue;
  std::optional<double> hours_between_issue_openings;
  std::optional<double> hours_to_close;
  double commits = 0;
  std::optional<double> commits_before_first_issue;
  std::optional<double> commits_between_issues;
};

struct MetricOptions {
  /// Count only commit churn explicitly linked to issues instead of the
  /// churn committed since the previous issue opening.
  bool linked_only = false;
  const SentimentLexicon* lexicon = nullptr;  // bundled when null
};

RepoMetrics repo_metrics(const Repository& repo, const Corpus& corpus,
                         const MetricOptions& options = {});

struct RepoSummary {
  std::size_t repos = 0;
  Mean issues_per_repo;
  Mean closed_pct;
  Mean comments_per_closed_issue;
  Mean comments_per_open_issue;
  Mean mean_sentiment;
  Mean reviewers_per_issue;
  Mean contributors;
  Mean owner_followers;
  Mean opener_followers;
  Mean closer_followers;
  Mean lines_added_per_issue;
  Mean lines_removed_per_issue;
  Mean days_to_first_issue;
  Mean hours_between_issue_openings;
  Mean hours_to_close;
  Mean commits_per_repo;
  Mean commits_before_first_issue;
  Mean commits_between_issues;
};

struct SummaryField {
  std::string_view name;
  Mean RepoSummary::*member;
};

/// Summary rows in presentation order.
const std::vector<SummaryField>& summary_fields();

/// Unweighted means across the selected repositories. Throws EmptySelection
/// when nothing matches the filter.
RepoSummary repo_summary(const Corpus& corpus, std::optional<Category> category,
                         const MetricOptions& options = {});

// ---------------------------------------------------------------------------
// Correlations

struct CorrelationRow {
  std::string feature;
  double r = std::numeric_limits<double>::quiet_NaN();
  double p = std::numeric_limits<double>::quiet_NaN();
  std::size_t n = 0;
  std::string note;  // why r/p are missing, empty otherwise
};

struct CorrelationReport {
  std::optional<Category> category;
  std::string target;
  std::vector<CorrelationRow> rows;
};

/// Names understood by feature_value(): issues, repo_age, contributors,
/// issue_comments, commits, reviewers, commits_before_first_issue,
/// commits_between_issues, issue_opener_followers, repo_owner_followers,
/// stars, forks, watchers, ics.
const std::vector<std::string>& known_features();
const std::vector<std::string>& issue_count_features();  // rows of the issue-count table
const std::vector<std::string>& ics_features();          // rows of the ICS table

/// Value of a named feature for one repository; unset when undefined.
/// Throws issuelab::Error for an unknown name.
std::optional<double> feature_value(const Repository& repo, const Corpus& corpus,
                                    std::string_view feature);

/// Pearson r/p between `target` and each feature over the selected
/// repositories, pairing only repositories where both are defined.
/// Throws EmptySelection with fewer than 3 repositories selected; a
/// degenerate feature yields a row with a note instead of an exception.
CorrelationReport correlate_features(const Corpus& corpus, std::optional<Category> category,
                                     const std::string& target,
                                     const std::vector<std::string>& features);

// ---------------------------------------------------------------------------
// Expertise coverage

struct CoveragePoint {
  double reviewer_rank_pct = 0;
  double issues_covered_pct = 0;
};

struct CoverageReport {
  std::string scope;  // repository id or category name
  std::vector<CoveragePoint> curve;
  double popularity_ratio = 0;      // [0,1]
  double top20_issue_coverage = 0;  // [0,1]
  double mean_reviewer_followers = 0;
  std::size_t reviewers = 0;
  std::size_t issues = 0;
  std::size_t top_count = 0;  // ceil(0.2 * reviewers)
  std::size_t repos = 0;      // repositories averaged (category reports)
  bool empty = true;          // no reviewers
};

/// Reviewers ranked by followers (descending, ties by login); curve point k
/// is the share of issues commented on by any of the top k reviewers.
CoverageReport expertise_coverage(const Repository& repo, const Corpus& corpus);

/// Mean of the per-repository reports over the category, with curves
/// resampled at `grid_step` percent of reviewers.
CoverageReport expertise_coverage(const Corpus& corpus, Category category,
                                  double grid_step = 5.0);

// ---------------------------------------------------------------------------
// Popularity vs comments

struct PopularityRow {
  std::string repo;
  Category category = Category::Random;
  std::size_t issue_count = 0;
  Correlation correlation;
};

struct PopularityReport {
  std::vector<PopularityRow> rows;  // ascending by issue_count, then repo id
  std::size_t omitted = 0;
};

/// Per repository, Pearson between opener followers and the review comments
/// each issue received, over issues with linked code. Repositories with
/// fewer than 3 such issues or a constant series are omitted.
PopularityReport popularity_vs_comments(const Corpus& corpus,
                                        std::optional<Category> category = std::nullopt);

}  // namespace issuelab
