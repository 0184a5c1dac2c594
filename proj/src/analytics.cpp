#include "issuelab/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <fmt/format.h>

#include "issuelab/community.hpp"
#include "issuelab/errors.hpp"
#include "issuelab/temporal.hpp"

namespace issuelab {

namespace {

template <typename T>
std::optional<double> mean_or_none(const std::vector<T>& values) {
  if (values.empty()) return std::nullopt;
  double sum = 0;
  for (const auto& v : values) sum += static_cast<double>(v);
  return sum / static_cast<double>(values.size());
}

std::size_t count_commits_in(const std::vector<Commit>& commits, Timestamp after, Timestamp before) {
  // commits are sorted by created_at; count after < t < before
  auto lo = std::upper_bound(commits.begin(), commits.end(), after,
                             [](Timestamp t, const Commit& c) { return t < c.created_at; });
  auto hi = std::lower_bound(commits.begin(), commits.end(), before,
                             [](const Commit& c, Timestamp t) { return c.created_at < t; });
  return hi > lo ? static_cast<std::size_t>(hi - lo) : 0;
}

std::vector<Timestamp> opening_times(const Repository& repo) {
  std::vector<Timestamp> times;
  for (const auto& i : repo.issues) times.push_back(i.created_at);
  std::sort(times.begin(), times.end());
  return times;
}

void accumulate(Mean& m, std::optional<double> v) {
  if (!v) return;
  m.value = m.n == 0 ? *v : m.value + *v;
  ++m.n;
}

}  // namespace

RepoMetrics repo_metrics(const Repository& repo, const Corpus& corpus,
                         const MetricOptions& options) {
  const SentimentLexicon& lexicon = options.lexicon ? *options.lexicon : SentimentLexicon::bundled();
  RepoMetrics m;
  m.repo = repo.id;
  m.issues = static_cast<double>(repo.issues.size());
  m.contributors = static_cast<double>(effective_contributors(repo).size());
  m.owner_followers = static_cast<double>(corpus.followers_of(repo.owner));
  m.commits = static_cast<double>(repo.commits.size());

  std::vector<std::size_t> closed_comments, open_comments, reviewers;
  std::vector<std::int64_t> openers, closers;
  std::vector<double> close_hours;
  for (const auto& issue : repo.issues) {
    (issue.is_closed() ? closed_comments : open_comments).push_back(issue.comments.size());
    reviewers.push_back(reviewers_of(issue).size());
    openers.push_back(corpus.followers_of(issue.opener));
    if (issue.is_closed()) {
      if (issue.closer) closers.push_back(corpus.followers_of(*issue.closer));
      close_hours.push_back(static_cast<double>(*issue.closed_at - issue.created_at) / kHour);
    }
  }
  if (!repo.issues.empty()) {
    m.closed_pct = 100.0 * static_cast<double>(closed_comments.size()) / m.issues;
  }
  m.comments_per_closed_issue = mean_or_none(closed_comments);
  m.comments_per_open_issue = mean_or_none(open_comments);
  m.reviewers_per_issue = mean_or_none(reviewers);
  m.opener_followers = mean_or_none(openers);
  m.closer_followers = mean_or_none(closers);
  m.hours_to_close = mean_or_none(close_hours);

  const RepoSentiment s = repo_sentiment(repo, lexicon);
  if (!s.empty) m.mean_sentiment = s.mean;

  const std::vector<Timestamp> times = opening_times(repo);
  if (!times.empty()) {
    m.days_to_first_issue = static_cast<double>(times.front() - repo.created_at) / kDay;
    m.commits_before_first_issue =
        static_cast<double>(std::count_if(repo.commits.begin(), repo.commits.end(),
                                          [&](const Commit& c) { return c.created_at < times.front(); }));

    double added = 0, removed = 0;
    if (options.linked_only) {
      std::set<std::string> ids;
      for (const auto& i : repo.issues) ids.insert(i.id);
      for (const auto& c : repo.commits) {
        const bool linked = std::any_of(c.issues.begin(), c.issues.end(),
                                        [&](const std::string& ref) { return ids.count(ref) > 0; });
        if (linked) {
          added += static_cast<double>(c.lines_added);
          removed += static_cast<double>(c.lines_removed);
        }
      }
    } else {
      // Each issue owns the churn committed since the previous opening, so
      // the total is everything committed up to the last opening.
      for (const auto& c : repo.commits) {
        if (c.created_at <= times.back()) {
          added += static_cast<double>(c.lines_added);
          removed += static_cast<double>(c.lines_removed);
        }
      }
    }
    m.lines_added_per_issue = added / m.issues;
    m.lines_removed_per_issue = removed / m.issues;
  }
  if (times.size() >= 2) {
    std::vector<double> gap_hours;
    std::vector<std::size_t> between;
    for (std::size_t i = 1; i < times.size(); ++i) {
      gap_hours.push_back(static_cast<double>(times[i] - times[i - 1]) / kHour);
      between.push_back(count_commits_in(repo.commits, times[i - 1], times[i]));
    }
    m.hours_between_issue_openings = mean_or_none(gap_hours);
    m.commits_between_issues = mean_or_none(between);
  }
  return m;
}

const std::vector<SummaryField>& summary_fields() {
  static const std::vector<SummaryField> fields = {
      {"issues_per_repo", &RepoSummary::issues_per_repo},
      {"closed_pct", &RepoSummary::closed_pct},
      {"comments_per_closed_issue", &RepoSummary::comments_per_closed_issue},
      {"comments_per_open_issue", &RepoSummary::comments_per_open_issue},
      {"mean_sentiment", &RepoSummary::mean_sentiment},
      {"reviewers_per_issue", &RepoSummary::reviewers_per_issue},
      {"contributors", &RepoSummary::contributors},
      {"owner_followers", &RepoSummary::owner_followers},
      {"opener_followers", &RepoSummary::opener_followers},
      {"closer_followers", &RepoSummary::closer_followers},
      {"lines_added_per_issue", &RepoSummary::lines_added_per_issue},
      {"lines_removed_per_issue", &RepoSummary::lines_removed_per_issue},
      {"days_to_first_issue", &RepoSummary::days_to_first_issue},
      {"hours_between_issue_openings", &RepoSummary::hours_between_issue_openings},
      {"hours_to_close", &RepoSummary::hours_to_close},
      {"commits_per_repo", &RepoSummary::commits_per_repo},
      {"commits_before_first_issue", &RepoSummary::commits_before_first_issue},
      {"commits_between_issues", &RepoSummary::commits_between_issues},
  };
  return fields;
}

RepoSummary repo_summary(const Corpus& corpus, std::optional<Category> category,
                         const MetricOptions& options) {
  const auto repos = select(corpus, category);
  if (repos.empty()) {
    throw EmptySelection(fmt::format("no repositories in category {}",
                                     category ? to_string(*category) : "any"));
  }
  RepoSummary s;
  s.repos = repos.size();
  for (const Repository* repo : repos) {
    const RepoMetrics m = repo_metrics(*repo, corpus, options);
    accumulate(s.issues_per_repo, m.issues);
    accumulate(s.closed_pct, m.closed_pct);
    accumulate(s.comments_per_closed_issue, m.comments_per_closed_issue);
    accumulate(s.comments_per_open_issue, m.comments_per_open_issue);
    accumulate(s.mean_sentiment, m.mean_sentiment);
    accumulate(s.reviewers_per_issue, m.reviewers_per_issue);
    accumulate(s.contributors, m.contributors);
    accumulate(s.owner_followers, m.owner_followers);
    accumulate(s.opener_followers, m.opener_followers);
    accumulate(s.closer_followers, m.closer_followers);
    accumulate(s.lines_added_per_issue, m.lines_added_per_issue);
    accumulate(s.lines_removed_per_issue, m.lines_removed_per_issue);
    accumulate(s.days_to_first_issue, m.days_to_first_issue);
    accumulate(s.hours_between_issue_openings, m.hours_between_issue_openings);
    accumulate(s.hours_to_close, m.hours_to_close);
    accumulate(s.commits_per_repo, m.commits);
    accumulate(s.commits_before_first_issue, m.commits_before_first_issue);
    accumulate(s.commits_between_issues, m.commits_between_issues);
  }
  for (const auto& f : summary_fields()) {
    Mean& m = s.*(f.member);
    if (m.n > 0) m.value /= static_cast<double>(m.n);
  }
  return s;
}

const std::vector<std::string>& known_features() {
  static const std::vector<std::string> names = {
      "issues", "repo_age", "contributors", "issue_comments", "commits", "reviewers",
      "commits_before_first_issue", "commits_between_issues", "issue_opener_followers",
      "repo_owner_followers", "stars", "forks", "watchers", "ics"};
  return names;
}

const std::vector<std::string>& issue_count_features() {
  static const std::vector<std::string> names = {
      "repo_age", "contributors", "issue_comments", "commits", "reviewers",
      "commits_before_first_issue", "commits_between_issues", "issue_opener_followers",
      "repo_owner_followers", "stars", "forks", "watchers"};
  return names;
}

const std::vector<std::string>& ics_features() {
  static const std::vector<std::string> names = {"contributors", "stars", "issues",
                                                 "issue_comments"};
  return names;
}

std::optional<double> feature_value(const Repository& repo, const Corpus& corpus,
                                    std::string_view feature) {
  auto as_double = [](auto v) { return std::optional<double>(static_cast<double>(v)); };
  if (feature == "issues") return as_double(repo.issues.size());
  if (feature == "repo_age") {
    return static_cast<double>(corpus.reference_time() - repo.created_at) / kDay;
  }
  if (feature == "contributors") return as_double(effective_contributors(repo).size());
  if (feature == "issue_comments") {
    std::size_t total = 0;
    for (const auto& i : repo.issues) total += i.comments.size();
    return as_double(total);
  }
  if (feature == "commits") return as_double(repo.commits.size());
  if (feature == "reviewers") return as_double(reviewers_of(repo).size());
  if (feature == "stars") return as_double(repo.stargazers);
  if (feature == "forks") return as_double(repo.forks);
  if (feature == "watchers") return as_double(repo.watchers);
  if (feature == "repo_owner_followers") return as_double(corpus.followers_of(repo.owner));
  if (feature == "issue_opener_followers") {
    return repo_metrics(repo, corpus).opener_followers;
  }
  if (feature == "commits_before_first_issue") {
    return repo_metrics(repo, corpus).commits_before_first_issue;
  }
  if (feature == "commits_between_issues") {
    return repo_metrics(repo, corpus).commits_between_issues;
  }
  if (feature == "ics") return ics(build_graph(repo)).ics;
  throw Error(fmt::format("unknown feature '{}'", feature));
}

CorrelationReport correlate_features(const Corpus& corpus, std::optional<Category> category,
                                     const std::string& target,
                                     const std::vector<std::string>& features) {
  const auto repos = select(corpus, category);
  if (repos.size() < 3) {
    throw EmptySelection(fmt::format("correlation needs >= 3 repositories, {} selected",
                                     repos.size()));
  }
  CorrelationReport report{category, target, {}};

  std::vector<std::optional<double>> target_values;
  for (const Repository* r : repos) target_values.push_back(feature_value(*r, corpus, target));

  for (const auto& feature : features) {
    CorrelationRow row;
    row.feature = feature;
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < repos.size(); ++i) {
      const auto x = feature_value(*repos[i], corpus, feature);
      if (x && target_values[i]) {
        xs.push_back(*x);
        ys.push_back(*target_values[i]);
      }
    }
    row.n = xs.size();
    if (xs.size() < 3) {
      row.note = "fewer than 3 repositories define both values";
    } else {
      try {
        const Correlation c = pearson(xs, ys);
        row.r = c.r;
        row.p = c.p;
      } catch (const UndefinedCorrelation&) {
        row.note = "constant series";
      }
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

CoverageReport expertise_coverage(const Repository& repo, const Corpus& corpus) {
  CoverageReport out;
  out.scope = repo.id;
  out.issues = repo.issues.size();
  out.repos = 1;

  // reviewer -> indices of issues they commented on
  std::map<std::string, std::vector<std::size_t>> reviewed;
  for (std::size_t i = 0; i < repo.issues.size(); ++i) {
    for (const auto& r : reviewers_of(repo.issues[i])) reviewed[r].push_back(i);
  }
  if (reviewed.empty()) return out;

  struct Ranked {
    std::string login;
    std::int64_t followers;
  };
  std::vector<Ranked> ranked;
  for (const auto& [login, _] : reviewed) ranked.push_back({login, corpus.followers_of(login)});
  std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
    return a.followers != b.followers ? a.followers > b.followers : a.login < b.login;
  });

  const std::size_t m = ranked.size();
  out.empty = false;
  out.reviewers = m;
  out.top_count = static_cast<std::size_t>(std::ceil(0.2 * static_cast<double>(m) - 1e-12));
  out.top_count = std::clamp<std::size_t>(out.top_count, 1, m);

  std::vector<bool> covered(repo.issues.size(), false);
  std::size_t covered_count = 0;
  double total_followers = 0, top_followers = 0;
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t i : reviewed[ranked[k].login]) {
      if (!covered[i]) {
        covered[i] = true;
        ++covered_count;
      }
    }
    total_followers += static_cast<double>(ranked[k].followers);
    if (k < out.top_count) top_followers += static_cast<double>(ranked[k].followers);
    out.curve.push_back({100.0 * static_cast<double>(k + 1) / static_cast<double>(m),
                         100.0 * static_cast<double>(covered_count) /
                             static_cast<double>(repo.issues.size())});
  }
  out.mean_reviewer_followers = total_followers / static_cast<double>(m);
  // With nobody followed, every reviewer is equally popular.
  out.popularity_ratio = total_followers > 0
                             ? top_followers / total_followers
                             : static_cast<double>(out.top_count) / static_cast<double>(m);
  out.top20_issue_coverage = out.curve[out.top_count - 1].issues_covered_pct / 100.0;
  return out;
}

CoverageReport expertise_coverage(const Corpus& corpus, Category category, double grid_step) {
  CoverageReport out;
  out.scope = std::string(to_string(category));
  if (!(grid_step > 0 && grid_step <= 100)) throw Error("grid step must be in (0, 100]");

  std::vector<double> grid;
  for (double q = grid_step; q < 100.0 + 1e-9; q += grid_step) grid.push_back(std::min(q, 100.0));
  if (grid.back() < 100.0) grid.push_back(100.0);
  std::vector<double> sums(grid.size(), 0.0);

  for (const Repository* repo : select(corpus, category)) {
    const CoverageReport r = expertise_coverage(*repo, corpus);
    if (r.empty) continue;
    ++out.repos;
    out.reviewers += r.reviewers;
    out.issues += r.issues;
    out.popularity_ratio += r.popularity_ratio;
    out.top20_issue_coverage += r.top20_issue_coverage;
    out.mean_reviewer_followers += r.mean_reviewer_followers;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      // step function: coverage after the first ceil(q% * m) reviewers
      auto k = static_cast<std::size_t>(std::ceil(grid[g] / 100.0 * static_cast<double>(r.reviewers) - 1e-9));
      k = std::clamp<std::size_t>(k, 1, r.reviewers);
      sums[g] += r.curve[k - 1].issues_covered_pct;
    }
  }
  if (out.repos == 0) return out;
  out.empty = false;
  const double n = static_cast<double>(out.repos);
  out.popularity_ratio /= n;
  out.top20_issue_coverage /= n;
  out.mean_reviewer_followers /= n;
  for (std::size_t g = 0; g < grid.size(); ++g) out.curve.push_back({grid[g], sums[g] / n});
  return out;
}

PopularityReport popularity_vs_comments(const Corpus& corpus, std::optional<Category> category) {
  PopularityReport out;
  for (const Repository* repo : select(corpus, category)) {
    std::vector<double> followers, comments;
    for (const auto& issue : repo->issues) {
      if (!issue.has_linked_code) continue;
      followers.push_back(static_cast<double>(corpus.followers_of(issue.opener)));
      comments.push_back(static_cast<double>(review_comment_count(issue)));
    }
    if (followers.size() < 3) {
      ++out.omitted;
      continue;
    }
    try {
      out.rows.push_back({repo->id, repo->category, repo->issues.size(), pearson(followers, comments)});
    } catch (const UndefinedCorrelation&) {
      ++out.omitted;
    }
  }
  std::sort(out.rows.begin(), out.rows.end(), [](const PopularityRow& a, const PopularityRow& b) {
    return a.issue_count != b.issue_count ? a.issue_count < b.issue_count : a.repo < b.repo;
  });
  return out;
}

}  // namespace issuelab
