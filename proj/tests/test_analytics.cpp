#include <random>

#include <gtest/gtest.h>

#include "issuelab/analytics.hpp"
#include "issuelab/errors.hpp"
#include "test_support.hpp"

using namespace issuelab;
using testing_support::kEpoch2020;
using testing_support::make_issue;

namespace {

// Per-repository values worked out by hand from the fixture; see
// tests/fixtures/README.md.
struct Expected {
  double issues, closed_pct, per_closed, per_open, reviewers, contributors, owner, opener, closer;
  double added, removed, days_first, hours_between, hours_close, commits, before_first, between;
};

const Expected kAlpha{5, 60, 7.0 / 3, 2.5, 2, 3, 120, 31, 100,
                      37.6, 5, 2, 1220, 28, 6, 1, 1};
const Expected kBeacon{4, 75, 7.0 / 3, 2, 1.25, 2, 40, 47.5, 60,
                       57.5, 1, 9, 168, 22, 2, 1, 1.0 / 3};
const Expected kCobalt{3, 200.0 / 3, 3.5, 2, 7.0 / 3, 3, 300, 107.0 / 3, 300,
                       1000.0 / 3, 0, 4, 324, 36, 1, 1, 0};

void expect_metrics(const RepoMetrics& m, const Expected& e) {
  EXPECT_DOUBLE_EQ(m.issues, e.issues);
  EXPECT_DOUBLE_EQ(*m.closed_pct, e.closed_pct);
  EXPECT_DOUBLE_EQ(*m.comments_per_closed_issue, e.per_closed);
  EXPECT_DOUBLE_EQ(*m.comments_per_open_issue, e.per_open);
  EXPECT_DOUBLE_EQ(*m.reviewers_per_issue, e.reviewers);
  EXPECT_DOUBLE_EQ(m.contributors, e.contributors);
  EXPECT_DOUBLE_EQ(m.owner_followers, e.owner);
  EXPECT_DOUBLE_EQ(*m.opener_followers, e.opener);
  EXPECT_DOUBLE_EQ(*m.closer_followers, e.closer);
  EXPECT_DOUBLE_EQ(*m.lines_added_per_issue, e.added);
  EXPECT_DOUBLE_EQ(*m.lines_removed_per_issue, e.removed);
  EXPECT_DOUBLE_EQ(*m.days_to_first_issue, e.days_first);
  EXPECT_DOUBLE_EQ(*m.hours_between_issue_openings, e.hours_between);
  EXPECT_DOUBLE_EQ(*m.hours_to_close, e.hours_close);
  EXPECT_DOUBLE_EQ(m.commits, e.commits);
  EXPECT_DOUBLE_EQ(*m.commits_before_first_issue, e.before_first);
  EXPECT_DOUBLE_EQ(*m.commits_between_issues, e.between);
}

Corpus corpus_of(std::vector<Repository> repos) {
  Corpus c;
  c.snapshot_at = kEpoch2020 + 400 * static_cast<Timestamp>(kDay);
  for (auto& r : repos) {
    c.users[r.owner] = {r.owner, 1};
    for (const auto& i : r.issues) c.users[i.opener] = {i.opener, 1};
  }
  c.repos = std::move(repos);
  canonicalize(c);
  return c;
}

Repository sized_repo(const std::string& id, std::size_t issues, std::size_t contributors) {
  Repository r;
  r.id = id;
  r.owner = "owner";
  r.created_at = kEpoch2020;
  for (std::size_t i = 0; i < issues; ++i) {
    r.issues.push_back(make_issue(id, i + 1, kEpoch2020 + static_cast<Timestamp>(i) * 60, "opener"));
  }
  for (std::size_t k = 0; k < contributors; ++k) r.contributors.insert(fmt::format("dev{}", k));
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------
// Summary

TEST(RepoMetrics, TinyCorpusByHand) {
  const Corpus c = testing_support::tiny_corpus();
  expect_metrics(repo_metrics(*c.find_repo("alice/alpha"), c), kAlpha);
  expect_metrics(repo_metrics(*c.find_repo("bob/beacon"), c), kBeacon);
  expect_metrics(repo_metrics(*c.find_repo("carol/cobalt"), c), kCobalt);
}

TEST(RepoMetrics, LinkedOnlyChurn) {
  // alpha: a000002 (20/5, #1) and a000005 (8/8, #4) are the linked commits
  const Corpus c = testing_support::tiny_corpus();
  MetricOptions linked;
  linked.linked_only = true;
  const RepoMetrics m = repo_metrics(*c.find_repo("alice/alpha"), c, linked);
  EXPECT_DOUBLE_EQ(*m.lines_added_per_issue, 28.0 / 5);
  EXPECT_DOUBLE_EQ(*m.lines_removed_per_issue, 13.0 / 5);
}

TEST(RepoSummary, TinyCorpusCategoryAndAll) {
  const Corpus c = testing_support::tiny_corpus();
  const RepoSummary ros = repo_summary(c, Category::ROS);
  EXPECT_EQ(ros.repos, 1u);
  EXPECT_DOUBLE_EQ(ros.closed_pct.value, 75);
  EXPECT_DOUBLE_EQ(ros.hours_to_close.value, 22);

  const RepoSummary all = repo_summary(c, std::nullopt);
  EXPECT_EQ(all.repos, 3u);
  EXPECT_DOUBLE_EQ(all.issues_per_repo.value, 4);
  EXPECT_DOUBLE_EQ(all.closed_pct.value, (60 + 75 + 200.0 / 3) / 3);
  EXPECT_DOUBLE_EQ(all.hours_between_issue_openings.value, (1220 + 168 + 324) / 3.0);
  EXPECT_EQ(all.closed_pct.n, 3u);
}

TEST(RepoSummary, ClosedPercentage) {
  Repository r = sized_repo("o/r", 10, 1);
  for (std::size_t i = 0; i < 9; ++i) {
    r.issues[i].closed_at = r.issues[i].created_at + 10;
    r.issues[i].closer = "owner";
  }
  const Corpus c = corpus_of({r});
  EXPECT_DOUBLE_EQ(repo_summary(c, std::nullopt).closed_pct.value, 90);
}

TEST(RepoSummary, ZeroIssueRepoLeavesDaysToFirstIssueAbsent) {
  const Corpus c = corpus_of({sized_repo("o/empty", 0, 1)});
  const RepoMetrics m = repo_metrics(c.repos[0], c);
  EXPECT_FALSE(m.days_to_first_issue.has_value());
  EXPECT_FALSE(m.closed_pct.has_value());
  const RepoSummary s = repo_summary(c, std::nullopt);
  EXPECT_FALSE(s.days_to_first_issue.defined());
  EXPECT_TRUE(s.contributors.defined());
}

TEST(RepoSummary, EmptySelection) {
  const Corpus c = testing_support::tiny_corpus();
  Corpus only_ros;
  only_ros.users = c.users;
  only_ros.repos.push_back(*c.find_repo("bob/beacon"));
  EXPECT_THROW(repo_summary(only_ros, Category::Popular), EmptySelection);
  EXPECT_THROW(repo_summary(Corpus{}, std::nullopt), EmptySelection);
}

TEST(RepoSummaryProperties, ConcatenationIsTheWeightedMean) {
  auto check = [](const Corpus& left, const Corpus& right, const Corpus& both) {
    const RepoSummary a = repo_summary(left, std::nullopt);
    const RepoSummary b = repo_summary(right, std::nullopt);
    const RepoSummary ab = repo_summary(both, std::nullopt);
    EXPECT_EQ(ab.repos, a.repos + b.repos);
    for (const auto& f : summary_fields()) {
      const Mean& ma = a.*(f.member);
      const Mean& mb = b.*(f.member);
      const Mean& m = ab.*(f.member);
      ASSERT_EQ(m.n, ma.n + mb.n) << f.name;
      if (m.n == 0) continue;
      const double want = ((ma.n ? ma.value * ma.n : 0) + (mb.n ? mb.value * mb.n : 0)) / m.n;
      EXPECT_NEAR(m.value, want, 1e-9 * (1 + std::fabs(want))) << f.name;
    }
  };

  const Corpus tiny = testing_support::tiny_corpus();
  Corpus left = tiny, right = tiny;
  left.repos = {tiny.repos[0]};
  right.repos = {tiny.repos[1], tiny.repos[2]};
  check(left, right, tiny);

  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Corpus x = testing_support::random_review_corpus(seed);
    Corpus y = testing_support::random_review_corpus(seed + 1000);
    Corpus xy = x;
    xy.users.insert(y.users.begin(), y.users.end());
    x.users = xy.users;
    y.users = xy.users;
    xy.repos.push_back(y.repos[0]);
    canonicalize(xy);
    check(x, y, xy);
  }
}

// ---------------------------------------------------------------------------
// Correlations

TEST(Correlate, ConstructedLinearity) {
  std::vector<Repository> repos;
  for (std::size_t k = 1; k <= 6; ++k) repos.push_back(sized_repo(fmt::format("o/r{}", k), 2 * k, k));
  const Corpus c = corpus_of(repos);
  const CorrelationReport rep = correlate_features(c, std::nullopt, "issues", {"contributors", "stars"});
  ASSERT_EQ(rep.rows.size(), 2u);
  EXPECT_NEAR(rep.rows[0].r, 1.0, 1e-12);
  EXPECT_EQ(rep.rows[0].p, 0.0);
  EXPECT_EQ(rep.rows[0].n, 6u);
  // every star count is zero, which is a row note and not an error
  EXPECT_TRUE(std::isnan(rep.rows[1].r));
  EXPECT_EQ(rep.rows[1].note, "constant series");
}

TEST(Correlate, IndependentFeaturesAreUncorrelated) {
  // Spread of p values is judged over many corpora: under independence
  // they are uniform, so about half fall below 0.5.
  std::size_t below_half = 0, total = 0;
  for (std::uint64_t seed = 11; seed < 111; ++seed) {
    std::mt19937_64 gen(seed);
    std::vector<Repository> repos;
    for (int k = 0; k < 200; ++k) {
      Repository r = sized_repo(fmt::format("o/r{:03}", k), 1 + gen() % 30, 0);
      r.stargazers = static_cast<std::int64_t>(gen() % 5000);
      r.forks = static_cast<std::int64_t>(gen() % 800);
      r.watchers = static_cast<std::int64_t>(gen() % 150);
      repos.push_back(std::move(r));
    }
    const Corpus c = corpus_of(std::move(repos));
    const CorrelationReport rep = correlate_features(c, std::nullopt, "issues", {"stars", "forks", "watchers"});
    for (const auto& row : rep.rows) {
      std::vector<double> xs, ys;
      for (const auto& r : c.repos) {
        xs.push_back(*feature_value(r, c, row.feature));
        ys.push_back(static_cast<double>(r.issues.size()));
      }
      const auto want = testing_support::oracle_pearson(xs, ys);
      ASSERT_NEAR(row.r, want.r, 1e-12);
      ASSERT_NEAR(row.p, want.p, 1e-9);
      if (seed == 11) {
        EXPECT_LT(std::fabs(row.r), 0.2) << row.feature;
      }
      below_half += row.p < 0.5;
      ++total;
    }
  }
  const double share = static_cast<double>(below_half) / static_cast<double>(total);
  EXPECT_GT(share, 0.4);
  EXPECT_LT(share, 0.6);
}

TEST(Correlate, TwoReposIsAnEmptySelection) {
  const Corpus c = corpus_of({sized_repo("o/a", 1, 1), sized_repo("o/b", 2, 2)});
  EXPECT_THROW(correlate_features(c, std::nullopt, "issues", {"contributors"}), EmptySelection);
}

TEST(Correlate, UnknownFeature) {
  const Corpus c = testing_support::tiny_corpus();
  EXPECT_THROW(feature_value(c.repos[0], c, "moon_phase"), Error);
}

TEST(Correlate, IcsRowsSkipUndefinedValues) {
  std::vector<Repository> repos;
  for (std::size_t k = 0; k < 5; ++k) repos.push_back(sized_repo(fmt::format("o/r{}", k), k == 0 ? 1 : 3 + k, k + 1));
  for (auto& r : repos) {
    for (auto& i : r.issues) i.comments.push_back({i.id + "c", i.id, "owner", i.created_at + 1, ""});
  }
  const Corpus c = corpus_of(repos);
  const CorrelationReport rep = correlate_features(c, std::nullopt, "ics", {"contributors"});
  EXPECT_EQ(rep.rows[0].n, 4u);  // the single-issue repository has no score
}

// ---------------------------------------------------------------------------
// Coverage

TEST(Coverage, PopularityRatioByHand) {
  Repository r = sized_repo("o/r", 5, 0);
  const std::vector<std::int64_t> followers{100, 50, 10, 5, 1};
  Corpus c = corpus_of({r});
  for (std::size_t k = 0; k < followers.size(); ++k) {
    const std::string who = fmt::format("rev{}", k);
    c.users[who] = {who, followers[k]};
    Issue& issue = c.repos[0].issues[k];
    issue.comments.push_back({who, issue.id, who, issue.created_at + 1, ""});
  }
  const CoverageReport rep = expertise_coverage(c.repos[0], c);
  EXPECT_EQ(rep.top_count, 1u);
  EXPECT_DOUBLE_EQ(rep.popularity_ratio, 100.0 / 166.0);
  EXPECT_DOUBLE_EQ(rep.top20_issue_coverage, 0.2);
  EXPECT_DOUBLE_EQ(rep.mean_reviewer_followers, 166.0 / 5);
}

TEST(Coverage, TopReviewerCoversEverything) {
  Corpus c = corpus_of({sized_repo("o/r", 4, 0)});
  c.users["star"] = {"star", 1000};
  c.users["minor"] = {"minor", 1};
  for (auto& issue : c.repos[0].issues) issue.comments.push_back({issue.id + "s", issue.id, "star", issue.created_at + 1, ""});
  c.repos[0].issues[0].comments.push_back({"m", c.repos[0].issues[0].id, "minor", c.repos[0].issues[0].created_at + 2, ""});
  EXPECT_EQ(expertise_coverage(c.repos[0], c).top20_issue_coverage, 1.0);
}

TEST(Coverage, TinyCorpusRepoBMatchesPrefixUnion) {
  const Corpus c = testing_support::tiny_corpus();
  const Repository& b = *c.find_repo("bob/beacon");
  const CoverageReport rep = expertise_coverage(b, c);
  const auto want = testing_support::oracle_coverage(b, c);
  ASSERT_EQ(rep.curve.size(), want.size());
  for (std::size_t k = 0; k < want.size(); ++k) {
    EXPECT_DOUBLE_EQ(rep.curve[k].issues_covered_pct, want[k]);
    EXPECT_DOUBLE_EQ(rep.curve[k].reviewer_rank_pct, 100.0 * (k + 1) / want.size());
  }
  EXPECT_EQ(want, (std::vector<double>{50, 75, 100}));
  EXPECT_DOUBLE_EQ(rep.popularity_ratio, 80.0 / 150.0);
  EXPECT_DOUBLE_EQ(rep.top20_issue_coverage, 0.5);
}

TEST(Coverage, NoReviewersIsFlagged) {
  const Corpus c = corpus_of({sized_repo("o/r", 3, 0)});
  const CoverageReport rep = expertise_coverage(c.repos[0], c);
  EXPECT_TRUE(rep.empty);
  EXPECT_TRUE(rep.curve.empty());
  EXPECT_TRUE(expertise_coverage(c, Category::Random).empty);
}

TEST(Coverage, CategoryGridSteps) {
  const Corpus c = testing_support::tiny_corpus();
  // beacon has 3 reviewers: 25% of them rounds up to 1, 50% to 2, 75% and 100% to 3
  const CoverageReport rep = expertise_coverage(c, Category::ROS, 25);
  ASSERT_EQ(rep.curve.size(), 4u);
  EXPECT_EQ(rep.curve[0].issues_covered_pct, 50);
  EXPECT_EQ(rep.curve[1].issues_covered_pct, 75);
  EXPECT_EQ(rep.curve[2].issues_covered_pct, 100);
  EXPECT_EQ(rep.curve[3].reviewer_rank_pct, 100);
  EXPECT_THROW(expertise_coverage(c, Category::ROS, 0), Error);
}

TEST(CoverageProperties, CurvesAreMonotoneAndMatchTheOracle) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const Corpus c = testing_support::random_review_corpus(seed, 20, 9);
    const Repository& repo = c.repos[0];
    const CoverageReport rep = expertise_coverage(repo, c);
    const auto want = testing_support::oracle_coverage(repo, c);
    ASSERT_EQ(rep.curve.size(), want.size());
    if (rep.empty) continue;
    std::size_t reviewed = 0;
    for (const auto& i : repo.issues) reviewed += !reviewers_of(i).empty();
    for (std::size_t k = 0; k < want.size(); ++k) {
      ASSERT_DOUBLE_EQ(rep.curve[k].issues_covered_pct, want[k]);
      if (k > 0) {
        ASSERT_GE(rep.curve[k].issues_covered_pct, rep.curve[k - 1].issues_covered_pct);
        ASSERT_GT(rep.curve[k].reviewer_rank_pct, rep.curve[k - 1].reviewer_rank_pct);
      }
    }
    EXPECT_EQ(rep.curve.back().reviewer_rank_pct, 100);
    EXPECT_DOUBLE_EQ(rep.curve.back().issues_covered_pct, 100.0 * reviewed / repo.issues.size());
    EXPECT_GE(rep.popularity_ratio, 0.0);
    EXPECT_LE(rep.popularity_ratio, 1.0);
  }
}

TEST(CoverageProperties, UniformityFloor) {
  for (std::size_t m = 1; m <= 30; ++m) {
    for (std::int64_t f : {0, 7}) {
      Corpus c = corpus_of({sized_repo("o/r", 2, 0)});
      for (std::size_t k = 0; k < m; ++k) {
        const std::string who = fmt::format("rev{:02}", k);
        c.users[who] = {who, f};
        Issue& issue = c.repos[0].issues[k % 2];
        issue.comments.push_back({who, issue.id, who, issue.created_at + 1, ""});
      }
      const CoverageReport rep = expertise_coverage(c.repos[0], c);
      const double floor = static_cast<double>(rep.top_count) / static_cast<double>(m);
      EXPECT_GE(rep.popularity_ratio, floor - 1e-12) << m;
      EXPECT_EQ(rep.top_count, static_cast<std::size_t>(std::ceil(0.2 * m - 1e-9)));
    }
  }
}

// ---------------------------------------------------------------------------
// Popularity vs comments

TEST(Popularity, TinyCorpusRepoC) {
  const Corpus c = testing_support::tiny_corpus();
  const PopularityReport rep = popularity_vs_comments(c);
  // alpha and beacon have fewer than 3 issues with linked code
  EXPECT_EQ(rep.omitted, 2u);
  ASSERT_EQ(rep.rows.size(), 1u);
  const auto want = testing_support::oracle_pearson({7, 20, 80}, {1, 2, 4});
  EXPECT_EQ(rep.rows[0].repo, "carol/cobalt");
  EXPECT_EQ(rep.rows[0].issue_count, 3u);
  EXPECT_NEAR(rep.rows[0].correlation.r, want.r, 1e-12);
  EXPECT_NEAR(rep.rows[0].correlation.p, want.p, 1e-9);
  EXPECT_NEAR(want.r, 0.986292383572, 1e-11);
  EXPECT_NEAR(want.p, 0.105529392755, 1e-9);
}

TEST(Popularity, EqualFollowersAreOmitted) {
  Corpus c = corpus_of({sized_repo("o/r", 4, 0)});
  for (auto& i : c.repos[0].issues) {
    i.has_linked_code = true;
    i.comments.push_back({i.id + "x", i.id, "owner", i.created_at + 1, ""});
  }
  c.repos[0].issues[0].comments.push_back({"y", c.repos[0].issues[0].id, "owner", c.repos[0].issues[0].created_at + 2, ""});
  const PopularityReport rep = popularity_vs_comments(c);
  EXPECT_TRUE(rep.rows.empty());
  EXPECT_EQ(rep.omitted, 1u);
}

TEST(Popularity, FollowersEqualCommentsGivesOne) {
  Corpus c = corpus_of({sized_repo("o/r", 4, 0)});
  for (std::size_t k = 0; k < 4; ++k) {
    Issue& issue = c.repos[0].issues[k];
    issue.has_linked_code = true;
    issue.opener = fmt::format("op{}", k);
    c.users[issue.opener] = {issue.opener, static_cast<std::int64_t>(k + 1)};
    for (std::size_t j = 0; j <= k; ++j) {
      issue.comments.push_back({fmt::format("{}-{}", issue.id, j), issue.id, "owner",
                                issue.created_at + static_cast<Timestamp>(j + 1), ""});
    }
  }
  const PopularityReport rep = popularity_vs_comments(c);
  ASSERT_EQ(rep.rows.size(), 1u);
  EXPECT_NEAR(rep.rows[0].correlation.r, 1.0, 1e-12);
}

TEST(Popularity, RowsAreSortedByIssueCount) {
  std::vector<Repository> repos;
  for (std::size_t n : {9u, 4u, 6u}) repos.push_back(sized_repo(fmt::format("o/n{}", n), n, 0));
  Corpus c = corpus_of(repos);
  std::mt19937_64 gen(1);
  for (auto& r : c.repos) {
    for (auto& issue : r.issues) {
      issue.has_linked_code = true;
      issue.opener = fmt::format("u{}", gen() % 50);
      c.users[issue.opener] = {issue.opener, static_cast<std::int64_t>(gen() % 100)};
      const std::size_t comments = gen() % 4;
      for (std::size_t j = 0; j < comments; ++j) {
        issue.comments.push_back({fmt::format("{}-{}", issue.id, j), issue.id, "owner",
                                  issue.created_at + static_cast<Timestamp>(j + 1), ""});
      }
    }
  }
  const PopularityReport rep = popularity_vs_comments(c);
  for (std::size_t k = 1; k < rep.rows.size(); ++k) {
    EXPECT_LE(rep.rows[k - 1].issue_count, rep.rows[k].issue_count);
  }
  EXPECT_EQ(rep.rows.size() + rep.omitted, 3u);
}
