// Shared fixtures and reference implementations for the test binaries. The
// oracles here are deliberately naive: sort instead of heaps, full rescans
// instead of incremental state, long double instead of double.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>

#include "issuelab/archive.hpp"
#include "issuelab/model.hpp"
#include "issuelab/time.hpp"

namespace testing_support {

using namespace issuelab;

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(ISSUELAB_FIXTURE_DIR) / name;
}

inline Corpus tiny_corpus() { return load_archive(fixture("tiny_corpus.ndjson")).corpus; }

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 2020-01-01T00:00:00Z
inline constexpr Timestamp kEpoch2020 = 1577836800;

inline Issue make_issue(const std::string& repo, std::size_t n, Timestamp t,
                        std::string opener = "opener") {
  Issue i;
  i.id = fmt::format("{}#{}", repo, n);
  i.repo = repo;
  i.opener = std::move(opener);
  i.created_at = t;
  return i;
}

/// Issues opened at `created + offsets[k]` seconds, in order.
inline Repository repo_with_offsets(const std::string& id, const std::vector<double>& offsets,
                                    Timestamp created = kEpoch2020) {
  Repository r;
  r.id = id;
  r.created_at = created;
  r.owner = "owner";
  for (std::size_t k = 0; k < offsets.size(); ++k) {
    r.issues.push_back(make_issue(id, k + 1, created + static_cast<Timestamp>(std::llround(offsets[k]))));
  }
  return r;
}

/// A repository whose issue gaps are log-normal around a couple of days,
/// spanning three years.
inline Repository lognormal_repo(const std::string& id, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::lognormal_distribution<double> gap(std::log(2.0 * kDay), 1.0);
  std::vector<double> offsets;
  double t = std::uniform_real_distribution<double>(0, kDay)(gen);
  while (t < 3 * kYear) {
    offsets.push_back(std::floor(t));
    t += gap(gen);
  }
  return repo_with_offsets(id, offsets);
}

// ---------------------------------------------------------------------------
// Median

/// Median of the positive values by full sort.
inline double oracle_median(std::vector<double> values) {
  std::vector<double> pos;
  for (double v : values) {
    if (v > 0) pos.push_back(v);
  }
  std::sort(pos.begin(), pos.end());
  if (pos.empty()) return std::nan("");
  const std::size_t n = pos.size();
  return n % 2 ? pos[n / 2] : (pos[n / 2 - 1] + pos[n / 2]) / 2;
}

/// 'D', 'R' or 'X' per the banding rule, zero gaps dense.
inline char oracle_label(double d, double median, double alpha) {
  if (d == 0) return 'D';
  if (d < median - alpha) return 'D';
  if (d > median + alpha) return 'X';
  return 'R';
}

// ---------------------------------------------------------------------------
// Community graph

struct OracleGraph {
  std::map<std::pair<std::string, std::string>, std::size_t> e1;  // (reviewer, issue)
  std::map<std::pair<std::string, std::string>, std::size_t> e2;  // (issue_a < issue_b)
};

/// Counts every (reviewer, issue) comment and then every (reviewer, pair)
/// triple by scanning all of them.
inline OracleGraph oracle_graph(const Repository& repo) {
  OracleGraph g;
  std::set<std::string> reviewers;
  for (const auto& issue : repo.issues) {
    for (const auto& c : issue.comments) {
      if (c.author == issue.opener) continue;
      ++g.e1[{c.author, issue.id}];
      reviewers.insert(c.author);
    }
  }
  for (std::size_t i = 0; i < repo.issues.size(); ++i) {
    for (std::size_t j = 0; j < repo.issues.size(); ++j) {
      const auto& a = repo.issues[i].id;
      const auto& b = repo.issues[j].id;
      if (!(a < b)) continue;
      std::size_t shared = 0;
      for (const auto& r : reviewers) {
        if (g.e1.count({r, a}) && g.e1.count({r, b})) ++shared;
      }
      if (shared) g.e2[{a, b}] = shared;
    }
  }
  return g;
}

/// Up to `max_issues` issues and `max_reviewers` reviewers with random
/// comments (including some by each issue's opener) and follower counts.
inline Corpus random_review_corpus(std::uint64_t seed, std::size_t max_issues = 12,
                                   std::size_t max_reviewers = 6) {
  std::mt19937_64 gen(seed);
  Corpus c;
  Repository r;
  r.id = fmt::format("o/rand{}", seed);
  r.created_at = kEpoch2020;
  r.owner = "owner";
  const std::size_t issues = gen() % (max_issues + 1);
  const std::size_t reviewers = 1 + gen() % max_reviewers;
  for (std::size_t k = 0; k < reviewers; ++k) {
    const std::string login = fmt::format("rev{}", k);
    c.users[login] = {login, static_cast<std::int64_t>(gen() % 5 == 0 ? 0 : gen() % 1000)};
  }
  c.users["owner"] = {"owner", 1};
  std::size_t cid = 0;
  for (std::size_t i = 0; i < issues; ++i) {
    Issue issue = make_issue(r.id, i + 1, kEpoch2020 + static_cast<Timestamp>(i) * 3600,
                             fmt::format("rev{}", gen() % reviewers));
    const std::size_t comments = gen() % 5;
    for (std::size_t k = 0; k < comments; ++k) {
      issue.comments.push_back({fmt::format("c{}", cid++), issue.id, fmt::format("rev{}", gen() % reviewers),
                                issue.created_at + static_cast<Timestamp>(k), "x"});
    }
    r.issues.push_back(std::move(issue));
  }
  c.repos.push_back(std::move(r));
  canonicalize(c);
  return c;
}

// ---------------------------------------------------------------------------
// Coverage

/// Issues-covered percentage after the top-k reviewers, for every k, by
/// recomputing the union of the first k reviewers' issue sets each time.
inline std::vector<double> oracle_coverage(const Repository& repo, const Corpus& corpus) {
  std::map<std::string, std::set<std::string>> issues_of;
  for (const auto& issue : repo.issues) {
    for (const auto& c : issue.comments) {
      if (c.author != issue.opener) issues_of[c.author].insert(issue.id);
    }
  }
  std::vector<std::pair<std::int64_t, std::string>> order;
  for (const auto& [login, _] : issues_of) order.push_back({-corpus.followers_of(login), login});
  std::sort(order.begin(), order.end());
  std::vector<double> curve;
  for (std::size_t k = 1; k <= order.size(); ++k) {
    std::set<std::string> covered;
    for (std::size_t j = 0; j < k; ++j) {
      const auto& s = issues_of[order[j].second];
      covered.insert(s.begin(), s.end());
    }
    curve.push_back(100.0 * static_cast<double>(covered.size()) /
                    static_cast<double>(repo.issues.size()));
  }
  return curve;
}

// ---------------------------------------------------------------------------
// Pearson

struct OracleCorrelation {
  double r;
  double p;
};

/// Long-double Pearson with the p-value from Boost's Student t.
inline OracleCorrelation oracle_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  long double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  long double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  long double r = sxy / std::sqrt(sxx * syy);
  r = std::clamp(r, -1.0L, 1.0L);
  if (std::fabs(r) == 1.0L) return {static_cast<double>(r), 0.0};
  const long double df = static_cast<long double>(n) - 2;
  const long double t = r * std::sqrt(df / (1 - r * r));
  boost::math::students_t_distribution<long double> dist(df);
  const long double p = 2 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
  return {static_cast<double>(r), static_cast<double>(p)};
}

}  // namespace testing_support
