#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "issuelab/time.hpp"

namespace issuelab {

enum class Category { Random, ROS, Popular };

inline constexpr Category kAllCategories[] = {Category::Random, Category::ROS, Category::Popular};

std::string_view to_string(Category c);
/// Case-insensitive; throws issuelab::Error for anything but the three names.
Category parse_category(std::string_view text);

struct User {
  std::string login;
  std::int64_t followers = 0;

  bool operator==(const User&) const = default;
};

struct Comment {
  std::string id;
  std::string issue;  // owning Issue::id
  std::string author;
  Timestamp created_at = 0;
  std::string body;

  bool operator==(const Comment&) const = default;
};

struct Issue {
  std::string id;
  std::string repo;  // owning Repository::id
  std::string opener;
  std::optional<std::string> closer;
  Timestamp created_at = 0;
  std::optional<Timestamp> closed_at;
  bool has_linked_code = false;
  std::vector<Comment> comments;  // sorted by (created_at, id)

  bool is_closed() const { return closed_at.has_value(); }
  bool operator==(const Issue&) const = default;
};

struct Commit {
  std::string id;  // sha
  std::string repo;
  std::string author;
  Timestamp created_at = 0;
  std::int64_t lines_added = 0;
  std::int64_t lines_removed = 0;
  /// Issue ids this commit explicitly references; empty when unknown.
  std::vector<std::string> issues;

  bool operator==(const Commit&) const = default;
};

struct Repository {
  std::string id;  // "owner/name"
  Category category = Category::Random;
  Timestamp created_at = 0;
  std::string owner;
  std::set<std::string> contributors;
  std::int64_t stargazers = 0;
  std::int64_t forks = 0;
  std::int64_t watchers = 0;
  std::vector<Issue> issues;    // sorted by (created_at, id)
  std::vector<Commit> commits;  // sorted by (created_at, id)

  bool operator==(const Repository&) const = default;
};

/// A fully linked, immutable-after-load set of repositories plus the users
/// they reference.
struct Corpus {
  int version = 1;
  /// When follower counts were sampled; used as "now" for repository age.
  std::optional<Timestamp> snapshot_at;
  std::map<std::string, User> users;
  std::vector<Repository> repos;  // sorted by id

  const User* find_user(std::string_view login) const;
  std::int64_t followers_of(std::string_view login) const;
  const Repository* find_repo(std::string_view id) const;
  /// snapshot_at when present, otherwise the latest timestamp in the corpus.
  Timestamp reference_time() const;

  bool operator==(const Corpus&) const = default;
};

/// Logins that commented on `issue`, excluding its opener. Sorted, unique.
std::vector<std::string> reviewers_of(const Issue& issue);

/// Distinct reviewers across every issue of the repository.
std::set<std::string> reviewers_of(const Repository& repo);

/// Comments on `issue` authored by someone other than the opener.
std::size_t review_comment_count(const Issue& issue);

/// The stored contributor set, keeping the owner only if they authored at
/// least one commit.
std::set<std::string> effective_contributors(const Repository& repo);

/// Repositories of one category (all of them when `category` is empty).
std::vector<const Repository*> select(const Corpus& corpus, std::optional<Category> category);

/// Restores the canonical ordering of repos, issues, comments and commits.
void canonicalize(Corpus& corpus);

}  // namespace issuelab
