#include "issuelab/model.hpp"

#include <algorithm>
#include <cctype>

#include <fmt/format.h>

#include "issuelab/errors.hpp"

namespace issuelab {

std::string_view to_string(Category c) {
  switch (c) {
    case Category::Random:
      return "Random";
    case Category::ROS:
      return "ROS";
    case Category::Popular:
      return "Popular";
  }
  return "Random";
}

Category parse_category(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "random") return Category::Random;
  if (lower == "ros") return Category::ROS;
  if (lower == "popular") return Category::Popular;
  throw Error(fmt::format("unknown category '{}'", text));
}

const User* Corpus::find_user(std::string_view login) const {
  auto it = users.find(std::string(login));
  return it == users.end() ? nullptr : &it->second;
}

std::int64_t Corpus::followers_of(std::string_view login) const {
  const User* u = find_user(login);
  return u ? u->followers : 0;
}

const Repository* Corpus::find_repo(std::string_view id) const {
  auto it = std::lower_bound(repos.begin(), repos.end(), id,
                             [](const Repository& r, std::string_view key) { return r.id < key; });
  return (it != repos.end() && it->id == id) ? &*it : nullptr;
}

Timestamp Corpus::reference_time() const {
  if (snapshot_at) return *snapshot_at;
  Timestamp latest = 0;
  for (const auto& repo : repos) {
    latest = std::max(latest, repo.created_at);
    for (const auto& issue : repo.issues) {
      latest = std::max(latest, issue.created_at);
      if (issue.closed_at) latest = std::max(latest, *issue.closed_at);
      for (const auto& c : issue.comments) latest = std::max(latest, c.created_at);
    }
    for (const auto& c : repo.commits) latest = std::max(latest, c.created_at);
  }
  return latest;
}

std::vector<std::string> reviewers_of(const Issue& issue) {
  std::vector<std::string> out;
  for (const auto& c : issue.comments) {
    if (c.author != issue.opener) out.push_back(c.author);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::set<std::string> reviewers_of(const Repository& repo) {
  std::set<std::string> out;
  for (const auto& issue : repo.issues) {
    for (const auto& c : issue.comments) {
      if (c.author != issue.opener) out.insert(c.author);
    }
  }
  return out;
}

std::size_t review_comment_count(const Issue& issue) {
  return static_cast<std::size_t>(std::count_if(
      issue.comments.begin(), issue.comments.end(),
      [&](const Comment& c) { return c.author != issue.opener; }));
}

std::set<std::string> effective_contributors(const Repository& repo) {
  std::set<std::string> out = repo.contributors;
  const bool owner_committed = std::any_of(repo.commits.begin(), repo.commits.end(),
                                           [&](const Commit& c) { return c.author == repo.owner; });
  if (!owner_committed) out.erase(repo.owner);
  return out;
}

std::vector<const Repository*> select(const Corpus& corpus, std::optional<Category> category) {
  std::vector<const Repository*> out;
  for (const auto& repo : corpus.repos) {
    if (!category || repo.category == *category) out.push_back(&repo);
  }
  return out;
}

void canonicalize(Corpus& corpus) {
  auto by_time_then_id = [](const auto& a, const auto& b) {
    return a.created_at != b.created_at ? a.created_at < b.created_at : a.id < b.id;
  };
  std::sort(corpus.repos.begin(), corpus.repos.end(),
            [](const Repository& a, const Repository& b) { return a.id < b.id; });
  for (auto& repo : corpus.repos) {
    std::sort(repo.issues.begin(), repo.issues.end(), by_time_then_id);
    std::sort(repo.commits.begin(), repo.commits.end(), by_time_then_id);
    for (auto& issue : repo.issues) {
      std::sort(issue.comments.begin(), issue.comments.end(), by_time_then_id);
    }
  }
}

}  // namespace issuelab
