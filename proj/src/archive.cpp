#include "issuelab/archive.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>
#include <json.hpp>

#include "issuelab/errors.hpp"

namespace issuelab {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

template <typename T>
struct Pending {
  std::size_t line;
  T value;
};

struct Parsed {
  std::vector<Pending<User>> users;
  std::vector<Pending<Repository>> repos;
  std::vector<Pending<Issue>> issues;
  std::vector<Pending<Comment>> comments;
  std::vector<Pending<Commit>> commits;
  std::optional<Timestamp> snapshot_at;
  bool saw_meta = false;
};

class LineReader {
 public:
  LineReader(const json& obj, std::size_t line) : obj_(obj), line_(line) {}

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(line_, what); }

  const json& field(const char* name) const {
    auto it = obj_.find(name);
    if (it == obj_.end()) fail(fmt::format("missing field '{}'", name));
    return *it;
  }

  bool has(const char* name) const {
    auto it = obj_.find(name);
    return it != obj_.end() && !it->is_null();
  }

  std::string str(const char* name) const {
    const json& v = field(name);
    if (!v.is_string()) fail(fmt::format("field '{}' must be a string", name));
    return v.get<std::string>();
  }

  std::string str_or(const char* name, std::string fallback) const {
    return has(name) ? str(name) : fallback;
  }

  std::int64_t integer(const char* name) const {
    const json& v = field(name);
    if (!v.is_number_integer()) fail(fmt::format("field '{}' must be an integer", name));
    return v.get<std::int64_t>();
  }

  std::int64_t integer_or(const char* name, std::int64_t fallback) const {
    return has(name) ? integer(name) : fallback;
  }

  bool boolean_or(const char* name, bool fallback) const {
    if (!has(name)) return fallback;
    const json& v = field(name);
    if (!v.is_boolean()) fail(fmt::format("field '{}' must be a boolean", name));
    return v.get<bool>();
  }

  Timestamp time(const char* name) const {
    const json& v = field(name);
    if (v.is_number_integer()) return v.get<Timestamp>();
    if (!v.is_string()) fail(fmt::format("field '{}' must be a timestamp", name));
    try {
      return parse_iso8601(v.get<std::string>());
    } catch (const Error& e) {
      fail(e.what());
    }
  }

  std::optional<Timestamp> opt_time(const char* name) const {
    if (!has(name)) return std::nullopt;
    return time(name);
  }

  std::vector<std::string> strings_or_empty(const char* name) const {
    std::vector<std::string> out;
    if (!has(name)) return out;
    const json& v = field(name);
    if (!v.is_array()) fail(fmt::format("field '{}' must be an array", name));
    for (const auto& e : v) {
      if (!e.is_string()) fail(fmt::format("field '{}' must hold strings", name));
      out.push_back(e.get<std::string>());
    }
    return out;
  }

 private:
  const json& obj_;
  std::size_t line_;
};

void parse_line(const std::string& text, std::size_t line, Parsed& out) {
  json obj;
  try {
    obj = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(line, fmt::format("invalid JSON ({})", e.what()));
  }
  if (!obj.is_object()) throw ParseError(line, "record is not a JSON object");
  LineReader r(obj, line);
  const std::string kind = r.str("kind");

  if (kind == "meta") {
    if (out.saw_meta) r.fail("duplicate meta record");
    out.saw_meta = true;
    const auto version = r.integer("version");
    if (version != kArchiveVersion) r.fail(fmt::format("unsupported archive version {}", version));
    out.snapshot_at = r.opt_time("snapshot_at");
  } else if (kind == "user") {
    out.users.push_back({line, User{r.str("login"), r.integer("followers")}});
  } else if (kind == "repo") {
    Repository repo;
    repo.id = r.str("id");
    try {
      repo.category = parse_category(r.str("category"));
    } catch (const Error& e) {
      r.fail(e.what());
    }
    repo.created_at = r.time("created_at");
    repo.owner = r.str("owner");
    for (auto& c : r.strings_or_empty("contributors")) repo.contributors.insert(std::move(c));
    repo.stargazers = r.integer_or("stargazers", 0);
    repo.forks = r.integer_or("forks", 0);
    repo.watchers = r.integer_or("watchers", 0);
    out.repos.push_back({line, std::move(repo)});
  } else if (kind == "issue") {
    Issue issue;
    issue.id = r.str("id");
    issue.repo = r.str("repo");
    issue.opener = r.str("opener");
    if (r.has("closer")) issue.closer = r.str("closer");
    issue.created_at = r.time("created_at");
    issue.closed_at = r.opt_time("closed_at");
    issue.has_linked_code = r.boolean_or("has_linked_code", false);
    out.issues.push_back({line, std::move(issue)});
  } else if (kind == "comment") {
    Comment c;
    c.id = r.str("id");
    c.issue = r.str("issue");
    c.author = r.str("author");
    c.created_at = r.time("created_at");
    c.body = r.str_or("body", "");
    out.comments.push_back({line, std::move(c)});
  } else if (kind == "commit") {
    Commit c;
    c.id = r.str("id");
    c.repo = r.str("repo");
    c.author = r.str("author");
    c.created_at = r.time("created_at");
    c.lines_added = r.integer_or("lines_added", 0);
    c.lines_removed = r.integer_or("lines_removed", 0);
    c.issues = r.strings_or_empty("issues");
    out.commits.push_back({line, std::move(c)});
  } else {
    r.fail(fmt::format("unknown record kind '{}'", kind));
  }
}

// Per-record invariants that do not need any other record.
std::optional<std::string> local_violation(const User& u) {
  if (u.login.empty()) return "login must be non-empty";
  if (u.followers < 0) return "followers must be >= 0";
  return std::nullopt;
}

std::optional<std::string> local_violation(const Issue& i) {
  if (i.closed_at.has_value() != i.closer.has_value()) return "closer present iff closed_at present";
  if (i.closed_at && *i.closed_at < i.created_at) return "closed_at must be >= created_at";
  return std::nullopt;
}

std::optional<std::string> local_violation(const Commit& c) {
  if (c.lines_added < 0 || c.lines_removed < 0) return "line counts must be >= 0";
  return std::nullopt;
}

LoadResult link(Parsed parsed) {
  LoadResult result;
  Corpus& corpus = result.corpus;
  corpus.snapshot_at = parsed.snapshot_at;
  auto reject = [&](std::size_t line, const std::string& id, std::string reason) {
    result.rejected.push_back({line, id, std::move(reason)});
  };

  for (auto& [line, user] : parsed.users) {
    if (auto why = local_violation(user)) {
      reject(line, user.login, *why);
    } else if (corpus.users.count(user.login)) {
      reject(line, user.login, "duplicate login");
    } else {
      corpus.users.emplace(user.login, user);
    }
  }
  auto require_user = [&](const std::string& from, const std::string& login) {
    if (!corpus.users.count(login)) throw IntegrityError(from, login, "unknown user");
  };

  std::map<std::string, Repository> repos;
  for (auto& [line, repo] : parsed.repos) {
    if (repos.count(repo.id)) {
      reject(line, repo.id, "duplicate repository id");
      continue;
    }
    require_user(repo.id, repo.owner);
    for (const auto& c : repo.contributors) require_user(repo.id, c);
    repos.emplace(repo.id, std::move(repo));
  }

  // issue id -> (repo id, index in repo.issues)
  std::unordered_map<std::string, std::pair<std::string, std::size_t>> issue_index;
  std::unordered_set<std::string> rejected_issues;
  for (auto& [line, issue] : parsed.issues) {
    auto repo_it = repos.find(issue.repo);
    if (repo_it == repos.end()) throw IntegrityError(issue.id, issue.repo, "unknown repository");
    require_user(issue.id, issue.opener);
    if (issue.closer) require_user(issue.id, *issue.closer);
    std::optional<std::string> why = local_violation(issue);
    if (!why && (issue_index.count(issue.id) || rejected_issues.count(issue.id))) {
      why = "duplicate issue id";
    }
    if (!why && issue.created_at < repo_it->second.created_at) {
      why = "created_at precedes repository created_at";
    }
    if (why) {
      reject(line, issue.id, *why);
      rejected_issues.insert(issue.id);
      continue;
    }
    auto& list = repo_it->second.issues;
    issue_index.emplace(issue.id, std::make_pair(issue.repo, list.size()));
    list.push_back(std::move(issue));
  }

  std::unordered_set<std::string> comment_ids;
  for (auto& [line, comment] : parsed.comments) {
    if (rejected_issues.count(comment.issue)) {
      reject(line, comment.id, "parent issue rejected");
      continue;
    }
    auto it = issue_index.find(comment.issue);
    if (it == issue_index.end()) throw IntegrityError(comment.id, comment.issue, "unknown issue");
    require_user(comment.id, comment.author);
    Issue& issue = repos.at(it->second.first).issues[it->second.second];
    if (!comment_ids.insert(comment.id).second) {
      reject(line, comment.id, "duplicate comment id");
    } else if (comment.created_at < issue.created_at) {
      reject(line, comment.id, "created_at precedes issue created_at");
    } else {
      issue.comments.push_back(std::move(comment));
    }
  }

  std::unordered_set<std::string> commit_ids;
  for (auto& [line, commit] : parsed.commits) {
    auto repo_it = repos.find(commit.repo);
    if (repo_it == repos.end()) throw IntegrityError(commit.id, commit.repo, "unknown repository");
    require_user(commit.id, commit.author);
    for (const auto& ref : commit.issues) {
      if (!issue_index.count(ref) && !rejected_issues.count(ref)) {
        throw IntegrityError(commit.id, ref, "unknown issue");
      }
    }
    std::erase_if(commit.issues, [&](const std::string& ref) { return rejected_issues.count(ref) > 0; });
    std::optional<std::string> why = local_violation(commit);
    if (!why && !commit_ids.insert(commit.id).second) why = "duplicate commit id";
    if (!why && commit.created_at < repo_it->second.created_at) {
      why = "created_at precedes repository created_at";
    }
    if (why) {
      reject(line, commit.id, *why);
      continue;
    }
    repo_it->second.commits.push_back(std::move(commit));
  }

  for (auto& [id, repo] : repos) corpus.repos.push_back(std::move(repo));
  canonicalize(corpus);
  std::sort(result.rejected.begin(), result.rejected.end(),
            [](const Rejection& a, const Rejection& b) { return a.line < b.line; });
  return result;
}

ordered_json time_value(Timestamp t) { return format_iso8601(t); }

}  // namespace

LoadResult read_archive(std::istream& in) {
  Parsed parsed;
  std::string text;
  std::size_t line = 0;
  std::size_t records = 0;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.find_first_not_of(" \t") == std::string::npos) continue;
    ++records;
    parse_line(text, line, parsed);
  }
  LoadResult result = link(std::move(parsed));
  result.records = records;
  result.kept = records - result.rejected.size();
  return result;
}

LoadResult load_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open archive '{}'", path.string()));
  return read_archive(in);
}

void write_archive(const Corpus& corpus, std::ostream& out) {
  auto emit = [&](const ordered_json& record) { out << record.dump() << '\n'; };

  ordered_json meta{{"kind", "meta"}, {"version", kArchiveVersion}};
  if (corpus.snapshot_at) meta["snapshot_at"] = time_value(*corpus.snapshot_at);
  emit(meta);

  for (const auto& [login, user] : corpus.users) {
    emit({{"kind", "user"}, {"login", user.login}, {"followers", user.followers}});
  }
  for (const auto& repo : corpus.repos) {
    emit({{"kind", "repo"},
          {"id", repo.id},
          {"category", to_string(repo.category)},
          {"created_at", time_value(repo.created_at)},
          {"owner", repo.owner},
          {"contributors", repo.contributors},
          {"stargazers", repo.stargazers},
          {"forks", repo.forks},
          {"watchers", repo.watchers}});
    for (const auto& issue : repo.issues) {
      ordered_json rec{{"kind", "issue"},
                       {"id", issue.id},
                       {"repo", issue.repo},
                       {"opener", issue.opener}};
      if (issue.closer) rec["closer"] = *issue.closer;
      rec["created_at"] = time_value(issue.created_at);
      if (issue.closed_at) rec["closed_at"] = time_value(*issue.closed_at);
      rec["has_linked_code"] = issue.has_linked_code;
      emit(rec);
      for (const auto& c : issue.comments) {
        emit({{"kind", "comment"},
              {"id", c.id},
              {"issue", c.issue},
              {"author", c.author},
              {"created_at", time_value(c.created_at)},
              {"body", c.body}});
      }
    }
    for (const auto& c : repo.commits) {
      ordered_json rec{{"kind", "commit"},
                       {"id", c.id},
                       {"repo", c.repo},
                       {"author", c.author},
                       {"created_at", time_value(c.created_at)},
                       {"lines_added", c.lines_added},
                       {"lines_removed", c.lines_removed}};
      if (!c.issues.empty()) rec["issues"] = c.issues;
      emit(rec);
    }
  }
}

void save_archive(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(fmt::format("cannot write archive '{}'", path.string()));
  write_archive(corpus, out);
  if (!out.flush()) throw Error(fmt::format("write failed for '{}'", path.string()));
}

std::vector<Violation> validate(const Corpus& corpus) {
  std::vector<Violation> out;
  auto add = [&](const std::string& id, const char* field, const char* rule) {
    out.push_back({id, field, rule});
  };
  auto user_known = [&](const std::string& login) { return corpus.users.count(login) > 0; };

  for (const auto& [key, user] : corpus.users) {
    if (user.login.empty()) add(key, "login", "login must be non-empty");
    if (key != user.login) add(key, "login", "user map key must equal login");
    if (user.followers < 0) add(user.login, "followers", "followers must be >= 0");
  }

  std::unordered_set<std::string> repo_ids, issue_ids, comment_ids, commit_ids;
  for (const auto& repo : corpus.repos) {
    if (!repo_ids.insert(repo.id).second) add(repo.id, "id", "repository id must be unique");
    if (!user_known(repo.owner)) add(repo.id, "owner", "owner must be a known user");
    for (const auto& c : repo.contributors) {
      if (!user_known(c)) add(repo.id, "contributors", "contributors must be known users");
    }
    if (repo.stargazers < 0 || repo.forks < 0 || repo.watchers < 0) {
      add(repo.id, "stargazers/forks/watchers", "counts must be >= 0");
    }

    for (const auto& issue : repo.issues) {
      if (!issue_ids.insert(issue.id).second) add(issue.id, "id", "issue id must be unique");
      if (issue.repo != repo.id) add(issue.id, "repo", "issue must reference its repository");
      if (!user_known(issue.opener)) add(issue.id, "opener", "opener must be a known user");
      if (issue.created_at < repo.created_at) {
        add(issue.id, "created_at", "repository created_at must be <= event timestamps");
      }
      if (issue.closed_at.has_value() != issue.closer.has_value()) {
        add(issue.id, issue.closer ? "closed_at" : "closer", "closer present iff closed_at present");
      }
      if (issue.closed_at && *issue.closed_at < issue.created_at) {
        add(issue.id, "closed_at", "closed_at must be >= created_at");
      }
      if (issue.closer && !user_known(*issue.closer)) {
        add(issue.id, "closer", "closer must be a known user");
      }
      for (const auto& c : issue.comments) {
        if (!comment_ids.insert(c.id).second) add(c.id, "id", "comment id must be unique");
        if (c.issue != issue.id) add(c.id, "issue", "comment must reference its issue");
        if (!user_known(c.author)) add(c.id, "author", "author must be a known user");
        if (c.created_at < issue.created_at) {
          add(c.id, "created_at", "comment created_at must be >= issue created_at");
        }
      }
    }

    for (const auto& c : repo.commits) {
      if (!commit_ids.insert(c.id).second) add(c.id, "id", "commit id must be unique");
      if (c.repo != repo.id) add(c.id, "repo", "commit must reference its repository");
      if (!user_known(c.author)) add(c.id, "author", "author must be a known user");
      if (c.created_at < repo.created_at) {
        add(c.id, "created_at", "repository created_at must be <= event timestamps");
      }
      if (c.lines_added < 0) add(c.id, "lines_added", "lines_added must be >= 0");
      if (c.lines_removed < 0) add(c.id, "lines_removed", "lines_removed must be >= 0");
    }
  }
  return out;
}

}  // namespace issuelab
