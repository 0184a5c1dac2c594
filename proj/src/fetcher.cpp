#include "issuelab/fetcher.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <random>
#include <regex>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <httplib.h>

#include "issuelab/archive.hpp"
#include "issuelab/parallel.hpp"

namespace issuelab::github {

using nlohmann::json;
using nlohmann::ordered_json;

BudgetExhausted::BudgetExhausted(Timestamp reset_at)
    : FetchError(fmt::format("API rate budget exhausted until {}", format_iso8601(reset_at))),
      reset_at_(reset_at) {}

UnknownRepo::UnknownRepo(std::string slug)
    : FetchError(fmt::format("unknown repository '{}'", slug)), slug_(std::move(slug)) {}

DecodeError::DecodeError(std::string url, const std::string& what)
    : FetchError(fmt::format("cannot decode {}: {}", url, what)), url_(std::move(url)) {}

void check(const FetchPlan& plan) {
  if (plan.page_size < 1 || plan.page_size > 100) {
    throw Error(fmt::format("page size {} outside 1..100", plan.page_size));
  }
  if (plan.max_pages < 1) throw Error("max pages must be positive");
}

// ---------------------------------------------------------------------------

HttpTransport::HttpTransport(std::string base_url) : base_url_(std::move(base_url)) {
  while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
}

HttpResponse HttpTransport::get(const std::string& target, const Headers& headers) {
  httplib::Client client(base_url_);
  client.set_connection_timeout(10);
  client.set_read_timeout(60);
  httplib::Headers h;
  for (const auto& [k, v] : headers) h.emplace(k, v);
  auto res = client.Get(target, h);
  if (!res) {
    throw FetchError(fmt::format("GET {}{} failed: {}", base_url_, target,
                                 httplib::to_string(res.error())));
  }
  HttpResponse out;
  out.status = res->status;
  out.body = std::move(res->body);
  for (const auto& [k, v] : res->headers) {
    std::string key = k;
    std::transform(key.begin(), key.end(), key.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    out.headers[key] = v;
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

Timestamp system_now() {
  using namespace std::chrono;
  return duration_cast<seconds>(system_clock::now().time_since_epoch()).count();
}

std::optional<std::int64_t> header_int(const Headers& headers, const char* name) {
  auto it = headers.find(name);
  if (it == headers.end()) return std::nullopt;
  try {
    return std::stoll(it->second);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace

RateLimiter::RateLimiter(Clock clock) : clock_(clock ? std::move(clock) : Clock(system_now)) {}

void RateLimiter::acquire() {
  std::unique_lock lock(mutex_);
  while (true) {
    if (budget_ && clock_() >= budget_->reset_at) budget_.reset();
    if (budget_) {
      if (budget_->remaining <= 0) throw BudgetExhausted(budget_->reset_at);
      --budget_->remaining;
      return;
    }
    if (!probing_) {
      probing_ = true;
      return;
    }
    probe_done_.wait(lock);
  }
}

void RateLimiter::refund() {
  std::lock_guard lock(mutex_);
  if (budget_) ++budget_->remaining;
}

void RateLimiter::abandon() {
  std::lock_guard lock(mutex_);
  if (probing_) {
    probing_ = false;
  } else if (budget_) {
    ++budget_->remaining;
  }
  probe_done_.notify_all();
}

void RateLimiter::observe(const Headers& headers) {
  std::lock_guard lock(mutex_);
  const auto remaining = header_int(headers, "x-ratelimit-remaining");
  const auto reset = header_int(headers, "x-ratelimit-reset");
  if (remaining && reset) {
    if (!budget_ || budget_->reset_at != *reset) {
      budget_ = RateBudget{std::max<std::int64_t>(0, *remaining), *reset};
    } else {
      budget_->remaining = std::min(budget_->remaining, std::max<std::int64_t>(0, *remaining));
    }
  }
  probing_ = false;
  probe_done_.notify_all();
}

std::optional<RateBudget> RateLimiter::budget() const {
  std::lock_guard lock(mutex_);
  return budget_;
}

// ---------------------------------------------------------------------------

std::optional<EtagCache::Entry> EtagCache::find(const std::string& url) const {
  std::lock_guard lock(mutex_);
  auto it = entries_.find(url);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void EtagCache::store(const std::string& url, Entry entry) {
  std::lock_guard lock(mutex_);
  entries_[url] = std::move(entry);
}

std::size_t EtagCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

void EtagCache::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) return;
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(fmt::format("corrupt ETag cache '{}': {}", path.string(), e.what()));
  }
  std::lock_guard lock(mutex_);
  for (const auto& [url, entry] : doc.items()) {
    entries_[url] = Entry{entry.at("etag").get<std::string>(), entry.at("body").get<std::string>()};
  }
}

void EtagCache::save(const std::filesystem::path& path) const {
  json doc = json::object();
  {
    std::lock_guard lock(mutex_);
    for (const auto& [url, e] : entries_) doc[url] = {{"etag", e.etag}, {"body", e.body}};
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(fmt::format("cannot write ETag cache '{}'", path.string()));
  out << doc.dump() << '\n';
}

// ---------------------------------------------------------------------------

namespace {

std::string record_id(const ordered_json& record) {
  const std::string kind = record.at("kind").get<std::string>();
  if (kind == "meta") return {};
  if (kind == "user") return record.at("login").get<std::string>();
  return record.at("id").get<std::string>();
}

constexpr const char* kKindOrder[] = {"meta", "user", "repo", "issue", "comment", "commit"};

}  // namespace

void RecordStore::upsert(const ordered_json& record) {
  auto key = std::make_pair(record.at("kind").get<std::string>(), record_id(record));
  std::lock_guard lock(mutex_);
  records_[std::move(key)] = record;
}

bool RecordStore::has(const std::string& kind, const std::string& id) const {
  std::lock_guard lock(mutex_);
  return records_.count({kind, id}) > 0;
}

std::size_t RecordStore::size() const {
  std::lock_guard lock(mutex_);
  return records_.size();
}

void RecordStore::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) return;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      upsert(ordered_json::parse(line));
    } catch (const std::exception& e) {
      throw ParseError(n, fmt::format("journal '{}': {}", path.string(), e.what()));
    }
  }
}

void RecordStore::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  std::lock_guard lock(mutex_);
  for (const char* kind : kKindOrder) {
    for (const auto& [key, record] : records_) {
      if (key.first == kind) out << record.dump() << '\n';
    }
  }
}

Corpus RecordStore::to_corpus() const {
  std::stringstream buffer;
  {
    std::lock_guard lock(mutex_);
    for (const char* kind : kKindOrder) {
      for (const auto& [key, record] : records_) {
        if (key.first == kind) buffer << record.dump() << '\n';
      }
    }
  }
  return read_archive(buffer).corpus;
}

// ---------------------------------------------------------------------------

namespace {

constexpr const char* kGhost = "ghost";

std::string login_of(const json& user_field) {
  if (user_field.is_object()) {
    auto it = user_field.find("login");
    if (it != user_field.end() && it->is_string()) return it->get<std::string>();
  }
  return kGhost;
}

std::optional<std::string> next_link(const Headers& headers) {
  auto it = headers.find("link");
  if (it == headers.end()) return std::nullopt;
  const std::string& link = it->second;
  std::size_t pos = 0;
  while (pos < link.size()) {
    const auto open = link.find('<', pos);
    const auto close = link.find('>', open);
    if (open == std::string::npos || close == std::string::npos) break;
    const auto end = link.find(',', close);
    const std::string params = link.substr(close + 1, end == std::string::npos ? std::string::npos
                                                                                : end - close - 1);
    if (params.find("rel=\"next\"") != std::string::npos) {
      std::string url = link.substr(open + 1, close - open - 1);
      // Reduce an absolute URL to path + query.
      const auto scheme = url.find("://");
      if (scheme != std::string::npos) {
        const auto path = url.find('/', scheme + 3);
        url = path == std::string::npos ? "/" : url.substr(path);
      }
      return url;
    }
    if (end == std::string::npos) break;
    pos = end + 1;
  }
  return std::nullopt;
}

template <typename T>
T field(const json& obj, const char* name, const std::string& url) {
  auto it = obj.find(name);
  if (it == obj.end() || it->is_null()) throw DecodeError(url, fmt::format("missing '{}'", name));
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw DecodeError(url, fmt::format("bad '{}': {}", name, e.what()));
  }
}

Timestamp time_field(const json& obj, const char* name, const std::string& url) {
  try {
    return parse_iso8601(field<std::string>(obj, name, url));
  } catch (const DecodeError&) {
    throw;
  } catch (const Error& e) {
    throw DecodeError(url, e.what());
  }
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

Fetcher::Fetcher(Transport& transport, FetchPlan plan, EtagCache& cache, Clock clock)
    : transport_(transport),
      plan_(std::move(plan)),
      cache_(cache),
      clock_(clock ? std::move(clock) : Clock(system_now)),
      limiter_(clock_) {
  check(plan_);
}

FetchStats Fetcher::stats() const { return {requests_.load(), non_cached_.load(), cached_.load()}; }

Fetcher::Page Fetcher::get(const std::string& target, bool not_found_is_unknown_repo,
                           const std::string& slug) {
  Headers headers{{"accept", "application/vnd.github+json"}, {"user-agent", "issuelab"}};
  if (!plan_.token.empty()) headers["authorization"] = "Bearer " + plan_.token;
  const auto cached = cache_.find(target);
  if (cached) headers["if-none-match"] = cached->etag;

  limiter_.acquire();
  HttpResponse resp;
  try {
    resp = transport_.get(target, headers);
  } catch (...) {
    limiter_.abandon();
    throw;
  }
  ++requests_;

  std::string body;
  if (resp.status == 304 && cached) {
    limiter_.refund();
    limiter_.observe(resp.headers);
    ++cached_;
    body = cached->body;
  } else {
    limiter_.observe(resp.headers);
    ++non_cached_;
    const auto remaining = header_int(resp.headers, "x-ratelimit-remaining");
    if ((resp.status == 403 || resp.status == 429) && remaining && *remaining == 0) {
      throw BudgetExhausted(header_int(resp.headers, "x-ratelimit-reset").value_or(0));
    }
    if (resp.status == 404 && not_found_is_unknown_repo) throw UnknownRepo(slug);
    if (resp.status != 200) {
      throw FetchError(fmt::format("GET {} returned HTTP {}", target, resp.status));
    }
    if (auto etag = resp.headers.find("etag"); etag != resp.headers.end()) {
      cache_.store(target, {etag->second, resp.body});
    }
    body = std::move(resp.body);
  }

  Page page;
  try {
    page.body = json::parse(body);
  } catch (const json::parse_error& e) {
    throw DecodeError(target, e.what());
  }
  page.next = next_link(resp.headers);
  return page;
}

std::string Fetcher::list_target(const std::string& path, const std::string& extra) const {
  std::string target = fmt::format("{}?per_page={}", path, plan_.page_size);
  if (!extra.empty()) target += "&" + extra;
  if (plan_.since) target += "&since=" + format_iso8601(*plan_.since);
  return target;
}

std::vector<json> Fetcher::get_all(const std::string& first_target) {
  std::vector<json> pages;
  std::optional<std::string> target = first_target;
  for (int n = 0; target && n < plan_.max_pages; ++n) {
    Page page = get(*target);
    if (!page.body.is_array() && !page.body.is_object()) {
      throw DecodeError(*target, "expected a JSON array or object");
    }
    pages.push_back(std::move(page.body));
    target = page.next;
  }
  return pages;
}

void Fetcher::fetch_repository(const std::string& slug, RecordStore& store) {
  if (!store.has("meta", "")) {
    store.upsert({{"kind", "meta"}, {"version", 1}, {"snapshot_at", format_iso8601(clock_())}});
  }
  std::set<std::string> logins;

  // Repository
  const std::string repo_url = "/repos/" + slug;
  const json repo = get(repo_url, true, slug).body;
  if (!repo.is_object()) throw DecodeError(repo_url, "expected an object");
  const std::string owner = login_of(repo.value("owner", json()));
  logins.insert(owner);
  std::int64_t watchers = 0;
  if (repo.contains("subscribers_count") && repo["subscribers_count"].is_number_integer()) {
    watchers = repo["subscribers_count"].get<std::int64_t>();
  } else {
    watchers = repo.value("watchers_count", std::int64_t{0});
  }

  // Contributors
  std::set<std::string> contributors;
  for (const auto& page : get_all(list_target(repo_url + "/contributors"))) {
    for (const auto& c : page) {
      if (c.contains("login") && c["login"].is_string()) contributors.insert(c["login"].get<std::string>());
    }
  }
  logins.insert(contributors.begin(), contributors.end());
  store.upsert({{"kind", "repo"},
                {"id", slug},
                {"category", to_string(plan_.category)},
                {"created_at", format_iso8601(time_field(repo, "created_at", repo_url))},
                {"owner", owner},
                {"contributors", contributors},
                {"stargazers", repo.value("stargazers_count", std::int64_t{0})},
                {"forks", repo.value("forks_count", std::int64_t{0})},
                {"watchers", watchers}});

  // Issues (pull requests show up here too and count as linked code)
  const std::string issues_url = list_target(repo_url + "/issues", "state=all&sort=created&direction=asc");
  std::optional<std::string> target = issues_url;
  for (int n = 0; target && n < plan_.max_pages; ++n) {
    Page page = get(*target);
    if (!page.body.is_array()) throw DecodeError(*target, "expected an array of issues");
    const std::vector<json> items(page.body.begin(), page.body.end());
    std::vector<ordered_json> records(items.size());
    parallel_for(
        items.size(),
        [&](std::size_t i) {
          const json& item = items[i];
          const auto number = field<std::int64_t>(item, "number", *target);
          ordered_json rec{{"kind", "issue"},
                           {"id", fmt::format("{}#{}", slug, number)},
                           {"repo", slug},
                           {"opener", login_of(item.value("user", json()))}};
          rec["created_at"] = format_iso8601(time_field(item, "created_at", *target));
          if (item.contains("closed_at") && !item["closed_at"].is_null()) {
            json closed_by = item.value("closed_by", json());
            if (closed_by.is_null()) {
              closed_by = get(fmt::format("{}/issues/{}", repo_url, number)).body.value("closed_by", json());
            }
            rec["closer"] = login_of(closed_by);
            rec["closed_at"] = format_iso8601(time_field(item, "closed_at", *target));
          }
          rec["has_linked_code"] = item.contains("pull_request") && !item["pull_request"].is_null();
          records[i] = std::move(rec);
        },
        plan_.workers);
    for (const auto& rec : records) {
      logins.insert(rec["opener"].get<std::string>());
      if (rec.contains("closer")) logins.insert(rec["closer"].get<std::string>());
      store.upsert(rec);
    }
    target = page.next;
  }

  // Comments on issues we hold
  for (const auto& page : get_all(list_target(repo_url + "/issues/comments", "sort=created&direction=asc"))) {
    for (const auto& item : page) {
      const auto issue_url = field<std::string>(item, "issue_url", repo_url);
      const std::string number = issue_url.substr(issue_url.find_last_of('/') + 1);
      const std::string issue_id = fmt::format("{}#{}", slug, number);
      if (!store.has("issue", issue_id)) continue;
      const std::string author = login_of(item.value("user", json()));
      logins.insert(author);
      store.upsert({{"kind", "comment"},
                    {"id", fmt::format("{}", field<std::int64_t>(item, "id", issue_url))},
                    {"issue", issue_id},
                    {"author", author},
                    {"created_at", format_iso8601(time_field(item, "created_at", issue_url))},
                    {"body", item.value("body", json("")).is_string() ? item["body"].get<std::string>() : ""}});
    }
  }

  // Commits, with per-commit line counts and "#123" references
  static const std::regex issue_ref(R"(#(\d+))");
  target = list_target(repo_url + "/commits");
  for (int n = 0; target && n < plan_.max_pages; ++n) {
    Page page = get(*target);
    if (!page.body.is_array()) throw DecodeError(*target, "expected an array of commits");
    const std::vector<json> items(page.body.begin(), page.body.end());
    std::vector<ordered_json> records(items.size());
    parallel_for(
        items.size(),
        [&](std::size_t i) {
          const json& item = items[i];
          const auto sha = field<std::string>(item, "sha", *target);
          const json& commit = item.value("commit", json::object());
          const json& author_sig = commit.value("author", json::object());
          json stats = item.value("stats", json());
          if (stats.is_null() && plan_.commit_stats) {
            stats = get(fmt::format("{}/commits/{}", repo_url, sha)).body.value("stats", json());
          }
          ordered_json rec{{"kind", "commit"},
                           {"id", sha},
                           {"repo", slug},
                           {"author", login_of(item.value("author", json()))},
                           {"created_at", format_iso8601(time_field(author_sig, "date", *target))},
                           {"lines_added", stats.is_object() ? stats.value("additions", std::int64_t{0}) : 0},
                           {"lines_removed", stats.is_object() ? stats.value("deletions", std::int64_t{0}) : 0}};
          const std::string message = commit.value("message", std::string());
          std::set<std::string> refs;
          for (auto it = std::sregex_iterator(message.begin(), message.end(), issue_ref);
               it != std::sregex_iterator(); ++it) {
            const std::string id = fmt::format("{}#{}", slug, (*it)[1].str());
            if (store.has("issue", id)) refs.insert(id);
          }
          if (!refs.empty()) rec["issues"] = refs;
          records[i] = std::move(rec);
        },
        plan_.workers);
    for (const auto& rec : records) {
      logins.insert(rec["author"].get<std::string>());
      store.upsert(rec);
    }
    target = page.next;
  }

  // Follower counts, once per user per store
  std::vector<std::string> missing;
  for (const auto& login : logins) {
    if (store.has("user", login)) continue;
    if (login == kGhost) {
      store.upsert({{"kind", "user"}, {"login", kGhost}, {"followers", 0}});
    } else {
      missing.push_back(login);
    }
  }
  std::vector<std::int64_t> followers(missing.size(), 0);
  parallel_for(
      missing.size(),
      [&](std::size_t i) {
        try {
          const json user = get("/users/" + missing[i]).body;
          followers[i] = user.value("followers", std::int64_t{0});
        } catch (const BudgetExhausted&) {
          throw;
        } catch (const DecodeError&) {
          throw;
        } catch (const FetchError&) {
          followers[i] = 0;  // deleted or renamed account
        }
      },
      plan_.workers);
  for (std::size_t i = 0; i < missing.size(); ++i) {
    store.upsert({{"kind", "user"}, {"login", missing[i]}, {"followers", followers[i]}});
  }
}

void Fetcher::fetch_all(RecordStore& store) {
  for (const auto& slug : plan_.targets) fetch_repository(slug, store);
}

std::vector<std::string> Fetcher::search_by_topic(const std::string& topic) {
  if (topic.empty()) throw Error("topic must be non-empty");
  const std::string needle = lower(topic);
  std::vector<std::string> out;
  const std::string first = fmt::format("/search/repositories?q=topic:{}&per_page={}",
                                        httplib::detail::encode_url(topic), plan_.page_size);
  for (const auto& page : get_all(first)) {
    if (!page.is_object() || !page.contains("items") || !page["items"].is_array()) {
      throw DecodeError(first, "expected a search result object");
    }
    for (const auto& item : page["items"]) {
      bool match = false;
      for (const auto& t : item.value("topics", json::array())) {
        match = match || (t.is_string() && lower(t.get<std::string>()).find(needle) != std::string::npos);
      }
      if (match) out.push_back(field<std::string>(item, "full_name", first));
    }
  }
  return out;
}

std::vector<std::string> sample_slugs(const std::vector<std::string>& slugs, std::size_t n,
                                      std::uint64_t seed) {
  std::vector<std::string> pool = slugs;
  n = std::min(n, pool.size());
  std::mt19937_64 gen(seed);
  for (std::size_t i = 0; i < n; ++i) {
    // unbiased draw from [0, pool.size() - i)
    const std::uint64_t range = pool.size() - i;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % range;
    std::uint64_t draw;
    do {
      draw = gen();
    } while (draw >= limit);
    std::swap(pool[i], pool[i + draw % range]);
  }
  pool.resize(n);
  return pool;
}

}  // namespace issuelab::github
