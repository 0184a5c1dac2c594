#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "issuelab/errors.hpp"
#include "issuelab/model.hpp"

namespace issuelab::github {

// ---------------------------------------------------------------------------
// Errors

class FetchError : public Error {
 public:
  using Error::Error;
};

/// The API refused a request because the rate budget ran out, or the local
/// budget says the next request would exceed it.
class BudgetExhausted : public FetchError {
 public:
  explicit BudgetExhausted(Timestamp reset_at);
  Timestamp reset_at() const noexcept { return reset_at_; }

 private:
  Timestamp reset_at_;
};

class UnknownRepo : public FetchError {
 public:
  explicit UnknownRepo(std::string slug);
  const std::string& slug() const noexcept { return slug_; }

 private:
  std::string slug_;
};

/// The payload at `url` was not the JSON shape we expected.
class DecodeError : public FetchError {
 public:
  DecodeError(std::string url, const std::string& what);
  const std::string& url() const noexcept { return url_; }

 private:
  std::string url_;
};

// ---------------------------------------------------------------------------
// Plan and transport

struct FetchPlan {
  std::vector<std::string> targets;  // "owner/name"
  std::string token;                 // empty for anonymous access
  int page_size = 100;               // 1..100
  int max_pages = 10;                // per listing endpoint
  std::optional<Timestamp> since;
  Category category = Category::Random;
  unsigned workers = 4;
  /// Look up per-commit line counts (one request per commit).
  bool commit_stats = true;
};

/// Throws issuelab::Error when page_size or max_pages are out of range.
void check(const FetchPlan& plan);

using Headers = std::map<std::string, std::string>;  // lowercase names

struct HttpResponse {
  int status = 0;
  Headers headers;
  std::string body;
};

/// Issues GET requests against the API root. Implementations must be safe
/// to call from several threads at once.
class Transport {
 public:
  virtual ~Transport() = default;
  /// `target` is a path plus query, e.g. "/repos/o/r/issues?page=2".
  virtual HttpResponse get(const std::string& target, const Headers& headers) = 0;
};

/// cpp-httplib backed transport; one connection per request.
class HttpTransport : public Transport {
 public:
  explicit HttpTransport(std::string base_url = "https://api.github.com");
  HttpResponse get(const std::string& target, const Headers& headers) override;

 private:
  std::string base_url_;
};

// ---------------------------------------------------------------------------
// Rate budget and ETag cache

struct RateBudget {
  std::int64_t remaining = 0;
  Timestamp reset_at = 0;
};

/// Client-side mirror of the API rate budget shared by all workers. A unit
/// is reserved before each request and handed back when the answer was a
/// 304 (which the API does not charge for).
class RateLimiter {
 public:
  using Clock = std::function<Timestamp()>;
  explicit RateLimiter(Clock clock);

  /// Throws BudgetExhausted instead of issuing a request that would
  /// overdraw the budget. While the budget is unknown only one request is
  /// let through at a time.
  void acquire();
  void refund();
  /// Releases an acquire() whose request failed before any response.
  void abandon();
  /// Folds X-RateLimit-Remaining / X-RateLimit-Reset into the budget.
  void observe(const Headers& headers);
  std::optional<RateBudget> budget() const;

 private:
  Clock clock_;
  mutable std::mutex mutex_;
  std::condition_variable probe_done_;
  std::optional<RateBudget> budget_;
  bool probing_ = false;
};

/// URL -> (ETag, body). Thread-safe; optionally persisted as JSON.
class EtagCache {
 public:
  struct Entry {
    std::string etag;
    std::string body;
  };

  std::optional<Entry> find(const std::string& url) const;
  void store(const std::string& url, Entry entry);
  std::size_t size() const;

  void load(const std::filesystem::path& path);  // missing file = empty cache
  void save(const std::filesystem::path& path) const;

 private:
  mutable std::mutex mutex_;
  std::map<std::string, Entry> entries_;
};

// ---------------------------------------------------------------------------
// Record store

/// Archive records keyed by (kind, id); later upserts replace earlier ones,
/// so re-running an interrupted fetch converges to the same archive.
class RecordStore {
 public:
  void upsert(const nlohmann::ordered_json& record);
  bool has(const std::string& kind, const std::string& id) const;
  std::size_t size() const;

  /// Reads an archive written by save(); a missing file leaves the store empty.
  void load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  /// Links the records through the regular archive reader.
  Corpus to_corpus() const;

 private:
  mutable std::mutex mutex_;
  std::map<std::pair<std::string, std::string>, nlohmann::ordered_json> records_;
};

// ---------------------------------------------------------------------------
// Fetcher

struct FetchStats {
  std::size_t requests = 0;    // everything sent
  std::size_t non_cached = 0;  // answered with a body
  std::size_t cached = 0;      // answered 304 from the ETag cache
};

class Fetcher {
 public:
  using Clock = RateLimiter::Clock;

  Fetcher(Transport& transport, FetchPlan plan, EtagCache& cache, Clock clock = {});

  /// Pulls the repository, its contributors, issues, comments, commits and
  /// every referenced user into `store`. Records are upserted page by page.
  void fetch_repository(const std::string& slug, RecordStore& store);

  /// Every target of the plan, in order.
  void fetch_all(RecordStore& store);

  /// Slugs of repositories with a topic containing `topic`
  /// (case-insensitive), following pagination up to the plan's page cap.
  std::vector<std::string> search_by_topic(const std::string& topic);

  FetchStats stats() const;
  const RateLimiter& rate_limiter() const { return limiter_; }

 private:
  struct Page {
    nlohmann::json body;
    std::optional<std::string> next;
  };

  Page get(const std::string& target, bool not_found_is_unknown_repo = false,
           const std::string& slug = {});
  std::vector<nlohmann::json> get_all(const std::string& first_target);
  std::string list_target(const std::string& path, const std::string& extra = {}) const;

  Transport& transport_;
  FetchPlan plan_;
  EtagCache& cache_;
  Clock clock_;
  RateLimiter limiter_;
  std::atomic<std::size_t> requests_{0};
  std::atomic<std::size_t> non_cached_{0};
  std::atomic<std::size_t> cached_{0};
};

/// Uniform sample of `n` slugs (all of them when n >= size), reproducible
/// for a given seed. Not a reconstruction of any published sampling.
std::vector<std::string> sample_slugs(const std::vector<std::string>& slugs, std::size_t n,
                                      std::uint64_t seed);

}  // namespace issuelab::github
