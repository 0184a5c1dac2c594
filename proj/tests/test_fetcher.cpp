#include <filesystem>
#include <set>

#include <gtest/gtest.h>

#include "fake_github.hpp"
#include "issuelab/archive.hpp"
#include "issuelab/fetcher.hpp"
#include "test_support.hpp"

using namespace issuelab;
using namespace issuelab::github;
using testing_support::FakeGitHub;
using testing_support::FakeRepo;
using testing_support::FakeServer;
using testing_support::make_fake_repo;

namespace {

constexpr Timestamp kNow = 1672531200;  // 2023-01-01
Timestamp fixed_clock() { return kNow; }

FetchPlan plan_for(std::vector<std::string> targets, int page_size = 100) {
  FetchPlan plan;
  plan.targets = std::move(targets);
  plan.page_size = page_size;
  plan.max_pages = 50;
  return plan;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / fmt::format("issuelab_fetch_{}_{}", ::getpid(), name);
}

}  // namespace

TEST(FetchPlan, Bounds) {
  FetchPlan p;
  EXPECT_NO_THROW(check(p));
  p.page_size = 0;
  EXPECT_THROW(check(p), Error);
  p.page_size = 101;
  EXPECT_THROW(check(p), Error);
  p.page_size = 100;
  p.max_pages = 0;
  EXPECT_THROW(check(p), Error);
}

TEST(Fetcher, TwoPagesOfIssuesOverHttp) {
  FakeGitHub gh;
  gh.repos["acme/big"] = make_fake_repo(gh, "acme/big", 200);
  FakeServer server(gh);
  HttpTransport http(server.url());
  EtagCache cache;
  Fetcher f(http, plan_for({"acme/big"}), cache, fixed_clock);
  RecordStore store;
  f.fetch_all(store);

  const Corpus c = store.to_corpus();
  ASSERT_EQ(c.repos.size(), 1u);
  const Repository& r = c.repos[0];
  EXPECT_EQ(r.issues.size(), 200u);
  EXPECT_EQ(r.owner, "acme");
  EXPECT_EQ(r.contributors, (std::set<std::string>{"acme", "dev1", "dev2"}));
  EXPECT_EQ(r.watchers, 5);  // subscribers, not the stargazer mirror
  EXPECT_EQ(r.stargazers, 42);
  EXPECT_EQ(c.snapshot_at, kNow);
  std::size_t comments = 0, closed = 0, linked = 0;
  for (const auto& i : r.issues) {
    comments += i.comments.size();
    if (i.is_closed()) {
      ++closed;
      EXPECT_EQ(i.closer, "acme") << i.id;  // including those needing the detail lookup
    }
    linked += i.has_linked_code;
  }
  EXPECT_EQ(comments, 50u);
  EXPECT_EQ(closed, 66u);
  EXPECT_EQ(linked, 50u);
  ASSERT_EQ(r.commits.size(), 5u);
  EXPECT_EQ(r.commits[1].lines_added, 20);
  EXPECT_EQ(r.commits[1].issues, (std::vector<std::string>{"acme/big#1"}));
  EXPECT_EQ(r.commits[2].issues, (std::vector<std::string>{"acme/big#1", "acme/big#2"}));
  EXPECT_TRUE(r.commits[3].issues.empty());  // #9999 does not exist
  EXPECT_EQ(c.followers_of("u3"), 30);
  EXPECT_TRUE(validate(c).empty());

  // both issue pages were requested with the asked-for page size
  std::size_t issue_pages = 0;
  for (const auto& t : gh.log) issue_pages += t.rfind("/repos/acme/big/issues?", 0) == 0;
  EXPECT_EQ(issue_pages, 2u);
}

TEST(Fetcher, UnknownRepo) {
  FakeGitHub gh;
  EtagCache cache;
  Fetcher f(gh, plan_for({"nobody/nothing"}), cache, fixed_clock);
  RecordStore store;
  try {
    f.fetch_all(store);
    FAIL() << "expected UnknownRepo";
  } catch (const UnknownRepo& e) {
    EXPECT_EQ(e.slug(), "nobody/nothing");
  }
}

TEST(Fetcher, WarmCacheIssuesNoChargedRequests) {
  FakeGitHub gh;
  gh.repos["acme/big"] = make_fake_repo(gh, "acme/big", 120);
  EtagCache cache;
  RecordStore first;
  Fetcher(gh, plan_for({"acme/big"}), cache, fixed_clock).fetch_all(first);
  const auto charged_first = gh.charged;
  EXPECT_GT(charged_first, 0);

  gh.reset_counters();
  RecordStore second;
  Fetcher again(gh, plan_for({"acme/big"}), cache, fixed_clock);
  again.fetch_all(second);
  EXPECT_EQ(again.stats().non_cached, 0u);
  EXPECT_EQ(again.stats().cached, again.stats().requests);
  EXPECT_EQ(gh.charged, 0);
  EXPECT_EQ(second.to_corpus(), first.to_corpus());
}

TEST(Fetcher, CacheSurvivesASaveAndLoad) {
  FakeGitHub gh;
  gh.repos["acme/small"] = make_fake_repo(gh, "acme/small", 10);
  const auto path = temp_path("cache.json");
  {
    EtagCache cache;
    RecordStore store;
    Fetcher(gh, plan_for({"acme/small"}), cache, fixed_clock).fetch_all(store);
    cache.save(path);
  }
  gh.reset_counters();
  EtagCache cache;
  cache.load(path);
  RecordStore store;
  Fetcher f(gh, plan_for({"acme/small"}), cache, fixed_clock);
  f.fetch_all(store);
  EXPECT_EQ(f.stats().non_cached, 0u);
  std::filesystem::remove(path);
}

TEST(Fetcher, TokenIsSentAsBearer) {
  FakeGitHub gh;
  gh.repos["acme/small"] = make_fake_repo(gh, "acme/small", 3);
  EtagCache cache;
  FetchPlan plan = plan_for({"acme/small"});
  plan.token = "s3cret";
  RecordStore store;
  Fetcher(gh, plan, cache, fixed_clock).fetch_all(store);
  EXPECT_EQ(gh.last_authorization, "Bearer s3cret");
}

TEST(Fetcher, SinceIsForwarded) {
  FakeGitHub gh;
  gh.repos["acme/big"] = make_fake_repo(gh, "acme/big", 48);
  EtagCache cache;
  FetchPlan plan = plan_for({"acme/big"});
  plan.since = parse_iso8601("2020-01-02T00:00:00Z");
  RecordStore store;
  Fetcher(gh, plan, cache, fixed_clock).fetch_all(store);
  // issue n is updated at +(n + 1) hours, so #23..#48 are new enough
  EXPECT_EQ(store.to_corpus().repos[0].issues.size(), 26u);
  for (const auto& t : gh.log) {
    if (t.find("/issues?") != std::string::npos) {
      EXPECT_NE(t.find("since=2020-01-02T00:00:00Z"), std::string::npos) << t;
    }
  }
}

TEST(Fetcher, DeletedAccountsBecomeGhostsOrZeroFollowers) {
  FakeGitHub gh;
  FakeRepo repo = make_fake_repo(gh, "acme/small", 4);
  repo.issues[0]["user"] = nullptr;
  gh.followers.erase("u2");  // opener of #2 no longer resolves
  gh.repos["acme/small"] = repo;
  EtagCache cache;
  RecordStore store;
  Fetcher(gh, plan_for({"acme/small"}), cache, fixed_clock).fetch_all(store);
  const Corpus c = store.to_corpus();
  EXPECT_EQ(c.repos[0].issues[0].opener, "ghost");
  EXPECT_EQ(c.followers_of("ghost"), 0);
  EXPECT_EQ(c.followers_of("u2"), 0);
  EXPECT_NE(c.find_user("u2"), nullptr);
  for (const auto& t : gh.log) EXPECT_NE(t, "/users/ghost");
}

TEST(Fetcher, MalformedPayloadsNameTheUrl) {
  FakeGitHub gh;
  gh.repos["acme/small"] = make_fake_repo(gh, "acme/small", 3);
  gh.broken["/repos/acme/small"] = "<html>not json</html>";
  EtagCache cache;
  RecordStore store;
  try {
    Fetcher(gh, plan_for({"acme/small"}), cache, fixed_clock).fetch_all(store);
    FAIL() << "expected DecodeError";
  } catch (const DecodeError& e) {
    EXPECT_EQ(e.url(), "/repos/acme/small");
  }

  FakeGitHub gh2;
  FakeRepo repo = make_fake_repo(gh2, "acme/small", 3);
  repo.issues[1].erase("created_at");
  gh2.repos["acme/small"] = repo;
  EtagCache cache2;
  RecordStore store2;
  EXPECT_THROW(Fetcher(gh2, plan_for({"acme/small"}), cache2, fixed_clock).fetch_all(store2), DecodeError);
}

TEST(Fetcher, RefusedByTheApi) {
  FakeGitHub gh;
  gh.repos["acme/small"] = make_fake_repo(gh, "acme/small", 3);
  gh.exhausted_elsewhere = true;
  EtagCache cache;
  RecordStore store;
  try {
    Fetcher(gh, plan_for({"acme/small"}), cache, fixed_clock).fetch_all(store);
    FAIL() << "expected BudgetExhausted";
  } catch (const BudgetExhausted& e) {
    EXPECT_EQ(e.reset_at(), gh.reset_at);
  }
}

TEST(FetcherProperties, NeverExceedsTheAdvertisedBudget) {
  for (std::int64_t budget : {1, 5, 17, 30, 44}) {
    for (unsigned workers : {1u, 4u, 16u}) {
      FakeGitHub gh;
      gh.repos["acme/big"] = make_fake_repo(gh, "acme/big", 200);
      gh.budget = budget;
      EtagCache cache;
      FetchPlan plan = plan_for({"acme/big"}, 50);
      plan.workers = workers;
      RecordStore store;
      Fetcher f(gh, plan, cache, fixed_clock);
      EXPECT_THROW(f.fetch_all(store), BudgetExhausted) << budget;
      EXPECT_LE(gh.charged, budget);
      EXPECT_EQ(gh.over_budget, 0u) << "budget " << budget << " workers " << workers;
      ASSERT_TRUE(f.rate_limiter().budget());
      EXPECT_EQ(f.rate_limiter().budget()->remaining, 0);
    }
  }
}

TEST(FetcherProperties, BudgetLargeEnoughCompletes) {
  FakeGitHub gh;
  gh.repos["acme/big"] = make_fake_repo(gh, "acme/big", 200);
  gh.budget = 200;
  EtagCache cache;
  FetchPlan plan = plan_for({"acme/big"});
  plan.workers = 8;
  RecordStore store;
  Fetcher f(gh, plan, cache, fixed_clock);
  f.fetch_all(store);
  EXPECT_EQ(f.rate_limiter().budget()->remaining, gh.budget - gh.charged);
}

TEST(FetcherProperties, ResumingAnInterruptedRunConverges) {
  auto setup = [](FakeGitHub& gh) {
    gh.repos["acme/one"] = make_fake_repo(gh, "acme/one", 130);
    gh.repos["acme/two"] = make_fake_repo(gh, "acme/two", 40);
  };
  const std::vector<std::string> targets{"acme/one", "acme/two"};

  FakeGitHub clean;
  setup(clean);
  EtagCache clean_cache;
  RecordStore reference;
  Fetcher(clean, plan_for(targets, 50), clean_cache, fixed_clock).fetch_all(reference);
  const std::size_t total = clean.requests;
  const auto ref_path = temp_path("ref.ndjson");
  reference.save(ref_path);
  const std::string want = testing_support::read_file(ref_path);

  for (std::size_t cut : {std::size_t{1}, std::size_t{3}, std::size_t{7}, total / 2, total - 1}) {
    FakeGitHub gh;
    setup(gh);
    gh.fail_after = cut;
    EtagCache cache;
    const auto journal = temp_path(fmt::format("journal{}.ndjson", cut));
    {
      RecordStore store;
      EXPECT_THROW(Fetcher(gh, plan_for(targets, 50), cache, fixed_clock).fetch_all(store), FetchError);
      store.save(journal);
    }
    gh.fail_after.reset();
    RecordStore resumed;
    resumed.load(journal);
    Fetcher(gh, plan_for(targets, 50), cache, fixed_clock).fetch_all(resumed);
    resumed.save(journal);
    EXPECT_EQ(testing_support::read_file(journal), want) << "cut after " << cut;
    EXPECT_EQ(resumed.to_corpus(), reference.to_corpus());
    std::filesystem::remove(journal);
  }
  std::filesystem::remove(ref_path);
}

TEST(RecordStore, UpsertReplaces) {
  RecordStore s;
  s.upsert({{"kind", "user"}, {"login", "a"}, {"followers", 1}});
  s.upsert({{"kind", "user"}, {"login", "a"}, {"followers", 2}});
  s.upsert({{"kind", "meta"}, {"version", 1}});
  EXPECT_EQ(s.size(), 2u);
  EXPECT_TRUE(s.has("user", "a"));
  EXPECT_TRUE(s.has("meta", ""));
  EXPECT_EQ(s.to_corpus().followers_of("a"), 2);
}

// ---------------------------------------------------------------------------
// Topic search

namespace {

nlohmann::json search_item(const std::string& slug, std::vector<std::string> topics) {
  return {{"full_name", slug}, {"topics", topics}};
}

}  // namespace

TEST(SearchByTopic, KeepsOnlyTaggedRepositories) {
  FakeGitHub gh;
  gh.search_items = {search_item("a/one", {"ros", "robotics"}), search_item("b/two", {"python"}),
                     search_item("c/three", {"ROS2"}), search_item("d/four", {}),
                     search_item("e/five", {"ros-navigation"})};
  FakeServer server(gh);
  HttpTransport http(server.url());
  EtagCache cache;
  Fetcher f(http, plan_for({}), cache, fixed_clock);
  EXPECT_EQ(f.search_by_topic("ros"), (std::vector<std::string>{"a/one", "c/three", "e/five"}));
  EXPECT_TRUE(f.search_by_topic("quantum").empty());
  EXPECT_THROW(f.search_by_topic(""), Error);
}

TEST(SearchByTopic, FollowsPagination) {
  FakeGitHub gh;
  for (int k = 0; k < 150; ++k) gh.search_items.push_back(search_item(fmt::format("o/r{:03}", k), {"ros"}));
  EtagCache cache;
  Fetcher f(gh, plan_for({}, 100), cache, fixed_clock);
  const auto slugs = f.search_by_topic("ros");
  EXPECT_EQ(slugs.size(), 150u);
  EXPECT_EQ(gh.requests, 2u);
  EXPECT_EQ(std::set<std::string>(slugs.begin(), slugs.end()).size(), 150u);
}

// ---------------------------------------------------------------------------
// Sampling

TEST(SampleSlugs, DeterministicSubsetWithoutRepeats) {
  std::vector<std::string> all;
  for (int k = 0; k < 100; ++k) all.push_back(fmt::format("o/r{}", k));
  const auto a = sample_slugs(all, 10, 7);
  EXPECT_EQ(a, sample_slugs(all, 10, 7));
  EXPECT_NE(a, sample_slugs(all, 10, 8));
  EXPECT_EQ(a.size(), 10u);
  const std::set<std::string> unique(a.begin(), a.end());
  EXPECT_EQ(unique.size(), 10u);
  for (const auto& s : a) EXPECT_NE(std::find(all.begin(), all.end(), s), all.end());
  EXPECT_EQ(sample_slugs(all, 500, 1).size(), 100u);
  EXPECT_TRUE(sample_slugs({}, 3, 1).empty());
}

TEST(SampleSlugs, RoughlyUniform) {
  std::vector<std::string> all;
  for (int k = 0; k < 10; ++k) all.push_back(std::to_string(k));
  std::map<std::string, int> hits;
  for (std::uint64_t seed = 0; seed < 5000; ++seed) {
    for (const auto& s : sample_slugs(all, 3, seed)) ++hits[s];
  }
  // each slug is expected 1500 times; 5 sigma is about 160
  for (const auto& [s, n] : hits) EXPECT_NEAR(n, 1500, 160) << s;
}
