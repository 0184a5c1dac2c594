#include "issuelab/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <openssl/evp.h>
#include <unistd.h>

#include "issuelab/analytics.hpp"
#include "issuelab/archive.hpp"
#include "issuelab/community.hpp"
#include "issuelab/csv.hpp"
#include "issuelab/errors.hpp"
#include "issuelab/fetcher.hpp"
#include "issuelab/nin_sim.hpp"
#include "issuelab/sentiment.hpp"
#include "issuelab/temporal.hpp"

namespace issuelab::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct UsageError : Error {
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Tables. Cells are JSON scalars so the same rows serve CSV and JSON output.

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<ordered_json>> rows;
};

ordered_json num(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(); }
ordered_json num(std::optional<double> v) { return v ? num(*v) : ordered_json(); }

std::string cell_text(const ordered_json& cell) {
  if (cell.is_null()) return {};
  if (cell.is_string()) return cell.get<std::string>();
  if (cell.is_boolean()) return cell.get<bool>() ? "true" : "false";
  if (cell.is_number_float()) return csv::number(cell.get<double>());
  return cell.dump();
}

void write_csv(const Table& table, const fs::path& dir) {
  csv::Writer w(dir / (table.name + ".csv"), table.columns);
  for (const auto& row : table.rows) {
    std::vector<std::string> fields;
    fields.reserve(row.size());
    for (const auto& cell : row) fields.push_back(cell_text(cell));
    w.row(fields);
  }
  w.close();
}

ordered_json to_json(const Table& table) {
  ordered_json rows = ordered_json::array();
  for (const auto& row : table.rows) {
    ordered_json obj = ordered_json::object();
    for (std::size_t i = 0; i < row.size(); ++i) obj[table.columns[i]] = row[i];
    rows.push_back(std::move(obj));
  }
  return rows;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  out << text;
  out.flush();
  if (!out) throw Error(fmt::format("write failed for '{}'", path.string()));
}

enum class Format { Csv, Structured };

void write_table(const Table& table, const fs::path& dir, Format format) {
  if (format == Format::Csv) {
    write_csv(table, dir);
  } else {
    write_text(dir / (table.name + ".json"), to_json(table).dump(2) + "\n");
  }
}

// ---------------------------------------------------------------------------
// Options shared by the subcommands

struct Options {
  std::vector<std::string> inputs;
  std::string out_dir = "out";
  std::string category;
  std::uint64_t seed = 0;
  std::string alpha = "6h";
  std::string format = "csv";
  unsigned workers = 0;
  std::string lexicon;
  bool linked_only = false;

  // simulate
  std::vector<double> aps{0.3, 0.6, 0.9};
  std::string iap = "6mo";
  std::string horizon = "3y";
  std::string window = "30d";
  std::string jitter = "0";
  bool generative = false;
  std::string events_dir;

  // community
  bool normalized = false;
  bool export_graphs = false;

  // expertise
  double grid_step = 5.0;

  // correlate
  std::string target = "issues";
  std::vector<std::string> features;

  // fetch
  std::vector<std::string> repos;
  std::string slugs_file;
  std::string topic;
  std::size_t sample = 0;
  int page_size = 100;
  int max_pages = 10;
  std::string since;
  std::string api_url = "https://api.github.com";
  std::string archive;
  std::string cache;
  bool no_commit_stats = false;
};

std::optional<Category> category_filter(const Options& o) {
  if (o.category.empty()) return std::nullopt;
  try {
    return parse_category(o.category);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

Seconds duration_flag(const std::string& name, const std::string& text) {
  try {
    return parse_duration(text);
  } catch (const Error& e) {
    throw UsageError(fmt::format("--{}: {}", name, e.what()));
  }
}

Format format_flag(const Options& o) {
  if (o.format == "csv") return Format::Csv;
  if (o.format == "structured" || o.format == "json") return Format::Structured;
  throw UsageError(fmt::format("--format must be csv or structured, not '{}'", o.format));
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot read '{}'", path.string()));
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
  return hex;
}

Timestamp now_utc() {
  using namespace std::chrono;
  return duration_cast<seconds>(system_clock::now().time_since_epoch()).count();
}

// ---------------------------------------------------------------------------
// Corpus loading

Corpus load_inputs(const Options& o, std::ostream& err) {
  if (o.inputs.empty()) throw UsageError("--in is required");
  Corpus merged;
  for (const auto& path : o.inputs) {
    LoadResult loaded = load_archive(path);
    for (const auto& r : loaded.rejected) {
      err << fmt::format("warning: {}:{}: dropped {}: {}\n", path, r.line, r.id, r.reason);
    }
    Corpus& c = loaded.corpus;
    for (auto& [login, user] : c.users) {
      auto [it, inserted] = merged.users.emplace(login, user);
      if (!inserted && it->second.followers != user.followers) {
        throw Error(fmt::format("user '{}' has different follower counts across inputs", login));
      }
    }
    for (auto& repo : c.repos) {
      if (merged.find_repo(repo.id)) {
        throw Error(fmt::format("repository '{}' appears in more than one input", repo.id));
      }
      merged.repos.push_back(std::move(repo));
    }
    if (c.snapshot_at && (!merged.snapshot_at || *c.snapshot_at > *merged.snapshot_at)) {
      merged.snapshot_at = c.snapshot_at;
    }
  }
  canonicalize(merged);
  return merged;
}

Corpus filtered(const Corpus& corpus, std::optional<Category> category) {
  if (!category) return corpus;
  Corpus out = corpus;
  std::erase_if(out.repos, [&](const Repository& r) { return r.category != *category; });
  return out;
}

SentimentLexicon load_lexicon(const Options& o) {
  return o.lexicon.empty() ? SentimentLexicon::bundled() : SentimentLexicon::load(o.lexicon);
}

// Categories present in the (filtered) corpus, in canonical order.
std::vector<Category> present_categories(const Corpus& corpus) {
  std::vector<Category> out;
  for (Category c : kAllCategories) {
    if (!select(corpus, c).empty()) out.push_back(c);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Table builders

Table table1(const Corpus& corpus, const Options& o, const SentimentLexicon& lexicon) {
  Table t{"table1", {"category", "metric", "mean", "repos"}, {}};
  MetricOptions mo;
  mo.linked_only = o.linked_only;
  mo.lexicon = &lexicon;
  auto emit = [&](std::string scope, std::optional<Category> c) {
    const RepoSummary s = repo_summary(corpus, c, mo);
    for (const auto& f : summary_fields()) {
      const Mean& m = s.*(f.member);
      t.rows.push_back({scope, std::string(f.name), m.defined() ? num(m.value) : ordered_json(), m.n});
    }
  };
  for (Category c : present_categories(corpus)) emit(std::string(to_string(c)), c);
  if (!corpus.repos.empty()) emit("all", std::nullopt);
  return t;
}

void add_correlations(Table& t, const Corpus& corpus, const std::string& target,
                      const std::vector<std::string>& features, std::ostream& err) {
  auto emit = [&](std::string scope, std::optional<Category> c) {
    try {
      const CorrelationReport r = correlate_features(corpus, c, target, features);
      for (const auto& row : r.rows) {
        t.rows.push_back({scope, row.feature, num(row.r), num(row.p), row.n, row.note});
      }
    } catch (const EmptySelection& e) {
      err << fmt::format("warning: {}: {}\n", scope, e.what());
    }
  };
  for (Category c : present_categories(corpus)) emit(std::string(to_string(c)), c);
  if (!corpus.repos.empty()) emit("all", std::nullopt);
}

Table correlation_table(std::string name, const Corpus& corpus, const std::string& target,
                        const std::vector<std::string>& features, std::ostream& err) {
  Table t{std::move(name), {"category", "feature", "r", "p", "n", "note"}, {}};
  add_correlations(t, corpus, target, features, err);
  return t;
}

std::vector<SimConfig> sim_configs(const Options& o) {
  std::vector<SimConfig> configs;
  for (double ap : o.aps) {
    SimConfig c;
    c.iap = duration_flag("iap", o.iap);
    c.horizon = duration_flag("horizon", o.horizon);
    c.alpha = duration_flag("alpha", o.alpha);
    c.jitter = duration_flag("jitter", o.jitter);
    c.acceptance_probability = ap;
    c.seed = o.seed;
    c.generative = o.generative;
    try {
      check(c);
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
    configs.push_back(c);
  }
  if (configs.empty()) throw UsageError("at least one --ap is required");
  return configs;
}

struct SimTables {
  Table table3;
  Table timeline;
  CorpusSimulation sim;
};

SimTables simulation_tables(const Corpus& corpus, const Options& o, std::ostream& err) {
  CorpusSimOptions so;
  so.timeline_window = duration_flag("window", o.window);
  so.workers = o.workers;
  SimTables out{{"table3",
                 {"category", "ap", "before_dense", "before_regular", "before_dispersed",
                  "after_dense", "after_regular", "after_dispersed", "injected_regular", "repos",
                  "excluded"},
                 {}},
                {"fig6_timeline",
                 {"repo", "category", "ap", "phase", "window_start", "regular_pct", "gaps"},
                 {}},
                simulate_corpus(corpus, sim_configs(o), so)};
  for (const auto& w : out.sim.warnings) err << "warning: " << w << '\n';
  for (const auto& r : out.sim.rows) {
    out.table3.rows.push_back({std::string(to_string(r.category)), num(r.acceptance_probability),
                               num(r.before.dense), num(r.before.regular), num(r.before.dispersed),
                               num(r.after.dense), num(r.after.regular), num(r.after.dispersed),
                               num(r.injected_regular), r.repos, r.excluded});
  }
  for (const auto& r : out.sim.timelines) {
    out.timeline.rows.push_back({r.repo, std::string(to_string(r.category)),
                                 num(r.acceptance_probability), r.phase,
                                 format_iso8601(static_cast<Timestamp>(r.point.window_start)),
                                 num(r.point.regular_pct), r.point.gaps});
  }
  return out;
}

struct CommunityTables {
  Table ics_table;
  std::vector<IssueCommunityGraph> graphs;
};

CommunityTables community_tables(const Corpus& corpus, bool normalized) {
  CommunityTables out{{"ics", {"repo_id", "category", "ics", "e2_count", "issue_count", "isolated_count", "exceeds_one"}, {}}, {}};
  if (normalized) out.ics_table.columns.push_back("normalized");
  for (const auto& repo : corpus.repos) {
    IssueCommunityGraph g = build_graph(repo);
    const ICSReport r = ics(g);
    std::vector<ordered_json> row{repo.id, std::string(to_string(repo.category)), num(r.ics),
                                  r.e2_count, r.issue_count, r.isolated_issues.size(),
                                  r.exceeds_one};
    if (normalized) row.push_back(num(r.normalized));
    out.ics_table.rows.push_back(std::move(row));
    out.graphs.push_back(std::move(g));
  }
  return out;
}

struct ExpertiseTables {
  Table table4;
  Table curve;
};

ExpertiseTables expertise_tables(const Corpus& corpus, double grid_step) {
  ExpertiseTables out{{"table4",
                       {"category", "popularity_ratio", "top20_issue_coverage",
                        "mean_reviewer_followers", "repos"},
                       {}},
                      {"fig7_coverage", {"category", "reviewer_rank_pct", "issues_covered_pct"}, {}}};
  for (Category c : present_categories(corpus)) {
    const CoverageReport r = expertise_coverage(corpus, c, grid_step);
    const std::string name(to_string(c));
    if (r.empty) {
      out.table4.rows.push_back({name, nullptr, nullptr, nullptr, r.repos});
      continue;
    }
    out.table4.rows.push_back({name, num(r.popularity_ratio), num(r.top20_issue_coverage),
                               num(r.mean_reviewer_followers), r.repos});
    for (const auto& p : r.curve) {
      out.curve.rows.push_back({name, num(p.reviewer_rank_pct), num(p.issues_covered_pct)});
    }
  }
  return out;
}

Table popularity_table(const Corpus& corpus, std::ostream& err) {
  Table t{"fig8_popularity", {"repo", "category", "issue_count", "r", "p", "n"}, {}};
  const PopularityReport r = popularity_vs_comments(corpus);
  for (const auto& row : r.rows) {
    t.rows.push_back({row.repo, std::string(to_string(row.category)), row.issue_count,
                      num(row.correlation.r), num(row.correlation.p), row.correlation.n});
  }
  if (r.omitted > 0) {
    err << fmt::format("note: {} repositories omitted from the popularity analysis\n", r.omitted);
  }
  return t;
}

Table classify_table(const Corpus& corpus, Seconds alpha) {
  Table t{"classify",
          {"repo", "category", "issues", "gaps", "idm_hours", "dense_pct", "regular_pct",
           "dispersed_pct"},
          {}};
  for (const auto& repo : corpus.repos) {
    const GapSeries series = issue_gaps(repo);
    std::vector<ordered_json> row{repo.id, std::string(to_string(repo.category)),
                                  repo.issues.size(), series.gaps.size()};
    try {
      const Classification c = classify_gaps(series, alpha);
      row.insert(row.end(), {num(c.median / kHour), num(c.distribution.dense),
                             num(c.distribution.regular), num(c.distribution.dispersed)});
    } catch (const InsufficientData&) {
      row.insert(row.end(), {nullptr, nullptr, nullptr, nullptr});
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

/// One row per gap. Gaps of repositories without a usable median carry no label.
Table gaps_table(const Corpus& corpus, Seconds alpha) {
  Table t{"gaps", {"repo_id", "t_start", "duration_s", "label"}, {}};
  for (const auto& repo : corpus.repos) {
    const GapSeries series = issue_gaps(repo);
    std::optional<Classification> c;
    try {
      c = classify_gaps(series, alpha);
    } catch (const InsufficientData&) {
    }
    for (std::size_t i = 0; i < series.gaps.size(); ++i) {
      const Gap& g = series.gaps[i];
      t.rows.push_back({repo.id, format_iso8601(static_cast<Timestamp>(g.start)), num(g.duration),
                        c ? ordered_json(std::string(to_string(c->labels[i]))) : ordered_json()});
    }
  }
  return t;
}

Table sentiment_table(const Corpus& corpus, const SentimentLexicon& lexicon) {
  Table t{"sentiment", {"repo", "category", "comments", "mean_sentiment"}, {}};
  for (const auto& repo : corpus.repos) {
    const RepoSentiment s = repo_sentiment(repo, lexicon);
    t.rows.push_back({repo.id, std::string(to_string(repo.category)), s.comments,
                      s.empty ? ordered_json() : num(s.mean)});
  }
  return t;
}

// ---------------------------------------------------------------------------
// Manifest

void write_manifest(const fs::path& dir, const std::string& subcommand,
                    const std::vector<std::string>& args, const Options& o) {
  ordered_json m;
  m["tool"] = "issuelab";
  m["version"] = ISSUELAB_VERSION;
  m["subcommand"] = subcommand;
  m["argv"] = args;
  m["seed"] = o.seed;
  m["config"] = {{"category", o.category.empty() ? ordered_json() : ordered_json(o.category)},
                 {"alpha", o.alpha},
                 {"format", o.format},
                 {"workers", o.workers},
                 {"lexicon", o.lexicon.empty() ? ordered_json("bundled") : ordered_json(o.lexicon)},
                 {"linked_only", o.linked_only},
                 {"acceptance_probabilities", o.aps},
                 {"iap", o.iap},
                 {"horizon", o.horizon},
                 {"timeline_window", o.window},
                 {"jitter", o.jitter},
                 {"generative", o.generative},
                 {"normalized", o.normalized},
                 {"grid_step", o.grid_step},
                 {"target", o.target},
                 {"features", o.features}};
  ordered_json inputs = ordered_json::array();
  for (const auto& path : o.inputs) inputs.push_back({{"path", path}, {"sha256", sha256_file(path)}});
  if (!o.lexicon.empty()) inputs.push_back({{"path", o.lexicon}, {"sha256", sha256_file(o.lexicon)}});
  m["inputs"] = inputs;
  m["created_at"] = format_iso8601(now_utc());
  write_text(dir / "manifest.json", m.dump(2) + "\n");
}

fs::path prepare_out(const Options& o) {
  const fs::path dir = o.out_dir;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw Error(fmt::format("cannot create output directory '{}'", dir.string()));
  }
  return dir;
}

// Swaps a fully written staging directory into place. An existing target is
// only replaced when it looks like an earlier report.
void commit_dir(const fs::path& staging, const fs::path& target) {
  if (fs::exists(target)) {
    if (!fs::is_directory(target) ||
        (!fs::is_empty(target) && !fs::exists(target / "manifest.json"))) {
      throw Error(fmt::format("refusing to replace '{}': not an earlier report directory",
                              target.string()));
    }
    const fs::path old = target.string() + fmt::format(".old-{}", ::getpid());
    fs::rename(target, old);
    fs::rename(staging, target);
    fs::remove_all(old);
  } else {
    fs::rename(staging, target);
  }
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_validate(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.inputs.empty()) throw UsageError("--in is required");
  std::size_t problems = 0;
  for (const auto& path : o.inputs) {
    const LoadResult loaded = load_archive(path);
    for (const auto& r : loaded.rejected) {
      out << fmt::format("{}:{}: {}: {}\n", path, r.line, r.id, r.reason);
    }
    const auto violations = validate(loaded.corpus);
    for (const auto& v : violations) {
      out << fmt::format("{}: {} {}: {}\n", path, v.record_id, v.field, v.rule);
    }
    problems += loaded.rejected.size() + violations.size();
    out << fmt::format("{}: {} records, {} kept, {} rejected, {} repositories\n", path,
                       loaded.records, loaded.kept, loaded.rejected.size(),
                       loaded.corpus.repos.size());
  }
  if (problems > 0) {
    err << fmt::format("{} invalid records\n", problems);
    return kFailure;
  }
  return kOk;
}

int cmd_fetch(const Options& o, std::ostream& out, std::ostream& err) {
  github::FetchPlan plan;
  plan.page_size = o.page_size;
  plan.max_pages = o.max_pages;
  plan.workers = o.workers == 0 ? 4 : o.workers;
  plan.commit_stats = !o.no_commit_stats;
  if (const char* token = std::getenv("GITHUB_TOKEN")) plan.token = token;
  if (!o.since.empty()) {
    try {
      plan.since = parse_iso8601(o.since);
    } catch (const Error& e) {
      throw UsageError(fmt::format("--since: {}", e.what()));
    }
  }
  if (auto c = category_filter(o)) plan.category = *c;
  try {
    github::check(plan);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }

  const fs::path dir = prepare_out(o);
  const fs::path archive = o.archive.empty() ? dir / "archive.ndjson" : fs::path(o.archive);
  const fs::path cache_path = o.cache.empty() ? dir / "etag_cache.json" : fs::path(o.cache);

  github::HttpTransport transport(o.api_url);
  github::EtagCache cache;
  cache.load(cache_path);

  std::vector<std::string> slugs = o.repos;
  if (!o.slugs_file.empty()) {
    std::ifstream in(o.slugs_file);
    if (!in) throw Error(fmt::format("cannot read '{}'", o.slugs_file));
    std::string line;
    while (std::getline(in, line)) {
      const auto b = line.find_first_not_of(" \t\r");
      if (b == std::string::npos || line[b] == '#') continue;
      const auto e = line.find_last_not_of(" \t\r");
      slugs.push_back(line.substr(b, e - b + 1));
    }
  }
  github::Fetcher fetcher(transport, plan, cache);
  if (!o.topic.empty()) {
    for (auto& s : fetcher.search_by_topic(o.topic)) slugs.push_back(std::move(s));
  }
  if (o.sample > 0) slugs = github::sample_slugs(slugs, o.sample, o.seed);
  if (slugs.empty()) throw UsageError("nothing to fetch: give --repo, --slugs-file or --topic");

  // The archive doubles as the journal: re-running after an interruption
  // upserts into what is already there.
  github::RecordStore store;
  store.load(archive);
  int status = kOk;
  for (const auto& slug : slugs) {
    try {
      fetcher.fetch_repository(slug, store);
      out << fmt::format("fetched {}\n", slug);
    } catch (const github::UnknownRepo& e) {
      err << "warning: " << e.what() << '\n';
    } catch (const github::BudgetExhausted& e) {
      err << e.what() << "; re-run after the reset to resume\n";
      status = kFailure;
      store.save(archive);
      break;
    }
    store.save(archive);
    cache.save(cache_path);
  }
  cache.save(cache_path);
  const auto stats = fetcher.stats();
  out << fmt::format("{} requests ({} answered from the ETag cache), {} records in {}\n",
                     stats.requests, stats.cached, store.size(), archive.string());
  return status;
}

std::vector<std::string> default_or(const std::vector<std::string>& given,
                                    const std::vector<std::string>& fallback) {
  return given.empty() ? fallback : given;
}

int cmd_report(const Options& o, const std::vector<std::string>& args, std::ostream& out,
               std::ostream& err) {
  const Format format = format_flag(o);
  const Corpus corpus = filtered(load_inputs(o, err), category_filter(o));
  if (corpus.repos.empty()) throw EmptySelection("no repositories selected");
  const SentimentLexicon lexicon = load_lexicon(o);

  std::vector<Table> tables;
  tables.push_back(table1(corpus, o, lexicon));
  tables.push_back(correlation_table("table2", corpus, "issues",
                                     default_or(o.features, issue_count_features()), err));
  SimTables sim = simulation_tables(corpus, o, err);
  tables.push_back(std::move(sim.table3));
  ExpertiseTables ex = expertise_tables(corpus, o.grid_step);
  tables.push_back(std::move(ex.table4));
  tables.push_back(correlation_table("table5", corpus, "ics", ics_features(), err));
  tables.push_back(std::move(sim.timeline));
  tables.push_back(std::move(ex.curve));
  tables.push_back(popularity_table(corpus, err));

  const fs::path target = o.out_dir;
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path staging = target.string() + fmt::format(".tmp-{}", ::getpid());
  fs::remove_all(staging);
  fs::create_directories(staging);
  try {
    ordered_json combined = ordered_json::object();
    for (const auto& t : tables) {
      write_csv(t, staging);
      if (format == Format::Structured) {
        // keyed by category where the table has one
        const bool by_category = !t.columns.empty() && t.columns[0] == "category";
        ordered_json entry = by_category ? ordered_json::object() : to_json(t);
        if (by_category) {
          for (auto& row : to_json(t)) entry[row["category"].get<std::string>()].push_back(row);
        }
        combined[t.name] = std::move(entry);
      }
    }
    if (format == Format::Structured) write_text(staging / "report.json", combined.dump(2) + "\n");
    write_manifest(staging, "report", args, o);
    commit_dir(staging, target);
  } catch (...) {
    std::error_code ec;
    fs::remove_all(staging, ec);
    throw;
  }
  out << fmt::format("wrote {} report files for {} repositories to {}\n", tables.size(),
                     corpus.repos.size(), target.string());
  return kOk;
}

}  // namespace

const std::vector<std::string>& report_files() {
  static const std::vector<std::string> files{
      "table1.csv",        "table2.csv",        "table3.csv",         "table4.csv",
      "table5.csv",        "fig6_timeline.csv", "fig7_coverage.csv", "fig8_popularity.csv"};
  return files;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Issue-tracker analytics over archived GitHub data", "issuelab"};
  app.set_version_flag("--version", ISSUELAB_VERSION);
  app.require_subcommand(1, 1);
  app.fallthrough();

  Options o;
  app.add_option("--in", o.inputs, "Input archive(s), newline-delimited JSON")->check(CLI::ExistingFile);
  app.add_option("--out", o.out_dir, "Output directory")->capture_default_str();
  app.add_option("--category", o.category, "Restrict to random, ros or popular");
  app.add_option("--seed", o.seed, "Random seed")->capture_default_str();
  app.add_option("--alpha", o.alpha, "Half-width of the regular band (e.g. 6h)")->capture_default_str();
  app.add_option("--format", o.format, "csv or structured (JSON)")->capture_default_str();
  app.add_option("--workers", o.workers, "Worker threads, 0 = one per core")->capture_default_str();

  auto* fetch = app.add_subcommand("fetch", "Download repositories from the GitHub API (token in GITHUB_TOKEN)");
  fetch->add_option("--repo", o.repos, "owner/name, repeatable");
  fetch->add_option("--slugs-file", o.slugs_file, "File with one owner/name per line");
  fetch->add_option("--topic", o.topic, "Add repositories whose topics contain this term");
  fetch->add_option("--sample", o.sample, "Keep a uniform sample of n slugs (uses --seed)");
  fetch->add_option("--page-size", o.page_size, "Items per page, 1..100")->capture_default_str();
  fetch->add_option("--max-pages", o.max_pages, "Page cap per listing")->capture_default_str();
  fetch->add_option("--since", o.since, "Only items updated after this ISO-8601 time");
  fetch->add_option("--api-url", o.api_url, "API root")->capture_default_str();
  fetch->add_option("--archive", o.archive, "Archive to write (default <out>/archive.ndjson)");
  fetch->add_option("--cache", o.cache, "ETag cache (default <out>/etag_cache.json)");
  fetch->add_flag("--no-commit-stats", o.no_commit_stats, "Skip per-commit line counts");

  auto* validate_cmd = app.add_subcommand("validate", "Check archives against the data model");

  auto* summary = app.add_subcommand("summary", "Per-category repository statistics (table1)");
  auto* classify = app.add_subcommand("classify", "Dense/regular/dispersed shares per repository");
  auto* simulate_cmd = app.add_subcommand("simulate", "Run the new-issue notifier simulation");
  simulate_cmd->add_option("--ap", o.aps, "Acceptance probabilities")->capture_default_str();
  simulate_cmd->add_option("--iap", o.iap, "Initial assessment period")->capture_default_str();
  simulate_cmd->add_option("--horizon", o.horizon, "Simulated span from creation")->capture_default_str();
  simulate_cmd->add_option("--window", o.window, "Timeline window")->capture_default_str();
  simulate_cmd->add_option("--jitter", o.jitter, "Uniform notification delay bound")->capture_default_str();
  simulate_cmd->add_flag("--generative", o.generative, "Resample post-assessment gaps (synthetic studies)");
  simulate_cmd->add_option("--events", o.events_dir, "Write per-repository event logs here");

  auto* community = app.add_subcommand("community", "Issue community graphs and scores");
  community->add_flag("--normalized", o.normalized, "Add the spanning-forest score column");
  community->add_flag("--export-graphs", o.export_graphs, "Write edge lists under <out>/graphs");

  auto* expertise = app.add_subcommand("expertise", "Reviewer popularity and issue coverage");
  expertise->add_option("--grid-step", o.grid_step, "Curve resolution in percent")->capture_default_str();

  auto* correlate = app.add_subcommand("correlate", "Pearson correlations against a target feature");
  correlate->add_option("--target", o.target, "Target feature")->capture_default_str();
  correlate->add_option("--features", o.features, "Features (default: the issue-count set)");

  auto* sentiment = app.add_subcommand("sentiment", "Mean comment sentiment per repository");

  auto* report = app.add_subcommand("report", "Run everything and write the eight report files");
  report->add_option("--ap", o.aps, "Acceptance probabilities")->capture_default_str();
  report->add_option("--iap", o.iap, "Initial assessment period")->capture_default_str();
  report->add_option("--horizon", o.horizon, "Simulated span from creation")->capture_default_str();
  report->add_option("--window", o.window, "Timeline window")->capture_default_str();
  report->add_option("--grid-step", o.grid_step, "Coverage curve resolution in percent")->capture_default_str();

  for (auto* sub : {summary, sentiment, report}) {
    sub->add_option("--lexicon", o.lexicon, "Sentiment lexicon (token<TAB>polarity)")->check(CLI::ExistingFile);
  }
  for (auto* sub : {summary, report}) {
    sub->add_flag("--linked-only", o.linked_only, "Count only churn of commits that reference issues");
  }

  if (args.empty()) {
    err << app.help();
    return kUsage;
  }
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kOk;
  } catch (const CLI::CallForVersion& e) {
    out << e.what() << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\nRun with --help for usage.\n";
    return kUsage;
  }

  try {
    if (fetch->parsed()) return cmd_fetch(o, out, err);
    if (validate_cmd->parsed()) return cmd_validate(o, out, err);
    if (report->parsed()) return cmd_report(o, args, out, err);

    const Format format = format_flag(o);
    const Corpus corpus = filtered(load_inputs(o, err), category_filter(o));
    const fs::path dir = prepare_out(o);
    std::string name;
    if (summary->parsed()) {
      name = "summary";
      const SentimentLexicon lexicon = load_lexicon(o);
      write_table(table1(corpus, o, lexicon), dir, format);
    } else if (classify->parsed()) {
      name = "classify";
      const Seconds alpha = duration_flag("alpha", o.alpha);
      write_table(classify_table(corpus, alpha), dir, format);
      write_table(gaps_table(corpus, alpha), dir, format);
    } else if (simulate_cmd->parsed()) {
      name = "simulate";
      SimTables sim = simulation_tables(corpus, o, err);
      write_table(sim.table3, dir, format);
      write_table(sim.timeline, dir, format);
      if (!o.events_dir.empty()) {
        fs::create_directories(o.events_dir);
        for (std::size_t k = 0; k < sim.sim.results.size(); ++k) {
          for (const auto& r : sim.sim.results[k]) {
            std::string stem = r.repo;
            std::replace(stem.begin(), stem.end(), '/', '_');
            std::ofstream log(fs::path(o.events_dir) / fmt::format("{}_ap{}.tsv", stem, o.aps[k]),
                              std::ios::binary | std::ios::trunc);
            write_event_log(r, log);
          }
        }
      }
    } else if (community->parsed()) {
      name = "community";
      CommunityTables ct = community_tables(corpus, o.normalized);
      write_table(ct.ics_table, dir, format);
      write_table(correlation_table("table5", corpus, "ics", ics_features(), err), dir, format);
      if (o.export_graphs) {
        fs::create_directories(dir / "graphs");
        for (const auto& g : ct.graphs) {
          std::string stem = g.repo;
          std::replace(stem.begin(), stem.end(), '/', '_');
          export_graph(g, dir / "graphs", stem);
        }
      }
    } else if (expertise->parsed()) {
      name = "expertise";
      ExpertiseTables ex = expertise_tables(corpus, o.grid_step);
      write_table(ex.table4, dir, format);
      write_table(ex.curve, dir, format);
    } else if (correlate->parsed()) {
      name = "correlate";
      write_table(correlation_table("table2", corpus, o.target,
                                    default_or(o.features, issue_count_features()), err),
                  dir, format);
    } else if (sentiment->parsed()) {
      name = "sentiment";
      write_table(sentiment_table(corpus, load_lexicon(o)), dir, format);
    }
    write_manifest(dir, name, args, o);
    out << fmt::format("{}: wrote results for {} repositories to {}\n", name, corpus.repos.size(),
                       dir.string());
    return kOk;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace issuelab::cli
