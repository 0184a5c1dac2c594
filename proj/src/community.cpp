#include "issuelab/community.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "issuelab/csv.hpp"

namespace issuelab {

IssueCommunityGraph build_graph(const Repository& repo) {
  IssueCommunityGraph g;
  g.repo = repo.id;

  // reviewer -> issue -> comment count
  std::map<std::string, std::map<std::string, std::size_t>> by_reviewer;
  for (const auto& issue : repo.issues) {
    g.issues.push_back(issue.id);
    for (const auto& c : issue.comments) {
      if (c.author != issue.opener) ++by_reviewer[c.author][issue.id];
    }
  }
  std::sort(g.issues.begin(), g.issues.end());

  std::map<std::pair<std::string, std::string>, std::size_t> links;
  for (const auto& [reviewer, issues] : by_reviewer) {
    g.reviewers.push_back(reviewer);
    for (const auto& [issue, count] : issues) g.review_edges.push_back({reviewer, issue, count});
    for (auto a = issues.begin(); a != issues.end(); ++a) {
      for (auto b = std::next(a); b != issues.end(); ++b) ++links[{a->first, b->first}];
    }
  }
  g.issue_links.reserve(links.size());
  for (const auto& [pair, weight] : links) g.issue_links.push_back({pair.first, pair.second, weight});
  return g;
}

namespace {

struct DisjointSets {
  std::vector<std::size_t> parent;
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[std::max(a, b)] = std::min(a, b);
    return true;
  }
};

}  // namespace

ICSReport ics(const IssueCommunityGraph& graph) {
  ICSReport r;
  r.repo = graph.repo;
  r.issue_count = graph.issues.size();
  r.e2_count = graph.issue_links.size();

  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < graph.issues.size(); ++i) index.emplace(graph.issues[i], i);
  std::vector<bool> linked(graph.issues.size(), false);
  DisjointSets sets(graph.issues.size());
  std::size_t forest_edges = 0;
  for (const auto& l : graph.issue_links) {
    const std::size_t a = index.at(l.first), b = index.at(l.second);
    linked[a] = linked[b] = true;
    if (sets.unite(a, b)) ++forest_edges;
  }
  for (std::size_t i = 0; i < graph.issues.size(); ++i) {
    if (!linked[i]) r.isolated_issues.push_back(graph.issues[i]);
  }

  if (r.issue_count == 0) {
    r.ics = 0.0;
    r.normalized = 0.0;
  } else if (r.issue_count >= 2) {
    const double denom = static_cast<double>(r.issue_count - 1);
    r.ics = static_cast<double>(r.e2_count) / denom;
    r.normalized = static_cast<double>(forest_edges) / denom;
    r.exceeds_one = *r.ics > 1.0;
  }
  return r;
}

GraphFiles export_graph(const IssueCommunityGraph& graph, const std::filesystem::path& dir,
                        const std::string& stem) {
  GraphFiles files{dir / (stem + "_layer1.csv"), dir / (stem + "_layer2.csv")};
  csv::Writer layer1(files.layer1, {"reviewer", "issue", "weight"});
  for (const auto& e : graph.review_edges) layer1.row({e.reviewer, e.issue, csv::number(e.weight)});
  layer1.close();
  csv::Writer layer2(files.layer2, {"issue_a", "issue_b", "weight"});
  for (const auto& l : graph.issue_links) layer2.row({l.first, l.second, csv::number(l.weight)});
  layer2.close();
  return files;
}

}  // namespace issuelab
