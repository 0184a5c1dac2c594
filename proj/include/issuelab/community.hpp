#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "issuelab/model.hpp"

namespace issuelab {

/// Layer 1: reviewer -> issue, weight = comments the reviewer left there.
struct ReviewEdge {
  std::string reviewer;
  std::string issue;
  std::size_t weight = 0;

  bool operator==(const ReviewEdge&) const = default;
};

/// Layer 2: unordered issue pair (first < second), weight = shared reviewers.
struct IssueLink {
  std::string first;
  std::string second;
  std::size_t weight = 0;

  bool operator==(const IssueLink&) const = default;
};

/// Two-layer network of one repository's issues and their reviewers. All
/// vectors are sorted so equal inputs give equal graphs.
struct IssueCommunityGraph {
  std::string repo;
  std::vector<std::string> issues;     // every issue, including isolated ones
  std::vector<std::string> reviewers;  // endpoints of review edges
  std::vector<ReviewEdge> review_edges;
  std::vector<IssueLink> issue_links;
};

IssueCommunityGraph build_graph(const Repository& repo);

struct ICSReport {
  std::string repo;
  /// |issue links| / (|issues| - 1); 0 for an empty repository, unset for a
  /// repository with a single issue.
  std::optional<double> ics;
  std::size_t e2_count = 0;
  std::size_t issue_count = 0;
  /// Issues with no layer-2 link.
  std::vector<std::string> isolated_issues;
  /// The raw score can exceed 1 when layer 2 has cycles (a clique of k
  /// issues scores k/2). Flagged rather than rescaled.
  bool exceeds_one = false;
  /// Spanning-forest variant in [0,1]: (|issues| - components) / (|issues| - 1).
  /// A connected layer 2 scores exactly 1.
  std::optional<double> normalized;
};

ICSReport ics(const IssueCommunityGraph& graph);

struct GraphFiles {
  std::filesystem::path layer1;
  std::filesystem::path layer2;
};

/// Writes `<stem>_layer1.csv` (reviewer,issue,weight) and
/// `<stem>_layer2.csv` (issue_a,issue_b,weight) under `dir`.
GraphFiles export_graph(const IssueCommunityGraph& graph, const std::filesystem::path& dir,
                        const std::string& stem);

}  // namespace issuelab
