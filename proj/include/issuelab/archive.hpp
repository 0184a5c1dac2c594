#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "issuelab/model.hpp"

namespace issuelab {

inline constexpr int kArchiveVersion = 1;

/// A well-formed record that was dropped because it breaks a type invariant.
struct Rejection {
  std::size_t line = 0;
  std::string id;
  std::string reason;
};

struct LoadResult {
  Corpus corpus;
  std::vector<Rejection> rejected;
  std::size_t records = 0;  // non-blank lines seen
  std::size_t kept = 0;     // records == kept + rejected.size()
};

/// Reads a newline-delimited archive. Each non-blank line is one JSON object
/// whose "kind" is meta, user, repo, issue, comment or commit.
///
/// Malformed lines throw ParseError. References to ids that never appear
/// throw IntegrityError. Records that parse but violate an invariant
/// (negative counts, closed before opened, duplicate ids, events before the
/// repository existed) are dropped and listed in LoadResult::rejected;
/// comments of a rejected issue are dropped with it.
LoadResult read_archive(std::istream& in);
LoadResult load_archive(const std::filesystem::path& path);

/// Writes the canonical form: meta, users by login, then for each repository
/// its repo record, issues each followed by their comments, and commits.
void write_archive(const Corpus& corpus, std::ostream& out);
void save_archive(const Corpus& corpus, const std::filesystem::path& path);

struct Violation {
  std::string record_id;
  std::string field;
  std::string rule;

  bool operator==(const Violation&) const = default;
};

/// Every broken invariant in a (possibly hand-built) corpus. Empty iff valid.
std::vector<Violation> validate(const Corpus& corpus);

}  // namespace issuelab
